use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Where a set of snapshot pairs came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub system: String,
    pub seed: Option<u64>,
    pub design: String,
}

/// Paired snapshot matrices `X`, `Y` (each `d x m`); column `l` of `Y` is
/// the image of column `l` of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPairs<T: Real> {
    x: DMatrix<T>,
    y: DMatrix<T>,
    provenance: Provenance,
}

impl<T: Real> TrajectoryPairs<T> {
    pub fn new(x: DMatrix<T>, y: DMatrix<T>) -> Result<Self> {
        Self::with_provenance(x, y, Provenance::default())
    }

    pub fn with_provenance(x: DMatrix<T>, y: DMatrix<T>, provenance: Provenance) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::Dimension(format!("X is {:?} but Y is {:?}", x.shape(), y.shape())));
        }
        if x.nrows() == 0 {
            return Err(Error::Dimension("state dimension must be positive".into()));
        }
        if x.ncols() == 0 {
            return Err(Error::EmptyDesign);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("X"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Y"));
        }
        Ok(Self { x, y, provenance })
    }

    pub fn x(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<T> {
        &self.y
    }

    /// Number of pairs `m`.
    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn into_parts(self) -> (DMatrix<T>, DMatrix<T>) {
        (self.x, self.y)
    }
}
