use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{Dynamics, IntegratorConfig};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// The linear map `x -> A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap<T: Real> {
    matrix: DMatrix<T>,
}

impl<T: Real> LinearMap<T> {
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "linear map needs a square non-empty matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear map matrix"));
        }
        Ok(Self { matrix })
    }

    /// `A = [[0.48, -0.06], [-0.16, 0.52]]`, with left eigenvectors
    /// `[0.8, -0.6]` (eigenvalue 0.6) and `[2, 1] / sqrt(5)` (eigenvalue 0.4).
    pub fn example1() -> Self {
        Self::new(DMatrix::from_row_slice(
            2,
            2,
            &[lit(0.48), lit(-0.06), lit(-0.16), lit(0.52)],
        ))
        .expect("valid matrix")
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (&self.matrix * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

impl<T: Real> Dynamics<T> for LinearMap<T> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn name(&self) -> &str {
        "linear"
    }

    fn advance(&self, x: &[T], _cfg: &IntegratorConfig<T>, _rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
        Ok(self.apply(x))
    }
}

type MapClosure<T> = dyn Fn(&[T]) -> Vec<T> + Send + Sync;

/// A deterministic map given by a closure, e.g. interval maps.
#[derive(Clone)]
pub struct MapFn<T> {
    name: String,
    dim: usize,
    map: Arc<MapClosure<T>>,
}

impl<T> MapFn<T> {
    pub fn new(name: impl Into<String>, dim: usize, map: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            map: Arc::new(map),
        }
    }
}

impl<T> std::fmt::Debug for MapFn<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapFn").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl<T: Real> Dynamics<T> for MapFn<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn advance(&self, x: &[T], _cfg: &IntegratorConfig<T>, _rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
        let y = (self.map)(x);
        if y.len() != self.dim {
            return Err(Error::Dimension(format!("map {} returned {} components", self.name, y.len())));
        }
        Ok(y)
    }
}
