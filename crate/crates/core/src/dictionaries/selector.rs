use nalgebra::DMatrix;

use super::{Dictionary, Family};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// The matrix `B` with `x = B Psi(x)` for a dictionary containing the
/// coordinate functions `x_1, ..., x_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSelector<T: Real> {
    matrix: DMatrix<T>,
    indices: Vec<usize>,
}

impl<T: Real> StateSelector<T> {
    pub fn new(dict: &Dictionary<T>) -> Result<Self> {
        let d = dict.dim();
        let indices: Vec<usize> = match dict.family() {
            Family::Identity { .. } => (0..d).collect(),
            Family::Monomials(basis) => (0..d)
                .map(|axis| {
                    basis
                        .exponents()
                        .iter()
                        .enumerate()
                        .position(|(i, e)| {
                            e.iter().enumerate().all(|(a, &p)| p == u32::from(a == axis))
                                && basis.weight(i) == T::one()
                        })
                        .ok_or(Error::MissingCoordinate(axis))
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::MissingCoordinate(0)),
        };
        let mut matrix = DMatrix::zeros(d, dict.len());
        for (row, &col) in indices.iter().enumerate() {
            matrix[(row, col)] = T::one();
        }
        Ok(Self { matrix, indices })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    /// Dictionary index of coordinate function `x_{axis+1}`.
    pub fn coordinate_index(&self, axis: usize) -> usize {
        self.indices[axis]
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}
