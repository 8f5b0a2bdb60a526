use nalgebra::{Complex, DMatrix};

use super::functions::EigenfunctionSet;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Tensor grid with inclusive end nodes; traversal is lexicographic with
/// the first coordinate varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub nodes: Vec<usize>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, nodes: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != nodes.len() {
            return Err(Error::Dimension("grid bounds and node counts must match".into()));
        }
        if nodes.contains(&0) || lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter("grid needs positive node counts and lower <= upper".into()));
        }
        Ok(Self { lower, upper, nodes })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coordinate(&self, axis: usize, j: usize) -> T {
        let n = self.nodes[axis];
        if n == 1 {
            return self.lower[axis];
        }
        let (l, u) = (self.lower[axis], self.upper[axis]);
        l + (u - l) * lit::<T>(j as f64) / lit::<T>((n - 1) as f64)
    }

    /// Node coordinates as a `d x N` matrix in traversal order.
    pub fn points(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, self.len());
        for col in 0..self.len() {
            let mut rest = col;
            for axis in (0..d).rev() {
                out[(axis, col)] = self.coordinate(axis, rest % self.nodes[axis]);
                rest /= self.nodes[axis];
            }
        }
        out
    }
}

/// Selected eigenfunctions evaluated at every grid node.
#[derive(Debug, Clone)]
pub struct GridTable<T: Real> {
    pub points: DMatrix<T>,
    /// Eigenfunction indices (0-based) in column order of `values`.
    pub indices: Vec<usize>,
    /// `values[(node, c)] = phi_{indices[c]}(node)`.
    pub values: DMatrix<Complex<T>>,
}

pub fn eval_on_grid<T: Real>(funcs: &EigenfunctionSet<T>, grid: &GridSpec<T>, indices: &[usize]) -> Result<GridTable<T>> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= funcs.len()) {
        return Err(Error::InvalidParameter(format!("eigenfunction index {bad} out of range (have {})", funcs.len())));
    }
    let points = grid.points();
    let all = funcs.eval_matrix(&points)?;
    let values = DMatrix::from_fn(points.ncols(), indices.len(), |node, c| all[(indices[c], node)]);
    Ok(GridTable { points, indices: indices.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traversal_is_first_axis_slowest() {
        let g = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![3, 3]).unwrap();
        let p = g.points();
        assert_eq!(p.column(0).as_slice(), &[-1.0, -1.0]);
        assert_eq!(p.column(1).as_slice(), &[-1.0, 0.0]);
        assert_eq!(p.column(3).as_slice(), &[0.0, -1.0]);
        assert_eq!(p.column(8).as_slice(), &[1.0, 1.0]);
    }
}
