use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use super::TrajectoryPairs;
use crate::dictionaries::PolynomialKernel;
use crate::error::{Result, Warning};
use crate::linalg::{self, RankInfo};
use crate::scalar::Real;

/// Default relative cutoff on the eigenvalues of the kernel Gram matrix.
pub const KERNEL_CUTOFF: f64 = 1e-10;

/// Kernel EDMD in the `m x m` sample space.
#[derive(Debug, Clone)]
pub struct KernelEdmdResult<T: Real> {
    /// `a_hat[(i, j)] = f(x_i, y_j)`.
    pub a_hat: DMatrix<T>,
    /// `g_hat[(i, j)] = f(x_i, x_j)`.
    pub g_hat: DMatrix<T>,
    /// `A_hat G_hat^+`.
    pub m_hat: DMatrix<T>,
    pub kernel: PolynomialKernel,
    pub rank: RankInfo,
    pub warnings: Vec<Warning>,
}

impl<T: Real> KernelEdmdResult<T> {
    /// Lifts a left eigenvector of `m_hat` to dictionary space: `v = v_hat Psi_X^T`,
    /// with `Psi_X` the explicit feature matrix of the same kernel.
    pub fn lift(&self, v_hat: &DVector<Complex<T>>, psi_x: &DMatrix<T>) -> DVector<Complex<T>> {
        let psi = linalg::to_complex(psi_x);
        &psi * v_hat
    }
}

fn gram<T: Real>(kernel: PolynomialKernel, left: &DMatrix<T>, right: &DMatrix<T>) -> DMatrix<T> {
    let (d, m) = (left.nrows(), left.ncols());
    let mut out = DMatrix::zeros(m, m);
    out.as_mut_slice().par_chunks_mut(m).enumerate().for_each(|(j, col)| {
        let y = &right.as_slice()[j * d..(j + 1) * d];
        for (i, v) in col.iter_mut().enumerate() {
            *v = kernel.eval(&left.as_slice()[i * d..(i + 1) * d], y);
        }
    });
    out
}

/// Kernel EDMD with the polynomial kernel. `cutoff` is relative to the
/// largest eigenvalue of `G_hat`; eigenvalues at or below it are dropped
/// from the pseudoinverse.
pub fn kernel_edmd<T: Real>(pairs: &TrajectoryPairs<T>, kernel: PolynomialKernel, cutoff: f64) -> Result<KernelEdmdResult<T>> {
    let a_hat = gram(kernel, pairs.x(), pairs.y());
    let mut g_hat = gram(kernel, pairs.x(), pairs.x());
    // Symmetrize away rounding in the two evaluation orders.
    let m = g_hat.nrows();
    for j in 0..m {
        for i in j + 1..m {
            g_hat[(i, j)] = g_hat[(j, i)];
        }
    }
    let (pinv, rank) = linalg::symmetric_pinv(&g_hat, cutoff);
    let mut warnings = Vec::new();
    if !rank.full_rank() {
        warnings.push(Warning::KernelCutoff { discarded: m - rank.rank, dim: m });
    }
    let m_hat = &a_hat * pinv;
    Ok(KernelEdmdResult { a_hat, g_hat, m_hat, kernel, rank, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rng::{stream, Purpose};
    use rand::Rng;

    #[test]
    fn single_zero_sample() {
        let z = DMatrix::<f64>::zeros(2, 1);
        let pairs = TrajectoryPairs::new(z.clone(), z).unwrap();
        let r = kernel_edmd(&pairs, PolynomialKernel::new(1).unwrap(), KERNEL_CUTOFF).unwrap();
        assert_eq!(r.a_hat[(0, 0)], 1.0);
        assert_eq!(r.g_hat[(0, 0)], 1.0);
        assert_eq!(r.m_hat[(0, 0)], 1.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn gram_matches_feature_products() {
        let mut rng = stream(3, Purpose::Placement, 0);
        let x = DMatrix::from_fn(2, 8, |_, _| rng.random_range(-1.0..1.0));
        let y = x.map(|v| 0.5 * v);
        let pairs = TrajectoryPairs::new(x.clone(), y.clone()).unwrap();
        let kernel = PolynomialKernel::new(2).unwrap();
        let r = kernel_edmd(&pairs, kernel, KERNEL_CUTOFF).unwrap();
        let dict = kernel.feature_dictionary::<f64>(2);
        let px = dict.eval_matrix(&x).unwrap();
        let py = dict.eval_matrix(&y).unwrap();
        assert!((px.transpose() * &py - &r.a_hat).amax() < 1e-12);
        assert!(r.warnings.iter().any(|w| matches!(w, Warning::KernelCutoff { discarded: 2, dim: 8 })));
        let min_eig = r.g_hat.clone().symmetric_eigenvalues().min();
        assert!(min_eig > -1e-10 * r.g_hat.amax());
    }
}
