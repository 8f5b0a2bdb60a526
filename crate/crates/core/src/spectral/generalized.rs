use nalgebra::{Cholesky, DMatrix};

use super::eig::{eig, finish, SpectralResult};
use crate::error::{Error, Result, Warning};
use crate::linalg::{self, to_complex};
use crate::scalar::{wide, Real};

/// Condition number of `G` beyond which the Cholesky route is abandoned.
pub const PENCIL_CONDITION_LIMIT: f64 = 1e12;

/// Solves the pencil `xi A = lambda xi G` (left, Koopman side) together with
/// `A r = lambda G r` (right, Perron-Frobenius side).
///
/// With `G = L L^T` the problem is reduced to the ordinary eigenproblem of
/// `L^{-1} A L^{-T}`. Right vectors are scaled so that `xi_i G r_i = 1`.
/// If `G` is numerically singular the pencil is replaced by `A G^+` and a
/// warning is attached; `G = 0` is rejected.
pub fn generalized_eig<T: Real>(a: &DMatrix<T>, g: &DMatrix<T>) -> Result<SpectralResult<T>> {
    let k = a.nrows();
    if a.shape() != (k, k) || g.shape() != (k, k) {
        return Err(Error::Dimension(format!("pencil needs two square matrices of equal size, got {:?} and {:?}", a.shape(), g.shape())));
    }
    let asym = wide((g - g.transpose()).norm());
    if asym > 1e-12 * wide(g.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!("G is not symmetric (asymmetry {asym:e})")));
    }
    let info = linalg::rank_info(g, linalg::DEFAULT_CUTOFF);
    if info.rank == 0 {
        return Err(Error::Singular("pencil (A, G) is singular: G has rank 0".into()));
    }

    let cholesky = if info.condition < PENCIL_CONDITION_LIMIT { Cholesky::new(g.clone()) } else { None };
    let Some(chol) = cholesky else {
        let (pinv, _) = linalg::symmetric_pinv(g, linalg::DEFAULT_CUTOFF);
        let mut out = eig(&(a * pinv))?;
        out.source = "generalized-eig (pseudoinverse fallback)".into();
        out.warnings.push(Warning::PseudoinverseFallback { condition: info.condition });
        return Ok(out);
    };

    let l = chol.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular("Cholesky factor of G".into()))?;
    let c = &l_inv * a * l_inv.transpose();
    let reduced = eig(&c)?;

    let l_inv_c = to_complex(&l_inv);
    let mut out = SpectralResult {
        eigenvalues: reduced.eigenvalues,
        left: reduced.left * &l_inv_c,
        right: l_inv_c.transpose() * reduced.right,
        source: "generalized-eig".into(),
        warnings: Vec::new(),
    };
    finish(&mut out, Some(&to_complex(g)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn identity_metric_matches_eig() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.2, 0.3, 0.1, 0.0, 0.4, 0.2]);
        let p = generalized_eig(&a, &DMatrix::identity(3, 3)).unwrap();
        let e = eig(&a).unwrap();
        for i in 0..3 {
            assert!((p.eigenvalues[i] - e.eigenvalues[i]).norm() < 1e-12);
            assert!((p.left.row(i) - e.left.row(i)).norm() < 1e-10);
        }
    }

    #[test]
    fn scaled_pencil_recovers_diagonal() {
        let r = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.0, 1.5, 0.4, 0.2, 0.0, 1.0]);
        let g = &r * r.transpose();
        let d = DVector::from_vec(vec![0.9, 0.5, -0.2]);
        let a = &g * DMatrix::from_diagonal(&d);
        let s = generalized_eig(&a, &g).unwrap();
        let re: Vec<f64> = s.eigenvalues.iter().map(|l| l.re).collect();
        for (x, y) in re.iter().zip([0.9, 0.5, -0.2]) {
            assert!((x - y).abs() < 1e-12);
        }
        let gc = to_complex(&g);
        let bi = &s.left * gc * &s.right;
        assert!((bi - DMatrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn singular_metric_falls_back_or_fails() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let s = generalized_eig(&a, &g).unwrap();
        assert!(s.warnings.iter().any(|w| matches!(w, Warning::PseudoinverseFallback { .. })));
        assert!(generalized_eig(&a, &DMatrix::zeros(2, 2)).is_err());
    }
}
