use nalgebra::{Complex, DMatrix, DVector};

use super::eig::SpectralResult;
use crate::dictionaries::{Dictionary, StateSelector};
use crate::error::{Error, Result};
use crate::linalg::{complex_condition, to_complex};
use crate::scalar::{lit, Real};

/// Eigenvector condition number above which modes and dual bases are refused.
pub const EIGENBASIS_CONDITION_LIMIT: f64 = 1e12;

/// Eigenfunctions `phi_i = c_i Psi` in dictionary coordinates.
#[derive(Debug, Clone)]
pub struct EigenfunctionSet<T: Real> {
    pub eigenvalues: Vec<Complex<T>>,
    /// Row `i` holds the coefficients of `phi_i`.
    pub coefficients: DMatrix<Complex<T>>,
    pub dictionary: Dictionary<T>,
}

impl<T: Real> EigenfunctionSet<T> {
    /// Koopman eigenfunctions from the left eigenvectors of `M_K`.
    pub fn koopman(spec: &SpectralResult<T>, dict: &Dictionary<T>) -> Result<Self> {
        Self::from_rows(spec.eigenvalues.clone(), spec.left.clone(), dict)
    }

    /// Perron-Frobenius eigenfunctions from the right vectors of a pencil or
    /// of `M_K` (columns become rows here).
    pub fn from_right_vectors(spec: &SpectralResult<T>, dict: &Dictionary<T>) -> Result<Self> {
        Self::from_rows(spec.eigenvalues.clone(), spec.right.transpose(), dict)
    }

    pub fn from_rows(eigenvalues: Vec<Complex<T>>, coefficients: DMatrix<Complex<T>>, dict: &Dictionary<T>) -> Result<Self> {
        if coefficients.ncols() != dict.len() || coefficients.nrows() != eigenvalues.len() {
            return Err(Error::Dimension(format!(
                "{} coefficient rows of length {} do not fit {} eigenvalues and a dictionary of size {}",
                coefficients.nrows(),
                coefficients.ncols(),
                eigenvalues.len(),
                dict.len()
            )));
        }
        Ok(Self { eigenvalues, coefficients, dictionary: dict.clone() })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// All eigenfunctions at one point.
    pub fn eval(&self, x: &[T]) -> Result<DVector<Complex<T>>> {
        let psi = self.dictionary.eval_vector(x)?;
        Ok(&self.coefficients * psi.map(|v| Complex::new(v, T::zero())))
    }

    /// `phi_i(x_l)` as a `k x m` matrix.
    pub fn eval_matrix(&self, points: &DMatrix<T>) -> Result<DMatrix<Complex<T>>> {
        let psi = self.dictionary.eval_matrix(points)?;
        Ok(&self.coefficients * to_complex(&psi))
    }
}

fn guarded_inverse<T: Real>(m: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let condition = complex_condition(m);
    if !(condition <= EIGENBASIS_CONDITION_LIMIT) {
        return Err(Error::IllConditionedEigenbasis { condition });
    }
    m.clone().try_inverse().ok_or(Error::IllConditionedEigenbasis { condition })
}

/// Perron-Frobenius eigenfunctions biorthogonal to the Koopman ones.
///
/// `g` is the normalized Gram matrix `(1/m) Psi_X Psi_X^T` stored in an EDMD
/// result and `m` the sample count; with `G_u = m g` the coefficients are
/// `m (Xi^*)^{-1} G_u^{-1}`, so that `(1/m) Xi_dual G_u Xi^* = I`. The returned
/// eigenvalues are the conjugates of those of `spec`.
pub fn dual_basis<T: Real>(
    spec: &SpectralResult<T>,
    g: &DMatrix<T>,
    m: usize,
    dict: &Dictionary<T>,
) -> Result<EigenfunctionSet<T>> {
    let mm = lit::<T>(m as f64);
    let g_u = to_complex(&(g * mm));
    let w = g_u * spec.left.adjoint();
    let inv = guarded_inverse(&w)?;
    let coefficients = inv * Complex::new(mm, T::zero());
    let eigenvalues = spec.eigenvalues.iter().map(|l| l.conj()).collect();
    EigenfunctionSet::from_rows(eigenvalues, coefficients, dict)
}

/// Koopman modes `V = B Xi^{-1}`; column `i` pairs with eigenvalue `i`.
#[derive(Debug, Clone)]
pub struct KoopmanModeSet<T: Real> {
    pub eigenvalues: Vec<Complex<T>>,
    pub modes: DMatrix<Complex<T>>,
    pub selector: StateSelector<T>,
}

impl<T: Real> KoopmanModeSet<T> {
    pub fn mode(&self, i: usize) -> DVector<Complex<T>> {
        self.modes.column(i).clone_owned()
    }

    pub fn mode_norms(&self) -> Vec<T> {
        (0..self.modes.ncols()).map(|i| self.modes.column(i).norm()).collect()
    }
}

pub fn koopman_modes<T: Real>(spec: &SpectralResult<T>, selector: &StateSelector<T>) -> Result<KoopmanModeSet<T>> {
    if selector.matrix().ncols() != spec.left.ncols() {
        return Err(Error::Dimension("selector and eigenvectors refer to different dictionaries".into()));
    }
    let xi_inv = guarded_inverse(&spec.left)?;
    Ok(KoopmanModeSet {
        eigenvalues: spec.eigenvalues.clone(),
        modes: to_complex(selector.matrix()) * xi_inv,
        selector: selector.clone(),
    })
}

/// `Re sum_i lambda_i^n phi_i(x) v_i`: the state at `x` for `n = 0`, the
/// `n`-step prediction otherwise.
pub fn reconstruct<T: Real>(modes: &KoopmanModeSet<T>, funcs: &EigenfunctionSet<T>, x: &[T], steps: u32) -> Result<Vec<T>> {
    if funcs.len() != modes.modes.ncols() {
        return Err(Error::Dimension("eigenfunctions and modes have different counts".into()));
    }
    let phi = funcs.eval(x)?;
    let weighted = DVector::from_iterator(
        phi.len(),
        phi.iter().zip(&modes.eigenvalues).map(|(&p, &l)| p * l.powu(steps)),
    );
    Ok((&modes.modes * weighted).iter().map(|c| c.re).collect())
}
