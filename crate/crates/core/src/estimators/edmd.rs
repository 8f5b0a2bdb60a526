use nalgebra::DMatrix;

use super::TrajectoryPairs;
use crate::dictionaries::{BoxPartition, Dictionary};
use crate::error::{Error, Result, Warning};
use crate::linalg::{self, RankInfo, DEFAULT_CUTOFF};
use crate::scalar::{lit, wide, ExactField, Real};

/// How `M_K` is obtained from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// `M_K = Psi_Y Psi_X^+` through the SVD of `Psi_X`.
    Pseudoinverse,
    /// `M_K = A G^+` from the `k x k` moment matrices.
    NormalEquations,
}

/// Which operator [`EdmdResult::operator`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Koopman,
    PerronFrobenius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdmdOptions {
    pub formulation: Formulation,
    /// Relative singular-value cutoff for every pseudoinverse.
    pub cutoff: f64,
}

impl Default for EdmdOptions {
    fn default() -> Self {
        Self { formulation: Formulation::NormalEquations, cutoff: DEFAULT_CUTOFF }
    }
}

impl EdmdOptions {
    pub fn pseudoinverse() -> Self {
        Self { formulation: Formulation::Pseudoinverse, ..Self::default() }
    }
}

/// Output of EDMD-type estimators.
///
/// `a` and `g` carry the `1/m` normalization; `m_k` acts on dictionary
/// vectors, `Psi(y) ~ M_K Psi(x)`, so it is the transpose of the Koopman
/// coefficient matrix.
#[derive(Debug, Clone)]
pub struct EdmdResult<T: Real> {
    pub m_k: DMatrix<T>,
    /// `A^T G^+`, present for [`pf_edmd`] results.
    pub m_p: Option<DMatrix<T>>,
    pub a: DMatrix<T>,
    pub g: DMatrix<T>,
    pub residual: T,
    pub m: usize,
    /// Singular values and numerical rank of `G`.
    pub rank: RankInfo,
    pub formulation: Formulation,
    pub kind: OperatorKind,
    pub dictionary: Dictionary<T>,
    pub warnings: Vec<Warning>,
}

impl<T: Real> EdmdResult<T> {
    /// `M_K` for Koopman results, `M_P` for Perron-Frobenius results.
    pub fn operator(&self) -> &DMatrix<T> {
        match (&self.kind, &self.m_p) {
            (OperatorKind::PerronFrobenius, Some(mp)) => mp,
            _ => &self.m_k,
        }
    }

    pub fn len(&self) -> usize {
        self.m_k.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

struct Moments<T: Real> {
    psi_x: DMatrix<T>,
    psi_y: DMatrix<T>,
    a_sum: DMatrix<T>,
    g_sum: DMatrix<T>,
}

fn moments<T: Real>(pairs: &TrajectoryPairs<T>, dict: &Dictionary<T>) -> Result<Moments<T>> {
    if dict.dim() != pairs.dim() {
        return Err(Error::Dimension(format!(
            "{} dictionary is {}-dimensional, data is {}-dimensional",
            dict.name(),
            dict.dim(),
            pairs.dim()
        )));
    }
    let psi_x = dict.eval_matrix(pairs.x())?;
    let psi_y = dict.eval_matrix(pairs.y())?;
    if psi_x.iter().chain(psi_y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dictionary evaluation"));
    }
    let a_sum = linalg::outer_product_sum(&psi_y, &psi_x, false);
    let g_sum = linalg::outer_product_sum(&psi_x, &psi_x, true);
    Ok(Moments { psi_x, psi_y, a_sum, g_sum })
}

// b * G^+ from unscaled sums; plain elimination when G is numerically
// nonsingular so that count-valued problems stay exact.
fn divide_by_gram<T: Real>(b: &DMatrix<T>, g_sum: &DMatrix<T>, rank: &RankInfo, cutoff: f64) -> DMatrix<T> {
    if rank.full_rank() {
        if let Some(x) = linalg::right_divide(b, g_sum) {
            if x.iter().all(|v| v.is_finite()) {
                return x;
            }
        }
    }
    let (pinv, _) = linalg::symmetric_pinv(g_sum, cutoff);
    b * pinv
}

fn frobenius_residual<T: Real>(psi_y: &DMatrix<T>, m_k: &DMatrix<T>, psi_x: &DMatrix<T>) -> T {
    (psi_y - m_k * psi_x).norm()
}

fn assemble<T: Real>(
    mom: Moments<T>,
    m_k: DMatrix<T>,
    rank: RankInfo,
    formulation: Formulation,
    dict: &Dictionary<T>,
    mut warnings: Vec<Warning>,
) -> EdmdResult<T> {
    let m = mom.psi_x.ncols();
    if !rank.full_rank() {
        warnings.push(Warning::RankDeficient { rank: rank.rank, dim: rank.singular_values.len() });
    }
    let scale = T::one() / lit::<T>(m as f64);
    EdmdResult {
        residual: frobenius_residual(&mom.psi_y, &m_k, &mom.psi_x),
        m_k,
        m_p: None,
        a: mom.a_sum * scale,
        g: mom.g_sum * scale,
        m,
        rank,
        formulation,
        kind: OperatorKind::Koopman,
        dictionary: dict.clone(),
        warnings,
    }
}

/// Extended dynamic mode decomposition: least-squares `M_K` with
/// `Psi_Y ~ M_K Psi_X` in the Frobenius norm.
pub fn edmd<T: Real>(pairs: &TrajectoryPairs<T>, dict: &Dictionary<T>, opts: EdmdOptions) -> Result<EdmdResult<T>> {
    let mom = moments(pairs, dict)?;
    let g_rank = linalg::rank_info(&mom.g_sum, opts.cutoff);
    let m_k = match opts.formulation {
        Formulation::Pseudoinverse => {
            let (m_k, _) = linalg::right_pinv_product(&mom.psi_y, &mom.psi_x, opts.cutoff);
            m_k
        }
        Formulation::NormalEquations => divide_by_gram(&mom.a_sum, &mom.g_sum, &g_rank, opts.cutoff),
    };
    Ok(assemble(mom, m_k, g_rank, opts.formulation, dict, Vec::new()))
}

/// Perron-Frobenius EDMD: `M_P = A^T G^+` alongside the Koopman matrix.
pub fn pf_edmd<T: Real>(pairs: &TrajectoryPairs<T>, dict: &Dictionary<T>, opts: EdmdOptions) -> Result<EdmdResult<T>> {
    let mom = moments(pairs, dict)?;
    let g_rank = linalg::rank_info(&mom.g_sum, opts.cutoff);
    let m_k = divide_by_gram(&mom.a_sum, &mom.g_sum, &g_rank, opts.cutoff);
    let m_p = divide_by_gram(&mom.a_sum.transpose(), &mom.g_sum, &g_rank, opts.cutoff);
    let mut result = assemble(mom, m_k, g_rank, opts.formulation, dict, Vec::new());
    result.m_p = Some(m_p);
    result.kind = OperatorKind::PerronFrobenius;
    Ok(result)
}

/// Dynamic mode decomposition `M_L = Y X^+` (EDMD with the identity dictionary).
pub fn dmd<T: Real>(pairs: &TrajectoryPairs<T>, cutoff: f64) -> Result<EdmdResult<T>> {
    let x = pairs.x();
    let y = pairs.y();
    let svd = x.clone().svd(true, true);
    let max = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    let x_pinv = svd
        .pseudo_inverse(max * lit::<T>(cutoff))
        .map_err(|e| Error::Singular(e.to_string()))?;
    let m_l = y * x_pinv;
    let dict = Dictionary::identity(pairs.dim())?;
    let mom = Moments {
        psi_x: x.clone(),
        psi_y: y.clone(),
        a_sum: linalg::outer_product_sum(y, x, false),
        g_sum: linalg::outer_product_sum(x, x, true),
    };
    let g_rank = linalg::rank_info(&mom.g_sum, cutoff);
    Ok(assemble(mom, m_l, g_rank, Formulation::Pseudoinverse, &dict, Vec::new()))
}

/// The mass-matrix form of the Perron-Frobenius approximation, `P_mu = G^{-1} A`,
/// acting on coefficient vectors from the left.
pub fn adjoint_pf<T: Real>(result: &EdmdResult<T>) -> Result<DMatrix<T>> {
    if !result.rank.full_rank() {
        return Err(Error::Singular(format!(
            "G has numerical rank {} < {}; use pf_edmd, which applies the pseudoinverse",
            result.rank.rank,
            result.len()
        )));
    }
    linalg::solve(&result.g, &result.a)
        .filter(|p| p.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("G is singular; use pf_edmd, which applies the pseudoinverse".into()))
}

/// `|Psi_Y - M_K Psi_X|_F` for a result and the data it came from. A large
/// value means the dictionary cannot represent the eigenfunctions well; a
/// small value alone proves little (constants give zero).
pub fn residual<T: Real>(result: &EdmdResult<T>, pairs: &TrajectoryPairs<T>, dict: &Dictionary<T>) -> Result<T> {
    let psi_x = dict.eval_matrix(pairs.x())?;
    let psi_y = dict.eval_matrix(pairs.y())?;
    if psi_x.nrows() != result.len() {
        return Err(Error::Dimension("dictionary size differs from the result".into()));
    }
    Ok(frobenius_residual(&psi_y, &result.m_k, &psi_x))
}

/// Indicator-function matrix `Psi_X` over any exact field.
pub fn indicator_matrix<T: Real, F: ExactField>(partition: &BoxPartition<T>, points: &DMatrix<T>) -> DMatrix<F> {
    let mut psi = DMatrix::from_element(partition.len(), points.ncols(), F::zero());
    for l in 0..points.ncols() {
        if let Some(i) = partition.box_index(points.column(l).as_slice()) {
            psi[(i, l)] = F::one();
        }
    }
    psi
}

/// EDMD normal equations evaluated in exact arithmetic: `M_K = (Psi_Y Psi_X^T)(Psi_X Psi_X^T)^{-1}`.
/// Zero entries are skipped, so sparse dictionaries are cheap. Returns
/// `None` when the Gram matrix is singular.
pub fn edmd_exact<F: ExactField>(psi_x: &DMatrix<F>, psi_y: &DMatrix<F>) -> Option<DMatrix<F>> {
    let k = psi_x.nrows();
    let mut a = DMatrix::from_element(k, k, F::zero());
    let mut g = DMatrix::from_element(k, k, F::zero());
    for l in 0..psi_x.ncols() {
        let nx: Vec<usize> = (0..k).filter(|&i| !psi_x[(i, l)].is_zero()).collect();
        let ny: Vec<usize> = (0..k).filter(|&i| !psi_y[(i, l)].is_zero()).collect();
        for &i in &nx {
            for &j in &ny {
                a[(j, i)] = a[(j, i)].clone() + psi_y[(j, l)].clone() * psi_x[(i, l)].clone();
            }
            for &j in &nx {
                g[(j, i)] = g[(j, i)].clone() + psi_x[(j, l)].clone() * psi_x[(i, l)].clone();
            }
        }
    }
    linalg::right_divide(&a, &g)
}

/// Relative Frobenius gap between two matrices, for formulation checks.
pub fn relative_gap<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    wide((a - b).norm()) / wide(a.norm()).max(f64::MIN_POSITIVE)
}
