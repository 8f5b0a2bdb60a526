use nalgebra::{Complex, ComplexField, DMatrix, DVector, RowDVector, Schur};

use crate::error::{Error, Result, Warning};
use crate::linalg::to_complex;
use crate::scalar::{lit, wide, Real};

/// Entries below this fraction of the largest are skipped by the phase rule.
const PHASE_FLOOR: f64 = 1e-6;
/// Relative modulus gap below which eigenvalues count as tied for ordering.
const MODULUS_TIE: f64 = 1e-9;

/// Eigenvalues with left (rows of `left`) and right (columns of `right`)
/// eigenvectors.
///
/// Ordering: descending modulus, then descending real part, then descending
/// imaginary part, so conjugate pairs are adjacent. Each left vector has
/// unit Euclidean norm and its first non-negligible entry is positive real;
/// right vectors are scaled so that `left_i * right_i = 1` (or `left_i G right_i = 1`
/// for pencils).
#[derive(Debug, Clone)]
pub struct SpectralResult<T: Real> {
    pub eigenvalues: Vec<Complex<T>>,
    pub left: DMatrix<Complex<T>>,
    pub right: DMatrix<Complex<T>>,
    pub source: String,
    pub warnings: Vec<Warning>,
}

impl<T: Real> SpectralResult<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn left_vector(&self, i: usize) -> RowDVector<Complex<T>> {
        self.left.row(i).clone_owned()
    }

    pub fn right_vector(&self, i: usize) -> DVector<Complex<T>> {
        self.right.column(i).clone_owned()
    }

    /// Largest `|xi_i M - lambda_i xi_i| / |xi_i|` over all pairs.
    pub fn left_residual(&self, m: &DMatrix<T>) -> f64 {
        let mc = to_complex(m);
        let prod = &self.left * &mc;
        (0..self.len())
            .map(|i| {
                let r = prod.row(i) - self.left.row(i) * self.eigenvalues[i];
                wide(r.norm()) / wide(self.left.row(i).norm()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// Index of the eigenvalue closest to `target`.
    pub fn closest(&self, target: Complex<T>) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            wide((self.eigenvalues[a] - target).modulus()).total_cmp(&wide((self.eigenvalues[b] - target).modulus()))
        })
    }

    /// Invariant-measure convention for stochastic matrices: every left
    /// vector with eigenvalue 1 is rescaled to unit entry sum (nonnegative for
    /// an irreducible chain); right vectors are rescaled to keep the pairing.
    pub fn apply_stochastic_convention(&mut self) {
        let one = Complex::new(T::one(), T::zero());
        for i in 0..self.len() {
            if wide((self.eigenvalues[i] - one).modulus()) > 1e-8 {
                continue;
            }
            let sum = self.left.row(i).iter().fold(Complex::new(T::zero(), T::zero()), |a, &v| a + v);
            if wide(sum.modulus()) < 1e-12 {
                continue;
            }
            let inv = one / sum;
            self.left.row_mut(i).iter_mut().for_each(|v| *v *= inv);
            self.right.column_mut(i).iter_mut().for_each(|v| *v *= sum);
        }
    }

    /// Reorders all pairs by the given permutation.
    pub fn reorder(&mut self, order: &[usize]) {
        self.eigenvalues = order.iter().map(|&i| self.eigenvalues[i]).collect();
        self.left = DMatrix::from_fn(order.len(), self.left.ncols(), |r, c| self.left[(order[r], c)]);
        self.right = DMatrix::from_fn(self.right.nrows(), order.len(), |r, c| self.right[(r, order[c])]);
    }
}

/// Sort key permutation implementing the documented ordering.
pub(crate) fn spectral_order<T: Real>(values: &[Complex<T>]) -> Vec<usize> {
    let modulus: Vec<f64> = values.iter().map(|v| wide(v.modulus())).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| modulus[b].total_cmp(&modulus[a]).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(order.len());
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && modulus[order[end - 1]] - modulus[order[end]] <= MODULUS_TIE * modulus[order[end - 1]].max(1.0)
        {
            end += 1;
        }
        let mut group = order[start..end].to_vec();
        group.sort_by(|&a, &b| {
            let (va, vb) = (values[a], values[b]);
            wide(vb.re)
                .total_cmp(&wide(va.re))
                .then(wide(vb.im).total_cmp(&wide(va.im)))
                .then(a.cmp(&b))
        });
        out.extend(group);
        start = end;
    }
    out
}

/// Unit norm plus the phase rule for a left eigenvector.
pub(crate) fn normalize_left<T: Real>(v: &mut [Complex<T>]) {
    let norm = v.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt();
    if norm == T::zero() {
        return;
    }
    let max = v.iter().fold(T::zero(), |a, c| a.max(c.modulus()));
    let floor = max * lit::<T>(PHASE_FLOOR);
    let pivot = v.iter().find(|c| c.modulus() > floor).copied().unwrap_or(Complex::new(T::one(), T::zero()));
    let phase = pivot.conj() / Complex::new(pivot.modulus() * norm, T::zero());
    for c in v.iter_mut() {
        *c *= phase;
    }
}

fn nudge<T: Real>(den: Complex<T>, small: T) -> Complex<T> {
    if den.modulus() < small {
        Complex::new(small, T::zero())
    } else {
        den
    }
}

/// Complex Schur factorization `M = Q T Q^H`, then eigenvectors of the
/// triangular factor by back substitution.
pub fn eig<T: Real>(m: &DMatrix<T>) -> Result<SpectralResult<T>> {
    let k = m.nrows();
    if m.ncols() != k || k == 0 {
        return Err(Error::Dimension(format!("eig needs a non-empty square matrix, got {:?}", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenproblem matrix"));
    }
    let norm = m.norm();
    let schur = Schur::try_new(to_complex(m), T::default_epsilon(), 200 * k.max(10))
        .ok_or(Error::NoConvergence { dim: k, norm: wide(norm) })?;
    let (q, t) = schur.unpack();
    let small = (T::default_epsilon() * t.norm()).max(T::min_value().unwrap_or(T::default_epsilon()));
    let zero = Complex::new(T::zero(), T::zero());
    let unit = Complex::new(T::one(), T::zero());

    let mut y = DMatrix::from_element(k, k, zero);
    let mut z = DMatrix::from_element(k, k, zero);
    for i in 0..k {
        let lam = t[(i, i)];
        y[(i, i)] = unit;
        for j in (0..i).rev() {
            let mut s = zero;
            for l in j + 1..=i {
                s += t[(j, l)] * y[(l, i)];
            }
            y[(j, i)] = -s / nudge(t[(j, j)] - lam, small);
        }
        z[(i, i)] = unit;
        for j in i + 1..k {
            let mut s = zero;
            for l in i..j {
                s += z[(i, l)] * t[(l, j)];
            }
            z[(i, j)] = -s / nudge(t[(j, j)] - lam, small);
        }
    }
    let left = &z * q.adjoint();
    let right = &q * &y;
    let eigenvalues: Vec<Complex<T>> = (0..k).map(|i| t[(i, i)]).collect();
    let mut out = SpectralResult { eigenvalues, left, right, source: "eig".into(), warnings: Vec::new() };
    finish(&mut out, None);
    Ok(out)
}

/// Eigen-decomposition of a row-stochastic matrix with the invariant-measure
/// convention applied.
pub fn eig_stochastic<T: Real>(p: &DMatrix<T>) -> Result<SpectralResult<T>> {
    let mut out = eig(p)?;
    out.apply_stochastic_convention();
    out.source = "eig-stochastic".into();
    Ok(out)
}

/// Normalizes, pairs and sorts. With `metric`, right vectors are scaled so
/// that `xi_i G r_i = 1`.
pub(crate) fn finish<T: Real>(out: &mut SpectralResult<T>, metric: Option<&DMatrix<Complex<T>>>) {
    let k = out.len();
    for i in 0..k {
        let mut row: Vec<Complex<T>> = out.left.row(i).iter().copied().collect();
        normalize_left(&mut row);
        for (c, v) in row.into_iter().enumerate() {
            out.left[(i, c)] = v;
        }
        let r = out.right.column(i).clone_owned();
        let rn = r.norm();
        let r = if rn > T::zero() { r.unscale(rn) } else { r };
        let lhs = match metric {
            Some(g) => out.left.row(i) * g,
            None => out.left.row(i).clone_owned(),
        };
        let s = (lhs * &r)[(0, 0)];
        if s.modulus() < lit::<T>(1e-13) {
            out.warnings.push(Warning::DefectiveEigenpair { index: i });
            out.right.set_column(i, &r);
        } else {
            out.right.set_column(i, &(r / s));
        }
    }
    let order = spectral_order(&out.eigenvalues);
    out.reorder(&order);
    // Warning indices refer to the pre-sort positions; remap them.
    let position: Vec<usize> = {
        let mut p = vec![0; k];
        for (new, &old) in order.iter().enumerate() {
            p[old] = new;
        }
        p
    };
    for w in out.warnings.iter_mut() {
        if let Warning::DefectiveEigenpair { index } = w {
            *index = position[*index];
        }
    }
}
