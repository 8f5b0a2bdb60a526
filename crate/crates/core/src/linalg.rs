//! Dense linear-algebra helpers shared by the estimators and spectral code.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::scalar::{lit, wide, ExactField, Real};

/// Default relative cutoff for singular values: `sigma < cutoff * sigma_max` is zeroed.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

const CHUNK: usize = 4096;

/// Singular-value diagnostics of a matrix that was pseudo-inverted.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub condition: f64,
}

impl RankInfo {
    fn from_singular_values(mut sv: Vec<f64>, cutoff: f64) -> Self {
        sv.sort_by(|a, b| b.total_cmp(a));
        let max = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| s > cutoff * max && s > 0.0).count();
        let min = sv.last().copied().unwrap_or(0.0);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        Self {
            singular_values: sv,
            rank,
            condition,
        }
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.singular_values.len()
    }
}

/// Computes `b * a^+` through the thin SVD of `a`, zeroing singular values
/// below `cutoff * sigma_max`.
pub fn right_pinv_product<T: Real>(b: &DMatrix<T>, a: &DMatrix<T>, cutoff: f64) -> (DMatrix<T>, RankInfo) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sv: Vec<f64> = svd.singular_values.iter().map(|&s| wide(s)).collect();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let info = RankInfo::from_singular_values(sv.clone(), cutoff);

    // b * V * Sigma^+ * U^T
    let mut bv = b * v_t.transpose();
    for (j, &s) in sv.iter().enumerate() {
        let inv = if s > cutoff * max && s > 0.0 { T::one() / lit::<T>(s) } else { T::zero() };
        bv.column_mut(j).scale_mut(inv);
    }
    (bv * u.transpose(), info)
}

/// Singular-value diagnostics without forming any inverse.
pub fn rank_info<T: Real>(a: &DMatrix<T>, cutoff: f64) -> RankInfo {
    let sv = a.clone().singular_values();
    RankInfo::from_singular_values(sv.iter().map(|&s| wide(s)).collect(), cutoff)
}

/// Pseudoinverse of a symmetric matrix via its eigendecomposition. Eigenvalues
/// with `|lambda| <= cutoff * max |lambda|` are discarded.
pub fn symmetric_pinv<T: Real>(g: &DMatrix<T>, cutoff: f64) -> (DMatrix<T>, RankInfo) {
    let eig = SymmetricEigen::new(g.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|&l| wide(l)).collect();
    let max = vals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let info = RankInfo::from_singular_values(vals.iter().map(|l| l.abs()).collect(), cutoff);
    let k = g.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &l) in vals.iter().enumerate() {
        let inv = if l.abs() > cutoff * max && l != 0.0 { T::one() / lit::<T>(l) } else { T::zero() };
        scaled.column_mut(j).scale_mut(inv);
    }
    let pinv = &scaled * eig.eigenvectors.transpose();
    debug_assert_eq!(pinv.nrows(), k);
    (pinv, info)
}

#[inline]
fn neumaier<T: Real>(sum: &mut T, comp: &mut T, v: T) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

/// Compensated sum of outer products `sum_l left[:, l] * right[:, l]^T`.
///
/// Columns are reduced in fixed-size chunks that run in parallel; chunk
/// results are merged in chunk order, so the output does not depend on the
/// thread count. When `symmetric` is set (left == right) only the upper
/// triangle is accumulated and then mirrored.
pub fn outer_product_sum<T: Real>(left: &DMatrix<T>, right: &DMatrix<T>, symmetric: bool) -> DMatrix<T> {
    assert_eq!(left.ncols(), right.ncols(), "column counts differ");
    let (r, c, m) = (left.nrows(), right.nrows(), left.ncols());
    let ls = left.as_slice();
    let rs = right.as_slice();

    let chunk_sums: Vec<Vec<T>> = (0..m.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut sum = vec![T::zero(); r * c];
            let mut comp = vec![T::zero(); r * c];
            let end = ((chunk + 1) * CHUNK).min(m);
            for l in chunk * CHUNK..end {
                let lc = &ls[l * r..(l + 1) * r];
                let rc = &rs[l * c..(l + 1) * c];
                for j in 0..c {
                    let rj = rc[j];
                    if rj == T::zero() {
                        continue;
                    }
                    let i_end = if symmetric { j + 1 } else { r };
                    for i in 0..i_end {
                        let idx = j * r + i;
                        neumaier(&mut sum[idx], &mut comp[idx], lc[i] * rj);
                    }
                }
            }
            sum.iter().zip(&comp).map(|(&s, &e)| s + e).collect()
        })
        .collect();

    let mut sum = vec![T::zero(); r * c];
    let mut comp = vec![T::zero(); r * c];
    for part in &chunk_sums {
        for (idx, &v) in part.iter().enumerate() {
            neumaier(&mut sum[idx], &mut comp[idx], v);
        }
    }
    let mut out = DMatrix::from_iterator(r, c, sum.iter().zip(&comp).map(|(&s, &e)| s + e));
    if symmetric {
        for j in 0..c {
            for i in j + 1..r {
                out[(i, j)] = out[(j, i)];
            }
        }
    }
    out
}

/// Solves `a * x = b` by Gaussian elimination with partial pivoting.
///
/// Works over any [`ExactField`]; over rationals the result is exact.
/// Returns `None` when a pivot column is exactly zero.
pub fn solve<F: ExactField>(a: &DMatrix<F>, b: &DMatrix<F>) -> Option<DMatrix<F>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "square system required");
    assert_eq!(b.nrows(), n, "right-hand side rows");
    let p = b.ncols();
    let mut rows: Vec<Vec<F>> = (0..n)
        .map(|i| {
            let mut row: Vec<F> = (0..n).map(|j| a[(i, j)].clone()).collect();
            row.extend((0..p).map(|j| b[(i, j)].clone()));
            row
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| rows[x][col].magnitude().total_cmp(&rows[y][col].magnitude()))?;
        if rows[pivot][col].is_zero() {
            return None;
        }
        rows.swap(col, pivot);
        let (upper, lower) = rows.split_at_mut(col + 1);
        let prow = &upper[col];
        for row in lower.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / prow[col].clone();
            for j in col..n + p {
                if !prow[j].is_zero() {
                    row[j] = row[j].clone() - factor.clone() * prow[j].clone();
                }
            }
        }
    }

    let mut x = vec![vec![F::zero(); p]; n];
    for i in (0..n).rev() {
        for j in 0..p {
            let mut acc = rows[i][n + j].clone();
            for l in i + 1..n {
                if !rows[i][l].is_zero() {
                    acc = acc - rows[i][l].clone() * x[l][j].clone();
                }
            }
            x[i][j] = acc / rows[i][i].clone();
        }
    }
    Some(DMatrix::from_fn(n, p, |i, j| x[i][j].clone()))
}

/// Computes `b * a^{-1}` (solves `x * a = b`).
pub fn right_divide<F: ExactField>(b: &DMatrix<F>, a: &DMatrix<F>) -> Option<DMatrix<F>> {
    solve(&a.transpose(), &b.transpose()).map(|x| x.transpose())
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|v| Complex::new(v, T::zero()))
}

/// 2-norm condition number of a complex matrix.
pub fn complex_condition<T: Real>(m: &DMatrix<Complex<T>>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |a, &s| a.max(wide(s)));
    let min = sv.iter().fold(f64::INFINITY, |a, &s| a.min(wide(s)));
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn max_abs_diff<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (&x, &y)| acc.max(wide((x - y).abs())))
}
