//! Basis-function families and batch evaluation into `Psi_X`, `Psi_Y`.

mod kernel;
mod partition;
mod selector;

pub use kernel::{polynomial_kernel, PolynomialKernel};
pub use partition::BoxPartition;
pub use selector::StateSelector;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Monomials `x^a` given as a list of exponent vectors in graded
/// lexicographic order: by total degree, then by descending exponent of
/// `x_1`, then `x_2`, and so on. In 2-D: `1, x1, x2, x1^2, x1 x2, x2^2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis<T> {
    dim: usize,
    exponents: Vec<Vec<u32>>,
    weights: Option<Vec<T>>,
}

impl<T: Real> MonomialBasis<T> {
    /// All monomials with `0 <= a_j <= max_degree` for every axis.
    pub fn per_axis(dim: usize, max_degree: u32) -> Self {
        Self::filtered(dim, max_degree * dim as u32, |a| a.iter().all(|&e| e <= max_degree))
    }

    /// All monomials with `|a| <= degree`.
    pub fn total_degree(dim: usize, degree: u32) -> Self {
        Self::filtered(dim, degree, |_| true)
    }

    fn filtered(dim: usize, top: u32, keep: impl Fn(&[u32]) -> bool) -> Self {
        let mut exponents = Vec::new();
        for total in 0..=top {
            let mut current = vec![0; dim];
            compositions(total, 0, &mut current, &mut |a| {
                if keep(a) {
                    exponents.push(a.to_vec());
                }
            });
        }
        Self { dim, exponents, weights: None }
    }

    /// Multiply each monomial by a fixed coefficient.
    pub fn with_weights(mut self, weights: Vec<T>) -> Self {
        assert_eq!(weights.len(), self.exponents.len(), "one weight per monomial");
        self.weights = Some(weights);
        self
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn weight(&self, index: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[index])
    }

    pub fn max_exponent(&self) -> u32 {
        self.exponents.iter().flatten().copied().max().unwrap_or(0)
    }
}

// Enumerates exponent vectors with the given total, first axis descending.
fn compositions(remaining: u32, axis: usize, current: &mut Vec<u32>, emit: &mut impl FnMut(&[u32])) {
    if current.is_empty() {
        if remaining == 0 {
            emit(current);
        }
        return;
    }
    if axis + 1 == current.len() {
        current[axis] = remaining;
        emit(current);
        return;
    }
    for e in (0..=remaining).rev() {
        current[axis] = e;
        compositions(remaining - e, axis + 1, current, emit);
    }
    current[axis] = 0;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    Indicators(BoxPartition<T>),
    Monomials(MonomialBasis<T>),
    /// `1, cos x, sin x, ..., cos Kx, sin Kx` on the circle.
    Fourier { max_frequency: usize },
    /// `r^2 ln r` with `r = |x - c|`, zero at the center.
    ThinPlate { centers: Vec<Vec<T>> },
    /// `exp(-|x - c|^2 / (2 w^2))`.
    Gaussians { centers: Vec<Vec<T>>, width: T },
    Identity { dim: usize },
}

/// A finite ordered family of scalar functions `psi_1, ..., psi_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    family: Family<T>,
    dim: usize,
    len: usize,
}

impl<T: Real> Dictionary<T> {
    pub fn indicators(partition: BoxPartition<T>) -> Self {
        let (dim, len) = (partition.dim(), partition.len());
        Self { family: Family::Indicators(partition), dim, len }
    }

    pub fn from_monomials(basis: MonomialBasis<T>) -> Self {
        let (dim, len) = (basis.dim, basis.exponents.len());
        Self { family: Family::Monomials(basis), dim, len }
    }

    pub fn monomials_per_axis(dim: usize, max_degree: u32) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::from_monomials(MonomialBasis::per_axis(dim, max_degree)))
    }

    pub fn monomials_total_degree(dim: usize, degree: u32) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::from_monomials(MonomialBasis::total_degree(dim, degree)))
    }

    pub fn fourier(max_frequency: usize) -> Self {
        Self { family: Family::Fourier { max_frequency }, dim: 1, len: 2 * max_frequency + 1 }
    }

    pub fn thin_plate(centers: Vec<Vec<T>>) -> Result<Self> {
        let dim = check_centers(&centers)?;
        let len = centers.len();
        Ok(Self { family: Family::ThinPlate { centers }, dim, len })
    }

    /// Thin-plate splines centered at the box centers of a uniform grid.
    pub fn thin_plate_grid(grid: &BoxPartition<T>) -> Self {
        Self::thin_plate(grid_centers(grid)).expect("grid centers are well formed")
    }

    pub fn gaussians(centers: Vec<Vec<T>>, width: T) -> Result<Self> {
        let dim = check_centers(&centers)?;
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::InvalidParameter("gaussian width must be positive".into()));
        }
        let len = centers.len();
        Ok(Self { family: Family::Gaussians { centers, width }, dim, len })
    }

    pub fn gaussians_grid(grid: &BoxPartition<T>, width: T) -> Result<Self> {
        Self::gaussians(grid_centers(grid), width)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { family: Family::Identity { dim }, dim, len: dim })
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    /// Number of basis functions `k`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// State dimension the dictionary expects.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Indicators(_) => "indicators",
            Family::Monomials(_) => "monomials",
            Family::Fourier { .. } => "fourier",
            Family::ThinPlate { .. } => "thin-plate",
            Family::Gaussians { .. } => "gaussians",
            Family::Identity { .. } => "identity",
        }
    }

    /// Human-readable descriptor of every basis function.
    pub fn labels(&self) -> Vec<String> {
        match &self.family {
            Family::Indicators(p) => (0..p.len()).map(|i| format!("box{i}")).collect(),
            Family::Monomials(b) => b
                .exponents
                .iter()
                .map(|a| {
                    let parts: Vec<String> = a
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(j, &e)| if e == 1 { format!("x{}", j + 1) } else { format!("x{}^{e}", j + 1) })
                        .collect();
                    if parts.is_empty() { "1".to_string() } else { parts.join("*") }
                })
                .collect(),
            Family::Fourier { max_frequency } => std::iter::once("1".to_string())
                .chain((1..=*max_frequency).flat_map(|j| [format!("cos({j}x)"), format!("sin({j}x)")]))
                .collect(),
            Family::ThinPlate { centers } => (0..centers.len()).map(|i| format!("tps{i}")).collect(),
            Family::Gaussians { centers, .. } => (0..centers.len()).map(|i| format!("gauss{i}")).collect(),
            Family::Identity { dim } => (1..=*dim).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Writes `psi_1(x), ..., psi_k(x)` into `out` without checking lengths.
    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        match &self.family {
            Family::Indicators(p) => {
                out.iter_mut().for_each(|v| *v = T::zero());
                if let Some(i) = p.box_index(x) {
                    out[i] = T::one();
                }
            }
            Family::Monomials(b) => {
                let top = b.max_exponent() as usize;
                let mut powers = vec![T::one(); self.dim * (top + 1)];
                for (j, &xj) in x.iter().enumerate() {
                    for e in 1..=top {
                        powers[j * (top + 1) + e] = powers[j * (top + 1) + e - 1] * xj;
                    }
                }
                for (i, a) in b.exponents.iter().enumerate() {
                    let mut v = b.weight(i);
                    for (j, &e) in a.iter().enumerate() {
                        if e > 0 {
                            v *= powers[j * (top + 1) + e as usize];
                        }
                    }
                    out[i] = v;
                }
            }
            Family::Fourier { max_frequency } => {
                out[0] = T::one();
                for j in 1..=*max_frequency {
                    let arg = x[0] * lit::<T>(j as f64);
                    out[2 * j - 1] = arg.cos();
                    out[2 * j] = arg.sin();
                }
            }
            Family::ThinPlate { centers } => {
                for (o, c) in out.iter_mut().zip(centers) {
                    let r2 = squared_distance(x, c);
                    *o = if r2 > T::zero() { r2 * r2.ln() * lit::<T>(0.5) } else { T::zero() };
                }
            }
            Family::Gaussians { centers, width } => {
                let scale = lit::<T>(2.0) * *width * *width;
                for (o, c) in out.iter_mut().zip(centers) {
                    *o = (-squared_distance(x, c) / scale).exp();
                }
            }
            Family::Identity { .. } => out.copy_from_slice(x),
        }
    }

    pub fn eval_vector(&self, x: &[T]) -> Result<DVector<T>> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "{} dictionary expects {}-dimensional points, got {}",
                self.name(),
                self.dim,
                x.len()
            )));
        }
        let mut out = DVector::zeros(self.len);
        self.eval_into(x, out.as_mut_slice());
        Ok(out)
    }

    /// `Psi_X`: column `l` is `Psi(x_l)`. Parallel over columns.
    pub fn eval_matrix(&self, points: &DMatrix<T>) -> Result<DMatrix<T>> {
        if points.nrows() != self.dim {
            return Err(Error::Dimension(format!(
                "{} dictionary expects {} rows, got {}",
                self.name(),
                self.dim,
                points.nrows()
            )));
        }
        if points.ncols() == 0 {
            return Err(Error::EmptyDesign);
        }
        let k = self.len;
        let mut psi = DMatrix::zeros(k, points.ncols());
        psi.as_mut_slice()
            .par_chunks_mut(k)
            .zip(points.as_slice().par_chunks(self.dim))
            .for_each(|(out, x)| self.eval_into(x, out));
        Ok(psi)
    }
}

fn squared_distance<T: Real>(x: &[T], c: &[T]) -> T {
    x.iter().zip(c).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
}

fn grid_centers<T: Real>(grid: &BoxPartition<T>) -> Vec<Vec<T>> {
    (0..grid.len()).map(|i| grid.box_center(i)).collect()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Dimension("dictionary dimension must be positive".into()));
    }
    Ok(())
}

fn check_centers<T: Real>(centers: &[Vec<T>]) -> Result<usize> {
    let dim = centers.first().map(Vec::len).ok_or(Error::InvalidParameter("at least one center required".into()))?;
    check_dim(dim)?;
    if centers.iter().any(|c| c.len() != dim) {
        return Err(Error::Dimension("all centers must have the same dimension".into()));
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn graded_order() {
        let d = Dictionary::<f64>::monomials_per_axis(2, 1).unwrap();
        assert_eq!(d.eval_vector(&[2.0, 3.0]).unwrap().as_slice(), &[1.0, 2.0, 3.0, 6.0]);
        let t = Dictionary::<f64>::monomials_total_degree(2, 2).unwrap();
        assert_eq!(t.labels(), ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
        assert_eq!(Dictionary::<f64>::monomials_per_axis(2, 5).unwrap().len(), 36);
        assert_eq!(Dictionary::<f64>::monomials_total_degree(3, 2).unwrap().len(), 10);
    }

    #[test]
    fn fourier_and_indicators() {
        let f = Dictionary::<f64>::fourier(1);
        let v = f.eval_vector(&[PI / 2.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && (v[2] - 1.0).abs() < 1e-15);
        assert_eq!(Dictionary::<f64>::fourier(20).len(), 41);

        let p = BoxPartition::new(vec![0.0], vec![1.0], vec![2]).unwrap();
        let ind = Dictionary::indicators(p);
        assert_eq!(ind.eval_vector(&[0.25]).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(ind.eval_vector(&[1.5]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn thin_plate_vanishes_at_center() {
        let d = Dictionary::thin_plate(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let v = d.eval_vector(&[0.0, 0.0]).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        let w = d.eval_vector(&[0.0, 2.0]).unwrap();
        assert!((w[0] - 4.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn matrix_matches_vector() {
        let d = Dictionary::<f64>::monomials_total_degree(2, 3).unwrap();
        let pts = DMatrix::from_fn(2, 9, |i, j| (i as f64 + 1.0) * 0.1 * j as f64 - 0.3);
        let psi = d.eval_matrix(&pts).unwrap();
        for j in 0..9 {
            let col: Vec<f64> = pts.column(j).iter().copied().collect();
            assert_eq!(psi.column(j).clone_owned(), d.eval_vector(&col).unwrap());
        }
        let id = Dictionary::<f64>::identity(2).unwrap();
        assert_eq!(id.eval_matrix(&pts).unwrap(), pts);
        assert!(d.eval_vector(&[1.0]).is_err());
    }
}
