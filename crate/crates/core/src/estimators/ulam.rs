use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::TrajectoryPairs;
use crate::dictionaries::BoxPartition;
use crate::error::{Error, Result, Warning};
use crate::scalar::{lit, ratio, Real};

/// Row-stochastic Ulam matrix with the transition counts it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<T: Real> {
    p: DMatrix<T>,
    counts: DMatrix<u64>,
    row_totals: Vec<u64>,
    samples_per_box: Vec<u64>,
    partition: BoxPartition<T>,
    warnings: Vec<Warning>,
}

impl<T: Real> TransferMatrix<T> {
    pub fn p(&self) -> &DMatrix<T> {
        &self.p
    }

    /// `counts[(i, j)]` is the number of samples in box `i` with image in box `j`.
    pub fn counts(&self) -> &DMatrix<u64> {
        &self.counts
    }

    /// In-domain images per row (the normalizer of row `i`).
    pub fn row_totals(&self) -> &[u64] {
        &self.row_totals
    }

    /// X samples per box, including samples whose image escaped.
    pub fn samples_per_box(&self) -> &[u64] {
        &self.samples_per_box
    }

    pub fn partition(&self) -> &BoxPartition<T> {
        &self.partition
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Indices of rows that were replaced by the absorbing unit row.
    pub fn absorbing_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.row_totals[i] == 0).collect()
    }

    /// The same matrix with entries as exact ratios of counts.
    pub fn exact_probabilities(&self) -> DMatrix<BigRational> {
        let k = self.len();
        DMatrix::from_fn(k, k, |i, j| match self.row_totals[i] {
            0 if i == j => BigRational::one(),
            0 => BigRational::zero(),
            total => ratio(self.counts[(i, j)], total),
        })
    }

    /// Nonzero entries as `(i, j, count, p)`, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, u64, T)> {
        let k = self.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if self.p[(i, j)] != T::zero() {
                    out.push((i, j, self.counts[(i, j)], self.p[(i, j)]));
                }
            }
        }
        out
    }
}

/// Monte-Carlo Ulam estimate: `P_ij = #{l : x_l in B_i, y_l in B_j} / #{l : x_l in B_i, y_l in domain}`.
///
/// Images outside the domain are dropped from the row totals. A row with no
/// usable samples becomes the unit row on the diagonal and a warning is
/// recorded.
pub fn ulam_estimate<T: Real>(pairs: &TrajectoryPairs<T>, boxes: &BoxPartition<T>) -> Result<TransferMatrix<T>> {
    if pairs.dim() != boxes.dim() {
        return Err(Error::Dimension(format!(
            "pairs are {}-dimensional, partition is {}-dimensional",
            pairs.dim(),
            boxes.dim()
        )));
    }
    let k = boxes.len();
    let mut counts = DMatrix::<u64>::zeros(k, k);
    let mut samples_per_box = vec![0u64; k];
    let mut escaped = 0usize;
    for l in 0..pairs.len() {
        let i = boxes
            .box_index(pairs.x().column(l).as_slice())
            .ok_or(Error::SampleOutsideDomain { column: l })?;
        samples_per_box[i] += 1;
        match boxes.box_index(pairs.y().column(l).as_slice()) {
            Some(j) => counts[(i, j)] += 1,
            None => escaped += 1,
        }
    }

    let mut warnings = Vec::new();
    if escaped > 0 {
        warnings.push(Warning::EscapedImages { count: escaped });
    }
    let row_totals: Vec<u64> = (0..k).map(|i| counts.row(i).sum()).collect();
    let mut p = DMatrix::zeros(k, k);
    for i in 0..k {
        let total = row_totals[i];
        if total == 0 {
            warnings.push(if samples_per_box[i] == 0 {
                Warning::EmptyBox { index: i }
            } else {
                Warning::AllImagesEscaped { index: i }
            });
            p[(i, i)] = T::one();
            continue;
        }
        let denom = lit::<T>(total as f64);
        for j in 0..k {
            let c = counts[(i, j)];
            if c > 0 {
                p[(i, j)] = lit::<T>(c as f64) / denom;
            }
        }
    }
    Ok(TransferMatrix { p, counts, row_totals, samples_per_box, partition: boxes.clone(), warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(xs: &[f64], ys: &[f64]) -> TrajectoryPairs<f64> {
        TrajectoryPairs::new(DMatrix::from_row_slice(1, xs.len(), xs), DMatrix::from_row_slice(1, ys.len(), ys)).unwrap()
    }

    #[test]
    fn identity_data_gives_identity() {
        let xs = [0.1, 0.3, 0.6, 0.9];
        let boxes = BoxPartition::new(vec![0.0], vec![1.0], vec![4]).unwrap();
        let t = ulam_estimate(&one_d(&xs, &xs), &boxes).unwrap();
        assert_eq!(t.p(), &DMatrix::identity(4, 4));
        assert!(t.warnings().is_empty());
    }

    #[test]
    fn empty_and_escaping_rows_are_absorbing() {
        let boxes = BoxPartition::new(vec![0.0], vec![1.0], vec![3]).unwrap();
        let t = ulam_estimate(&one_d(&[0.1, 0.5, 0.5], &[0.5, 2.0, 0.9]), &boxes).unwrap();
        assert_eq!(t.p()[(0, 1)], 1.0);
        assert_eq!(t.p()[(1, 2)], 1.0);
        assert_eq!(t.p()[(2, 2)], 1.0);
        assert_eq!(t.row_totals(), &[1, 1, 0]);
        assert!(t.warnings().contains(&Warning::EmptyBox { index: 2 }));
        assert!(t.warnings().contains(&Warning::EscapedImages { count: 1 }));
        assert_eq!(t.absorbing_rows(), vec![2]);
    }

    #[test]
    fn outside_x_is_an_error() {
        let boxes = BoxPartition::new(vec![0.0], vec![1.0], vec![2]).unwrap();
        assert!(matches!(
            ulam_estimate(&one_d(&[0.5, 1.5], &[0.5, 0.5]), &boxes),
            Err(Error::SampleOutsideDomain { column: 1 })
        ));
    }

    #[test]
    fn exact_entries_are_count_ratios() {
        let boxes = BoxPartition::new(vec![0.0], vec![1.0], vec![2]).unwrap();
        let t = ulam_estimate(&one_d(&[0.1, 0.2, 0.3, 0.7], &[0.1, 0.8, 0.9, 0.2]), &boxes).unwrap();
        let exact = t.exact_probabilities();
        assert_eq!(exact[(0, 0)], ratio(1, 3));
        assert_eq!(exact[(0, 1)], ratio(2, 3));
        assert_eq!(t.triplets().len(), 3);
    }
}
