use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Uniform box partition of an axis-aligned domain.
///
/// Boxes are half-open `[lo, hi)` except the last box along each axis, which
/// also contains the upper domain boundary, so every point of the closed
/// domain belongs to exactly one box. Box indices are row-major with the
/// first axis varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPartition<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    counts: Vec<usize>,
}

impl<T: Real> BoxPartition<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, counts: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != counts.len() {
            return Err(Error::Dimension("partition bounds and counts must have equal, non-zero length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter("partition needs finite lower < upper on every axis".into()));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidParameter("every axis needs at least one box".into()));
        }
        Ok(Self { lower, upper, counts })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Total number of boxes `k`.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Lebesgue measure of one box (all boxes are congruent).
    pub fn box_measure(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(&self.counts)
            .fold(T::one(), |acc, ((&l, &u), &n)| acc * (u - l) / lit::<T>(n as f64))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| v >= l && v <= u)
    }

    /// Index of the box containing `x`, or `None` outside the closed domain.
    pub fn box_index(&self, x: &[T]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut index = 0;
        for axis in 0..self.dim() {
            let (l, u, n) = (self.lower[axis], self.upper[axis], self.counts[axis]);
            let v = x[axis];
            if !(v >= l && v <= u) {
                return None;
            }
            let raw = ((v - l) / (u - l) * lit::<T>(n as f64)).floor();
            let cell = raw.to_usize().unwrap_or(0).min(n - 1);
            index = index * n + cell;
        }
        Some(index)
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            out[axis] = index % self.counts[axis];
            index /= self.counts[axis];
        }
        out
    }

    /// Lower and upper corner of box `index`.
    pub fn box_bounds(&self, index: usize) -> (Vec<T>, Vec<T>) {
        let cell = self.multi_index(index);
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let (l, u) = (self.lower[axis], self.upper[axis]);
            let n = lit::<T>(self.counts[axis] as f64);
            lo.push(l + (u - l) * lit::<T>(cell[axis] as f64) / n);
            hi.push(l + (u - l) * lit::<T>((cell[axis] + 1) as f64) / n);
        }
        (lo, hi)
    }

    pub fn box_center(&self, index: usize) -> Vec<T> {
        let (lo, hi) = self.box_bounds(index);
        lo.iter().zip(&hi).map(|(&l, &h)| (l + h) * lit::<T>(0.5)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_total_on_closed_domain() {
        let p = BoxPartition::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![2, 4]).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(p.box_index(&[0.0, -1.0]), Some(0));
        assert_eq!(p.box_index(&[1.0, 1.0]), Some(7));
        assert_eq!(p.box_index(&[0.25, 0.75]), Some(3));
        assert_eq!(p.box_index(&[0.75, -0.75]), Some(4));
        assert_eq!(p.box_index(&[1.0 + 1e-12, 0.0]), None);
        assert_eq!(p.box_index(&[f64::NAN, 0.0]), None);
        assert!((p.box_measure() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn centers_round_trip_through_index() {
        let p = BoxPartition::new(vec![-2.0, -2.0], vec![2.0, 2.0], vec![5, 3]).unwrap();
        for i in 0..p.len() {
            assert_eq!(p.box_index(&p.box_center(i)), Some(i));
        }
    }

    #[test]
    fn rejects_degenerate_domain() {
        assert!(BoxPartition::new(vec![1.0], vec![1.0], vec![2]).is_err());
        assert!(BoxPartition::new(vec![0.0], vec![1.0], vec![0]).is_err());
    }
}
