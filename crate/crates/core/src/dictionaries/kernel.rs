use super::{Dictionary, MonomialBasis};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Polynomial kernel `f(x, y) = (1 + x^T y)^p`.
///
/// It is the inner product of the weighted monomial feature map containing
/// every monomial `x^a` with `|a| <= p`, weighted by the square root of the
/// trinomial coefficient `p! / (a! (p - |a|)!)`; for `p = 2`, `d = 2` this is
/// `[1, sqrt2 x1, sqrt2 x2, sqrt2 x1 x2, x1^2, x2^2]` up to ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolynomialKernel {
    degree: u32,
}

impl PolynomialKernel {
    pub fn new(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidParameter("polynomial kernel degree must be >= 1".into()));
        }
        Ok(Self { degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn eval<T: Real>(&self, x: &[T], y: &[T]) -> T {
        let dot = x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        (T::one() + dot).powi(self.degree as i32)
    }

    /// Explicit feature dictionary whose inner products reproduce the kernel.
    pub fn feature_dictionary<T: Real>(&self, dim: usize) -> Dictionary<T> {
        let basis = MonomialBasis::<T>::total_degree(dim, self.degree);
        let p = self.degree;
        let weights = basis
            .exponents()
            .iter()
            .map(|alpha| {
                let total: u32 = alpha.iter().sum();
                let mut coeff = factorial(p) / factorial(p - total);
                for &a in alpha {
                    coeff /= factorial(a);
                }
                lit::<T>(coeff.sqrt())
            })
            .collect();
        Dictionary::from_monomials(basis.with_weights(weights))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, v| acc * f64::from(v))
}

/// Free-function form of [`PolynomialKernel::eval`].
pub fn polynomial_kernel<T: Real>(degree: u32, x: &[T], y: &[T]) -> Result<T> {
    Ok(PolynomialKernel::new(degree)?.eval(x, y))
}
