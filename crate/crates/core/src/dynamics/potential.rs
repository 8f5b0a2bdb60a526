use crate::scalar::{lit, Real};

/// Built-in potentials `V` whose negative gradient drives the gradient SDEs.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialField<T> {
    /// `V(x, y) = (x^2 - 1)^2 + y^2`.
    DoubleWell,
    /// The coupled three-well potential on `[-2, 2] x [-1, 2]`.
    TripleWell,
    /// `V(q) = (q^2 - 1)^2` on the line.
    QuarticWell,
    /// `V(phi) = amplitude * cos(multiplicity * phi)` on the circle.
    Cosine { multiplicity: u32, amplitude: T },
}

impl<T: Real> PotentialField<T> {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialField::DoubleWell => "double-well",
            PotentialField::TripleWell => "triple-well",
            PotentialField::QuarticWell => "quartic-well",
            PotentialField::Cosine { .. } => "cosine",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PotentialField::DoubleWell | PotentialField::TripleWell => 2,
            PotentialField::QuarticWell | PotentialField::Cosine { .. } => 1,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            PotentialField::DoubleWell => {
                let a = x[0] * x[0] - T::one();
                a * a + x[1] * x[1]
            }
            PotentialField::TripleWell => {
                let (x, y) = (x[0], x[1]);
                let t = TripleTerms::new(x, y);
                lit::<T>(3.0) * t.e1 - lit::<T>(3.0) * t.e2 - lit::<T>(5.0) * t.e3 - lit::<T>(5.0) * t.e4
                    + lit::<T>(0.2) * x.powi(4)
                    + lit::<T>(0.2) * (y - t.third).powi(4)
            }
            PotentialField::QuarticWell => {
                let a = x[0] * x[0] - T::one();
                a * a
            }
            PotentialField::Cosine { multiplicity, amplitude } => {
                *amplitude * (lit::<T>(f64::from(*multiplicity)) * x[0]).cos()
            }
        }
    }

    pub fn gradient(&self, x: &[T], out: &mut [T]) {
        match self {
            PotentialField::DoubleWell => {
                out[0] = lit::<T>(4.0) * x[0] * (x[0] * x[0] - T::one());
                out[1] = lit::<T>(2.0) * x[1];
            }
            PotentialField::TripleWell => {
                let (x, y) = (x[0], x[1]);
                let t = TripleTerms::new(x, y);
                let two = lit::<T>(2.0);
                out[0] = lit::<T>(3.0) * t.e1 * (-two * x) - lit::<T>(3.0) * t.e2 * (-two * x)
                    - lit::<T>(5.0) * t.e3 * (-two * (x - T::one()))
                    - lit::<T>(5.0) * t.e4 * (-two * (x + T::one()))
                    + lit::<T>(0.8) * x.powi(3);
                out[1] = lit::<T>(3.0) * t.e1 * (-two * (y - t.third))
                    - lit::<T>(3.0) * t.e2 * (-two * (y - t.five_thirds))
                    - lit::<T>(5.0) * t.e3 * (-two * y)
                    - lit::<T>(5.0) * t.e4 * (-two * y)
                    + lit::<T>(0.8) * (y - t.third).powi(3);
            }
            PotentialField::QuarticWell => {
                out[0] = lit::<T>(4.0) * x[0] * (x[0] * x[0] - T::one());
            }
            PotentialField::Cosine { multiplicity, amplitude } => {
                let n = lit::<T>(f64::from(*multiplicity));
                out[0] = -*amplitude * n * (n * x[0]).sin();
            }
        }
    }
}

struct TripleTerms<T> {
    e1: T,
    e2: T,
    e3: T,
    e4: T,
    third: T,
    five_thirds: T,
}

impl<T: Real> TripleTerms<T> {
    fn new(x: T, y: T) -> Self {
        let third = lit::<T>(1.0 / 3.0);
        let five_thirds = lit::<T>(5.0 / 3.0);
        let x2 = x * x;
        Self {
            e1: (-x2 - (y - third) * (y - third)).exp(),
            e2: (-x2 - (y - five_thirds) * (y - five_thirds)).exp(),
            e3: (-(x - T::one()) * (x - T::one()) - y * y).exp(),
            e4: (-(x + T::one()) * (x + T::one()) - y * y).exp(),
            third,
            five_thirds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central_difference(v: &PotentialField<f64>, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (v.value(&p) - v.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let fields = [
            PotentialField::DoubleWell,
            PotentialField::TripleWell,
            PotentialField::QuarticWell,
            PotentialField::Cosine { multiplicity: 3, amplitude: 1.0 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for field in &fields {
            for _ in 0..100 {
                let x: Vec<f64> = (0..field.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let mut g = vec![0.0; field.dim()];
                field.gradient(&x, &mut g);
                let fd = central_difference(field, &x, 1e-6);
                for (a, b) in g.iter().zip(&fd) {
                    let scale = a.abs().max(b.abs()).max(1e-3);
                    assert!((a - b).abs() / scale < 1e-5, "{}: {a} vs {b} at {x:?}", field.name());
                }
            }
        }
    }

    #[test]
    fn double_well_minimum_is_critical() {
        let mut g = [1.0; 2];
        PotentialField::DoubleWell.gradient(&[1.0, 0.0], &mut g);
        assert_eq!(g, [0.0, 0.0]);
    }
}
