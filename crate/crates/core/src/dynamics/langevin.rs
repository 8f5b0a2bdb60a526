use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::sde::standard_normal;
use super::{Dynamics, IntegratorConfig, PotentialField};
use crate::error::{Error, Result};
use crate::scalar::{lit, wide, Real};

/// Langevin dynamics on phase space `(q, p)`:
///
/// ```text
/// dq = M^{-1} p dt
/// dp = -grad V(q) dt - gamma M^{-1} p dt + sigma dW
/// ```
///
/// with `sigma` fixed by the fluctuation-dissipation relation
/// `2 gamma = beta sigma sigma^T`. The state vector is `[q; p]`.
#[derive(Debug, Clone)]
pub struct LangevinSystem<T: Real> {
    mass: DMatrix<T>,
    mass_inv: DMatrix<T>,
    friction: T,
    beta: T,
    sigma: T,
    potential: PotentialField<T>,
}

impl<T: Real> LangevinSystem<T> {
    pub fn new(mass: DMatrix<T>, friction: T, beta: T, potential: PotentialField<T>) -> Result<Self> {
        let d = potential.dim();
        if mass.nrows() != d || mass.ncols() != d {
            return Err(Error::Dimension(format!("mass matrix must be {d}x{d}")));
        }
        if (&mass - mass.transpose()).norm() > lit::<T>(1e-12) * mass.norm() {
            return Err(Error::InvalidParameter("mass matrix must be symmetric".into()));
        }
        let chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("mass matrix must be positive definite".into()))?;
        if !(friction >= T::zero()) {
            return Err(Error::InvalidParameter("friction must be >= 0".into()));
        }
        if !(beta > T::zero()) {
            return Err(Error::InvalidParameter("inverse temperature must be > 0".into()));
        }
        let sigma = (lit::<T>(2.0) * friction / beta).sqrt();
        Ok(Self {
            mass_inv: chol.inverse(),
            mass,
            friction,
            beta,
            sigma,
            potential,
        })
    }

    /// Unit-mass particle in the quartic double well `(q^2 - 1)^2`.
    pub fn one_dimensional(friction: T, beta: T) -> Self {
        Self::new(DMatrix::identity(1, 1), friction, beta, PotentialField::QuarticWell).expect("valid built-in")
    }

    pub fn configuration_dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn mass(&self) -> &DMatrix<T> {
        &self.mass
    }

    pub fn friction(&self) -> T {
        self.friction
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// `max |2 gamma I - beta sigma sigma^T|`.
    pub fn fluctuation_dissipation_residual(&self) -> f64 {
        wide((lit::<T>(2.0) * self.friction - self.beta * self.sigma * self.sigma).abs())
    }

    /// Unnormalized canonical density `exp(-beta (p^T M^{-1} p / 2 + V(q)))`.
    ///
    /// Kinetic energy is written with `M^{-1}` so that the density is
    /// stationary for the equations of motion above.
    pub fn canonical_weight(&self, state: &[T]) -> T {
        let d = self.configuration_dim();
        let p = DVector::from_column_slice(&state[d..]);
        let kinetic = (p.transpose() * &self.mass_inv * &p)[(0, 0)] * lit::<T>(0.5);
        (-self.beta * (kinetic + self.potential.value(&state[..d]))).exp()
    }
}

impl<T: Real> Dynamics<T> for LangevinSystem<T> {
    fn dim(&self) -> usize {
        2 * self.configuration_dim()
    }

    fn name(&self) -> &str {
        "langevin"
    }

    fn advance(&self, x: &[T], cfg: &IntegratorConfig<T>, rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
        let d = self.configuration_dim();
        let h = cfg.step;
        let scale = self.sigma * h.sqrt();
        let mut q = DVector::from_column_slice(&x[..d]);
        let mut p = DVector::from_column_slice(&x[d..]);
        let mut grad = vec![T::zero(); d];
        for step in 0..cfg.steps_per_map {
            let velocity = &self.mass_inv * &p;
            self.potential.gradient(q.as_slice(), &mut grad);
            let mut next_p = &p - &velocity * (self.friction * h);
            for i in 0..d {
                next_p[i] -= h * grad[i];
                if self.sigma > T::zero() {
                    next_p[i] += scale * standard_normal::<T>(rng);
                }
            }
            q += velocity * h;
            p = next_p;
            if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
                return Err(Error::IntegrationDiverged {
                    step,
                    time: wide(h) * step as f64,
                });
            }
        }
        Ok(q.iter().chain(p.iter()).copied().collect())
    }
}
