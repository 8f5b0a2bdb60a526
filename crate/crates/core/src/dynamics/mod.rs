//! Deterministic maps and stochastic systems, their integration, and the
//! generation of snapshot pairs `(X, Y)` for the estimators.

mod langevin;
mod linear;
mod potential;
pub mod rng;
mod sampling;
mod sde;

pub use langevin::LangevinSystem;
pub use linear::{LinearMap, MapFn};
pub use potential::PotentialField;
pub use sampling::{generate_pairs, SampleDesign};
pub use sde::{euler_maruyama_step, Drift, SdeSystem};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{wide, Real};

/// Integration settings. One operator tick is `steps_per_map` Euler-Maruyama
/// steps of size `step`, i.e. lag time `step * steps_per_map`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub step: T,
    pub steps_per_map: usize,
    pub seed: u64,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(step: T, steps_per_map: usize, seed: u64) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {}", wide(step))));
        }
        if steps_per_map == 0 {
            return Err(Error::InvalidParameter("steps_per_map must be at least 1".into()));
        }
        Ok(Self { step, steps_per_map, seed })
    }

    /// Chooses `steps_per_map = round(lag / step)` and checks that the product
    /// reproduces `lag` to 1e-12.
    pub fn from_lag(lag: T, step: T, seed: u64) -> Result<Self> {
        let steps = (wide(lag) / wide(step)).round();
        if steps < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lag {} shorter than step {}",
                wide(lag),
                wide(step)
            )));
        }
        let cfg = Self::new(step, steps as usize, seed)?;
        if (wide(cfg.lag_time()) - wide(lag)).abs() > 1e-12 * wide(lag).abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "lag {} is not an integer multiple of step {}",
                wide(lag),
                wide(step)
            )));
        }
        Ok(cfg)
    }

    pub fn lag_time(&self) -> T {
        self.step * T::from_usize(self.steps_per_map).expect("step count representable")
    }
}

/// A system that can be advanced by one operator tick.
pub trait Dynamics<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    /// Advances `x` by one tick, drawing noise from `rng`.
    fn advance(&self, x: &[T], cfg: &IntegratorConfig<T>, rng: &mut ChaCha8Rng) -> Result<Vec<T>>;

    /// Values outside this box are reported by the samplers but kept.
    fn wraps_periodically(&self) -> Option<T> {
        None
    }
}

/// Advances `x0` by one tick using the noise stream of sample `index`.
pub fn evolve<T: Real, D: Dynamics<T> + ?Sized>(
    system: &D,
    x0: &[T],
    cfg: &IntegratorConfig<T>,
    index: u64,
) -> Result<Vec<T>> {
    if x0.len() != system.dim() {
        return Err(Error::Dimension(format!(
            "state has {} components, system {} expects {}",
            x0.len(),
            system.name(),
            system.dim()
        )));
    }
    let mut rng = rng::stream(cfg.seed, rng::Purpose::Noise, index);
    system.advance(x0, cfg, &mut rng)
}
