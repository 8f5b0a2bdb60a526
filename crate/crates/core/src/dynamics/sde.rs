use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dynamics, IntegratorConfig, PotentialField};
use crate::error::{Error, Result};
use crate::scalar::{lit, wide, Real};

type DriftClosure<T> = dyn Fn(T, &[T], &mut [T]) + Send + Sync;

/// Drift vector field `mu(t, x)`.
#[derive(Clone)]
pub enum Drift<T: Real> {
    /// `mu = -grad V`.
    Gradient(PotentialField<T>),
    /// `mu = L x`.
    Linear(DMatrix<T>),
    Custom(Arc<DriftClosure<T>>),
}

impl<T: Real> Drift<T> {
    pub fn eval(&self, t: T, x: &[T], out: &mut [T]) {
        match self {
            Drift::Gradient(v) => {
                v.gradient(x, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
            Drift::Linear(l) => {
                let y = l * DVector::from_column_slice(x);
                out.copy_from_slice(y.as_slice());
            }
            Drift::Custom(f) => f(t, x, out),
        }
    }
}

impl<T: Real> std::fmt::Debug for Drift<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Drift::Gradient(v) => write!(f, "Gradient({})", v.name()),
            Drift::Linear(l) => write!(f, "Linear({}x{})", l.nrows(), l.ncols()),
            Drift::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `dx = mu(t, x) dt + sigma dW` with scalar, state-independent `sigma`
/// acting on independent Wiener processes per coordinate.
#[derive(Debug, Clone)]
pub struct SdeSystem<T: Real> {
    name: String,
    dim: usize,
    drift: Drift<T>,
    sigma: T,
    period: Option<T>,
}

impl<T: Real> SdeSystem<T> {
    pub fn new(name: impl Into<String>, dim: usize, drift: Drift<T>, sigma: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("SDE dimension must be positive".into()));
        }
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {}", wide(sigma))));
        }
        if let Drift::Linear(l) = &drift {
            if l.nrows() != dim || l.ncols() != dim {
                return Err(Error::Dimension("linear drift matrix shape".into()));
            }
        }
        if let Drift::Gradient(v) = &drift {
            if v.dim() != dim {
                return Err(Error::Dimension(format!("potential {} is {}-dimensional", v.name(), v.dim())));
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            drift,
            sigma,
            period: None,
        })
    }

    /// Gradient system `dx = -grad V dt + sigma dW`.
    pub fn gradient(potential: PotentialField<T>, sigma: T) -> Result<Self> {
        let name = potential.name();
        let dim = potential.dim();
        Self::new(name, dim, Drift::Gradient(potential), sigma)
    }

    pub fn double_well(sigma: T) -> Self {
        Self::gradient(PotentialField::DoubleWell, sigma).expect("valid built-in")
    }

    pub fn triple_well(sigma: T) -> Self {
        Self::gradient(PotentialField::TripleWell, sigma).expect("valid built-in")
    }

    /// Overdamped diffusion on the circle `[0, 2 pi)` in `V = cos(n phi)`.
    pub fn circle_cosine(multiplicity: u32, sigma: T) -> Self {
        Self::gradient(PotentialField::Cosine { multiplicity, amplitude: T::one() }, sigma)
            .expect("valid built-in")
            .with_period(T::two_pi())
    }

    /// States are wrapped into `[0, period)` after every step.
    pub fn with_period(mut self, period: T) -> Self {
        self.period = Some(period);
        self
    }

    pub fn drift(&self) -> &Drift<T> {
        &self.drift
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    fn wrap(&self, x: &mut [T]) {
        if let Some(p) = self.period {
            for v in x.iter_mut() {
                *v -= p * (*v / p).floor();
                if *v >= p {
                    *v = T::zero();
                }
            }
        }
    }
}

/// One Euler-Maruyama step `x + h mu(t, x) + sigma sqrt(h) xi`, where `xi`
/// is a standard-normal vector (so the Wiener increment has variance `h`).
pub fn euler_maruyama_step<T: Real>(system: &SdeSystem<T>, t: T, x: &[T], h: T, noise: &[T]) -> Result<Vec<T>> {
    if x.len() != system.dim || noise.len() != system.dim {
        return Err(Error::Dimension(format!(
            "state/noise lengths {}/{} for a {}-dimensional SDE",
            x.len(),
            noise.len(),
            system.dim
        )));
    }
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    let mut mu = vec![T::zero(); system.dim];
    system.drift.eval(t, x, &mut mu);
    let scale = system.sigma * h.sqrt();
    let mut next: Vec<T> = x
        .iter()
        .zip(&mu)
        .zip(noise)
        .map(|((&xi, &mi), &ni)| xi + h * mi + scale * ni)
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDiverged { step: 0, time: wide(t) });
    }
    system.wrap(&mut next);
    Ok(next)
}

pub(crate) fn standard_normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    lit(rng.sample::<f64, _>(StandardNormal))
}

impl<T: Real> Dynamics<T> for SdeSystem<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn advance(&self, x: &[T], cfg: &IntegratorConfig<T>, rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
        let mut state = x.to_vec();
        let mut noise = vec![T::zero(); self.dim];
        let mut t = T::zero();
        for step in 0..cfg.steps_per_map {
            if self.sigma > T::zero() {
                noise.iter_mut().for_each(|n| *n = standard_normal(rng));
            }
            state = euler_maruyama_step(self, t, &state, cfg.step, &noise).map_err(|e| match e {
                Error::IntegrationDiverged { time, .. } => Error::IntegrationDiverged { step, time },
                other => other,
            })?;
            t += cfg.step;
        }
        Ok(state)
    }

    fn wraps_periodically(&self) -> Option<T> {
        self.period
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, rng};

    #[test]
    fn deterministic_linear_decay() {
        let sys = SdeSystem::<f64>::new("decay", 1, Drift::Linear(DMatrix::from_element(1, 1, -1.0)), 0.0).unwrap();
        let y = euler_maruyama_step(&sys, 0.0, &[1.0], 0.1, &[123.0]).unwrap();
        assert!((y[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn well_minimum_is_fixed() {
        let sys = SdeSystem::<f64>::double_well(0.0);
        for h in [1e-3, 0.1, 1.0] {
            let y = euler_maruyama_step(&sys, 0.0, &[1.0, 0.0], h, &[0.3, -2.0]).unwrap();
            assert_eq!(y, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn increment_variance_is_step_size() {
        let sys = SdeSystem::new("bm", 1, Drift::Linear(DMatrix::zeros(1, 1)), 1.0).unwrap();
        let mut r = rng::stream(5, rng::Purpose::Noise, 0);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let xi: f64 = standard_normal(&mut r);
            let y = euler_maruyama_step(&sys, 0.0, &[0.0], 0.01, &[xi]).unwrap()[0];
            s += y;
            s2 += y * y;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((var - 0.01).abs() < 5e-4, "variance {var}");
        // unbiased within 4 standard errors
        assert!(mean.abs() < 4.0 * (0.01f64 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn divergence_names_the_step() {
        let blow_up: Drift<f64> = Drift::Custom(Arc::new(|_, x, out| out[0] = x[0] * x[0] * 1e200));
        let sys = SdeSystem::new("blowup", 1, blow_up, 0.0).unwrap();
        let cfg = IntegratorConfig::new(1.0, 10, 0).unwrap();
        match evolve(&sys, &[10.0], &cfg, 0) {
            Err(Error::IntegrationDiverged { step, .. }) => assert!(step < 10),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn gradient_flow_reaches_critical_point() {
        let sys = SdeSystem::<f64>::double_well(0.0);
        let cfg = IntegratorConfig::new(1e-2, 5000, 0).unwrap();
        let x = evolve(&sys, &[0.0, 1.0], &cfg, 0).unwrap();
        let mut g = [0.0f64; 2];
        PotentialField::DoubleWell.gradient(&x, &mut g);
        assert!((g[0] * g[0] + g[1] * g[1]).sqrt() < 1e-6, "{x:?}");
    }

    #[test]
    fn evolve_is_reproducible() {
        let sys = SdeSystem::double_well(0.7);
        let cfg = IntegratorConfig::new(1e-3, 500, 42).unwrap();
        let a = evolve(&sys, &[0.3, -0.2], &cfg, 17).unwrap();
        let b = evolve(&sys, &[0.3, -0.2], &cfg, 17).unwrap();
        assert_eq!(a, b);
        let c = evolve(&sys, &[0.3, -0.2], &cfg, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn circle_states_stay_wrapped() {
        let sys = SdeSystem::circle_cosine(3, 1.5);
        let cfg = IntegratorConfig::new(1e-3, 2000, 3).unwrap();
        for i in 0..20 {
            let y = evolve(&sys, &[6.2], &cfg, i).unwrap();
            assert!(y[0] >= 0.0 && y[0] < std::f64::consts::TAU);
        }
    }

    #[test]
    fn lag_configuration() {
        let cfg = IntegratorConfig::<f64>::from_lag(2.0, 1e-3, 0).unwrap();
        assert_eq!(cfg.steps_per_map, 2000);
        assert!((cfg.lag_time() - 2.0).abs() < 1e-12);
        assert!(IntegratorConfig::from_lag(0.0015, 1e-3, 0).is_err());
        assert!(IntegratorConfig::new(-1.0, 1, 0).is_err());
    }
}
