use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::rng::{stream, Purpose};
use super::{Dynamics, IntegratorConfig};
use crate::dictionaries::BoxPartition;
use crate::error::{Error, Result};
use crate::estimators::{Provenance, TrajectoryPairs};
use crate::scalar::{lit, Real};

/// How the initial points `x_i` are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleDesign<T: Real> {
    /// `points_per_box` uniform points in every box, box-major column order.
    PerBox { partition: BoxPartition<T>, points_per_box: usize },
    /// Every box split into `per_dim^d` congruent cells, one point at each
    /// cell midpoint. Used for exhaustive quadrature-style sampling.
    CellMidpoints { partition: BoxPartition<T>, per_dim: usize },
    /// `count` points uniform in the box `[lower, upper]`.
    UniformDomain { lower: Vec<T>, upper: Vec<T>, count: usize },
    /// One orbit of `length` states from `start`; pairs are `lag` ticks apart.
    SingleOrbit { start: Vec<T>, length: usize, lag: usize },
}

impl<T: Real> SampleDesign<T> {
    pub fn sample_count(&self) -> usize {
        match self {
            SampleDesign::PerBox { partition, points_per_box } => partition.len() * points_per_box,
            SampleDesign::CellMidpoints { partition, per_dim } => {
                partition.len() * per_dim.pow(partition.dim() as u32)
            }
            SampleDesign::UniformDomain { count, .. } => *count,
            SampleDesign::SingleOrbit { length, lag, .. } => length.saturating_sub(*lag),
        }
    }

    fn dim(&self) -> usize {
        match self {
            SampleDesign::PerBox { partition, .. } | SampleDesign::CellMidpoints { partition, .. } => {
                partition.dim()
            }
            SampleDesign::UniformDomain { lower, .. } => lower.len(),
            SampleDesign::SingleOrbit { start, .. } => start.len(),
        }
    }

    fn describe(&self) -> String {
        match self {
            SampleDesign::PerBox { partition, points_per_box } => {
                format!("per-box {:?} n={points_per_box}", partition.counts())
            }
            SampleDesign::CellMidpoints { partition, per_dim } => {
                format!("cell-midpoints {:?} per_dim={per_dim}", partition.counts())
            }
            SampleDesign::UniformDomain { count, .. } => format!("uniform-domain m={count}"),
            SampleDesign::SingleOrbit { length, lag, .. } => format!("single-orbit length={length} lag={lag}"),
        }
    }

    /// Initial point of column `index` (not used for single orbits).
    fn initial_point(&self, index: usize, seed: u64) -> Vec<T> {
        match self {
            SampleDesign::PerBox { partition, points_per_box } => {
                let (lo, hi) = partition.box_bounds(index / points_per_box);
                let mut rng = stream(seed, Purpose::Placement, index as u64);
                lo.iter().zip(&hi).map(|(&l, &h)| l + (h - l) * lit::<T>(rng.random::<f64>())).collect()
            }
            SampleDesign::CellMidpoints { partition, per_dim } => {
                let cells = per_dim.pow(partition.dim() as u32);
                let (lo, hi) = partition.box_bounds(index / cells);
                let mut cell = index % cells;
                let mut point = vec![T::zero(); lo.len()];
                for axis in (0..lo.len()).rev() {
                    let c = cell % per_dim;
                    cell /= per_dim;
                    let frac = (c as f64 + 0.5) / *per_dim as f64;
                    point[axis] = lo[axis] + (hi[axis] - lo[axis]) * lit::<T>(frac);
                }
                point
            }
            SampleDesign::UniformDomain { lower, upper, .. } => {
                let mut rng = stream(seed, Purpose::Placement, index as u64);
                lower.iter().zip(upper).map(|(&l, &h)| l + (h - l) * lit::<T>(rng.random::<f64>())).collect()
            }
            SampleDesign::SingleOrbit { start, .. } => start.clone(),
        }
    }
}

/// Builds snapshot pairs: column `i` of `Y` is the one-tick image of column `i` of `X`.
pub fn generate_pairs<T: Real, D: Dynamics<T> + ?Sized>(
    system: &D,
    design: &SampleDesign<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<TrajectoryPairs<T>> {
    let d = system.dim();
    if design.dim() != d {
        return Err(Error::Dimension(format!(
            "design is {}-dimensional, system {} is {d}-dimensional",
            design.dim(),
            system.name()
        )));
    }
    if let SampleDesign::UniformDomain { lower, upper, .. } = design {
        if lower.len() != upper.len() || lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("uniform domain needs lower < upper per axis".into()));
        }
    }
    let m = design.sample_count();
    if m == 0 {
        return Err(Error::EmptyDesign);
    }
    let provenance = Provenance {
        system: system.name().to_string(),
        seed: Some(cfg.seed),
        design: design.describe(),
    };

    let (x, y) = match design {
        SampleDesign::SingleOrbit { start, length, lag } => {
            if *lag == 0 {
                return Err(Error::InvalidParameter("orbit lag must be at least 1".into()));
            }
            let mut rng = stream(cfg.seed, Purpose::Noise, 0);
            let mut orbit = Vec::with_capacity(*length);
            orbit.push(start.clone());
            for _ in 1..*length {
                let next = system.advance(orbit.last().expect("non-empty"), cfg, &mut rng)?;
                orbit.push(next);
            }
            let x = DMatrix::from_fn(d, m, |i, j| orbit[j][i]);
            let y = DMatrix::from_fn(d, m, |i, j| orbit[j + lag][i]);
            (x, y)
        }
        _ => {
            let columns: Vec<(Vec<T>, Vec<T>)> = (0..m)
                .into_par_iter()
                .map(|index| {
                    let x0 = design.initial_point(index, cfg.seed);
                    let mut rng = stream(cfg.seed, Purpose::Noise, index as u64);
                    let y0 = system.advance(&x0, cfg, &mut rng)?;
                    Ok((x0, y0))
                })
                .collect::<Result<_>>()?;
            let x = DMatrix::from_fn(d, m, |i, j| columns[j].0[i]);
            let y = DMatrix::from_fn(d, m, |i, j| columns[j].1[i]);
            (x, y)
        }
    };
    TrajectoryPairs::with_provenance(x, y, provenance)
}
