use std::f64::consts::TAU;

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use super::PositionTrajectory;
use crate::error::{Error, Result};
use crate::estimators::{Provenance, TrajectoryPairs};

const DEGENERATE: f64 = 1e-10;

/// Four distinct zero-based atom indices `(i, j, k, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DihedralSpec {
    pub atoms: [usize; 4],
}

impl DihedralSpec {
    pub fn new(atoms: [usize; 4]) -> Result<Self> {
        for a in 0..4 {
            for b in a + 1..4 {
                if atoms[a] == atoms[b] {
                    return Err(Error::InvalidParameter(format!("dihedral atoms must be distinct, got {atoms:?}")));
                }
            }
        }
        Ok(Self { atoms })
    }
}

/// A scalar observable per frame, angles in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub values: Vec<f64>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Signed dihedral angle of four points, in `[0, 2 pi)`, together with the
/// cosine of the angle between the two plane normals.
pub fn dihedral_angle(r: [[f64; 3]; 4]) -> std::result::Result<(f64, f64), String> {
    let [ri, rj, rk, rl] = r.map(Vector3::from);
    let v_ij = rj - ri;
    let v_jk = rk - rj;
    let v_lk = rk - rl;
    let n1 = v_ij.cross(&v_jk);
    let n2 = v_lk.cross(&v_jk);
    let (a, b, c) = (n1.norm(), n2.norm(), v_jk.norm());
    if a <= DEGENERATE || b <= DEGENERATE || c <= DEGENERATE {
        return Err(format!("collinear atoms: |n1| = {a:e}, |n2| = {b:e}, |v_jk| = {c:e}"));
    }
    let cos = n1.dot(&n2) / (a * b);
    let sin = n1.cross(&n2).dot(&(v_jk / c));
    let mut phi = sin.atan2(n1.dot(&n2));
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi = 0.0;
    }
    Ok((phi, cos))
}

/// Per-frame dihedral angles.
pub fn dihedral_series(traj: &PositionTrajectory, spec: DihedralSpec) -> Result<ObservableSeries> {
    if let Some(&bad) = spec.atoms.iter().find(|&&a| a >= traj.atoms()) {
        return Err(Error::InvalidParameter(format!("atom index {bad} out of range (trajectory has {} atoms)", traj.atoms())));
    }
    let values = traj
        .positions
        .par_iter()
        .enumerate()
        .map(|(frame, pos)| {
            dihedral_angle(spec.atoms.map(|a| pos[a]))
                .map(|(phi, _)| phi)
                .map_err(|message| Error::DegenerateGeometry { frame, message })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ObservableSeries { values })
}

/// Lagged one-dimensional pairs `(z_t, z_{t + lag})`.
pub fn pairs_from_series(series: &ObservableSeries, lag: usize) -> Result<TrajectoryPairs<f64>> {
    let n = series.len();
    if lag == 0 || lag >= n {
        return Err(Error::InvalidParameter(format!("lag {lag} must satisfy 1 <= lag < {n}")));
    }
    let m = n - lag;
    let x = DMatrix::from_row_slice(1, m, &series.values[..m]);
    let y = DMatrix::from_row_slice(1, m, &series.values[lag..]);
    TrajectoryPairs::with_provenance(
        x,
        y,
        Provenance { system: "observable-series".into(), seed: None, design: format!("lag {lag} over {n} frames") },
    )
}
