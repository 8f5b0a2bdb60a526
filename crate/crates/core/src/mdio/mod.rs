//! Molecular trajectory ingestion, dihedral-angle extraction and lagged
//! observable series for the reduced transfer operator.

mod dihedral;
mod xyz;

pub use dihedral::{dihedral_angle, dihedral_series, pairs_from_series, DihedralSpec, ObservableSeries};
pub use xyz::{parse_xyz, read_xyz, PositionTrajectory};
