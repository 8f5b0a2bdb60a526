//! Finite-dimensional operator estimators: Ulam, EDMD (two formulations),
//! DMD, kernel EDMD, Perron-Frobenius EDMD and the mass-matrix adjoint.

mod edmd;
mod kernel_edmd;
mod pairs;
mod ulam;

pub use edmd::{
    adjoint_pf, dmd, edmd, edmd_exact, indicator_matrix, pf_edmd, relative_gap, residual, EdmdOptions, EdmdResult,
    Formulation, OperatorKind,
};
pub use kernel_edmd::{kernel_edmd, KernelEdmdResult, KERNEL_CUTOFF};
pub use pairs::{Provenance, TrajectoryPairs};
pub use ulam::{ulam_estimate, TransferMatrix};
