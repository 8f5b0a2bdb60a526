//! Eigen-decompositions of estimator output, eigenfunctions, dual bases,
//! Koopman modes and reconstruction.

mod eig;
mod functions;
mod generalized;
mod grid;

pub use eig::{eig, eig_stochastic, SpectralResult};
pub use functions::{
    dual_basis, koopman_modes, reconstruct, EigenfunctionSet, KoopmanModeSet, EIGENBASIS_CONDITION_LIMIT,
};
pub use generalized::{generalized_eig, PENCIL_CONDITION_LIMIT};
pub use grid::{eval_on_grid, GridSpec, GridTable};
