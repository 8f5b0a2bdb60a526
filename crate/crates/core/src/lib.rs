//! Finite-dimensional approximations of Perron-Frobenius and Koopman
//! operators from trajectory data.
//!
//! The numerical core is generic over [`Real`] (`f32`, `f64`); count-based
//! indicator problems can also be solved over exact rationals
//! ([`estimators::edmd_exact`]). Type aliases for `f64` are provided at the
//! crate root.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dictionaries;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod mdio;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result, Warning};
pub use scalar::{ExactField, Real};

pub use dictionaries::{BoxPartition, Dictionary, PolynomialKernel, StateSelector};
pub use dynamics::{IntegratorConfig, LangevinSystem, LinearMap, SampleDesign, SdeSystem};
pub use estimators::{EdmdOptions, EdmdResult, Formulation, KernelEdmdResult, TrajectoryPairs, TransferMatrix};
pub use spectral::{EigenfunctionSet, GridSpec, KoopmanModeSet, SpectralResult};

pub type BoxPartitionF64 = BoxPartition<f64>;
pub type DictionaryF64 = Dictionary<f64>;
pub type TrajectoryPairsF64 = TrajectoryPairs<f64>;
pub type TransferMatrixF64 = TransferMatrix<f64>;
pub type EdmdResultF64 = EdmdResult<f64>;
pub type KernelEdmdResultF64 = KernelEdmdResult<f64>;
pub type SpectralResultF64 = SpectralResult<f64>;
pub type EigenfunctionSetF64 = EigenfunctionSet<f64>;
pub type KoopmanModeSetF64 = KoopmanModeSet<f64>;
pub type SdeSystemF64 = SdeSystem<f64>;
pub type IntegratorConfigF64 = IntegratorConfig<f64>;

pub type DictionaryF32 = Dictionary<f32>;
pub type TrajectoryPairsF32 = TrajectoryPairs<f32>;
pub type EdmdResultF32 = EdmdResult<f32>;
pub type SpectralResultF32 = SpectralResult<f32>;
