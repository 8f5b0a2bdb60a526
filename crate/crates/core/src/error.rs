use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration diverged at step {step} (t = {time}): non-finite state")]
    IntegrationDiverged { step: usize, time: f64 },

    #[error("sample design is empty (m = 0)")]
    EmptyDesign,

    #[error("sample column {column} lies outside the partition domain")]
    SampleOutsideDomain { column: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigensolver did not converge for a {dim}x{dim} matrix (Frobenius norm {norm:e})")]
    NoConvergence { dim: usize, norm: f64 },

    #[error(
        "eigenvector matrix is numerically singular (condition number {condition:e}); \
         the matrix is defective or nearly so, use generalized_eig on the (A, G) pencil instead"
    )]
    IllConditionedEigenbasis { condition: f64 },

    #[error("dictionary has no coordinate function for state component {0}")]
    MissingCoordinate(usize),

    #[error("frame {frame}: {message}")]
    DegenerateGeometry { frame: usize, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal numerical conditions attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A partition box received no X samples; its row was set to the unit diagonal.
    EmptyBox { index: usize },
    /// Every image of box `index` left the partition domain; unit diagonal row.
    AllImagesEscaped { index: usize },
    /// Some Y samples left the partition domain and were excluded from row totals.
    EscapedImages { count: usize },
    /// Singular values below the cutoff were zeroed.
    RankDeficient { rank: usize, dim: usize },
    /// Kernel Gram eigenvalues below the cutoff were discarded.
    KernelCutoff { discarded: usize, dim: usize },
    /// The generalized eigenproblem fell back to the pseudoinverse of G.
    PseudoinverseFallback { condition: f64 },
    /// Left/right eigenvector pairing is numerically degenerate at `index`.
    DefectiveEigenpair { index: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::EmptyBox { index } => {
                write!(f, "box {index} has no samples; absorbing unit row used")
            }
            Warning::AllImagesEscaped { index } => write!(
                f,
                "all images of box {index} left the domain; absorbing unit row used"
            ),
            Warning::EscapedImages { count } => {
                write!(f, "{count} images left the partition domain and were not counted")
            }
            Warning::RankDeficient { rank, dim } => {
                write!(f, "rank deficient: numerical rank {rank} of {dim}")
            }
            Warning::KernelCutoff { discarded, dim } => write!(
                f,
                "kernel Gram matrix: {discarded} of {dim} eigenvalues below cutoff discarded"
            ),
            Warning::PseudoinverseFallback { condition } => write!(
                f,
                "G is near-singular (condition {condition:e}); used the pseudoinverse A G^+"
            ),
            Warning::DefectiveEigenpair { index } => {
                write!(f, "eigenpair {index} has near-orthogonal left/right vectors")
            }
        }
    }
}
