//! Run configuration schema. One experiment = one TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub seed: u64,
    /// Full-scale runs that take well beyond desk time.
    #[serde(default)]
    pub slow: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    pub sampling: SamplingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<DictionaryConfig>,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum SystemConfig {
    #[serde(rename = "linear-example1")]
    LinearExample1,
    #[serde(rename = "double-well")]
    DoubleWell { sigma: f64 },
    #[serde(rename = "triple-well")]
    TripleWell { sigma: f64 },
    #[serde(rename = "langevin-1d")]
    Langevin1d { friction: f64, beta: f64 },
    /// Overdamped diffusion on the circle in `cos(multiplicity * phi)`.
    #[serde(rename = "circle-cosine")]
    CircleCosine { multiplicity: u32, sigma: f64 },
}

impl SystemConfig {
    pub fn dim(&self) -> usize {
        match self {
            SystemConfig::LinearExample1 | SystemConfig::DoubleWell { .. } | SystemConfig::TripleWell { .. } => 2,
            SystemConfig::Langevin1d { .. } => 2,
            SystemConfig::CircleCosine { .. } => 1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SystemConfig::LinearExample1 => "linear-example1",
            SystemConfig::DoubleWell { .. } => "double-well",
            SystemConfig::TripleWell { .. } => "triple-well",
            SystemConfig::Langevin1d { .. } => "langevin-1d",
            SystemConfig::CircleCosine { .. } => "circle-cosine",
        }
    }

    fn is_map(&self) -> bool {
        matches!(self, SystemConfig::LinearExample1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub step: f64,
    /// Lag time `t`; the map is `round(t / step)` integrator steps.
    pub lag: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub boxes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "design", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplingConfig {
    Uniform {
        lower: Vec<f64>,
        upper: Vec<f64>,
        count: usize,
    },
    PerBox {
        domain: Domain,
        points_per_box: usize,
    },
    CellMidpoints {
        domain: Domain,
        per_dim: usize,
    },
    Orbit {
        start: Vec<f64>,
        length: usize,
        #[serde(default = "one")]
        lag: usize,
    },
    /// Dihedral-angle series extracted from an XYZ trajectory.
    Dihedral {
        trajectory: PathBuf,
        atoms: [usize; 4],
        #[serde(default = "one")]
        stride: usize,
        #[serde(default = "one")]
        lag: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MonomialOrdering {
    #[default]
    TotalDegree,
    PerAxis,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DictionaryConfig {
    Indicators {
        domain: Domain,
    },
    Monomials {
        degree: u32,
        #[serde(default)]
        ordering: MonomialOrdering,
    },
    Fourier {
        frequency: usize,
    },
    ThinPlate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centers: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Domain>,
    },
    Gaussians {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centers: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Domain>,
        width: f64,
    },
    Identity,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Ulam,
    Edmd,
    EdmdAg,
    PfEdmd,
    AdjointPf,
    Dmd,
    KernelEdmd,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Ulam => "ulam",
            EstimatorKind::Edmd => "edmd",
            EstimatorKind::EdmdAg => "edmd-ag",
            EstimatorKind::PfEdmd => "pf-edmd",
            EstimatorKind::AdjointPf => "adjoint-pf",
            EstimatorKind::Dmd => "dmd",
            EstimatorKind::KernelEdmd => "kernel-edmd",
        }
    }

    pub fn is_koopman(self) -> bool {
        matches!(self, EstimatorKind::Edmd | EstimatorKind::EdmdAg | EstimatorKind::Dmd)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Relative singular-value cutoff for pseudoinverses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Polynomial kernel degree (kernel-edmd only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Number of leading eigenpairs exported as eigenfunctions and modes.
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub modes: bool,
}

fn default_count() -> usize {
    6
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { count: default_count(), grid: None, modes: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub pairs: bool,
    /// Also write every matrix in the `TOPK1` binary container.
    #[serde(default)]
    pub binary: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, pairs: true, binary: false }
    }
}

/// A validated configuration plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir })
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = toml::Deserializer::new(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        if path.is_empty() || path == "." {
            CliError::Config(message)
        } else {
            CliError::Config(format!("at `{path}`: {message}"))
        }
    })?;
    config.validate()?;
    Ok(config)
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("at `{field}`: {message}"))
}

fn check_box(field: &str, lower: &[f64], upper: &[f64], dim: usize) -> Result<(), CliError> {
    if lower.len() != dim || upper.len() != dim {
        return Err(invalid(field, format!("lower/upper must have {dim} entries")));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
        return Err(invalid(field, "lower must be strictly below upper"));
    }
    Ok(())
}

fn check_domain(field: &str, d: &Domain, dim: usize) -> Result<(), CliError> {
    check_box(field, &d.lower, &d.upper, dim)?;
    if d.boxes.len() != dim || d.boxes.contains(&0) {
        return Err(invalid(&format!("{field}.boxes"), format!("need {dim} positive box counts")));
    }
    Ok(())
}

impl RunConfig {
    /// State dimension of the sampled pairs.
    pub fn state_dim(&self) -> usize {
        match (&self.sampling, &self.system) {
            (SamplingConfig::Dihedral { .. }, _) => 1,
            (_, Some(s)) => s.dim(),
            (_, None) => 0,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let dihedral = matches!(self.sampling, SamplingConfig::Dihedral { .. });
        match (&self.system, dihedral) {
            (None, false) => return Err(invalid("system", "required unless sampling.design = \"dihedral\"")),
            (Some(_), true) => return Err(invalid("system", "not used with dihedral sampling; remove it")),
            _ => {}
        }
        if let Some(sys) = &self.system {
            match (sys.is_map(), &self.integrator) {
                (false, None) => return Err(invalid("integrator", format!("required for {}", sys.label()))),
                (true, Some(_)) => return Err(invalid("integrator", "linear-example1 is a discrete map; remove it")),
                _ => {}
            }
            match sys {
                SystemConfig::DoubleWell { sigma }
                | SystemConfig::TripleWell { sigma }
                | SystemConfig::CircleCosine { sigma, .. }
                    if !(*sigma >= 0.0) =>
                {
                    return Err(invalid("system.sigma", "must be >= 0"))
                }
                SystemConfig::CircleCosine { multiplicity: 0, .. } => {
                    return Err(invalid("system.multiplicity", "must be >= 1"))
                }
                _ => {}
            }
        }
        if let Some(int) = &self.integrator {
            if !(int.step > 0.0) || !(int.lag >= int.step) {
                return Err(invalid("integrator", "need step > 0 and lag >= step"));
            }
        }
        let dim = self.state_dim();
        match &self.sampling {
            SamplingConfig::Uniform { lower, upper, count } => {
                check_box("sampling", lower, upper, dim)?;
                if *count == 0 {
                    return Err(invalid("sampling.count", "must be positive"));
                }
            }
            SamplingConfig::PerBox { domain, points_per_box } => {
                check_domain("sampling.domain", domain, dim)?;
                if *points_per_box == 0 {
                    return Err(invalid("sampling.points_per_box", "must be positive"));
                }
            }
            SamplingConfig::CellMidpoints { domain, per_dim } => {
                check_domain("sampling.domain", domain, dim)?;
                if *per_dim == 0 {
                    return Err(invalid("sampling.per_dim", "must be positive"));
                }
            }
            SamplingConfig::Orbit { start, length, lag } => {
                if start.len() != dim {
                    return Err(invalid("sampling.start", format!("must have {dim} entries")));
                }
                if *lag == 0 || lag >= length {
                    return Err(invalid("sampling", "need 1 <= lag < length"));
                }
            }
            SamplingConfig::Dihedral { stride, lag, atoms, .. } => {
                if *stride == 0 || *lag == 0 {
                    return Err(invalid("sampling", "stride and lag must be positive"));
                }
                let mut sorted = atoms.to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != 4 {
                    return Err(invalid("sampling.atoms", "the four atom indices must be distinct"));
                }
            }
        }

        let kind = self.estimator.kind;
        match (kind, &self.dictionary) {
            (EstimatorKind::Dmd | EstimatorKind::KernelEdmd, Some(_)) => {
                return Err(invalid("dictionary", format!("{} does not take a dictionary", kind.label())))
            }
            (EstimatorKind::Dmd | EstimatorKind::KernelEdmd, None) => {}
            (_, None) => return Err(invalid("dictionary", format!("required for {}", kind.label()))),
            (EstimatorKind::Ulam, Some(DictionaryConfig::Indicators { .. })) => {}
            (EstimatorKind::Ulam, Some(_)) => {
                return Err(invalid("dictionary.family", "ulam requires the indicators family"))
            }
            _ => {}
        }
        if let Some(dict) = &self.dictionary {
            self.validate_dictionary(dict, dim)?;
        }
        match (kind, self.estimator.degree) {
            (EstimatorKind::KernelEdmd, None) => return Err(invalid("estimator.degree", "required for kernel-edmd")),
            (EstimatorKind::KernelEdmd, Some(0)) => return Err(invalid("estimator.degree", "must be >= 1")),
            (EstimatorKind::KernelEdmd, Some(_)) => {}
            (_, Some(_)) => return Err(invalid("estimator.degree", "only used by kernel-edmd")),
            _ => {}
        }
        if let Some(c) = self.estimator.cutoff {
            if !(c > 0.0 && c < 1.0) {
                return Err(invalid("estimator.cutoff", "must lie in (0, 1)"));
            }
        }
        if let Some(grid) = &self.spectrum.grid {
            check_box("spectrum.grid", &grid.lower, &grid.upper, dim)?;
            if grid.nodes.len() != dim || grid.nodes.contains(&0) {
                return Err(invalid("spectrum.grid.nodes", format!("need {dim} positive node counts")));
            }
        }
        if self.spectrum.modes && !kind.is_koopman() {
            return Err(invalid("spectrum.modes", "Koopman modes need edmd, edmd-ag or dmd"));
        }
        Ok(())
    }

    fn validate_dictionary(&self, dict: &DictionaryConfig, dim: usize) -> Result<(), CliError> {
        match dict {
            DictionaryConfig::Indicators { domain } => check_domain("dictionary.domain", domain, dim),
            DictionaryConfig::Fourier { .. } if dim != 1 => {
                Err(invalid("dictionary.family", "the Fourier dictionary is one-dimensional"))
            }
            DictionaryConfig::ThinPlate { centers, domain } | DictionaryConfig::Gaussians { centers, domain, .. } => {
                match (centers, domain) {
                    (Some(c), None) => {
                        if c.is_empty() || c.iter().any(|p| p.len() != dim) {
                            return Err(invalid("dictionary.centers", format!("need points with {dim} coordinates")));
                        }
                    }
                    (None, Some(d)) => check_domain("dictionary.domain", d, dim)?,
                    _ => return Err(invalid("dictionary", "give exactly one of `centers` or `domain`")),
                }
                if let DictionaryConfig::Gaussians { width, .. } = dict {
                    if !(*width > 0.0) {
                        return Err(invalid("dictionary.width", "must be positive"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Canonical TOML rendering of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
