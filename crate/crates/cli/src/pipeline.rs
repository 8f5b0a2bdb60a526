//! Config-driven pipeline: sample, estimate, decompose, export.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use transferop::dictionaries::{BoxPartition, Dictionary, PolynomialKernel, StateSelector};
use transferop::dynamics::{generate_pairs, Dynamics, IntegratorConfig, LangevinSystem, LinearMap, PotentialField, SampleDesign, SdeSystem};
use transferop::estimators::{adjoint_pf, dmd, edmd, kernel_edmd, pf_edmd, ulam_estimate, EdmdOptions, EdmdResult, TrajectoryPairs, KERNEL_CUTOFF};
use transferop::linalg::DEFAULT_CUTOFF;
use transferop::mdio::{dihedral_series, pairs_from_series, read_xyz, DihedralSpec};
use transferop::spectral::{eig, eig_stochastic, eval_on_grid, koopman_modes, EigenfunctionSet, GridSpec, SpectralResult};
use transferop::io;

use crate::config::{Domain, DictionaryConfig, EstimatorKind, LoadedConfig, MonomialOrdering, RunConfig, SamplingConfig, SystemConfig};
use crate::CliError;

/// How far a config-driven subcommand goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Estimate,
    Grid,
    Modes,
    Run,
}

impl Stage {
    fn label(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Estimate => "estimate",
            Stage::Grid => "grid",
            Stage::Modes => "modes",
            Stage::Run => "run",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub dump_psi: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub version: String,
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub system: Option<String>,
    pub estimator: String,
    pub samples: usize,
    pub state_dim: usize,
    pub dictionary_size: Option<usize>,
    pub rank: Option<usize>,
    pub condition: Option<f64>,
    pub residual: Option<f64>,
    pub warnings: Vec<String>,
    /// Leading eigenvalues as `[re, im]`.
    pub eigenvalues: Vec<[f64; 2]>,
    /// Matrix name to file name, relative to the report.
    pub matrices: BTreeMap<String, String>,
    /// Every file written by the run, relative to the report.
    pub files: Vec<String>,
    pub wall_time_seconds: f64,
    /// Effective configuration (after command-line overrides).
    pub config: String,
}

pub const REPORT_FILE: &str = "report.json";

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn put(&mut self, name: &str, content: impl AsRef<[u8]>) -> Result<(), CliError> {
        io::write_atomic(&self.dir.join(name), content.as_ref())?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn system(sys: &SystemConfig) -> Result<Box<dyn Dynamics<f64>>, CliError> {
    Ok(match *sys {
        SystemConfig::LinearExample1 => Box::new(LinearMap::example1()),
        SystemConfig::DoubleWell { sigma } => Box::new(SdeSystem::double_well(sigma)),
        SystemConfig::TripleWell { sigma } => Box::new(SdeSystem::triple_well(sigma)),
        SystemConfig::Langevin1d { friction, beta } => Box::new(LangevinSystem::new(
            DMatrix::identity(1, 1),
            friction,
            beta,
            PotentialField::QuarticWell,
        )?),
        SystemConfig::CircleCosine { multiplicity, sigma } => Box::new(SdeSystem::circle_cosine(multiplicity, sigma)),
    })
}

fn partition(d: &Domain) -> Result<BoxPartition<f64>, CliError> {
    Ok(BoxPartition::new(d.lower.clone(), d.upper.clone(), d.boxes.clone())?)
}

fn design(sampling: &SamplingConfig) -> Result<SampleDesign<f64>, CliError> {
    Ok(match sampling {
        SamplingConfig::Uniform { lower, upper, count } => {
            SampleDesign::UniformDomain { lower: lower.clone(), upper: upper.clone(), count: *count }
        }
        SamplingConfig::PerBox { domain, points_per_box } => {
            SampleDesign::PerBox { partition: partition(domain)?, points_per_box: *points_per_box }
        }
        SamplingConfig::CellMidpoints { domain, per_dim } => {
            SampleDesign::CellMidpoints { partition: partition(domain)?, per_dim: *per_dim }
        }
        SamplingConfig::Orbit { start, length, lag } => {
            SampleDesign::SingleOrbit { start: start.clone(), length: *length, lag: *lag }
        }
        SamplingConfig::Dihedral { .. } => unreachable!("dihedral sampling reads a trajectory"),
    })
}

fn dictionary(cfg: &DictionaryConfig, dim: usize) -> Result<Dictionary<f64>, CliError> {
    Ok(match cfg {
        DictionaryConfig::Indicators { domain } => Dictionary::indicators(partition(domain)?),
        DictionaryConfig::Monomials { degree, ordering: MonomialOrdering::TotalDegree } => {
            Dictionary::monomials_total_degree(dim, *degree)?
        }
        DictionaryConfig::Monomials { degree, ordering: MonomialOrdering::PerAxis } => {
            Dictionary::monomials_per_axis(dim, *degree)?
        }
        DictionaryConfig::Fourier { frequency } => Dictionary::fourier(*frequency),
        DictionaryConfig::ThinPlate { centers: Some(c), .. } => Dictionary::thin_plate(c.clone())?,
        DictionaryConfig::ThinPlate { domain: Some(d), .. } => Dictionary::thin_plate_grid(&partition(d)?),
        DictionaryConfig::Gaussians { centers: Some(c), width, .. } => Dictionary::gaussians(c.clone(), *width)?,
        DictionaryConfig::Gaussians { domain: Some(d), width, .. } => Dictionary::gaussians_grid(&partition(d)?, *width)?,
        DictionaryConfig::ThinPlate { .. } | DictionaryConfig::Gaussians { .. } => {
            unreachable!("validated: centers or domain present")
        }
        DictionaryConfig::Identity => Dictionary::identity(dim)?,
    })
}

/// Sampled pairs, plus any extra files they came with.
fn pairs(loaded: &LoadedConfig, cfg: &RunConfig, ov: &Overrides, out: &mut Writer) -> Result<TrajectoryPairs<f64>, CliError> {
    if let Some(path) = &ov.pairs {
        let p = io::read_pairs(path)?;
        if p.dim() != cfg.state_dim() {
            return Err(CliError::Runtime(format!(
                "{} holds {}-dimensional pairs, the config expects {}",
                path.display(),
                p.dim(),
                cfg.state_dim()
            )));
        }
        return Ok(p);
    }
    if let SamplingConfig::Dihedral { trajectory, atoms, stride, lag } = &cfg.sampling {
        let traj = read_xyz(&loaded.base_dir.join(trajectory), *stride)?;
        let series = dihedral_series(&traj, DihedralSpec::new(*atoms)?)?;
        out.put("series.csv", io::series_to_csv(&series))?;
        return Ok(pairs_from_series(&series, *lag)?);
    }
    let sys = cfg.system.as_ref().expect("validated: system present");
    let dynamics = system(sys)?;
    let integrator = match &cfg.integrator {
        Some(i) => IntegratorConfig::from_lag(i.lag, i.step, cfg.seed)?,
        None => IntegratorConfig::new(1.0, 1, cfg.seed)?,
    };
    Ok(generate_pairs(dynamics.as_ref(), &design(&cfg.sampling)?, &integrator)?)
}

struct Estimate {
    matrices: Vec<(&'static str, DMatrix<f64>)>,
    /// Matrix whose spectrum is reported.
    operator: DMatrix<f64>,
    stochastic: bool,
    dictionary: Dictionary<f64>,
    rank: Option<usize>,
    condition: Option<f64>,
    residual: Option<f64>,
    warnings: Vec<String>,
    kernel: Option<transferop::KernelEdmdResultF64>,
    triplets: Option<String>,
}

fn edmd_family(matrices: &mut Vec<(&'static str, DMatrix<f64>)>, r: &EdmdResult<f64>) {
    matrices.push(("koopman", r.m_k.clone()));
    matrices.push(("a", r.a.clone()));
    matrices.push(("g", r.g.clone()));
}

fn estimate(cfg: &RunConfig, pairs: &TrajectoryPairs<f64>) -> Result<Estimate, CliError> {
    let dim = pairs.dim();
    let cutoff = cfg.estimator.cutoff;
    let opts = |pinv: bool| {
        let base = if pinv { EdmdOptions::pseudoinverse() } else { EdmdOptions::default() };
        EdmdOptions { cutoff: cutoff.unwrap_or(DEFAULT_CUTOFF), ..base }
    };
    let dict = || dictionary(cfg.dictionary.as_ref().expect("validated: dictionary present"), dim);
    let mut matrices = Vec::new();
    let from_edmd = |r: &EdmdResult<f64>| (Some(r.rank.rank), Some(r.rank.condition), Some(r.residual), strings(&r.warnings));

    let est = match cfg.estimator.kind {
        EstimatorKind::Ulam => {
            let d = dict()?;
            let boxes = match d.family() {
                transferop::dictionaries::Family::Indicators(p) => p.clone(),
                _ => unreachable!("validated: indicators"),
            };
            let t = ulam_estimate(pairs, &boxes)?;
            matrices.push(("transfer", t.p().clone()));
            matrices.push(("koopman", t.p().transpose()));
            Estimate {
                operator: t.p().clone(),
                stochastic: true,
                dictionary: d,
                rank: None,
                condition: None,
                residual: None,
                warnings: strings(t.warnings()),
                kernel: None,
                triplets: Some(io::triplets_to_csv(&t)),
                matrices,
            }
        }
        kind @ (EstimatorKind::Edmd | EstimatorKind::EdmdAg) => {
            let d = dict()?;
            let r = edmd(pairs, &d, opts(kind == EstimatorKind::Edmd))?;
            edmd_family(&mut matrices, &r);
            let (rank, condition, residual, warnings) = from_edmd(&r);
            Estimate { operator: r.m_k.clone(), stochastic: false, dictionary: d, rank, condition, residual, warnings, kernel: None, triplets: None, matrices }
        }
        kind @ (EstimatorKind::PfEdmd | EstimatorKind::AdjointPf) => {
            let d = dict()?;
            let r = pf_edmd(pairs, &d, opts(false))?;
            let op = if kind == EstimatorKind::PfEdmd { r.m_p.clone().expect("pf_edmd sets m_p") } else { adjoint_pf(&r)? };
            matrices.push(("perron_frobenius", op.clone()));
            edmd_family(&mut matrices, &r);
            let (rank, condition, residual, warnings) = from_edmd(&r);
            Estimate { operator: op, stochastic: false, dictionary: d, rank, condition, residual, warnings, kernel: None, triplets: None, matrices }
        }
        EstimatorKind::Dmd => {
            let r = dmd(pairs, cutoff.unwrap_or(DEFAULT_CUTOFF))?;
            matrices.push(("koopman", r.m_k.clone()));
            let (rank, condition, residual, warnings) = from_edmd(&r);
            Estimate {
                operator: r.m_k.clone(),
                stochastic: false,
                dictionary: Dictionary::identity(dim)?,
                rank,
                condition,
                residual,
                warnings,
                kernel: None,
                triplets: None,
                matrices,
            }
        }
        EstimatorKind::KernelEdmd => {
            let kernel = PolynomialKernel::new(cfg.estimator.degree.expect("validated: degree"))?;
            let r = kernel_edmd(pairs, kernel, cutoff.unwrap_or(KERNEL_CUTOFF))?;
            matrices.push(("kernel_koopman", r.m_hat.clone()));
            matrices.push(("kernel_a", r.a_hat.clone()));
            matrices.push(("kernel_g", r.g_hat.clone()));
            Estimate {
                operator: r.m_hat.clone(),
                stochastic: false,
                dictionary: kernel.feature_dictionary(dim),
                rank: Some(r.rank.rank),
                condition: Some(r.rank.condition),
                residual: None,
                warnings: strings(&r.warnings),
                kernel: Some(r),
                triplets: None,
                matrices,
            }
        }
    };
    Ok(est)
}

fn strings<W: std::fmt::Display>(w: &[W]) -> Vec<String> {
    w.iter().map(ToString::to_string).collect()
}

/// Eigenfunctions `xi_i Psi` of the leading `count` eigenpairs.
fn eigenfunctions(est: &Estimate, spec: &SpectralResult<f64>, pairs: &TrajectoryPairs<f64>, count: usize) -> Result<EigenfunctionSet<f64>, CliError> {
    let count = count.min(spec.len());
    let eigenvalues = spec.eigenvalues[..count].to_vec();
    let coefficients = match &est.kernel {
        // kernel eigenvectors live in sample space; lift them to feature space
        Some(k) => {
            let psi_x = est.dictionary.eval_matrix(pairs.x())?;
            let rows: Vec<_> = (0..count)
                .map(|i| {
                    let v_hat: DVector<Complex<f64>> = spec.left.row(i).transpose();
                    k.lift(&v_hat, &psi_x).transpose()
                })
                .collect();
            DMatrix::from_rows(&rows)
        }
        None => spec.left.rows(0, count).into_owned(),
    };
    Ok(EigenfunctionSet::from_rows(eigenvalues, coefficients, &est.dictionary)?)
}

fn out_dir(cfg: &RunConfig, ov: &Overrides) -> PathBuf {
    ov.out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

/// Runs a config-driven stage, writes its outputs and `report.json`.
pub fn execute(loaded: &LoadedConfig, stage: Stage, ov: &Overrides) -> Result<(PathBuf, Report), CliError> {
    let start = Instant::now();
    let mut cfg = loaded.config.clone();
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    let dir = out_dir(&cfg, ov);
    let mut out = Writer { dir: dir.clone(), files: Vec::new() };

    let pairs = pairs(loaded, &cfg, ov, &mut out)?;
    if cfg.output.pairs || stage == Stage::Simulate {
        out.put("pairs.csv", io::pairs_to_csv(&pairs))?;
    }
    let mut report = Report {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        stage: stage.label().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        system: cfg.system.as_ref().map(|s| s.label().to_string()),
        estimator: cfg.estimator.kind.label().to_string(),
        samples: pairs.len(),
        state_dim: pairs.dim(),
        dictionary_size: None,
        rank: None,
        condition: None,
        residual: None,
        warnings: Vec::new(),
        eigenvalues: Vec::new(),
        matrices: BTreeMap::new(),
        files: Vec::new(),
        wall_time_seconds: 0.0,
        config: cfg.canonical(),
    };

    if stage != Stage::Simulate {
        let est = estimate(&cfg, &pairs)?;
        report.dictionary_size = Some(est.dictionary.len());
        report.rank = est.rank;
        report.condition = est.condition;
        report.residual = est.residual;
        report.warnings.extend(est.warnings.iter().cloned());
        for (name, m) in &est.matrices {
            let file = format!("{name}.csv");
            out.put(&file, io::matrix_to_csv(m))?;
            if cfg.output.binary {
                out.put(&format!("{name}.topk"), io::matrix_to_binary(m))?;
            }
            report.matrices.insert(name.to_string(), file);
        }
        if let Some(t) = &est.triplets {
            out.put("transfer_triplets.csv", t)?;
        }
        if ov.dump_psi {
            out.put("psi_x.csv", io::matrix_to_csv(&est.dictionary.eval_matrix(pairs.x())?))?;
            out.put("psi_y.csv", io::matrix_to_csv(&est.dictionary.eval_matrix(pairs.y())?))?;
        }

        if stage != Stage::Estimate {
            let spec = if est.stochastic { eig_stochastic(&est.operator)? } else { eig(&est.operator)? };
            report.warnings.extend(strings(&spec.warnings));
            report.eigenvalues = spec.eigenvalues.iter().take(cfg.spectrum.count).map(|l| [l.re, l.im]).collect();
            out.put("spectrum.csv", io::spectrum_to_csv(&spec))?;

            let want_grid = matches!(stage, Stage::Grid | Stage::Run);
            match (&cfg.spectrum.grid, want_grid) {
                (Some(g), true) => {
                    let grid = GridSpec::new(g.lower.clone(), g.upper.clone(), g.nodes.clone())?;
                    let funcs = eigenfunctions(&est, &spec, &pairs, cfg.spectrum.count)?;
                    let indices: Vec<usize> = (0..funcs.len()).collect();
                    let table = eval_on_grid(&funcs, &grid, &indices)?;
                    for (name, content) in io::grid_to_csv(&table) {
                        out.put(&name, content)?;
                    }
                }
                (None, true) if stage == Stage::Grid => {
                    return Err(CliError::Config("at `spectrum.grid`: required by the grid subcommand".into()))
                }
                _ => {}
            }
            let want_modes = stage == Stage::Modes || (stage == Stage::Run && cfg.spectrum.modes);
            if want_modes {
                if !cfg.estimator.kind.is_koopman() {
                    return Err(CliError::Config("at `estimator.kind`: Koopman modes need edmd, edmd-ag or dmd".into()));
                }
                let selector = StateSelector::new(&est.dictionary)?;
                let modes = koopman_modes(&spec, &selector)?;
                out.put("modes.csv", io::modes_to_csv(&modes))?;
            }
        }
    }

    report.wall_time_seconds = start.elapsed().as_secs_f64();
    report.files = out.files.clone();
    report.files.push(REPORT_FILE.to_string());
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    out.put(REPORT_FILE, json + "\n")?;
    Ok((dir, report))
}

/// `spectrum --matrix`: eigen-decomposition of a matrix file.
pub fn spectrum_of_file(path: &Path, stochastic: bool, dir: &Path) -> Result<SpectralResult<f64>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let m = if bytes.starts_with(b"TOPK1") { io::matrix_from_binary(&bytes, path)? } else { io::read_matrix_csv(path)? };
    if m.nrows() != m.ncols() {
        return Err(CliError::Shape(format!("{} is {}x{}, not square", path.display(), m.nrows(), m.ncols())));
    }
    let spec = if stochastic { eig_stochastic(&m)? } else { eig(&m)? };
    io::write_atomic(&dir.join("spectrum.csv"), io::spectrum_to_csv(&spec).as_bytes())?;
    Ok(spec)
}
