//! `transferop`: simulate, estimate, decompose and export transfer-operator
//! approximations from a declarative run config.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod compare;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use transferop::io;
use transferop::mdio::{dihedral_series, pairs_from_series, read_xyz, DihedralSpec};

use pipeline::{Overrides, Stage};

/// Exit codes: 0 success, 1 error (including config and shape errors),
/// 2 numerical warnings under `--strict`, 3 `compare` out of tolerance.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<transferop::Error> for CliError {
    fn from(e: transferop::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "transferop", version, about = "Perron-Frobenius and Koopman operator approximations from trajectory data")]
struct Cli {
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 2 when any numerical warning is raised.
    #[arg(long, global = true)]
    strict: bool,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Also write the dictionary matrices psi_x.csv and psi_y.csv.
    #[arg(long, global = true)]
    dump_psi: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Use these pairs instead of sampling (pairs CSV).
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trajectory pairs and write pairs.csv.
    Simulate(ConfigArgs),
    /// Sample and estimate; write the estimator matrices.
    Estimate(ConfigArgs),
    /// Eigen-decomposition of a matrix file (CSV or TOPK1).
    Spectrum {
        #[arg(long)]
        matrix: PathBuf,
        /// Scale the unit-eigenvalue left vectors to unit sum.
        #[arg(long)]
        stochastic: bool,
    },
    /// Estimate, decompose and evaluate eigenfunctions on the configured grid.
    Grid(ConfigArgs),
    /// Estimate, decompose and write Koopman modes.
    Modes(ConfigArgs),
    /// Extract a dihedral-angle series from an XYZ trajectory.
    Dihedral {
        #[arg(long)]
        traj: PathBuf,
        /// Four atom indices, 0-based: i,j,k,l.
        #[arg(long, value_delimiter = ',', required = true)]
        atoms: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 1)]
        lag: usize,
    },
    /// Compare two run reports.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Maximum allowed absolute difference.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Eigenvalues below this fraction of the largest modulus are ignored.
        #[arg(long, default_value_t = 1e-8)]
        zero_tol: f64,
        /// Number of leading eigenvalues to compare (default: as many as both reports list).
        #[arg(long)]
        leading: Option<usize>,
    },
    /// Full pipeline with every output the config asks for.
    Run(ConfigArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn print_warnings<W: std::fmt::Display>(warnings: &[W]) {
    const SHOWN: usize = 5;
    for w in warnings.iter().take(SHOWN) {
        eprintln!("warning: {w}");
    }
    if warnings.len() > SHOWN {
        eprintln!("warning: ... and {} more (see report.json)", warnings.len() - SHOWN);
    }
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let staged = |args: &ConfigArgs, stage: Stage| -> Result<u8, CliError> {
        let loaded = config::load(&args.config)?;
        let overrides = Overrides {
            seed: cli.seed,
            out_dir: cli.out_dir.clone(),
            pairs: args.pairs.clone(),
            dump_psi: cli.dump_psi,
        };
        let (dir, report) = pipeline::execute(&loaded, stage, &overrides)?;
        println!("{}: wrote {} files to {}", report.name, report.files.len(), dir.display());
        for (i, l) in report.eigenvalues.iter().enumerate() {
            println!("  lambda_{} = {:.10} {:+.3e}i", i + 1, l[0], l[1]);
        }
        print_warnings(&report.warnings);
        Ok(if cli.strict && !report.warnings.is_empty() { 2 } else { 0 })
    };

    match &cli.command {
        Command::Simulate(a) => staged(a, Stage::Simulate),
        Command::Estimate(a) => staged(a, Stage::Estimate),
        Command::Grid(a) => staged(a, Stage::Grid),
        Command::Modes(a) => staged(a, Stage::Modes),
        Command::Run(a) => staged(a, Stage::Run),
        Command::Spectrum { matrix, stochastic } => {
            let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let spec = pipeline::spectrum_of_file(matrix, *stochastic, &dir)?;
            println!("wrote {}", dir.join("spectrum.csv").display());
            print_warnings(&spec.warnings);
            Ok(if cli.strict && !spec.warnings.is_empty() { 2 } else { 0 })
        }
        Command::Dihedral { traj, atoms, stride, lag } => {
            let atoms: [usize; 4] = atoms.as_slice().try_into().map_err(|_| CliError::Config("--atoms takes four indices".into()))?;
            let trajectory = read_xyz(traj, *stride)?;
            let series = dihedral_series(&trajectory, DihedralSpec::new(atoms)?)?;
            let pairs = pairs_from_series(&series, *lag)?;
            let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            io::write_atomic(&dir.join("series.csv"), io::series_to_csv(&series).as_bytes())?;
            io::write_pairs(&dir.join("pairs.csv"), &pairs)?;
            println!("{} frames, {} pairs written to {}", series.len(), pairs.len(), dir.display());
            Ok(0)
        }
        Command::Compare { run_a, run_b, tol, zero_tol, leading } => {
            let report = compare::compare(run_a, run_b, *tol, *zero_tol, *leading)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(if report.within_tolerance { 0 } else { 3 })
        }
    }
}
