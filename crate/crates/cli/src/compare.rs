//! `compare`: matrix and spectrum differences between two run reports.

use std::path::{Path, PathBuf};

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use transferop::io;

use crate::pipeline::Report;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct MatrixDiff {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub max_abs: f64,
    pub frobenius: f64,
}

#[derive(Debug, Serialize)]
pub struct SpectrumDiff {
    /// Leading eigenvalues compared.
    pub compared: usize,
    pub max_abs: f64,
    pub frobenius: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    pub tolerance: f64,
    pub matrices: Vec<MatrixDiff>,
    pub spectrum: Option<SpectrumDiff>,
    pub within_tolerance: bool,
}

fn load_report(path: &Path) -> Result<(PathBuf, Report), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let report: Report =
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{} is not a run report: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((dir, report))
}

fn matrix(dir: &Path, file: &str) -> Result<DMatrix<f64>, CliError> {
    Ok(io::read_matrix_csv(&dir.join(file))?)
}

fn nonzero(values: Vec<Complex<f64>>, zero_tol: f64) -> Vec<Complex<f64>> {
    let scale = values.iter().map(|l| l.norm()).fold(0.0, f64::max);
    values.into_iter().filter(|l| l.norm() > zero_tol * scale).collect()
}

/// Pairs every eigenvalue of `a` with the nearest unused one of `b`.
fn matched_differences(a: &[Complex<f64>], b: &[Complex<f64>]) -> Vec<f64> {
    let mut used = vec![false; b.len()];
    a.iter()
        .map(|x| {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .expect("equal lengths");
            used[j] = true;
            d
        })
        .collect()
}

/// Compares the matrices both runs wrote and their `leading` eigenvalues
/// (default: as many as both reports list). Eigenvalues below `zero_tol`
/// times the largest modulus are dropped first, so a kernel spectrum over
/// samples can be compared with a dictionary spectrum.
pub fn compare(a: &Path, b: &Path, tolerance: f64, zero_tol: f64, leading: Option<usize>) -> Result<CompareReport, CliError> {
    let (dir_a, rep_a) = load_report(a)?;
    let (dir_b, rep_b) = load_report(b)?;

    let mut matrices = Vec::new();
    for (name, file_a) in &rep_a.matrices {
        let Some(file_b) = rep_b.matrices.get(name) else { continue };
        let (ma, mb) = (matrix(&dir_a, file_a)?, matrix(&dir_b, file_b)?);
        if ma.shape() != mb.shape() {
            return Err(CliError::Shape(format!(
                "matrix `{name}` is {}x{} in {} but {}x{} in {}",
                ma.nrows(),
                ma.ncols(),
                a.display(),
                mb.nrows(),
                mb.ncols(),
                b.display()
            )));
        }
        let diff = &ma - &mb;
        matrices.push(MatrixDiff {
            name: name.clone(),
            rows: ma.nrows(),
            cols: ma.ncols(),
            max_abs: diff.amax(),
            frobenius: diff.norm(),
        });
    }

    let has_spectrum = |r: &Report| r.files.iter().any(|f| f == "spectrum.csv");
    let spectrum = if has_spectrum(&rep_a) && has_spectrum(&rep_b) && leading != Some(0) {
        let n = leading.unwrap_or(rep_a.eigenvalues.len().min(rep_b.eigenvalues.len()));
        let la = nonzero(io::read_spectrum_csv(&dir_a.join("spectrum.csv"))?, zero_tol);
        let lb = nonzero(io::read_spectrum_csv(&dir_b.join("spectrum.csv"))?, zero_tol);
        if la.len() < n || lb.len() < n {
            return Err(CliError::Shape(format!(
                "{n} leading eigenvalues requested, the runs have {} and {} above the zero threshold {zero_tol:e}",
                la.len(),
                lb.len()
            )));
        }
        let (la, lb) = (&la[..n], &lb[..n]);
        let d = matched_differences(la, lb);
        Some(SpectrumDiff {
            compared: la.len(),
            max_abs: d.iter().copied().fold(0.0, f64::max),
            frobenius: d.iter().map(|v| v * v).sum::<f64>().sqrt(),
        })
    } else {
        None
    };

    if matrices.is_empty() && spectrum.is_none() {
        return Err(CliError::Shape("the runs share no matrix and no spectrum".into()));
    }
    let within_tolerance =
        matrices.iter().all(|m| m.max_abs <= tolerance) && spectrum.as_ref().is_none_or(|s| s.max_abs <= tolerance);
    Ok(CompareReport { run_a: a.to_path_buf(), run_b: b.to_path_buf(), tolerance, matrices, spectrum, within_tolerance })
}
