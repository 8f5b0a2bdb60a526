//! File formats: pairs/matrix/spectrum/mode/grid CSV, the `TOPK1` binary
//! matrix container and atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::estimators::{TrajectoryPairs, TransferMatrix};
use crate::mdio::ObservableSeries;
use crate::scalar::{lit, wide, Real};
use crate::spectral::{GridTable, KoopmanModeSet, SpectralResult};

const MAGIC: &[u8; 5] = b"TOPK1";

/// Full-precision (17 significant digits) rendering.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_row(path: &Path, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, line_no, format!("malformed number {:?}", f.trim())))
        })
        .collect()
}

pub fn pairs_to_csv<T: Real>(pairs: &TrajectoryPairs<T>) -> String {
    let (d, m) = (pairs.dim(), pairs.len());
    let mut out = format!("# d={d} m={m}\n");
    for l in 0..m {
        let row: Vec<String> = pairs
            .x()
            .column(l)
            .iter()
            .chain(pairs.y().column(l).iter())
            .map(|&v| fmt_f64(wide(v)))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_pairs<T: Real>(path: &Path, pairs: &TrajectoryPairs<T>) -> Result<()> {
    write_atomic(path, pairs_to_csv(pairs).as_bytes())
}

pub fn read_pairs(path: &Path) -> Result<TrajectoryPairs<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty pairs file"))?;
    let mut d = None;
    let mut m = None;
    for token in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("d=") {
            d = v.parse::<usize>().ok();
        } else if let Some(v) = token.strip_prefix("m=") {
            m = v.parse::<usize>().ok();
        }
    }
    let (Some(d), Some(m)) = (d, m) else {
        return Err(parse_err(path, 1, "header must be `# d=<d> m=<m>`"));
    };
    let mut x = DMatrix::zeros(d, m);
    let mut y = DMatrix::zeros(d, m);
    let mut count = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, idx + 1, line)?;
        if row.len() != 2 * d {
            return Err(parse_err(path, idx + 1, format!("expected {} fields, found {}", 2 * d, row.len())));
        }
        if count == m {
            return Err(parse_err(path, idx + 1, format!("more than the declared {m} rows")));
        }
        for i in 0..d {
            x[(i, count)] = row[i];
            y[(i, count)] = row[d + i];
        }
        count += 1;
    }
    if count != m {
        return Err(parse_err(path, text.lines().count(), format!("declared {m} rows, found {count}")));
    }
    TrajectoryPairs::new(x, y)
}

pub fn matrix_to_csv<T: Real>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(wide(v))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv<T: Real>(path: &Path, m: &DMatrix<T>) -> Result<()> {
    write_atomic(path, matrix_to_csv(m).as_bytes())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(path, idx + 1, line)?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, idx + 1, format!("ragged row: {} fields, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// `TOPK1` container: magic, `u64` rows, `u64` cols, row-major `f64`, all little-endian.
pub fn matrix_to_binary<T: Real>(m: &DMatrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(21 + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&wide(m[(i, j)]).to_le_bytes());
        }
    }
    out
}

pub fn write_matrix_binary<T: Real>(path: &Path, m: &DMatrix<T>) -> Result<()> {
    write_atomic(path, &matrix_to_binary(m))
}

pub fn matrix_from_binary<T: Real>(bytes: &[u8], origin: &Path) -> Result<DMatrix<T>> {
    if bytes.len() < 21 || &bytes[..5] != MAGIC {
        return Err(parse_err(origin, 0, "not a TOPK1 container"));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(5) as usize, word(13) as usize);
    let expected = rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).and_then(|n| n.checked_add(21));
    if expected != Some(bytes.len()) {
        return Err(parse_err(origin, 0, format!("TOPK1 size mismatch for {rows}x{cols}")));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        let at = 21 + 8 * (i * cols + j);
        lit::<T>(f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")))
    }))
}

pub fn read_matrix_binary(path: &Path) -> Result<DMatrix<f64>> {
    matrix_from_binary(&fs::read(path)?, path)
}

/// Sparse `i,j,count,p` listing of the nonzero Ulam entries.
pub fn triplets_to_csv<T: Real>(t: &TransferMatrix<T>) -> String {
    let mut out = String::from("i,j,count,p\n");
    for (i, j, c, p) in t.triplets() {
        let _ = writeln!(out, "{i},{j},{c},{}", fmt_f64(wide(p)));
    }
    out
}

pub fn spectrum_to_csv<T: Real>(spec: &SpectralResult<T>) -> String {
    let mut out = String::from("index,re_lambda,im_lambda,abs_lambda\n");
    for (i, l) in spec.eigenvalues.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            fmt_f64(wide(l.re)),
            fmt_f64(wide(l.im)),
            fmt_f64(wide(l.modulus()))
        );
    }
    out
}

/// Reads `spectrum.csv` back as complex eigenvalues.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<Complex<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, idx + 1, line)?;
        if row.len() != 4 {
            return Err(parse_err(path, idx + 1, "expected index,re_lambda,im_lambda,abs_lambda"));
        }
        out.push(Complex::new(row[1], row[2]));
    }
    Ok(out)
}

/// `mode_index,re_lambda,im_lambda,v_1..v_d,im_v_1..im_v_d`; the real parts
/// come first, the imaginary parts are appended.
pub fn modes_to_csv<T: Real>(modes: &KoopmanModeSet<T>) -> String {
    let d = modes.modes.nrows();
    let mut header = vec!["mode_index".to_string(), "re_lambda".into(), "im_lambda".into()];
    header.extend((1..=d).map(|i| format!("v_{i}")));
    header.extend((1..=d).map(|i| format!("im_v_{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for (c, l) in modes.eigenvalues.iter().enumerate() {
        let mut row = vec![(c + 1).to_string(), fmt_f64(wide(l.re)), fmt_f64(wide(l.im))];
        row.extend(modes.modes.column(c).iter().map(|v| fmt_f64(wide(v.re))));
        row.extend(modes.modes.column(c).iter().map(|v| fmt_f64(wide(v.im))));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One CSV per requested eigenfunction: `x_1..x_d,re_phi_<i>,im_phi_<i>`
/// (`i` 1-based), keyed by file name.
pub fn grid_to_csv<T: Real>(table: &GridTable<T>) -> Vec<(String, String)> {
    let d = table.points.nrows();
    table
        .indices
        .iter()
        .enumerate()
        .map(|(c, &idx)| {
            let i = idx + 1;
            let mut header: Vec<String> = (1..=d).map(|a| format!("x_{a}")).collect();
            header.push(format!("re_phi_{i}"));
            header.push(format!("im_phi_{i}"));
            let mut out = header.join(",");
            out.push('\n');
            for node in 0..table.points.ncols() {
                let mut row: Vec<String> = table.points.column(node).iter().map(|&v| fmt_f64(wide(v))).collect();
                let v = table.values[(node, c)];
                row.push(fmt_f64(wide(v.re)));
                row.push(fmt_f64(wide(v.im)));
                out.push_str(&row.join(","));
                out.push('\n');
            }
            (format!("eigfun_{i}.csv"), out)
        })
        .collect()
}

pub fn series_to_csv(series: &ObservableSeries) -> String {
    let mut out = String::from("frame,angle_rad\n");
    for (f, v) in series.values.iter().enumerate() {
        let _ = writeln!(out, "{f},{}", fmt_f64(*v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        let x = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5e-300, 7.0]);
        let y = x.map(|v| v * std::f64::consts::PI);
        let pairs = TrajectoryPairs::new(x, y).unwrap();
        write_pairs(&path, &pairs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# d=2 m=2\n"));
        let back = read_pairs(&path).unwrap();
        assert_eq!(back.x(), pairs.x());
        assert_eq!(back.y(), pairs.y());
    }

    #[test]
    fn binary_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, f64::MIN_POSITIVE]);
        let bytes = matrix_to_binary(&m);
        assert_eq!(&bytes[..5], b"TOPK1");
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[21..29].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[29..37].try_into().unwrap()), 2.0);
        let back: DMatrix<f64> = matrix_from_binary(&bytes, Path::new("m.bin")).unwrap();
        assert_eq!(back, m);
        assert!(matrix_from_binary::<f64>(&bytes[..30], Path::new("m.bin")).is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.7]);
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), m);
    }
}
