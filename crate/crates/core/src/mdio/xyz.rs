use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Atom positions over time, `positions[frame][atom] = [x, y, z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTrajectory {
    pub elements: Vec<String>,
    pub positions: Vec<Vec<[f64; 3]>>,
    /// Frames of the source file per stored frame.
    pub stride: usize,
}

impl PositionTrajectory {
    pub fn new(elements: Vec<String>, positions: Vec<Vec<[f64; 3]>>, stride: usize) -> Result<Self> {
        let n_atoms = elements.len();
        if positions.is_empty() {
            return Err(Error::InvalidParameter("trajectory has no frames".into()));
        }
        if let Some(f) = positions.iter().position(|frame| frame.len() != n_atoms) {
            return Err(Error::Dimension(format!("frame {f} has {} atoms, expected {n_atoms}", positions[f].len())));
        }
        if positions.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory coordinates"));
        }
        Ok(Self { elements, positions, stride: stride.max(1) })
    }

    pub fn frames(&self) -> usize {
        self.positions.len()
    }

    pub fn atoms(&self) -> usize {
        self.elements.len()
    }

    /// Applies `x -> R x + t` to every atom in every frame.
    pub fn transformed(&self, rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Self {
        let apply = |p: &[f64; 3]| {
            let mut out = translation;
            for (i, o) in out.iter_mut().enumerate() {
                *o += rotation[i][0] * p[0] + rotation[i][1] * p[1] + rotation[i][2] * p[2];
            }
            out
        };
        Self {
            elements: self.elements.clone(),
            positions: self.positions.iter().map(|f| f.iter().map(apply).collect()).collect(),
            stride: self.stride,
        }
    }
}

/// Reads an (extended) XYZ file, keeping every `stride`-th frame.
pub fn read_xyz(path: &Path, stride: usize) -> Result<PositionTrajectory> {
    let text = fs::read_to_string(path)?;
    parse_xyz(&text, path, stride)
}

/// Parses XYZ text; `origin` is used in error messages.
pub fn parse_xyz(text: &str, origin: &Path, stride: usize) -> Result<PositionTrajectory> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    let err = |line: usize, message: String| Error::Parse { path: PathBuf::from(origin), line, message };
    let lines: Vec<&str> = text.lines().collect();
    let mut cursor = 0;
    let mut elements: Option<Vec<String>> = None;
    let mut positions = Vec::new();
    let mut frame = 0usize;

    loop {
        while cursor < lines.len() && lines[cursor].trim().is_empty() {
            cursor += 1;
        }
        if cursor >= lines.len() {
            break;
        }
        let count_line = cursor + 1;
        let n: usize = lines[cursor]
            .trim()
            .parse()
            .map_err(|_| err(count_line, format!("expected an atom count, found {:?}", lines[cursor].trim())))?;
        if let Some(prev) = &elements {
            if prev.len() != n {
                return Err(err(count_line, format!("frame {frame} declares {n} atoms, earlier frames have {}", prev.len())));
            }
        }
        if cursor + 1 >= lines.len() {
            return Err(err(count_line + 1, "missing comment line".into()));
        }
        cursor += 2;
        let mut names = Vec::with_capacity(n);
        let mut coords = Vec::with_capacity(n);
        for atom in 0..n {
            let line_no = cursor + 1;
            let Some(line) = lines.get(cursor) else {
                return Err(err(line_no, format!("frame {frame} ends after {atom} of {n} atoms")));
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(err(line_no, format!("frame {frame} atom {atom}: expected `element x y z`, found {:?}", line.trim())));
            }
            let mut xyz = [0.0f64; 3];
            for (c, field) in fields[1..4].iter().enumerate() {
                xyz[c] = field.parse().map_err(|_| err(line_no, format!("malformed coordinate {field:?}")))?;
                if !xyz[c].is_finite() {
                    return Err(err(line_no, format!("non-finite coordinate {field:?}")));
                }
            }
            names.push(fields[0].to_string());
            coords.push(xyz);
            cursor += 1;
        }
        if elements.is_none() {
            elements = Some(names);
        }
        if frame.is_multiple_of(stride) {
            positions.push(coords);
        }
        frame += 1;
    }

    let elements = elements.ok_or_else(|| err(1, "no frames".into()))?;
    PositionTrajectory::new(elements, positions, stride)
}
