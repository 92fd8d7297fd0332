//! File-format contracts: density-matrix JSON, Wigner CSV, shot CSV, and the
//! sinogram JSON round trip (the sinogram serializes directly through serde).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fockstate::{DensityMatrix, FockError, WignerGrid};
use crate::synthlab::{ShotRecord, Sinogram};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json parse error at line {line}, column {column} (byte offset {offset}): {message}")]
    Json {
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },
    #[error("density matrix file is inconsistent: {0}")]
    BadDensity(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("csv parse error on line {line}: {message}")]
    Csv { line: usize, message: String },
}

fn json_error(text: &str, err: serde_json::Error) -> IoError {
    let (line, column) = (err.line(), err.column());
    let offset = text
        .lines()
        .take(line.saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum::<usize>()
        + column.saturating_sub(1);
    IoError::Json {
        line,
        column,
        offset,
        message: err.to_string(),
    }
}

/// JSON schema for a density matrix: dimension plus row-major real and
/// imaginary parts.
#[derive(Debug, Serialize, Deserialize)]
pub struct DensityMatrixFile {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

pub fn density_to_json(rho: &DensityMatrix) -> String {
    let dim = rho.dim();
    let mut re = Vec::with_capacity(dim * dim);
    let mut im = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            re.push(rho.matrix()[(i, j)].re);
            im.push(rho.matrix()[(i, j)].im);
        }
    }
    serde_json::to_string_pretty(&DensityMatrixFile { dim, re, im }).expect("serializable")
}

pub fn density_from_json(text: &str) -> Result<DensityMatrix, IoError> {
    let file: DensityMatrixFile =
        serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    if file.re.len() != file.dim * file.dim || file.im.len() != file.dim * file.dim {
        return Err(IoError::BadDensity(format!(
            "expected {} elements, got re: {}, im: {}",
            file.dim * file.dim,
            file.re.len(),
            file.im.len()
        )));
    }
    let mut mat = Array2::<Complex64>::zeros((file.dim, file.dim));
    for i in 0..file.dim {
        for j in 0..file.dim {
            let k = i * file.dim + j;
            mat[(i, j)] = Complex64::new(file.re[k], file.im[k]);
        }
    }
    Ok(DensityMatrix::from_matrix(mat)?)
}

pub fn sinogram_to_json(sino: &Sinogram) -> String {
    serde_json::to_string_pretty(sino).expect("serializable")
}

pub fn sinogram_from_json(text: &str) -> Result<Sinogram, IoError> {
    serde_json::from_str(text).map_err(|e| json_error(text, e))
}

/// Wigner grid CSV: two header rows carrying the axes, then one row of W
/// values per z₁ grid point (columns follow the p₁ axis). Lines starting
/// with `#` are comments.
pub fn wigner_to_csv(grid: &WignerGrid) -> String {
    let mut out = String::new();
    out.push_str("z1");
    for z in &grid.z1 {
        out.push_str(&format!(",{z}"));
    }
    out.push('\n');
    out.push_str("p1");
    for p in &grid.p1 {
        out.push_str(&format!(",{p}"));
    }
    out.push('\n');
    for i in 0..grid.z1.len() {
        let mut first = true;
        for j in 0..grid.p1.len() {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{}", grid.values[(i, j)]));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Shot records stream as CSV with the header `t_sp,t_tof,z_meas`.
pub fn shots_to_csv(shots: &[ShotRecord]) -> String {
    let mut out = String::from("t_sp,t_tof,z_meas\n");
    for s in shots {
        out.push_str(&format!("{:e},{:e},{:e}\n", s.t_sp, s.t_tof, s.z_meas));
    }
    out
}

pub fn shots_from_csv(text: &str) -> Result<Vec<ShotRecord>, IoError> {
    let mut shots = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line == "t_sp,t_tof,z_meas" {
            continue;
        }
        shots.push(parse_shot(line).map_err(|message| IoError::Csv {
            line: idx + 1,
            message,
        })?);
    }
    Ok(shots)
}

fn parse_shot(line: &str) -> Result<ShotRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 3 {
        return Err(format!("expected 3 fields, got {}", fields.len()));
    }
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(ShotRecord {
        t_sp: parse(fields[0])?,
        t_tof: parse(fields[1])?,
        z_meas: parse(fields[2])?,
    })
}

/// Force series CSV (one value per line, `#` comments allowed).
pub fn series_to_csv(series: &[f64]) -> String {
    let mut out = String::from("force_N\n");
    for v in series {
        out.push_str(&format!("{v:e}\n"));
    }
    out
}

pub fn series_from_csv(text: &str) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line == "force_N" {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|e| IoError::Csv {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
