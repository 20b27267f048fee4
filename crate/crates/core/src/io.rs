//! File formats: matrices (CSV/JSON), grid functions (binary/CSV), Hamiltonians,
//! decay certificates, verdicts and flow trajectories.

use crate::error::{MpkError, Result};
use crate::flow::QuadraticHamiltonian;
use crate::grid::GridFunction;
use crate::hardy::{DecayCertificate, HardyVerdict};
use crate::linalg::{self, Mat};
use crate::symplectic::{make_generator, rows_to_mat, Generator, SymplecticMatrix};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const GRID_MAGIC: &[u8; 4] = b"MPGF";
pub const GRID_VERSION: u32 = 1;

fn parse_err<E: std::fmt::Display>(e: E) -> MpkError {
    MpkError::Parse(e.to_string())
}

pub fn matrix_to_csv(s: &SymplecticMatrix) -> String {
    let m = s.matrix();
    let mut out = format!("# symplectic d={}\n", s.dim());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Raw 2d×2d matrix from CSV; symplecticity is checked by the caller.
/// The `# symplectic d=` header is optional; when present it must match.
pub fn parse_matrix_csv(text: &str) -> Result<Mat> {
    let mut declared = None;
    let mut rows = Vec::new();
    for l in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(c) = l.strip_prefix('#') {
            if let Some(d) = c.trim().strip_prefix("symplectic d=") {
                declared = Some(d.trim().parse::<usize>().map_err(parse_err)?);
            }
            continue;
        }
        rows.push(l.split(',').map(|v| v.trim().parse::<f64>().map_err(parse_err)).collect::<Result<Vec<_>>>()?);
    }
    if rows.is_empty() {
        return Err(MpkError::Parse("empty matrix file".into()));
    }
    let m = rows_to_mat(&rows)?;
    let d = declared.unwrap_or(m.nrows() / 2);
    if m.shape() != (2 * d, 2 * d) {
        return Err(MpkError::DimensionMismatch { expected: 2 * d, found: m.nrows() });
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    d: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixSpec {
    Rows(MatrixJson),
    Product { generators: Vec<Generator> },
}

pub fn matrix_to_json(s: &SymplecticMatrix) -> String {
    serde_json::to_string(&MatrixJson { d: s.dim(), rows: linalg::to_rows(s.matrix()) }).unwrap()
}

/// Accepts `{"d", "rows"}` or `{"generators": [...]}` (product, left to right).
pub fn parse_matrix_json(text: &str) -> Result<Mat> {
    let spec: MatrixSpec = serde_json::from_str(text).map_err(parse_err)?;
    match spec {
        MatrixSpec::Rows(mj) => {
            let m = rows_to_mat(&mj.rows)?;
            if m.shape() != (2 * mj.d, 2 * mj.d) {
                return Err(MpkError::DimensionMismatch { expected: 2 * mj.d, found: m.nrows() });
            }
            Ok(m)
        }
        MatrixSpec::Product { generators } => {
            let mut it = generators.iter();
            let first = it.next().ok_or_else(|| MpkError::Parse("empty generator list".into()))?;
            let mut s = make_generator(first)?;
            for g in it {
                s = s.compose(&make_generator(g)?)?;
            }
            Ok(s.matrix().clone())
        }
    }
}

pub fn read_matrix(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        parse_matrix_csv(&text)
    } else {
        parse_matrix_json(&text)
    }
}

pub fn grid_to_bytes(f: &GridFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 16 * f.len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.extend_from_slice(&(f.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(f.n() as u32).to_le_bytes());
    out.extend_from_slice(&f.half_extent().to_le_bytes());
    for z in f.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn grid_from_bytes(bytes: &[u8]) -> Result<GridFunction> {
    if bytes.len() < 24 || &bytes[..4] != GRID_MAGIC {
        return Err(MpkError::Parse("not an MPGF grid file".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != GRID_VERSION {
        return Err(MpkError::Parse(format!("unsupported grid version {version}")));
    }
    let (d, n, l) = (u32_at(8) as usize, u32_at(12) as usize, f64_at(16));
    let count = n.checked_pow(d as u32).ok_or_else(|| MpkError::InvalidGrid("size overflow".into()))?;
    if bytes.len() != 24 + 16 * count {
        return Err(MpkError::Parse(format!("expected {} sample bytes, found {}", 16 * count, bytes.len() - 24)));
    }
    let samples = (0..count).map(|k| C64::new(f64_at(24 + 16 * k), f64_at(32 + 16 * k))).collect();
    GridFunction::new(d, n, l, samples)
}

pub fn write_grid(path: &Path, f: &GridFunction) -> Result<()> {
    std::fs::write(path, grid_to_bytes(f))?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    grid_from_bytes(&std::fs::read(path)?)
}

/// Columns x1[,x2],re,im in row-major sample order; d ≤ 2 only.
pub fn grid_to_csv(f: &GridFunction) -> Result<String> {
    let d = f.dim();
    if d > 2 {
        return Err(MpkError::InvalidGrid(format!("CSV export needs d <= 2, got {d}")));
    }
    let mut out = String::new();
    let names: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    writeln!(out, "{},re,im", names.join(",")).unwrap();
    for (k, z) in f.samples().iter().enumerate() {
        for x in f.point(k) {
            write!(out, "{:.16e},", x).unwrap();
        }
        writeln!(out, "{:.16e},{:.16e}", z.re, z.im).unwrap();
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum HamiltonianJson {
    Preset {
        preset: String,
        #[serde(default)]
        omega: Vec<f64>,
        #[serde(default = "one")]
        m: f64,
    },
    Explicit {
        d: usize,
        #[serde(rename = "Mcal")]
        mcal: Vec<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

/// `{"d", "Mcal"}`, `{"preset": "anisotropic_oscillator_2d"}` or
/// `{"preset": "harmonic_oscillator", "omega": [...], "m": ...}`.
pub fn parse_hamiltonian(text: &str) -> Result<QuadraticHamiltonian> {
    match serde_json::from_str(text).map_err(parse_err)? {
        HamiltonianJson::Explicit { d, mcal } => {
            let m = rows_to_mat(&mcal)?;
            if m.shape() != (2 * d, 2 * d) {
                return Err(MpkError::DimensionMismatch { expected: 2 * d, found: m.nrows() });
            }
            QuadraticHamiltonian::new(m)
        }
        HamiltonianJson::Preset { preset, omega, m } => match preset.as_str() {
            "anisotropic_oscillator_2d" => Ok(QuadraticHamiltonian::anisotropic_oscillator_2d()),
            "harmonic_oscillator" => QuadraticHamiltonian::harmonic_oscillator(&omega, m),
            other => Err(MpkError::Parse(format!("unknown preset {other:?}"))),
        },
    }
}

pub fn hamiltonian_to_json(h: &QuadraticHamiltonian) -> String {
    serde_json::json!({"d": h.dim(), "Mcal": linalg::to_rows(h.mcal())}).to_string()
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    n: Vec<Vec<f64>>,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default = "one")]
    beta: f64,
}

/// `{"M": [[...]], "N": [[...]], "alpha": 1, "beta": 1}`.
pub fn parse_certificate(text: &str) -> Result<DecayCertificate> {
    let c: CertificateJson = serde_json::from_str(text).map_err(parse_err)?;
    DecayCertificate::new(rows_to_mat(&c.m)?, rows_to_mat(&c.n)?, c.alpha, c.beta)
}

pub fn certificate_to_json(c: &DecayCertificate) -> String {
    serde_json::to_string(&CertificateJson {
        m: linalg::to_rows(&c.m),
        n: linalg::to_rows(&c.n),
        alpha: c.alpha_bound,
        beta: c.beta_bound,
    })
    .unwrap()
}

pub fn verdict_to_json(v: &HardyVerdict) -> String {
    serde_json::to_string_pretty(v).unwrap()
}

#[derive(Clone, Debug)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Spectral norms of A_t, B_t, C_t, D_t.
    pub block_norms: [f64; 4],
    /// Hardy eigenvalues when a certificate is supplied, else singular values of B_t.
    pub eigenvalues: Vec<f64>,
    pub status: Option<String>,
}

pub fn trajectory_csv(rows: &[TrajectoryRow], d: usize) -> String {
    let mut out = String::from("t,norm_a,norm_b,norm_c,norm_d");
    for j in 1..=d {
        write!(out, ",lambda{j}").unwrap();
    }
    out.push_str(",status\n");
    for r in rows {
        write!(out, "{:.16e}", r.t).unwrap();
        for v in r.block_norms {
            write!(out, ",{:.16e}", v).unwrap();
        }
        for j in 0..d {
            match r.eigenvalues.get(j) {
                Some(v) => write!(out, ",{:.16e}", v).unwrap(),
                None => out.push(','),
            }
        }
        writeln!(out, ",{}", r.status.as_deref().unwrap_or("")).unwrap();
    }
    out
}
