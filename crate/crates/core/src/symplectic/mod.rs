//! Symplectic matrices, their blocks and the standard generators.

mod relations;
mod subspace;

pub use relations::{verify_block_relations, verify_block_relations_tol, BlockRelationReport, RelationTerm};
pub use subspace::{
    constructive_kernel_split, decompose_input, decompose_output, mu_s, pseudo_inverse,
    sigma_max, sigma_product, simplex_volume, subspace_bases, InputSplit, OutputSplit, SubspaceBases, SubspaceBasis,
};

use crate::error::{MpkError, Result};
use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};

pub const TAU_SYMP: f64 = 1e-9;

/// 2d x 2d real matrix S = [[A, B], [C, D]] with SᵀJS = J.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    d: usize,
    m: Mat,
}

pub fn standard_j(d: usize) -> Mat {
    let mut j = Mat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// ||SᵀJS - J||_max relative to max(1, ||S||_max^2).
pub fn symplectic_residual(m: &Mat) -> f64 {
    let d = m.nrows() / 2;
    let j = standard_j(d);
    let r = m.transpose() * &j * m - &j;
    r.amax() / m.amax().powi(2).max(1.0)
}

fn from_blocks(a: &Mat, b: &Mat, c: &Mat, dd: &Mat) -> Mat {
    let d = a.nrows();
    let mut m = Mat::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(a);
    m.view_mut((0, d), (d, d)).copy_from(b);
    m.view_mut((d, 0), (d, d)).copy_from(c);
    m.view_mut((d, d), (d, d)).copy_from(dd);
    m
}

fn check_symmetric(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(MpkError::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let a = linalg::asymmetry(m);
    if a > 1e-12 {
        return Err(MpkError::NonSymmetricInput { residual: a });
    }
    Ok(())
}

impl SymplecticMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        Self::with_tolerance(m, TAU_SYMP)
    }

    pub fn with_tolerance(m: Mat, tau: f64) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c {
            return Err(MpkError::DimensionMismatch { expected: r, found: c });
        }
        if r % 2 != 0 || r == 0 {
            return Err(MpkError::DimensionMismatch { expected: r + 1, found: r });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(MpkError::Parse("non-finite matrix entry".into()));
        }
        let residual = symplectic_residual(&m);
        if residual > tau {
            return Err(MpkError::NotSymplectic { residual, tolerance: tau });
        }
        Ok(SymplecticMatrix { d: r / 2, m })
    }

    pub fn from_blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Result<Self> {
        let n = a.nrows();
        for x in [a, b, c, d] {
            if x.shape() != (n, n) {
                return Err(MpkError::DimensionMismatch { expected: n, found: x.nrows() });
            }
        }
        Self::new(from_blocks(a, b, c, d))
    }

    pub(crate) fn trusted(m: Mat) -> Self {
        SymplecticMatrix { d: m.nrows() / 2, m }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn a(&self) -> Mat {
        self.m.view((0, 0), (self.d, self.d)).into_owned()
    }
    pub fn b(&self) -> Mat {
        self.m.view((0, self.d), (self.d, self.d)).into_owned()
    }
    pub fn c(&self) -> Mat {
        self.m.view((self.d, 0), (self.d, self.d)).into_owned()
    }
    pub fn d(&self) -> Mat {
        self.m.view((self.d, self.d), (self.d, self.d)).into_owned()
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.m)
    }

    /// Default rank tolerance d * sigma_max(S) * 1e-12.
    pub fn default_rank_tol(&self) -> f64 {
        self.d as f64 * linalg::spectral_norm(&self.m) * 1e-12
    }

    pub fn rank_tol(&self, fixed: Option<f64>) -> f64 {
        fixed.unwrap_or_else(|| self.default_rank_tol())
    }

    pub fn rank_b(&self, tol: f64) -> usize {
        linalg::rank(&self.b(), tol)
    }

    pub fn compose(&self, rhs: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        if self.d != rhs.d {
            return Err(MpkError::DimensionMismatch { expected: self.d, found: rhs.d });
        }
        Ok(SymplecticMatrix::trusted(&self.m * &rhs.m))
    }

    /// S⁻¹ = [[Dᵀ, -Bᵀ], [-Cᵀ, Aᵀ]].
    pub fn inverse(&self) -> SymplecticMatrix {
        let m = from_blocks(
            &self.d().transpose(),
            &(-self.b().transpose()),
            &(-self.c().transpose()),
            &self.a().transpose(),
        );
        SymplecticMatrix::trusted(m)
    }

    pub fn transpose(&self) -> SymplecticMatrix {
        SymplecticMatrix::trusted(self.m.transpose())
    }

    pub fn identity(d: usize) -> Self {
        SymplecticMatrix::trusted(Mat::identity(2 * d, 2 * d))
    }

    pub fn standard_j(d: usize) -> Self {
        SymplecticMatrix::trusted(standard_j(d))
    }

    /// V_Q = [[I, 0], [Q, I]].
    pub fn chirp(q: &Mat) -> Result<Self> {
        check_symmetric(q)?;
        let d = q.nrows();
        let i = Mat::identity(d, d);
        Ok(SymplecticMatrix::trusted(from_blocks(&i, &Mat::zeros(d, d), q, &i)))
    }

    /// D_E = [[E⁻¹, 0], [0, Eᵀ]].
    pub fn dilation(e: &Mat) -> Result<Self> {
        if e.nrows() != e.ncols() {
            return Err(MpkError::DimensionMismatch { expected: e.nrows(), found: e.ncols() });
        }
        let cond = linalg::condition_number(e);
        if !(cond < 1e12) {
            return Err(MpkError::SingularInput { condition: cond });
        }
        let d = e.nrows();
        let inv = e.clone().try_inverse().ok_or(MpkError::SingularInput { condition: cond })?;
        Ok(SymplecticMatrix::trusted(from_blocks(
            &inv,
            &Mat::zeros(d, d),
            &Mat::zeros(d, d),
            &e.transpose(),
        )))
    }

    /// U_P = [[I, P], [0, I]].
    pub fn multiplier(p: &Mat) -> Result<Self> {
        check_symmetric(p)?;
        let d = p.nrows();
        let i = Mat::identity(d, d);
        Ok(SymplecticMatrix::trusted(from_blocks(&i, p, &Mat::zeros(d, d), &i)))
    }

    /// Rotation by angle theta_j in each (x_j, xi_j) plane.
    pub fn fractional_fourier(theta: &[f64]) -> Self {
        let d = theta.len();
        let mut m = Mat::zeros(2 * d, 2 * d);
        for (j, &t) in theta.iter().enumerate() {
            let (s, c) = t.sin_cos();
            m[(j, j)] = c;
            m[(j, d + j)] = s;
            m[(d + j, j)] = -s;
            m[(d + j, d + j)] = c;
        }
        SymplecticMatrix::trusted(m)
    }

    /// Fourier transform in the coordinates where `mask` is true, identity elsewhere.
    pub fn partial_fourier(mask: &[bool]) -> Self {
        let d = mask.len();
        let mut m = Mat::zeros(2 * d, 2 * d);
        for (j, &on) in mask.iter().enumerate() {
            if on {
                m[(j, d + j)] = 1.0;
                m[(d + j, j)] = -1.0;
            } else {
                m[(j, j)] = 1.0;
                m[(d + j, d + j)] = 1.0;
            }
        }
        SymplecticMatrix::trusted(m)
    }

    /// S1 ⊗ S2 acting on R^(d1+d2) x R^(d1+d2): every block is block-diagonal.
    pub fn tensor(s1: &SymplecticMatrix, s2: &SymplecticMatrix) -> Self {
        let m = from_blocks(
            &linalg::block_diag(&s1.a(), &s2.a()),
            &linalg::block_diag(&s1.b(), &s2.b()),
            &linalg::block_diag(&s1.c(), &s2.c()),
            &linalg::block_diag(&s1.d(), &s2.d()),
        );
        SymplecticMatrix::trusted(m)
    }
}

/// The generating families of Sp(d, R).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    J { d: usize },
    Chirp { q: Vec<Vec<f64>> },
    Dilation { e: Vec<Vec<f64>> },
    Multiplier { p: Vec<Vec<f64>> },
    FractionalFourier { theta: Vec<f64> },
    PartialFourier { mask: Vec<bool> },
}

pub(crate) fn rows_to_mat(rows: &[Vec<f64>]) -> Result<Mat> {
    let n = rows.len();
    if n == 0 {
        return Err(MpkError::Parse("empty matrix".into()));
    }
    let m = rows[0].len();
    let mut flat = Vec::with_capacity(n * m);
    for r in rows {
        if r.len() != m {
            return Err(MpkError::Parse("ragged matrix rows".into()));
        }
        flat.extend_from_slice(r);
    }
    Ok(Mat::from_row_slice(n, m, &flat))
}

pub fn make_generator(g: &Generator) -> Result<SymplecticMatrix> {
    match g {
        Generator::J { d } => Ok(SymplecticMatrix::standard_j(*d)),
        Generator::Chirp { q } => SymplecticMatrix::chirp(&rows_to_mat(q)?),
        Generator::Dilation { e } => SymplecticMatrix::dilation(&rows_to_mat(e)?),
        Generator::Multiplier { p } => SymplecticMatrix::multiplier(&rows_to_mat(p)?),
        Generator::FractionalFourier { theta } => Ok(SymplecticMatrix::fractional_fourier(theta)),
        Generator::PartialFourier { mask } => Ok(SymplecticMatrix::partial_fourier(mask)),
    }
}
