//! Quadratic Hamiltonians H(z) = ½⟨ℳz, z⟩, their flows S_t = exp(tJℳ) and
//! the dynamical form of the Hardy check. Units: ℏ = 1/(2π).

use crate::config::Tolerances;
use crate::error::{MpkError, Result};
use crate::grid::GridFunction;
use crate::hardy::{classify, DecayCertificate, HardyVerdict};
use crate::linalg::{self, Mat};
use crate::metaplectic::{apply_metaplectic, Transformed};
use crate::symplectic::{standard_j, subspace_bases, SymplecticMatrix, TAU_SYMP};
use serde::Serialize;

pub const CONDITIONING_LIMIT: f64 = 1e4;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticHamiltonian {
    dim: usize,
    mcal: Mat,
}

impl QuadraticHamiltonian {
    pub fn new(mcal: Mat) -> Result<Self> {
        let (r, c) = mcal.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(MpkError::DimensionMismatch { expected: r, found: c });
        }
        let a = linalg::asymmetry(&mcal);
        if a > 1e-12 {
            return Err(MpkError::NonSymmetricInput { residual: a });
        }
        Ok(QuadraticHamiltonian { dim: r / 2, mcal: linalg::symmetrize(&mcal) })
    }

    /// ℳ = diag(m ω_j², 1/m): H = Σ_j (m ω_j² x_j² + ξ_j²/m) / 2.
    pub fn harmonic_oscillator(omega: &[f64], m: f64) -> Result<Self> {
        if omega.is_empty() || omega.iter().any(|&w| !(w > 0.0)) || !(m > 0.0) {
            return Err(MpkError::Parse("oscillator needs positive frequencies and mass".into()));
        }
        let d = omega.len();
        let mut mc = Mat::zeros(2 * d, 2 * d);
        for (j, &w) in omega.iter().enumerate() {
            mc[(j, j)] = m * w * w;
            mc[(d + j, d + j)] = 1.0 / m;
        }
        Self::new(mc)
    }

    /// ℳ = diag(0, 1, 0, 1): free in x1, unit oscillator in x2.
    pub fn anisotropic_oscillator_2d() -> Self {
        let mut mc = Mat::zeros(4, 4);
        mc[(1, 1)] = 1.0;
        mc[(3, 3)] = 1.0;
        QuadraticHamiltonian { dim: 2, mcal: mc }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mcal(&self) -> &Mat {
        &self.mcal
    }

    /// X = Jℳ, an element of sp(d): XJ + JXᵀ = 0.
    pub fn generator(&self) -> Mat {
        standard_j(self.dim) * &self.mcal
    }
}

#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    pub s: SymplecticMatrix,
}

impl FlowSample {
    pub fn blocks(&self) -> (Mat, Mat, Mat, Mat) {
        (self.s.a(), self.s.b(), self.s.c(), self.s.d())
    }
}

pub fn flow(h: &QuadraticHamiltonian, t: f64) -> Result<FlowSample> {
    let x = h.generator() * t;
    let size = t.abs() * linalg::spectral_norm(&h.generator());
    if !(size < CONDITIONING_LIMIT) {
        return Err(MpkError::ConditioningGuard { value: size });
    }
    let s = SymplecticMatrix::with_tolerance(x.exp(), TAU_SYMP)?;
    Ok(FlowSample { t, s })
}

/// Closed-form oscillator blocks A = D = diag(cos ω_j t), B = diag(sin ω_j t / (m ω_j)),
/// C = -diag(m ω_j sin ω_j t).
pub fn oscillator_blocks(omega: &[f64], m: f64, t: f64) -> (Mat, Mat, Mat, Mat) {
    let d = omega.len();
    let mut a = Mat::zeros(d, d);
    let mut b = Mat::zeros(d, d);
    let mut c = Mat::zeros(d, d);
    for (j, &w) in omega.iter().enumerate() {
        let (s, co) = (w * t).sin_cos();
        a[(j, j)] = co;
        b[(j, j)] = s / (m * w);
        c[(j, j)] = -m * w * s;
    }
    (a.clone(), b, c, a)
}

/// u(·, t) = Ŝ_t u0 (moduli are meaningful; the global phase is not tracked).
pub fn propagate(u0: &GridFunction, h: &QuadraticHamiltonian, t: f64, tol: &Tolerances) -> Result<Transformed> {
    let fs = flow(h, t)?;
    apply_metaplectic(&fs.s, u0, tol)
}

/// Hardy verdict for decay of u at t = 0 (M) and at t = t1 (N).
pub fn dynamical_hardy_check(
    cert: &DecayCertificate,
    h: &QuadraticHamiltonian,
    t1: f64,
    tol: &Tolerances,
) -> Result<HardyVerdict> {
    let fs = flow(h, t1)?;
    let rank_tol = fs.s.rank_tol(tol.tol_rank);
    if fs.s.rank_b(rank_tol) == 0 {
        return Err(MpkError::DegenerateTime { t: t1 });
    }
    Ok(classify(cert, &fs.s, tol))
}

/// Mass 1/(4π) turns ℏ = 1, m = 1/2 into the ℏ = 1/(2π) convention with the
/// same frequencies; decay e^{-α|x|²} becomes M = (α/π) I.
pub const KNUTSEN_MASS: f64 = 1.0 / (4.0 * std::f64::consts::PI);

#[derive(Clone, Debug, Serialize)]
pub struct KnutsenReport {
    pub a: f64,
    pub b: f64,
    /// a·b·‖B‖²_op, Knutsen's operator-norm criterion.
    pub knutsen_value: f64,
    pub knutsen_vanishing: bool,
    pub max_eigenvalue: f64,
    pub eigenvalues: Vec<f64>,
    pub spectrum_vanishing: bool,
    pub binding_direction_knutsen: Vec<f64>,
    pub binding_direction_spectrum: Vec<f64>,
    pub binding_index_knutsen: usize,
    pub binding_index_spectrum: usize,
    pub agree: bool,
}

fn isotropic_scale(m: &Mat) -> Result<f64> {
    // M = a P with P an orthogonal projector  <=>  M² = a M
    let (vals, _) = linalg::sym_eigen(m);
    let a = vals.first().copied().unwrap_or(0.0);
    if a <= 0.0 {
        return Err(MpkError::NonIsotropic { residual: 1.0 });
    }
    let res = (m * m - m * a).amax() / (a * a);
    if res > 1e-10 {
        return Err(MpkError::NonIsotropic { residual: res });
    }
    Ok(a)
}

fn argmax_abs(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, -1.0), |acc, (i, &x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc }).0
}

/// Knutsen's operator-norm criterion a·b·‖B‖² > 1 next to the full restricted
/// spectrum, for isotropic M = aP, N = bQ (P, Q projectors, e.g. the identity).
pub fn knutsen_comparison(
    cert: &DecayCertificate,
    h: &QuadraticHamiltonian,
    t1: f64,
    tol: &Tolerances,
) -> Result<KnutsenReport> {
    let a = isotropic_scale(&cert.m)?;
    let b = isotropic_scale(&cert.n)?;
    let fs = flow(h, t1)?;
    let rank_tol = fs.s.rank_tol(tol.tol_rank);
    if fs.s.rank_b(rank_tol) == 0 {
        return Err(MpkError::DegenerateTime { t: t1 });
    }
    let bm = fs.s.b();
    let svd = linalg::svd(&bm);
    let knutsen_value = a * b * svd.sigma[0].powi(2);
    // isotropic data are restricted to ker(B)^⊥ and R(B) before the spectral test
    let restricted = DecayCertificate::isotropic_for(&fs.s, a, b, rank_tol)?;
    let verdict = classify(&restricted, &fs.s, tol);
    let eigenvalues = verdict.eigenvalues.clone();
    let max_eigenvalue = verdict.max_eigenvalue.unwrap_or(0.0);
    // top eigenvector of VᵀMBᵀNBV mapped back to R^d
    let sb = subspace_bases(&bm, rank_tol);
    let v = &sb.kernel_perp.basis;
    let prod = v.transpose() * &restricted.m * bm.transpose() * &restricted.n * &bm * v;
    let (_, vecs) = linalg::sym_eigen(&linalg::symmetrize(&prod));
    let dir_s: Vec<f64> = if vecs.ncols() > 0 { (v * vecs.column(0)).iter().copied().collect() } else { vec![] };
    let dir_k: Vec<f64> = svd.v.column(0).iter().copied().collect();
    let cos: f64 = dir_s.iter().zip(&dir_k).map(|(x, y)| x * y).sum::<f64>().abs();
    let knutsen_vanishing = knutsen_value > 1.0 + tol.tau_eig;
    let spectrum_vanishing = max_eigenvalue > 1.0 + tol.tau_eig;
    let bi_s = argmax_abs(&dir_s);
    let bi_k = argmax_abs(&dir_k);
    Ok(KnutsenReport {
        a,
        b,
        knutsen_value,
        knutsen_vanishing,
        max_eigenvalue,
        eigenvalues,
        spectrum_vanishing,
        binding_direction_knutsen: dir_k,
        binding_direction_spectrum: dir_s,
        binding_index_knutsen: bi_k,
        binding_index_spectrum: bi_s,
        agree: knutsen_vanishing == spectrum_vanishing && bi_k == bi_s && (cos - 1.0).abs() < 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flow_at_zero_is_identity() {
        let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
        assert!((flow(&h, 0.0).unwrap().s.matrix() - Mat::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn oscillator_closed_form() {
        let h = QuadraticHamiltonian::harmonic_oscillator(&[1.0, 2.0], 0.7).unwrap();
        for &t in &[0.3, 1.7, 4.0] {
            let fs = flow(&h, t).unwrap();
            let (a, b, c, d) = oscillator_blocks(&[1.0, 2.0], 0.7, t);
            let (fa, fb, fc, fd) = fs.blocks();
            let err = [(fa - a), (fb - b), (fc - c), (fd - d)].iter().map(|m| m.amax()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{}", err);
        }
    }

    #[test]
    fn quarter_period_blocks() {
        let (a, b, c, _) = oscillator_blocks(&[1.0], 0.5, PI / 2.0);
        assert!(a[(0, 0)].abs() < 1e-15 && (b[(0, 0)] - 2.0).abs() < 1e-15 && (c[(0, 0)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn guards() {
        let h = QuadraticHamiltonian::harmonic_oscillator(&[1.0], 1.0).unwrap();
        assert!(matches!(flow(&h, 1e5), Err(MpkError::ConditioningGuard { .. })));
        let cert = DecayCertificate::new(Mat::identity(1, 1), Mat::identity(1, 1), 1.0, 1.0).unwrap();
        assert!(matches!(
            dynamical_hardy_check(&cert, &h, PI, &Tolerances::default()),
            Err(MpkError::DegenerateTime { .. })
        ));
        let bad = DecayCertificate::new(Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]), Mat::identity(2, 2), 1.0, 1.0).unwrap();
        let h2 = QuadraticHamiltonian::harmonic_oscillator(&[1.0, 1.0], 1.0).unwrap();
        assert!(matches!(knutsen_comparison(&bad, &h2, 1.0, &Tolerances::default()), Err(MpkError::NonIsotropic { .. })));
    }
}
