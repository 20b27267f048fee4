//! Metaplectic operators on grid functions.
//!
//! `apply_metaplectic` dispatches on the rank r of the B block:
//! r = 0 uses the rescale-and-chirp formula, r = d the free integral, and
//! 0 < r < d integrates along the fibers t + Dᵀξ2, t ∈ (ker B)^⊥.

use crate::config::Tolerances;
use crate::error::{MpkError, Result};
use crate::fiber::{fourier_sum, UniformGrid};
use crate::grid::{fourier_transform, GridFunction};
use crate::interp::BandLimited;
use crate::linalg::{self, Mat};
use crate::symplectic::{mu_s, subspace_bases, OutputSplit, SymplecticMatrix};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericWarning {
    pub source: String,
    pub measured: f64,
    pub bound: f64,
}

impl NumericWarning {
    pub fn to_error(&self) -> MpkError {
        MpkError::AliasRisk { source_op: self.source.clone(), measured: self.measured, bound: self.bound }
    }
}

/// A transformed grid function plus the numerical warnings raised on the way.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub grid: GridFunction,
    pub warnings: Vec<NumericWarning>,
}

impl Transformed {
    fn finish(grid: GridFunction, mut warnings: Vec<NumericWarning>, strict: bool) -> Result<Self> {
        let peak = grid.peak();
        if peak > 0.0 {
            let edge = grid.boundary_max() / peak;
            if edge > 1e-6 {
                warnings.push(NumericWarning { source: "output reaches grid boundary".into(), measured: edge, bound: 1e-6 });
            }
        }
        if strict {
            if let Some(w) = warnings.first() {
                return Err(w.to_error());
            }
        }
        Ok(Transformed { grid, warnings })
    }
}

/// Support box and per-axis bandwidth of a sampled function.
pub(crate) struct Profile {
    pub interp: BandLimited,
    pub support: Option<Vec<(f64, f64)>>,
    pub band: Vec<f64>,
}

impl Profile {
    pub fn new(f: &GridFunction) -> Result<Self> {
        let h = f.spacing();
        let l = f.half_extent();
        let support = f.support_box(1e-13).map(|b| {
            b.into_iter().map(|(lo, hi)| ((lo - 2.0 * h).max(-l), (hi + 2.0 * h).min(l))).collect()
        });
        let spec = fourier_transform(f, -1)?;
        let band = match spec.support_box(1e-12) {
            Some(b) => b.into_iter().map(|(lo, hi)| lo.abs().max(hi.abs())).collect(),
            None => vec![0.0; f.dim()],
        };
        Ok(Profile { interp: BandLimited::new(f), support, band })
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        match &self.support {
            None => vec![],
            Some(b) => box_corners(b),
        }
    }
}

pub(crate) fn box_corners(b: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let d = b.len();
    (0..1usize << d)
        .map(|m| (0..d).map(|a| if m >> a & 1 == 1 { b[a].1 } else { b[a].0 }).collect())
        .collect()
}

fn check_square(m: &Mat, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(MpkError::DimensionMismatch { expected: d, found: m.nrows() });
    }
    Ok(())
}

fn check_symmetric(m: &Mat) -> Result<()> {
    let a = linalg::asymmetry(m);
    if a > 1e-12 {
        return Err(MpkError::NonSymmetricInput { residual: a });
    }
    Ok(())
}

/// e^{iπ Q x·x} f(x).
pub fn chirp_multiply(f: &GridFunction, q: &Mat) -> Result<Transformed> {
    chirp_multiply_with(f, q, false)
}

pub fn chirp_multiply_with(f: &GridFunction, q: &Mat, strict: bool) -> Result<Transformed> {
    check_square(q, f.dim())?;
    check_symmetric(q)?;
    let q = linalg::symmetrize(q);
    if q.iter().all(|&v| v == 0.0) {
        return Transformed::finish(f.clone(), vec![], strict);
    }
    let prof = Profile::new(f)?;
    let mut warnings = vec![];
    let nyq = 0.5 / f.spacing();
    let mut worst: f64 = 0.0;
    for c in prof.corners() {
        let qx = linalg::matvec(&q, &c);
        for a in 0..f.dim() {
            worst = worst.max(prof.band[a] + qx[a].abs());
        }
    }
    if worst > nyq {
        warnings.push(NumericWarning { source: "chirp_multiply".into(), measured: worst, bound: nyq });
    }
    let out = f.map(|x, z| z * C64::from_polar(1.0, PI * linalg::quad(&q, x)));
    Transformed::finish(out, warnings, strict)
}

/// |det E|^{1/2} f(E x).
pub fn rescale(f: &GridFunction, e: &Mat) -> Result<Transformed> {
    rescale_with(f, e, false)
}

pub fn rescale_with(f: &GridFunction, e: &Mat, strict: bool) -> Result<Transformed> {
    check_square(e, f.dim())?;
    let cond = linalg::condition_number(e);
    if !(cond < 1e10) {
        return Err(MpkError::SingularInput { condition: cond });
    }
    if *e == Mat::identity(f.dim(), f.dim()) {
        return Transformed::finish(f.clone(), vec![], strict);
    }
    let prof = Profile::new(f)?;
    let mut warnings = vec![];
    let peak = f.peak();
    if peak > 0.0 && f.boundary_max() > 1e-8 * peak {
        warnings.push(NumericWarning { source: "rescale: input not decayed at boundary".into(), measured: f.boundary_max() / peak, bound: 1e-8 });
    }
    // output frequencies are Eᵀ applied to the input ones
    let nyq = 0.5 / f.spacing();
    let band_box: Vec<(f64, f64)> = prof.band.iter().map(|&b| (-b, b)).collect();
    let mut worst: f64 = 0.0;
    for c in box_corners(&band_box) {
        for v in linalg::matvec(&e.transpose(), &c) {
            worst = worst.max(v.abs());
        }
    }
    if worst > nyq {
        warnings.push(NumericWarning { source: "rescale".into(), measured: worst, bound: nyq });
    }
    let amp = e.determinant().abs().sqrt();
    let out = f.map(|x, _| prof.interp.eval(&linalg::matvec(e, x)) * amp);
    let (n0, n1) = (f.norm_l2(), out.norm_l2());
    if n0 > 0.0 && (n1 - n0).abs() / n0 > 1e-6 {
        warnings.push(NumericWarning { source: "rescale: mass leaves grid".into(), measured: (n1 - n0).abs() / n0, bound: 1e-6 });
    }
    Transformed::finish(out, warnings, strict)
}

/// F⁻¹(e^{-iπ P ξ·ξ} f̂).
pub fn multiplier(f: &GridFunction, p: &Mat) -> Result<Transformed> {
    multiplier_with(f, p, false)
}

pub fn multiplier_with(f: &GridFunction, p: &Mat, strict: bool) -> Result<Transformed> {
    check_square(p, f.dim())?;
    check_symmetric(p)?;
    let p = linalg::symmetrize(p);
    let spec = fourier_transform(f, -1)?;
    let spec = spec.map(|xi, z| z * C64::from_polar(1.0, -PI * linalg::quad(&p, xi)));
    let out = fourier_transform(&spec, 1)?;
    Transformed::finish(out, vec![], strict)
}

/// Ŝf on the input grid.
pub fn apply_metaplectic(s: &SymplecticMatrix, f: &GridFunction, tol: &Tolerances) -> Result<Transformed> {
    check_dims(s, f)?;
    let rank_tol = s.rank_tol(tol.tol_rank);
    let r = s.rank_b(rank_tol);
    if r == 0 {
        return apply_rank_zero(s, f, tol.strict);
    }
    let points: Vec<Vec<f64>> = (0..f.len()).map(|i| f.point(i)).collect();
    let (vals, warnings) = with_fourier_fallback(s, f, &points, direct_points(s, f, &points, rank_tol)?);
    Transformed::finish(f.with_samples(vals), warnings, tol.strict)
}

/// Ŝf at arbitrary output points.
pub fn apply_metaplectic_at(
    s: &SymplecticMatrix,
    f: &GridFunction,
    points: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<(Vec<C64>, Vec<NumericWarning>)> {
    check_dims(s, f)?;
    let rank_tol = s.rank_tol(tol.tol_rank);
    let first = direct_points(s, f, points, rank_tol)?;
    Ok(with_fourier_fallback(s, f, points, first))
}

fn direct_points(
    s: &SymplecticMatrix,
    f: &GridFunction,
    points: &[Vec<f64>],
    rank_tol: f64,
) -> Result<(Vec<C64>, Vec<NumericWarning>)> {
    let r = s.rank_b(rank_tol);
    if r == 0 {
        let a_inv = s.a().try_inverse().ok_or(MpkError::SingularInput { condition: f64::INFINITY })?;
        let q = linalg::symmetrize(&(s.c() * &a_inv));
        let amp = a_inv.determinant().abs().sqrt();
        let interp = BandLimited::new(f);
        let vals = points
            .par_iter()
            .map(|xi| interp.eval(&linalg::matvec(&a_inv, xi)) * C64::from_polar(amp, PI * linalg::quad(&q, xi)))
            .collect();
        return Ok((vals, vec![]));
    }
    if r == s.dim() {
        if let Ok(v) = free_points(s, f, points, rank_tol, true) {
            return Ok(v);
        }
    }
    fiber_points(s, f, points, rank_tol)
}

fn refinement_capped(w: &[NumericWarning]) -> bool {
    w.iter().any(|w| w.source == FIBER_CAPPED)
}

/// A small but nonzero B makes the fiber chirp too fast to sample. Then
/// Ŝ = ±(SJ⁻¹)^ Ĵ, where Ĵ is an FFT and SJ⁻¹ has B block −A.
fn with_fourier_fallback(
    s: &SymplecticMatrix,
    f: &GridFunction,
    points: &[Vec<f64>],
    first: (Vec<C64>, Vec<NumericWarning>),
) -> (Vec<C64>, Vec<NumericWarning>) {
    if !refinement_capped(&first.1) {
        return first;
    }
    let second = (|| -> Result<(Vec<C64>, Vec<NumericWarning>)> {
        let g = fourier_transform(f, -1)?;
        let s2 = s.compose(&SymplecticMatrix::standard_j(s.dim()).inverse())?;
        direct_points(&s2, &g, points, s2.default_rank_tol())
    })();
    match second {
        Ok(v) if !refinement_capped(&v.1) => v,
        _ => first,
    }
}

/// Free route, Riemann sum over the input grid; requires invertible B.
pub fn apply_metaplectic_free(s: &SymplecticMatrix, f: &GridFunction, tol: &Tolerances) -> Result<Transformed> {
    check_dims(s, f)?;
    let rank_tol = s.rank_tol(tol.tol_rank);
    if s.rank_b(rank_tol) != s.dim() {
        return Err(MpkError::SingularInput { condition: linalg::condition_number(&s.b()) });
    }
    let points: Vec<Vec<f64>> = (0..f.len()).map(|i| f.point(i)).collect();
    let (vals, warnings) = free_points(s, f, &points, rank_tol, false)?;
    Transformed::finish(f.with_samples(vals), warnings, tol.strict)
}

/// Fiber route; works for every 1 <= r <= d.
pub fn apply_metaplectic_fiber(s: &SymplecticMatrix, f: &GridFunction, tol: &Tolerances) -> Result<Transformed> {
    check_dims(s, f)?;
    let rank_tol = s.rank_tol(tol.tol_rank);
    if s.rank_b(rank_tol) == 0 {
        return Err(MpkError::RankZero);
    }
    let points: Vec<Vec<f64>> = (0..f.len()).map(|i| f.point(i)).collect();
    let (vals, warnings) = fiber_points(s, f, &points, rank_tol)?;
    Transformed::finish(f.with_samples(vals), warnings, tol.strict)
}

fn check_dims(s: &SymplecticMatrix, f: &GridFunction) -> Result<()> {
    if s.dim() != f.dim() {
        return Err(MpkError::DimensionMismatch { expected: s.dim(), found: f.dim() });
    }
    Ok(())
}

/// B = 0: Ŝf(ξ) = |det A|^{-1/2} e^{iπ C A⁻¹ ξ·ξ} f(A⁻¹ξ).
fn apply_rank_zero(s: &SymplecticMatrix, f: &GridFunction, strict: bool) -> Result<Transformed> {
    let a_inv = s
        .a()
        .try_inverse()
        .ok_or(MpkError::SingularInput { condition: f64::INFINITY })?;
    let q = linalg::symmetrize(&(s.c() * &a_inv));
    let first = rescale_with(f, &a_inv, false)?;
    let second = chirp_multiply_with(&first.grid, &q, false)?;
    let mut warnings = first.warnings;
    warnings.extend(second.warnings);
    Transformed::finish(second.grid, warnings, strict)
}

/// |det B|^{-1/2} e^{iπ D B⁻¹ ξ·ξ} ∫ f(t) e^{iπ B⁻¹A t·t} e^{-2πi B⁻¹ξ·t} dt
/// as a Riemann sum over the input nodes. With `guard`, refuses when the
/// chirped integrand would alias on the input grid.
fn free_points(
    s: &SymplecticMatrix,
    f: &GridFunction,
    points: &[Vec<f64>],
    rank_tol: f64,
    guard: bool,
) -> Result<(Vec<C64>, Vec<NumericWarning>)> {
    let d = s.dim();
    let b = s.b();
    let b_inv = linalg::pinv(&b, rank_tol);
    let k = linalg::symmetrize(&(&b_inv * s.a()));
    let outer = linalg::symmetrize(&(s.d() * &b_inv));
    let amp = b.determinant().abs().powf(-0.5);
    let h = f.spacing();
    let prof = Profile::new(f)?;
    let mut warnings = vec![];
    let support = match &prof.support {
        None => return Ok((vec![C64::new(0.0, 0.0); points.len()], warnings)),
        Some(b) => b.clone(),
    };
    let etas: Vec<Vec<f64>> = points.iter().map(|xi| linalg::matvec(&b_inv, xi)).collect();
    let mut width = vec![0.0f64; d];
    for c in prof.corners() {
        let kx = linalg::matvec(&k, &c);
        for a in 0..d {
            width[a] = width[a].max(prof.band[a] + kx[a].abs());
        }
    }
    let mut eta_max = vec![0.0f64; d];
    for e in &etas {
        for a in 0..d {
            eta_max[a] = eta_max[a].max(e[a].abs());
        }
    }
    let worst = (0..d).map(|a| (width[a] + eta_max[a]) * h).fold(0.0, f64::max);
    if worst >= 1.0 {
        let w = NumericWarning { source: "free integral on input grid".into(), measured: worst, bound: 1.0 };
        if guard {
            return Err(w.to_error());
        }
        warnings.push(w);
    }
    // clip the sum to the support box of f
    let lo: Vec<usize> = support.iter().map(|&(a, _)| ((a + f.half_extent()) / h).round() as usize).collect();
    let hi: Vec<usize> = support.iter().map(|&(_, b)| (((b + f.half_extent()) / h).round() as usize).min(f.n() - 1)).collect();
    let counts: Vec<usize> = (0..d).map(|a| hi[a] - lo[a] + 1).collect();
    let grid = UniformGrid { step: h, counts: counts.clone(), origin: (0..d).map(|a| f.coord(lo[a])).collect() };
    let samples: Vec<C64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut rem = i;
            let mut multi = vec![0usize; d];
            for a in (0..d).rev() {
                multi[a] = lo[a] + rem % counts[a];
                rem /= counts[a];
            }
            let x: Vec<f64> = multi.iter().map(|&m| f.coord(m)).collect();
            f.samples()[f.flat_index(&multi)] * C64::from_polar(1.0, PI * linalg::quad(&k, &x))
        })
        .collect();
    let sums = fourier_sum(&samples, &grid, &etas);
    let vals = points
        .par_iter()
        .zip(sums.par_iter())
        .map(|(xi, v)| v * C64::from_polar(amp, PI * linalg::quad(&outer, xi)))
        .collect();
    Ok((vals, warnings))
}

const MAX_REFINE: f64 = 64.0;
const FIBER_CAPPED: &str = "fiber sampling refinement capped";
// per fiber group; keeps the padded FFT in the low hundreds of MB for r = 2
const MAX_FIBER_SAMPLES: f64 = (1u64 << 20) as f64;

/// Integrate along fibers t + Dᵀξ2 with t = V u ∈ (ker B)^⊥:
/// Ŝf(ξ) = μ e^{iπ(DB⁺ξ1·ξ1 + DCᵀξ2·ξ2)} ĝ(VᵀB⁺ξ1),
/// g(u) = f(Vu + Dᵀξ2) e^{iπ(VᵀB⁺AV u·u + 2 VᵀCᵀξ2·u)}.
fn fiber_points(
    s: &SymplecticMatrix,
    f: &GridFunction,
    points: &[Vec<f64>],
    rank_tol: f64,
) -> Result<(Vec<C64>, Vec<NumericWarning>)> {
    let d = s.dim();
    let (a, b, c, dd) = (s.a(), s.b(), s.c(), s.d());
    let bases = subspace_bases(&b, rank_tol);
    let r = bases.rank;
    let v = bases.kernel_perp.basis.clone();
    let bp = linalg::pinv(&b, rank_tol);
    let k = linalg::symmetrize(&(v.transpose() * &bp * &a * &v));
    let vt_bp = v.transpose() * &bp;
    let vt_ct = v.transpose() * c.transpose();
    let dt = dd.transpose();
    let outer1 = linalg::symmetrize(&(&dd * &bp));
    let outer2 = linalg::symmetrize(&(&dd * c.transpose()));
    let mu = mu_s(s, rank_tol)?;
    let split = OutputSplit::new(s, rank_tol)?;
    let prof = Profile::new(f)?;
    let h = f.spacing();
    let mut out = vec![C64::new(0.0, 0.0); points.len()];
    let corners = prof.corners();
    if corners.is_empty() {
        return Ok((out, vec![]));
    }
    // band of f along each fiber axis
    let fband: Vec<f64> = (0..r).map(|j| (0..d).map(|i| v[(i, j)].abs() * prof.band[i]).sum()).collect();

    let mut groups: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut coords = Vec::with_capacity(points.len());
    for (i, xi) in points.iter().enumerate() {
        let cc = split.coords(xi);
        let key = cc[r..].iter().map(|x| (x * 1e9).round() as i64).collect();
        groups.entry(key).or_default().push(i);
        coords.push(cc);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();

    let results: Vec<(Vec<(usize, C64)>, f64)> = groups
        .par_iter()
        .map(|idx| {
            let c2: Vec<f64> = coords[idx[0]][r..].to_vec();
            let xi2: Vec<f64> = (0..d).map(|i| (0..d - r).map(|j| split.a_kernel[(i, j)] * c2[j]).sum()).collect();
            let x2 = linalg::matvec(&dt, &xi2);
            let lin = linalg::matvec(&vt_ct, &xi2);
            // u-range: projections of the support box corners onto the fiber
            let mut ulo = vec![f64::INFINITY; r];
            let mut uhi = vec![f64::NEG_INFINITY; r];
            for cn in &corners {
                let diff: Vec<f64> = cn.iter().zip(&x2).map(|(p, q)| p - q).collect();
                for j in 0..r {
                    let u: f64 = (0..d).map(|i| v[(i, j)] * diff[i]).sum();
                    ulo[j] = ulo[j].min(u);
                    uhi[j] = uhi[j].max(u);
                }
            }
            let xi1s: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    let cc = &coords[i];
                    (0..d).map(|row| (0..r).map(|j| split.range[(row, j)] * cc[j]).sum()).collect()
                })
                .collect();
            let etas: Vec<Vec<f64>> = xi1s.iter().map(|x1| linalg::matvec(&vt_bp, x1)).collect();
            let mut width = vec![0.0f64; r];
            for ucorner in box_corners(&ulo.iter().zip(&uhi).map(|(&l, &h)| (l, h)).collect::<Vec<_>>()) {
                let ku = linalg::matvec(&k, &ucorner);
                for j in 0..r {
                    width[j] = width[j].max(fband[j] + (ku[j] + lin[j]).abs());
                }
            }
            let mut eta_max = vec![0.0f64; r];
            for e in &etas {
                for j in 0..r {
                    eta_max[j] = eta_max[j].max(e[j].abs());
                }
            }
            let mut hu = h;
            for j in 0..r {
                if width[j] > 0.0 {
                    hu = hu.min(0.5 / width[j]);
                }
                if width[j] + eta_max[j] > 0.0 {
                    hu = hu.min(1.0 / (width[j] + eta_max[j]));
                }
            }
            let mut refine = (h / hu).ceil().max(1.0);
            let mut capped = 0.0;
            if refine > MAX_REFINE {
                capped = refine;
                refine = MAX_REFINE;
            }
            let mut hu = h / refine;
            let count = |hu: f64| (0..r).map(|j| (uhi[j] - ulo[j]) / hu + 3.0).product::<f64>();
            if count(hu) > MAX_FIBER_SAMPLES {
                let before = h / hu;
                while count(hu) > MAX_FIBER_SAMPLES {
                    hu *= 1.1;
                }
                capped = capped.max(before);
            }
            let ustar: Vec<f64> = (0..r).map(|j| -(0..d).map(|i| v[(i, j)] * x2[i]).sum::<f64>()).collect();
            let klo: Vec<i64> = (0..r).map(|j| ((ulo[j] - ustar[j]) / hu).floor() as i64).collect();
            let khi: Vec<i64> = (0..r).map(|j| ((uhi[j] - ustar[j]) / hu).ceil() as i64).collect();
            let grid = UniformGrid {
                step: hu,
                counts: (0..r).map(|j| (khi[j] - klo[j] + 1) as usize).collect(),
                origin: (0..r).map(|j| ustar[j] + klo[j] as f64 * hu).collect(),
            };
            let samples: Vec<C64> = (0..grid.len())
                .map(|m| {
                    let u = grid.point(m);
                    let mut x = x2.clone();
                    for i in 0..d {
                        for j in 0..r {
                            x[i] += v[(i, j)] * u[j];
                        }
                    }
                    let val = prof.interp.eval(&x);
                    if val == C64::new(0.0, 0.0) {
                        return val;
                    }
                    let ph = linalg::quad(&k, &u) + 2.0 * u.iter().zip(&lin).map(|(p, q)| p * q).sum::<f64>();
                    val * C64::from_polar(1.0, PI * ph)
                })
                .collect();
            let sums = fourier_sum(&samples, &grid, &etas);
            let vals = idx
                .iter()
                .zip(sums)
                .zip(&xi1s)
                .map(|((&i, g), x1)| {
                    let ph = linalg::quad(&outer1, x1) + linalg::quad(&outer2, &xi2);
                    (i, g * C64::from_polar(mu, PI * ph))
                })
                .collect();
            (vals, capped)
        })
        .collect();
    let mut worst_cap: f64 = 0.0;
    for (vals, cap) in results {
        worst_cap = worst_cap.max(cap);
        for (i, z) in vals {
            out[i] = z;
        }
    }
    let mut warnings = vec![];
    if worst_cap > 0.0 {
        warnings.push(NumericWarning { source: FIBER_CAPPED.into(), measured: worst_cap, bound: MAX_REFINE });
    }
    Ok((out, warnings))
}
