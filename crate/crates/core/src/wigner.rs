//! Cross-Wigner distribution W(f, g)(x, ξ) = 2^d ∫ f(x+τ) g*(x-τ) e^{-4πiξ·τ} dτ.

use crate::config::Tolerances;
use crate::error::{MpkError, Result};
use crate::grid::{fourier_transform, upsample, GridFunction};
use crate::interp::BandLimited;
use crate::linalg;
use crate::metaplectic::{apply_metaplectic, NumericWarning, Profile};
use crate::symplectic::SymplecticMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest phase-space grid (n^(2d) samples) built by `wigner`.
pub const MAX_PHASE_SPACE: usize = 1 << 24;

/// W sampled on (input grid) x (reciprocal grid); row-major with the x axes first.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseSpaceGrid {
    pub dim: usize,
    pub n: usize,
    pub x_half_extent: f64,
    pub xi_half_extent: f64,
    pub values: Vec<C64>,
}

impl PhaseSpaceGrid {
    pub fn x_coord(&self, k: usize) -> f64 {
        -self.x_half_extent + k as f64 * 2.0 * self.x_half_extent / self.n as f64
    }
    pub fn xi_coord(&self, k: usize) -> f64 {
        -self.xi_half_extent + k as f64 * 2.0 * self.xi_half_extent / self.n as f64
    }
    /// Phase-space point (x, ξ) of a flat index.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut z = vec![0.0; 2 * self.dim];
        for a in (0..2 * self.dim).rev() {
            let k = idx % self.n;
            idx /= self.n;
            z[a] = if a < self.dim { self.x_coord(k) } else { self.xi_coord(k) };
        }
        z
    }
    /// ∫ W dξ at each x node.
    pub fn x_marginal(&self) -> Vec<f64> {
        let block = self.n.pow(self.dim as u32);
        let dxi = (2.0 * self.xi_half_extent / self.n as f64).powi(self.dim as i32);
        self.values.chunks(block).map(|c| c.iter().map(|z| z.re).sum::<f64>() * dxi).collect()
    }
}

pub fn wigner(f: &GridFunction, g: &GridFunction) -> Result<PhaseSpaceGrid> {
    f.check_same_grid(g)?;
    let d = f.dim();
    let n = f.n();
    let total = n.checked_pow(2 * d as u32).unwrap_or(usize::MAX);
    if total > MAX_PHASE_SPACE {
        return Err(MpkError::InvalidGrid(format!(
            "phase-space grid of {} samples exceeds {}; use wigner_at",
            total, MAX_PHASE_SPACE
        )));
    }
    let (ff, fshape) = upsample(f.samples(), &f.shape(), 2);
    let (gf, _) = upsample(g.samples(), &g.shape(), 2);
    let m = 2 * n;
    let hd = f.spacing().powi(d as i32);
    let block = n.pow(d as u32);
    let mut planner = FftPlanner::<f64>::new();
    let plan = planner.plan_fft_forward(n);
    let fine_index = |multi: &[isize]| -> Option<usize> {
        let mut flat = 0usize;
        for (a, &k) in multi.iter().enumerate() {
            if k < 0 || k >= fshape[a] as isize {
                return None;
            }
            flat = flat * fshape[a] + k as usize;
        }
        Some(flat)
    };
    let values: Vec<C64> = (0..block)
        .into_par_iter()
        .flat_map_iter(|xi_idx| {
            let mut centre = vec![0isize; d];
            let mut rem = xi_idx;
            for a in (0..d).rev() {
                centre[a] = 2 * (rem % n) as isize;
                rem /= n;
            }
            let mut b = vec![C64::new(0.0, 0.0); block];
            let lags = m.pow(d as u32);
            let mut plus = vec![0isize; d];
            let mut minus = vec![0isize; d];
            for lag in 0..lags {
                let mut rem = lag;
                let mut parity = 0isize;
                let mut folded = 0usize;
                for a in (0..d).rev() {
                    let k = (rem % m) as isize - n as isize;
                    rem /= m;
                    plus[a] = centre[a] + k;
                    minus[a] = centre[a] - k;
                    parity += k;
                }
                for a in 0..d {
                    let k = plus[a] - centre[a];
                    folded = folded * n + k.rem_euclid(n as isize) as usize;
                }
                if let (Some(p), Some(q)) = (fine_index(&plus), fine_index(&minus)) {
                    let v = ff[p] * gf[q].conj();
                    b[folded] += if parity.rem_euclid(2) == 1 { -v } else { v };
                }
            }
            let shape = vec![n; d];
            for a in 0..d {
                crate::grid::for_each_lane_serial(&mut b, &shape, a, |lane| plan.process(lane));
            }
            // ξ_m = -L' + m/(n h): the (-1)^k twiddle was folded in above, and
            // e^{2πi L' k h} = (-1)^k, so only the scale remains
            b.into_iter().map(move |z| z * hd)
        })
        .collect();
    Ok(PhaseSpaceGrid { dim: d, n, x_half_extent: f.half_extent(), xi_half_extent: f.frequency_half_extent(), values })
}

/// Pointwise W(f, f) by direct quadrature of the band-limited interpolant.
pub struct WignerProbe {
    interp: BandLimited,
    support: Option<Vec<(f64, f64)>>,
    band: Vec<f64>,
    h: f64,
    dim: usize,
}

impl WignerProbe {
    pub fn new(f: &GridFunction) -> Result<Self> {
        let prof = Profile::new(f)?;
        Ok(WignerProbe { interp: prof.interp, support: prof.support, band: prof.band, h: f.spacing(), dim: f.dim() })
    }

    pub fn eval(&self, z: &[f64]) -> C64 {
        let d = self.dim;
        let (x, xi) = z.split_at(d);
        let Some(sup) = &self.support else { return C64::new(0.0, 0.0) };
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for a in 0..d {
            lo[a] = (sup[a].0 - x[a]).max(x[a] - sup[a].1);
            hi[a] = (sup[a].1 - x[a]).min(x[a] - sup[a].0);
            if lo[a] > hi[a] {
                return C64::new(0.0, 0.0);
            }
        }
        let bmax = self.band.iter().cloned().fold(0.0, f64::max);
        let ximax = xi.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let step = self.h.min(0.9 / (2.0 * bmax + 2.0 * ximax).max(1e-300));
        // symmetric τ-grid through 0
        let kmin: Vec<i64> = lo.iter().map(|&l| (l / step).ceil() as i64).collect();
        let kmax: Vec<i64> = hi.iter().map(|&u| (u / step).floor() as i64).collect();
        let counts: Vec<usize> = (0..d).map(|a| (kmax[a] - kmin[a] + 1).max(0) as usize).collect();
        let total: usize = counts.iter().product();
        let mut acc = C64::new(0.0, 0.0);
        let mut p = vec![0.0; d];
        let mut q = vec![0.0; d];
        for idx in 0..total {
            let mut rem = idx;
            let mut dot = 0.0;
            for a in (0..d).rev() {
                let tau = (kmin[a] + (rem % counts[a]) as i64) as f64 * step;
                rem /= counts[a];
                p[a] = x[a] + tau;
                q[a] = x[a] - tau;
                dot += xi[a] * tau;
            }
            let fp = self.interp.eval(&p);
            if fp == C64::new(0.0, 0.0) {
                continue;
            }
            acc += fp * self.interp.eval(&q).conj() * C64::from_polar(1.0, -4.0 * PI * dot);
        }
        acc * (2.0 * step).powi(d as i32)
    }
}

pub fn wigner_at(f: &GridFunction, points: &[Vec<f64>]) -> Result<Vec<C64>> {
    let probe = WignerProbe::new(f)?;
    Ok(points.par_iter().map(|z| probe.eval(z)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceReport {
    /// Relative L2 discrepancy between W(Ŝf)(z) and W(f)(S⁻¹z).
    pub discrepancy: f64,
    pub sample_points: usize,
    pub warnings: Vec<NumericWarning>,
}

/// Compare W(Ŝf) with W(f)∘S⁻¹ on points covering the essential support of W(Ŝf).
pub fn check_covariance(s: &SymplecticMatrix, f: &GridFunction, tol: &Tolerances, seed: u64) -> Result<CovarianceReport> {
    let out = apply_metaplectic(s, f, tol)?;
    let points = phase_space_samples(&out.grid, seed)?;
    let s_inv = s.inverse();
    let pulled: Vec<Vec<f64>> = points.iter().map(|z| linalg::matvec(s_inv.matrix(), z)).collect();
    let lhs = wigner_at(&out.grid, &points)?;
    let rhs = wigner_at(f, &pulled)?;
    Ok(CovarianceReport {
        discrepancy: crate::grid::relative_l2(&lhs, &rhs),
        sample_points: points.len(),
        warnings: out.warnings,
    })
}

/// Regular 48x48 points for d = 1. For d ≥ 2 a uniform box wastes almost every
/// sample on the region where W vanishes, so x and ξ are drawn independently
/// from |g|² and |ĝ|² (grid cell plus uniform jitter).
fn phase_space_samples(g: &GridFunction, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = g.dim();
    let spec = fourier_transform(g, -1)?;
    if d == 1 {
        let Some(xbox) = g.support_box(1e-6) else { return Ok(vec![]) };
        let Some(fbox) = spec.support_box(1e-6) else { return Ok(vec![]) };
        let bx: Vec<(f64, f64)> = xbox.into_iter().chain(fbox).collect();
        let m = 48;
        let mut pts = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let t = |k: usize, (lo, hi): (f64, f64)| lo + (hi - lo) * (k as f64 + 0.5) / m as f64;
                pts.push(vec![t(i, bx[0]), t(j, bx[1])]);
            }
        }
        return Ok(pts);
    }
    let (Some(xs), Some(fs)) = (Sampler::new(g), Sampler::new(&spec)) else { return Ok(vec![]) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..600)
        .map(|_| {
            let mut z = xs.draw(&mut rng);
            z.extend(fs.draw(&mut rng));
            z
        })
        .collect())
}

struct Sampler<'a> {
    grid: &'a GridFunction,
    cumulative: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(grid: &'a GridFunction) -> Option<Self> {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = grid
            .samples()
            .iter()
            .map(|z| {
                acc += z.norm_sqr();
                acc
            })
            .collect();
        (acc > 0.0).then_some(Sampler { grid, cumulative })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random_range(0.0..total);
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        let h = self.grid.spacing();
        self.grid.point(k).into_iter().map(|x| x + rng.random_range(-0.5..0.5) * h).collect()
    }
}
