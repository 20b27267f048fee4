//! Uniform centered grids on [-L, L)^d and the unit-frequency Fourier transform.

use crate::error::{MpkError, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Samples f(x_k) at x_k = -L + k h, h = 2L / n, row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dim: usize,
    n: usize,
    half_extent: f64,
    samples: Vec<C64>,
}

impl GridFunction {
    pub fn new(dim: usize, n: usize, half_extent: f64, samples: Vec<C64>) -> Result<Self> {
        validate(dim, n, half_extent)?;
        let expected = n.pow(dim as u32);
        if samples.len() != expected {
            return Err(MpkError::InvalidGrid(format!(
                "expected {} samples, found {}",
                expected,
                samples.len()
            )));
        }
        Ok(GridFunction { dim, n, half_extent, samples })
    }

    pub fn zeros(dim: usize, n: usize, half_extent: f64) -> Result<Self> {
        validate(dim, n, half_extent)?;
        Ok(GridFunction { dim, n, half_extent, samples: vec![C64::new(0.0, 0.0); n.pow(dim as u32)] })
    }

    pub fn from_fn<F>(dim: usize, n: usize, half_extent: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let mut g = Self::zeros(dim, n, half_extent)?;
        let proto = g.clone();
        g.samples.par_iter_mut().enumerate().for_each(|(i, s)| {
            *s = f(&proto.point(i));
        });
        Ok(g)
    }

    pub fn with_samples(&self, samples: Vec<C64>) -> Self {
        assert_eq!(samples.len(), self.samples.len());
        GridFunction { samples, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }
    /// Half extent n / (4L) of the reciprocal grid.
    pub fn frequency_half_extent(&self) -> f64 {
        self.n as f64 / (4.0 * self.half_extent)
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }
    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }
    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }
    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.half_extent + k as f64 * self.spacing()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.n + k)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).into_iter().map(|k| self.coord(k)).collect()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.dim == other.dim && self.n == other.n && (self.half_extent - other.half_extent).abs() <= 1e-12 * self.half_extent
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(MpkError::GridMismatch(format!(
                "(d={}, n={}, L={}) vs (d={}, n={}, L={})",
                self.dim, self.n, self.half_extent, other.dim, other.n, other.half_extent
            )))
        }
    }

    pub fn norm_l2(&self) -> f64 {
        let h = self.spacing().powi(self.dim as i32);
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * h).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    /// Largest modulus on the two outermost layers of the grid.
    pub fn boundary_max(&self) -> f64 {
        let n = self.n;
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, _)| self.multi_index(*i).iter().any(|&k| k < 2 || k + 2 >= n))
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    /// Bounding box of the points where |f| > rel * peak.
    pub fn support_box(&self, rel: f64) -> Option<Vec<(f64, f64)>> {
        let thr = rel * self.peak();
        let mut lo = vec![usize::MAX; self.dim];
        let mut hi = vec![0usize; self.dim];
        let mut any = false;
        for (i, z) in self.samples.iter().enumerate() {
            if z.norm() > thr {
                any = true;
                for (a, k) in self.multi_index(i).into_iter().enumerate() {
                    lo[a] = lo[a].min(k);
                    hi[a] = hi[a].max(k);
                }
            }
        }
        if !any {
            return None;
        }
        Some((0..self.dim).map(|a| (self.coord(lo[a]), self.coord(hi[a]))).collect())
    }

    pub fn map<F: Fn(&[f64], C64) -> C64 + Sync>(&self, f: F) -> Self {
        let mut out = self.clone();
        out.samples.par_iter_mut().enumerate().for_each(|(i, s)| {
            *s = f(&self.point(i), *s);
        });
        out
    }

    /// f1 ⊗ f2 on the product grid.
    pub fn tensor(f1: &GridFunction, f2: &GridFunction) -> Result<Self> {
        if f1.n != f2.n || (f1.half_extent - f2.half_extent).abs() > 1e-12 {
            return Err(MpkError::GridMismatch("tensor factors need equal n and L".into()));
        }
        let mut samples = Vec::with_capacity(f1.len() * f2.len());
        for a in &f1.samples {
            for b in &f2.samples {
                samples.push(a * b);
            }
        }
        GridFunction::new(f1.dim + f2.dim, f1.n, f1.half_extent, samples)
    }
}

fn validate(dim: usize, n: usize, half_extent: f64) -> Result<()> {
    if dim == 0 {
        return Err(MpkError::InvalidGrid("dimension must be positive".into()));
    }
    if n < 4 || !n.is_power_of_two() {
        return Err(MpkError::InvalidGrid(format!("points per axis must be a power of two >= 4, got {}", n)));
    }
    if !(half_extent > 0.0 && half_extent.is_finite()) {
        return Err(MpkError::InvalidGrid(format!("half extent must be positive, got {}", half_extent)));
    }
    if (n as f64).powi(dim as i32) > 1.0e9 {
        return Err(MpkError::InvalidGrid("grid too large".into()));
    }
    Ok(())
}

/// Relative L2 distance ||a - b|| / ||b|| of two sample vectors.
pub fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Relative L2 distance between the moduli.
pub fn relative_l2_modulus(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Relative L2 distance after removing the best global phase.
pub fn relative_l2_up_to_phase(a: &[C64], b: &[C64]) -> f64 {
    let inner: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { C64::new(1.0, 0.0) };
    let rotated: Vec<C64> = a.iter().map(|x| x * phase).collect();
    relative_l2(&rotated, b)
}

/// Apply `f` to every 1-D lane of a row-major array along `axis`.
pub(crate) fn for_each_lane<F>(data: &mut [C64], shape: &[usize], axis: usize, f: F)
where
    F: Fn(&mut [C64]) + Sync,
{
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let lanes = outer * stride;
    let mut buf = vec![C64::new(0.0, 0.0); lanes * len];
    for o in 0..outer {
        for i in 0..stride {
            let lane = o * stride + i;
            let base = o * len * stride + i;
            for k in 0..len {
                buf[lane * len + k] = data[base + k * stride];
            }
        }
    }
    buf.par_chunks_mut(len).for_each(|c| f(c));
    for o in 0..outer {
        for i in 0..stride {
            let lane = o * stride + i;
            let base = o * len * stride + i;
            for k in 0..len {
                data[base + k * stride] = buf[lane * len + k];
            }
        }
    }
}

pub(crate) fn for_each_lane_serial<F>(data: &mut [C64], shape: &[usize], axis: usize, mut f: F)
where
    F: FnMut(&mut [C64]),
{
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut buf = vec![C64::new(0.0, 0.0); len];
    for o in 0..outer {
        for i in 0..stride {
            let base = o * len * stride + i;
            for k in 0..len {
                buf[k] = data[base + k * stride];
            }
            f(&mut buf);
            for k in 0..len {
                data[base + k * stride] = buf[k];
            }
        }
    }
}

/// Band-limited upsampling by an integer factor along every axis.
/// The Nyquist bin of even-length lanes is split between +/- frequencies.
pub(crate) fn upsample(data: &[C64], shape: &[usize], factor: usize) -> (Vec<C64>, Vec<usize>) {
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..shape.len() {
        let m = cur_shape[axis];
        let big = m * factor;
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(big);
        let stride: usize = cur_shape[axis + 1..].iter().product();
        let outer: usize = cur_shape[..axis].iter().product();
        let mut new_shape = cur_shape.clone();
        new_shape[axis] = big;
        let mut out = vec![C64::new(0.0, 0.0); outer * big * stride];
        let lanes: Vec<Vec<C64>> = (0..outer * stride)
            .into_par_iter()
            .map(|lane| {
                let (o, i) = (lane / stride, lane % stride);
                let base = o * m * stride + i;
                let mut v: Vec<C64> = (0..m).map(|k| cur[base + k * stride]).collect();
                fwd.process(&mut v);
                let mut w = vec![C64::new(0.0, 0.0); big];
                let half = m / 2;
                for j in 0..half {
                    w[j] = v[j];
                }
                for j in half + 1..m {
                    w[big - m + j] = v[j];
                }
                if m % 2 == 0 {
                    w[half] = v[half] * 0.5;
                    w[big - half] = v[half] * 0.5;
                } else {
                    w[half] = v[half];
                }
                inv.process(&mut w);
                let s = 1.0 / m as f64;
                w.iter_mut().for_each(|z| *z *= s);
                w
            })
            .collect();
        for (lane, w) in lanes.into_iter().enumerate() {
            let (o, i) = (lane / stride, lane % stride);
            let base = o * big * stride + i;
            for (k, z) in w.into_iter().enumerate() {
                out[base + k * stride] = z;
            }
        }
        cur = out;
        cur_shape = new_shape;
    }
    (cur, cur_shape)
}

/// ∫ f(x) e^{2πi·sign·ξ·x} dx on the reciprocal grid (n, n/(4L)).
/// sign = -1 is the forward transform, +1 its inverse.
pub fn fourier_transform(f: &GridFunction, sign: i32) -> Result<GridFunction> {
    if sign != 1 && sign != -1 {
        return Err(MpkError::Parse(format!("sign must be +1 or -1, got {}", sign)));
    }
    let n = f.n;
    let h = f.spacing();
    let lf = f.frequency_half_extent();
    let s = sign as f64;
    // per-axis factor e^{2πi s L L'} (-1)^m h with pre-twiddle (-1)^k
    let global = C64::from_polar(h, 2.0 * std::f64::consts::PI * s * f.half_extent * lf);
    let mut data = f.samples.clone();
    let shape = f.shape();
    let mut planner = FftPlanner::<f64>::new();
    let plan = if sign < 0 { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
    for axis in 0..f.dim {
        for_each_lane(&mut data, &shape, axis, |lane| {
            for (k, z) in lane.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *z = -*z;
                }
            }
            plan.process(lane);
            for (m, z) in lane.iter_mut().enumerate() {
                *z *= if m % 2 == 1 { -global } else { global };
            }
        });
    }
    GridFunction::new(f.dim, n, lf, data)
}
