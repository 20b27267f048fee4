//! Riemann sums  h^r Σ_k g_k e^{-2πi η·u_k}  over uniform r-dimensional grids,
//! evaluated at arbitrary frequencies.

use crate::interp::cubic_eval;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// u_k = origin + k * step, k in [0, counts[a]) along each axis.
#[derive(Clone, Debug)]
pub(crate) struct UniformGrid {
    pub step: f64,
    pub counts: Vec<usize>,
    pub origin: Vec<f64>,
}

impl UniformGrid {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let r = self.counts.len();
        let mut u = vec![0.0; r];
        for a in (0..r).rev() {
            u[a] = self.origin[a] + (idx % self.counts[a]) as f64 * self.step;
            idx /= self.counts[a];
        }
        u
    }
}

const DIRECT_BUDGET: f64 = 5.0e7;
const FFT_BUDGET: usize = 1 << 24;

pub(crate) fn fourier_sum(samples: &[C64], grid: &UniformGrid, etas: &[Vec<f64>]) -> Vec<C64> {
    let k = grid.len() as f64;
    if k == 0.0 || etas.is_empty() {
        return vec![C64::new(0.0, 0.0); etas.len()];
    }
    let work = k * etas.len() as f64;
    if work <= DIRECT_BUDGET || grid.counts.len() > 3 {
        etas.par_iter().map(|eta| direct(samples, grid, eta)).collect()
    } else {
        via_fft(samples, grid, etas)
    }
}

fn phases(eta: f64, origin: f64, step: f64, count: usize) -> Vec<C64> {
    let w = C64::from_polar(1.0, -2.0 * PI * eta * step);
    let mut p = C64::from_polar(1.0, -2.0 * PI * eta * origin);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        // re-anchor periodically to keep the recurrence accurate
        if k % 64 == 0 && k > 0 {
            p = C64::from_polar(1.0, -2.0 * PI * eta * (origin + k as f64 * step));
        }
        out.push(p);
        p *= w;
    }
    out
}

fn direct(samples: &[C64], grid: &UniformGrid, eta: &[f64]) -> C64 {
    let r = grid.counts.len();
    // contract the last axis first
    let mut cur: Vec<C64> = samples.to_vec();
    for a in (0..r).rev() {
        let p = phases(eta[a], grid.origin[a], grid.step, grid.counts[a]);
        let m = grid.counts[a];
        let rows = cur.len() / m;
        let mut next = vec![C64::new(0.0, 0.0); rows];
        for (i, out) in next.iter_mut().enumerate() {
            let row = &cur[i * m..(i + 1) * m];
            let mut acc = C64::new(0.0, 0.0);
            for (g, ph) in row.iter().zip(&p) {
                acc += g * ph;
            }
            *out = acc;
        }
        cur = next;
    }
    cur[0] * grid.step.powi(r as i32)
}

fn via_fft(samples: &[C64], grid: &UniformGrid, etas: &[Vec<f64>]) -> Vec<C64> {
    let r = grid.counts.len();
    let k: usize = grid.len();
    let mut pad = 16usize;
    while pad > 4 && k * pad.pow(r as u32) > FFT_BUDGET {
        pad /= 2;
    }
    let shape: Vec<usize> = grid.counts.iter().map(|&c| c * pad).collect();
    let centers: Vec<usize> = grid.counts.iter().map(|&c| c / 2).collect();
    let total: usize = shape.iter().product();
    let mut data = vec![C64::new(0.0, 0.0); total];
    for (idx, g) in samples.iter().enumerate() {
        let mut rem = idx;
        let mut pos = vec![0usize; r];
        for a in (0..r).rev() {
            let kk = rem % grid.counts[a];
            rem /= grid.counts[a];
            let j = kk as isize - centers[a] as isize;
            pos[a] = j.rem_euclid(shape[a] as isize) as usize;
        }
        let flat = pos.iter().zip(&shape).fold(0, |acc, (&p, &s)| acc * s + p);
        data[flat] = *g;
    }
    let mut planner = FftPlanner::<f64>::new();
    for a in 0..r {
        let plan = planner.plan_fft_forward(shape[a]);
        crate::grid::for_each_lane(&mut data, &shape, a, |lane| plan.process(lane));
    }
    let center_u: Vec<f64> =
        (0..r).map(|a| grid.origin[a] + centers[a] as f64 * grid.step).collect();
    let scale = grid.step.powi(r as i32);
    etas.par_iter()
        .map(|eta| {
            let pos: Vec<f64> = (0..r)
                .map(|a| (eta[a] * shape[a] as f64 * grid.step).rem_euclid(shape[a] as f64))
                .collect();
            let v = cubic_eval(&data, &shape, &pos);
            let ph: f64 = (0..r).map(|a| eta[a] * center_u[a]).sum();
            v * C64::from_polar(scale, -2.0 * PI * ph)
        })
        .collect()
}
