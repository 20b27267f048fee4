//! Off-grid evaluation: fourfold band-limited upsampling followed by
//! tensor-product cubic Lagrange interpolation.

use crate::grid::{upsample, GridFunction};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub const UPSAMPLE: usize = 4;

pub fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Cubic stencil evaluation of a periodic row-major array at fractional
/// indices `pos`; zero when any index lies outside [0, m).
pub(crate) fn cubic_eval(data: &[C64], shape: &[usize], pos: &[f64]) -> C64 {
    let d = shape.len();
    let mut base = [0isize; 8];
    let mut w = [[0.0; 4]; 8];
    for a in 0..d {
        let p = pos[a];
        if !(p >= 0.0 && p < shape[a] as f64) {
            return C64::new(0.0, 0.0);
        }
        let i0 = p.floor();
        base[a] = i0 as isize;
        w[a] = cubic_weights(p - i0);
    }
    let mut acc = C64::new(0.0, 0.0);
    let combos = 4usize.pow(d as u32);
    for c in 0..combos {
        let mut rem = c;
        let mut flat = 0usize;
        let mut weight = 1.0;
        for a in 0..d {
            let o = rem % 4;
            rem /= 4;
            let m = shape[a] as isize;
            let k = (base[a] + o as isize - 1).rem_euclid(m) as usize;
            flat = flat * shape[a] + k;
            weight *= w[a][o];
        }
        acc += data[flat] * weight;
    }
    acc
}

/// Band-limited interpolant of a grid function.
#[derive(Clone, Debug)]
pub struct BandLimited {
    dim: usize,
    half_extent: f64,
    fine_step: f64,
    shape: Vec<usize>,
    fine: Vec<C64>,
}

impl BandLimited {
    pub fn new(f: &GridFunction) -> Self {
        assert!(f.dim() <= 8, "interpolation supports d <= 8");
        let (fine, shape) = upsample(f.samples(), &f.shape(), UPSAMPLE);
        BandLimited {
            dim: f.dim(),
            half_extent: f.half_extent(),
            fine_step: f.spacing() / UPSAMPLE as f64,
            shape,
            fine,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let mut pos = [0.0; 8];
        for a in 0..self.dim {
            pos[a] = (x[a] + self.half_extent) / self.fine_step;
        }
        cubic_eval(&self.fine, &self.shape, &pos[..self.dim])
    }

    pub fn eval_many(&self, points: &[Vec<f64>]) -> Vec<C64> {
        points.par_iter().map(|p| self.eval(p)).collect()
    }
}
