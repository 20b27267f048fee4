//! Independent reference computations shared by the integration tests and
//! the acceptance target. Nothing here calls into the operator code paths
//! it is used to check.
#![allow(dead_code)]

use mpk::linalg::Mat;
use mpk::{Complex64 as C64, GridFunction, SymplecticMatrix};
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

pub fn rank_one_example() -> SymplecticMatrix {
    let e = Mat::from_row_slice(2, 2, &[-1.0, 2.0, -1.0, 1.0]);
    SymplecticMatrix::dilation(&e)
        .unwrap()
        .compose(&SymplecticMatrix::partial_fourier(&[false, true]))
        .unwrap()
}

pub fn rank_one_example_input(n: usize, l: f64) -> GridFunction {
    GridFunction::from_fn(2, n, l, |p| C64::new(bump(p[0]) * (-2.0 * PI * p[1] * p[1]).exp(), 0.0)).unwrap()
}

/// c·|φ(−ξ+2η)| e^{−π(−ξ+η)²/2} on the grid.
pub fn rank_one_example_modulus(n: usize, l: f64, c: f64) -> Vec<f64> {
    let g = GridFunction::zeros(2, n, l).unwrap();
    (0..g.len())
        .map(|i| {
            let p = g.point(i);
            let (xi, eta) = (p[0], p[1]);
            c * bump(-xi + 2.0 * eta) * (-PI * (-xi + eta).powi(2) / 2.0).exp()
        })
        .collect()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn modulus(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.norm()).collect()
}

/// Gaussian e^{-π (x−c)·G(x−c)} with a linear chirp, evaluated in closed form.
#[derive(Clone, Debug)]
pub struct Gaussian {
    pub g: Mat,
    pub center: Vec<f64>,
    pub chirp: Vec<f64>,
}

impl Gaussian {
    pub fn eval(&self, x: &[f64]) -> C64 {
        let d = x.len();
        let y: Vec<f64> = (0..d).map(|j| x[j] - self.center[j]).collect();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += y[i] * self.g[(i, j)] * y[j];
            }
        }
        let ph: f64 = (0..d).map(|j| self.chirp[j] * x[j]).sum();
        C64::from_polar((-PI * q).exp(), 2.0 * PI * ph)
    }

    pub fn grid(&self, n: usize, l: f64) -> GridFunction {
        GridFunction::from_fn(self.center.len(), n, l, |x| self.eval(x)).unwrap()
    }
}

/// |Ŝf(ξ)| for d = 2, rank B = 1, from
/// μ |∫_{ker B^⊥} f(t + Dᵀξ) e^{iπ B⁺A t·t} e^{2πi Cᵀξ·t} dt|
/// with μ = (|Aᵀw| σ1)^{-1/2}, w ⟂ R(B), by a Riemann sum in the line parameter.
pub fn rank_one_oracle(s: &SymplecticMatrix, f: &Gaussian, xis: &[Vec<f64>], step: f64, reach: f64) -> Vec<f64> {
    let (a, b, c, d) = (s.a(), s.b(), s.c(), s.d());
    let sigma = b.norm();
    // B = σ u vᵀ: u is any nonzero column normalised, v = Bᵀu/σ
    let j = if b.column(0).norm() >= b.column(1).norm() { 0 } else { 1 };
    let cn = b.column(j).norm();
    let u = [b[(0, j)] / cn, b[(1, j)] / cn];
    let v = [(b[(0, 0)] * u[0] + b[(1, 0)] * u[1]) / sigma, (b[(0, 1)] * u[0] + b[(1, 1)] * u[1]) / sigma];
    let w = [-u[1], u[0]];
    let atw = [a[(0, 0)] * w[0] + a[(1, 0)] * w[1], a[(0, 1)] * w[0] + a[(1, 1)] * w[1]];
    let q = (atw[0] * atw[0] + atw[1] * atw[1]).sqrt();
    let mu = 1.0 / (q * sigma).sqrt();
    // B⁺ = v uᵀ / σ, so v·B⁺A v = (u·Av)/σ
    let av = [a[(0, 0)] * v[0] + a[(0, 1)] * v[1], a[(1, 0)] * v[0] + a[(1, 1)] * v[1]];
    let kappa = (u[0] * av[0] + u[1] * av[1]) / sigma;
    let m = (reach / step).ceil() as i64;
    xis.iter()
        .map(|xi| {
            let dt = [d[(0, 0)] * xi[0] + d[(1, 0)] * xi[1], d[(0, 1)] * xi[0] + d[(1, 1)] * xi[1]];
            let ctxi = [c[(0, 0)] * xi[0] + c[(1, 0)] * xi[1], c[(0, 1)] * xi[0] + c[(1, 1)] * xi[1]];
            let lin = ctxi[0] * v[0] + ctxi[1] * v[1];
            // centre the integration window on the Gaussian's nearest point along the line
            let s0 = (f.center[0] - dt[0]) * v[0] + (f.center[1] - dt[1]) * v[1];
            let mut acc = C64::new(0.0, 0.0);
            for k in -m..=m {
                let sp = s0 + k as f64 * step;
                let x = [sp * v[0] + dt[0], sp * v[1] + dt[1]];
                acc += f.eval(&x) * C64::from_polar(1.0, PI * kappa * sp * sp + 2.0 * PI * lin * sp);
            }
            mu * acc.norm() * step
        })
        .collect()
}

/// |Ŝf(ξ)| for invertible B from |det B|^{-1/2} |∫ f(t) e^{iπB⁻¹A t·t} e^{−2πi B⁻¹ξ·t} dt|,
/// Riemann sum over a box.
pub fn free_oracle(s: &SymplecticMatrix, f: &Gaussian, xis: &[Vec<f64>], step: f64, reach: f64) -> Vec<f64> {
    let d = s.dim();
    let b = s.b();
    let binv = b.clone().try_inverse().unwrap();
    let k = &binv * s.a();
    let amp = b.determinant().abs().powf(-0.5);
    let m = (reach / step).ceil() as i64;
    let count = (2 * m + 1) as usize;
    let total = count.pow(d as u32);
    let nodes: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut t = vec![0.0; d];
            for j in (0..d).rev() {
                t[j] = f.center[j] + ((idx % count) as i64 - m) as f64 * step;
                idx /= count;
            }
            t
        })
        .collect();
    let vals: Vec<(C64, Vec<f64>)> = nodes
        .iter()
        .map(|t| {
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += t[i] * k[(i, j)] * t[j];
                }
            }
            (f.eval(t) * C64::from_polar(1.0, PI * q), t.clone())
        })
        .collect();
    xis.iter()
        .map(|xi| {
            let y: Vec<f64> = (0..d).map(|i| (0..d).map(|j| binv[(i, j)] * xi[j]).sum()).collect();
            let mut acc = C64::new(0.0, 0.0);
            for (g, t) in &vals {
                let ph: f64 = (0..d).map(|j| y[j] * t[j]).sum();
                acc += g * C64::from_polar(1.0, -2.0 * PI * ph);
            }
            amp * acc.norm() * step.powi(d as i32)
        })
        .collect()
}

/// Strang splitting for i ∂t u = −(1/4π) ∂²u + π y² u on a periodic grid of n
/// points over [−L, L).
pub fn split_step(u0: &[C64], l: f64, t: f64, dt: f64) -> Vec<C64> {
    let n = u0.len();
    let h = 2.0 * l / n as f64;
    let steps = (t / dt).round() as usize;
    let dt = t / steps as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let half_pot: Vec<C64> = (0..n)
        .map(|k| {
            let y = -l + k as f64 * h;
            C64::from_polar(1.0, -PI * y * y * dt / 2.0)
        })
        .collect();
    let kin: Vec<C64> = (0..n)
        .map(|k| {
            let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            let freq = kk / (2.0 * l);
            // −(1/4π)∂² ↦ (1/4π)(2π ν)² = π ν²
            C64::from_polar(1.0, -PI * freq * freq * dt)
        })
        .collect();
    let mut u = u0.to_vec();
    for _ in 0..steps {
        for (z, p) in u.iter_mut().zip(&half_pot) {
            *z *= p;
        }
        fwd.process(&mut u);
        for (z, p) in u.iter_mut().zip(&kin) {
            *z *= p / n as f64;
        }
        inv.process(&mut u);
        for (z, p) in u.iter_mut().zip(&half_pot) {
            *z *= p;
        }
    }
    u
}

/// Generate the extremal function for (S, M), push it through Ŝ, fit Gaussian
/// envelopes on both sides and return the Hardy eigenvalues of the fitted pair.
pub fn extremal_round_trip(s: &SymplecticMatrix, m: &Mat, n: usize, l: f64, conv: mpk::hardy::PhaseConvention) -> Vec<f64> {
    use mpk::hardy::{extremal_function, fit_gaussian_decay, hardy_eigenvalues};
    use mpk::symplectic::subspace_bases;
    let tol = mpk::Tolerances::default();
    let rank_tol = s.default_rank_tol();
    let sb = subspace_bases(&s.b(), rank_tol);
    let f = extremal_function(
        s,
        m,
        |w: &[f64]| C64::new((-PI * w.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0),
        s.dim(),
        n,
        l,
        conv,
        &tol,
    )
    .unwrap();
    let out = mpk::metaplectic::apply_metaplectic(s, &f, &tol).unwrap().grid;
    let mf = fit_gaussian_decay(&f, &sb.kernel_perp).unwrap();
    let nf = fit_gaussian_decay(&out, &sb.range).unwrap();
    let to = |rows: &Vec<Vec<f64>>| mpk::linalg::from_rows(rows).unwrap();
    hardy_eigenvalues(&to(&mf.m_fit), &to(&nf.m_fit), s, rank_tol).unwrap()
}
