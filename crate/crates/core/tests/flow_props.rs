mod common;

use common::*;
use mpk::corpus::{corpus_hamiltonians, seeded};
use mpk::flow::{flow, oscillator_blocks, propagate, QuadraticHamiltonian};
use mpk::grid::relative_l2_modulus;
use mpk::linalg::Mat;
use mpk::metaplectic::rescale;
use mpk::{fourier_transform, Complex64 as C64, GridFunction, Tolerances};
use rand::Rng;
use std::f64::consts::PI;

fn max_block_err(h: &QuadraticHamiltonian, t: f64, want: (Mat, Mat, Mat, Mat)) -> f64 {
    let fs = flow(h, t).unwrap();
    let (a, b, c, d) = fs.blocks();
    [(a - want.0), (b - want.1), (c - want.2), (d - want.3)].iter().map(|m| m.amax()).fold(0.0, f64::max)
}

#[test]
fn group_law_and_symplecticity() {
    let mut rng = seeded(4);
    for h in corpus_hamiltonians(&mut rng) {
        for _ in 0..20 {
            let t = rng.random_range(-5.0..5.0);
            let s = rng.random_range(-5.0..5.0);
            let st = flow(&h, t).unwrap().s;
            let ss = flow(&h, s).unwrap().s;
            let sts = flow(&h, t + s).unwrap().s;
            assert!(st.residual() < 1e-9);
            let err = (sts.matrix() - st.matrix() * ss.matrix()).amax();
            assert!(err < 1e-9, "{err:.3e}");
        }
    }
}

#[test]
fn oscillator_oracle_dense() {
    for (omega, m) in [(vec![1.0], 0.5), (vec![1.0, 2.0], 1.0), (vec![1.0, 3.0], 2.0)] {
        let h = QuadraticHamiltonian::harmonic_oscillator(&omega, m).unwrap();
        let worst = (0..1000)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 999.0;
                max_block_err(&h, t, oscillator_blocks(&omega, m, t))
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-11, "{worst:.3e}");
    }
    let (a, b, _, d) = oscillator_blocks(&[1.0, 2.0], 1.0, PI);
    assert!(b.amax() < 1e-15 && (a[(0, 0)] + 1.0).abs() < 1e-15 && (d[(1, 1)] - 1.0).abs() < 1e-15);
}

#[test]
fn anisotropic_blocks() {
    let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
    for k in 0..200 {
        let t = 2.0 * PI * k as f64 / 199.0;
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, t.cos()]);
        let b = Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, t.sin()]);
        assert!(max_block_err(&h, t, (a.clone(), b.clone(), -b, a)) < 1e-12);
    }
}

fn profile_input(n: usize, l: f64, y0: f64, width: f64) -> GridFunction {
    GridFunction::from_fn(2, n, l, |p| C64::new(bump(p[0]) * (-PI * width * (p[1] - y0).powi(2)).exp(), 0.0)).unwrap()
}

#[test]
fn ground_state_profile_is_stationary() {
    let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
    let u0 = profile_input(256, 8.0, 0.0, 1.0);
    for t in [0.0, 0.4, 1.3, 2.9] {
        let u = propagate(&u0, &h, t, &Tolerances::default()).unwrap().grid;
        assert!(relative_l2_modulus(u.samples(), u0.samples()) < 1e-4);
        assert!((u.norm_l2() - u0.norm_l2()).abs() < 1e-5 * u0.norm_l2());
    }
}

#[test]
fn split_step_oracle() {
    let (n, l) = (256, 8.0);
    let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
    // displaced, squeezed packet: moves and breathes in y, static in x
    let u0 = profile_input(n, l, 1.0, 2.0);
    let g = GridFunction::zeros(1, n, l).unwrap();
    let v0: Vec<C64> = (0..n).map(|k| C64::new((-2.0 * PI * (g.coord(k) - 1.0).powi(2)).exp(), 0.0)).collect();
    for t in [0.3, 1.0, 2.5] {
        let u = propagate(&u0, &h, t, &Tolerances::default()).unwrap().grid;
        let v = split_step(&v0, l, t, 1e-3);
        let want: Vec<f64> = (0..n * n).map(|i| bump(u.coord(i / n)) * v[i % n].norm()).collect();
        let err = rel_l2(&modulus(u.samples()), &want);
        assert!(err < 1e-3, "t={t} err={err:.3e}");
    }
}

#[test]
fn quarter_period_is_rescaled_fourier() {
    let h = QuadraticHamiltonian::harmonic_oscillator(&[1.0], 0.5).unwrap();
    let u0 = GridFunction::from_fn(1, 256, 8.0, |x| C64::from_polar((-PI * 1.5 * (x[0] - 0.4).powi(2)).exp(), 0.7 * x[0]))
        .unwrap();
    let u = propagate(&u0, &h, PI / 2.0, &Tolerances::default()).unwrap().grid;
    // S = [[0, 2], [-1/2, 0]] = J ∘ D with |Ŝf(ξ)| = |rescale(f̂, 1/2)(ξ)|
    let ft = fourier_transform(&u0, -1).unwrap();
    let want = rescale(&ft, &Mat::from_element(1, 1, 0.5)).unwrap().grid;
    assert!(relative_l2_modulus(u.samples(), want.samples()) < 1e-5);
}

#[test]
fn propagate_at_zero_is_identity() {
    let h = QuadraticHamiltonian::harmonic_oscillator(&[1.0, 2.0], 1.0).unwrap();
    let u0 = profile_input(64, 4.0, 0.3, 1.0);
    let u = propagate(&u0, &h, 0.0, &Tolerances::default()).unwrap().grid;
    assert_eq!(u.samples(), u0.samples());
}
