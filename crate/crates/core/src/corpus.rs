//! Seeded random test material: generator products, rank-deficient symplectic
//! matrices, PSD matrices, valid (S, M, N) triples and Hamiltonians.

use crate::flow::QuadraticHamiltonian;
use crate::linalg::{self, Mat};
use crate::symplectic::{make_generator, subspace_bases, Generator, SymplecticMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize, lo: f64, hi: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(lo..hi))
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> Mat {
    let g = uniform(rng, d, d, -scale, scale);
    (&g + g.transpose()) * 0.5
}

fn rotation<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat {
    let g = uniform(rng, d, d, -1.0, 1.0);
    let q = g.qr().q();
    q
}

/// Orthogonal · diag(s) · orthogonal with s ∈ [1/smax, smax].
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, d: usize, smax: f64) -> Mat {
    let l = smax.ln();
    let s = Mat::from_diagonal(&linalg::Vector::from_fn(d, |_, _| rng.random_range(-l..l).exp()));
    rotation(rng, d) * s * rotation(rng, d)
}

pub fn random_generator<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Generator {
    match rng.random_range(0..6) {
        0 => Generator::J { d },
        1 => Generator::Chirp { q: linalg::to_rows(&random_symmetric(rng, d, 0.5)) },
        2 => Generator::Dilation { e: linalg::to_rows(&random_invertible(rng, d, 1.3)) },
        3 => Generator::Multiplier { p: linalg::to_rows(&random_symmetric(rng, d, 0.5)) },
        4 => Generator::FractionalFourier { theta: (0..d).map(|_| rng.random_range(0.0..PI)).collect() },
        _ => {
            let mut mask: Vec<bool> = (0..d).map(|_| rng.random_bool(0.5)).collect();
            if mask.iter().all(|&m| !m) {
                mask[0] = true;
            }
            Generator::PartialFourier { mask }
        }
    }
}

pub fn random_generator_product<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    len: usize,
) -> (Vec<Generator>, SymplecticMatrix) {
    let gens: Vec<Generator> = (0..len.max(1)).map(|_| random_generator(rng, d)).collect();
    let mut s = SymplecticMatrix::identity(d);
    for g in &gens {
        s = s.compose(&make_generator(g).expect("corpus generator")).expect("corpus product");
    }
    (gens, s)
}

/// D_{E1} V_{Q1} · Π_mask · D_{E2} V_{Q2}; B = E1⁻¹ diag(mask) E2ᵀ has rank r.
pub fn random_rank_deficient<R: Rng + ?Sized>(rng: &mut R, d: usize, r: usize) -> SymplecticMatrix {
    assert!(r <= d);
    let mut mask = vec![false; d];
    let mut idx: Vec<usize> = (0..d).collect();
    for k in 0..r {
        let j = rng.random_range(k..d);
        idx.swap(k, j);
        mask[idx[k]] = true;
    }
    let mut lower = || -> SymplecticMatrix {
        let e = SymplecticMatrix::dilation(&random_invertible(rng, d, 1.5)).unwrap();
        let q = SymplecticMatrix::chirp(&random_symmetric(rng, d, 0.6)).unwrap();
        e.compose(&q).unwrap()
    };
    let l1 = lower();
    let l2 = lower();
    l1.compose(&SymplecticMatrix::partial_fourier(&mask)).unwrap().compose(&l2).unwrap()
}

/// Random PSD matrix of the given rank with eigenvalues in [lo, hi].
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize, lo: f64, hi: f64) -> Mat {
    let q = rotation(rng, d);
    let u = q.columns(0, rank).into_owned();
    psd_on(rng, &u, lo, hi)
}

/// U G Uᵀ with G positive definite on the column span of an orthonormal U.
pub fn psd_on<R: Rng + ?Sized>(rng: &mut R, u: &Mat, lo: f64, hi: f64) -> Mat {
    let k = u.ncols();
    let q = rotation(rng, k.max(1)).columns(0, k).rows(0, k).into_owned();
    let ev = Mat::from_diagonal(&linalg::Vector::from_fn(k, |_, _| rng.random_range(lo..hi)));
    linalg::symmetrize(&(u * q.clone() * ev * q.transpose() * u.transpose()))
}

/// (S, M, N) with ker M = ker B and R(N) = R(B), rank B = r.
pub fn random_valid_triple<R: Rng + ?Sized>(rng: &mut R, d: usize, r: usize) -> (SymplecticMatrix, Mat, Mat) {
    let s = random_rank_deficient(rng, d, r);
    let sb = subspace_bases(&s.b(), s.default_rank_tol());
    let m = psd_on(rng, &sb.kernel_perp.basis, 0.2, 2.0);
    let n = psd_on(rng, &sb.range.basis, 0.2, 2.0);
    (s, m, n)
}

/// Oscillators, the anisotropic preset and a few random symmetric ℳ.
pub fn corpus_hamiltonians<R: Rng + ?Sized>(rng: &mut R) -> Vec<QuadraticHamiltonian> {
    let mut out = vec![
        QuadraticHamiltonian::anisotropic_oscillator_2d(),
        QuadraticHamiltonian::harmonic_oscillator(&[1.0], 1.0).unwrap(),
        QuadraticHamiltonian::harmonic_oscillator(&[1.0, 2.0], 0.5).unwrap(),
        QuadraticHamiltonian::harmonic_oscillator(&[1.0, 3.0], 2.0).unwrap(),
    ];
    for d in [1, 2, 3] {
        out.push(QuadraticHamiltonian::new(random_symmetric(rng, 2 * d, 1.0)).unwrap());
    }
    out
}
