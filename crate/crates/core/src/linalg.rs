//! Small dense linear-algebra helpers on top of nalgebra.

use faer::linalg::solvers::SolveLstsq;
use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Full SVD with singular values sorted in decreasing order.
pub struct SortedSvd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

pub fn svd(m: &Mat) -> SortedSvd {
    let (rows, cols) = m.shape();
    assert_eq!(rows, cols, "svd helper expects a square matrix");
    let n = rows;
    if n == 0 {
        return SortedSvd { u: Mat::zeros(0, 0), sigma: vec![], v: Mat::zeros(0, 0) };
    }
    // nalgebra's bidiagonal SVD loses accuracy on exactly rank-deficient input
    let s = to_faer(m).svd().expect("svd did not converge");
    let (u, v, d) = (s.U(), s.V(), s.S().column_vector());
    SortedSvd {
        u: Mat::from_fn(n, n, |i, j| u[(i, j)]),
        sigma: (0..n).map(|k| d[k]).collect(),
        v: Mat::from_fn(n, n, |i, j| v[(i, j)]),
    }
}

/// Least-squares solution of a x = b (a with full column rank, rows ≥ cols).
pub fn lstsq(a: &Mat, b: &Mat) -> Mat {
    let x = to_faer(a).col_piv_qr().solve_lstsq(to_faer(b));
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)])
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s = to_faer(m).singular_values().expect("svd did not converge");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn rank(m: &Mat, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > tol).count()
}

/// Largest absolute entry of M - Mᵀ relative to max(1, largest entry).
pub fn asymmetry(m: &Mat) -> f64 {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() / scale
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn pinv(m: &Mat, tol: f64) -> Mat {
    let s = svd(m);
    let n = m.nrows();
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        if s.sigma[k] > tol {
            let v = s.v.column(k);
            let u = s.u.column(k);
            out += (v * u.transpose()) / s.sigma[k];
        }
    }
    out
}

pub fn condition_number(m: &Mat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

pub fn projector(basis: &Mat) -> Mat {
    basis * basis.transpose()
}

/// Orthonormal basis of the orthogonal complement of span(basis) in R^d.
pub fn complement(basis: &Mat, d: usize) -> Mat {
    let p = Mat::identity(d, d) - projector(basis);
    let s = svd(&p);
    let k = d - basis.ncols();
    s.u.columns(0, k).into_owned()
}

/// max over columns y of M·U of ||(I - P)y||, scaled by max(1, ||M||).
pub fn inclusion_residual(map: &Mat, source: &Mat, target: &Mat) -> f64 {
    if source.ncols() == 0 {
        return 0.0;
    }
    let d = target.nrows();
    let y = map * source;
    let r = (Mat::identity(d, d) - projector(target)) * y;
    let worst = r.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    worst / spectral_norm(map).max(1.0)
}

/// Spectral distance between the orthogonal projectors of two subspaces
/// (sine of the largest principal angle). Unequal dimensions give 1.
pub fn subspace_distance(a: &Mat, b: &Mat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    spectral_norm(&(projector(a) - projector(b)))
}

/// Symmetric eigen-decomposition, eigenvalues in decreasing order.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], Mat::zeros(0, 0));
    }
    let e = to_faer(&symmetrize(m)).self_adjoint_eigen(faer::Side::Lower).expect("eigensolver did not converge");
    let (u, d) = (e.U(), e.S().column_vector());
    // faer sorts ascending
    let vals = (0..n).rev().map(|k| d[k]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    (vals, vecs)
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn psd_project(m: &Mat) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let n = m.nrows();
    let mut out = Mat::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(k);
            out += v * v.transpose() * l;
        }
    }
    out
}

/// Symmetric square root of a PSD matrix.
pub fn sqrt_psd(m: &Mat) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let n = m.nrows();
    let mut out = Mat::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        let v = vecs.column(k);
        out += v * v.transpose() * l.max(0.0).sqrt();
    }
    out
}

pub fn from_rows(rows: &[Vec<f64>]) -> crate::Result<Mat> {
    crate::symplectic::rows_to_mat(rows)
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Mat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn quad(m: &Mat, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * x[j];
        }
        s += x[i] * row;
    }
    s
}

pub fn matvec(m: &Mat, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}
