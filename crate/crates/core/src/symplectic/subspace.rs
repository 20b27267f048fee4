use super::SymplecticMatrix;
use crate::error::{MpkError, Result};
use crate::linalg::{self, Mat, Vector};

/// Orthonormal basis of a subspace of R^d, stored column-wise (d x k).
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    pub basis: Mat,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }
    pub fn projector(&self) -> Mat {
        linalg::projector(&self.basis)
    }
    pub fn from_columns(cols: &Mat) -> Self {
        // re-orthonormalise
        let d = cols.nrows();
        if cols.ncols() == 0 {
            return SubspaceBasis { basis: Mat::zeros(d, 0) };
        }
        let q = cols.clone().qr().q();
        SubspaceBasis { basis: q.columns(0, cols.ncols()).into_owned() }
    }
}

/// Kernel, range and their complements of a square matrix, from one SVD.
#[derive(Clone, Debug)]
pub struct SubspaceBases {
    pub rank: usize,
    pub tol: f64,
    pub singular_values: Vec<f64>,
    pub kernel: SubspaceBasis,
    pub kernel_perp: SubspaceBasis,
    pub range: SubspaceBasis,
    pub range_perp: SubspaceBasis,
}

pub fn subspace_bases(b: &Mat, tol: f64) -> SubspaceBases {
    let d = b.nrows();
    let s = linalg::svd(b);
    let r = s.sigma.iter().filter(|&&x| x > tol).count();
    SubspaceBases {
        rank: r,
        tol,
        kernel: SubspaceBasis { basis: s.v.columns(r, d - r).into_owned() },
        kernel_perp: SubspaceBasis { basis: s.v.columns(0, r).into_owned() },
        range: SubspaceBasis { basis: s.u.columns(0, r).into_owned() },
        range_perp: SubspaceBasis { basis: s.u.columns(r, d - r).into_owned() },
        singular_values: s.sigma,
    }
}

pub fn pseudo_inverse(b: &Mat, tol: f64) -> Mat {
    linalg::pinv(b, tol)
}

/// k-dimensional volume of the image of the unit cube of L under E:
/// sqrt(det((E V)ᵀ(E V))) for an orthonormal basis V of L.
pub fn simplex_volume(l: &SubspaceBasis, e: &Mat) -> Result<f64> {
    if l.dim() == 0 {
        return Ok(1.0);
    }
    let ev = e * &l.basis;
    let sv = linalg::singular_values(&(ev.transpose() * &ev));
    let lo = sv.last().copied().unwrap_or(0.0);
    let scale = linalg::spectral_norm(e).max(1.0);
    if lo.sqrt() <= 1e-12 * scale {
        return Err(MpkError::DimensionCollapse);
    }
    let g = ev.transpose() * ev;
    Ok(g.determinant().max(0.0).sqrt())
}

/// Normalising constant of the integral representation:
/// (q_{R(B)^⊥}(Aᵀ) * product of nonzero singular values of B)^(-1/2).
pub fn mu_s(s: &SymplecticMatrix, tol: f64) -> Result<f64> {
    let sb = subspace_bases(&s.b(), tol);
    if sb.rank == 0 {
        return Err(MpkError::RankZero);
    }
    let q = match simplex_volume(&sb.range_perp, &s.a().transpose()) {
        Ok(q) => q,
        Err(_) => return Err(MpkError::DegenerateGeometry { volume: 0.0 }),
    };
    if q <= 1e-12 {
        return Err(MpkError::DegenerateGeometry { volume: q });
    }
    Ok((q * sigma_product(&s.b(), tol)).powf(-0.5))
}

/// Product of the singular values of B above tol (1 when B = 0).
pub fn sigma_product(b: &Mat, tol: f64) -> f64 {
    linalg::singular_values(b).iter().filter(|&&x| x > tol).product()
}

/// Largest singular value of B.
pub fn sigma_max(b: &Mat) -> f64 {
    linalg::spectral_norm(b)
}

fn split_matrix(first: &Mat, second: &Mat) -> Result<(Mat, f64)> {
    let d = first.nrows();
    let mut m = Mat::zeros(d, d);
    m.view_mut((0, 0), (d, first.ncols())).copy_from(first);
    m.view_mut((0, first.ncols()), (d, second.ncols())).copy_from(second);
    let cond = linalg::condition_number(&m);
    if !(cond <= 1e10) {
        return Err(MpkError::IllConditionedSplit { condition: cond });
    }
    let inv = m.try_inverse().ok_or(MpkError::IllConditionedSplit { condition: cond })?;
    Ok((inv, cond))
}

/// Splitting R^d = R(B) ⊕ A(ker B) of the output variable.
#[derive(Clone, Debug)]
pub struct OutputSplit {
    pub bases: SubspaceBases,
    /// Orthonormal basis of R(B), d x r.
    pub range: Mat,
    /// A applied to an orthonormal basis of ker B, d x (d - r).
    pub a_kernel: Mat,
    inv: Mat,
    pub condition: f64,
}

impl OutputSplit {
    pub fn new(s: &SymplecticMatrix, tol: f64) -> Result<Self> {
        let bases = subspace_bases(&s.b(), tol);
        let range = bases.range.basis.clone();
        let a_kernel = s.a() * &bases.kernel.basis;
        let (inv, condition) = split_matrix(&range, &a_kernel)?;
        Ok(OutputSplit { bases, range, a_kernel, inv, condition })
    }

    pub fn rank(&self) -> usize {
        self.bases.rank
    }

    /// Coordinates (c1, c2) with xi = range * c1 + a_kernel * c2.
    pub fn coords(&self, xi: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.inv, xi)
    }

    pub fn split(&self, xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.coords(xi);
        let r = self.rank();
        let c1 = Vector::from_column_slice(&c[..r]);
        let xi1: Vec<f64> = (&self.range * c1).iter().copied().collect();
        let xi2 = xi.iter().zip(&xi1).map(|(a, b)| a - b).collect();
        (xi1, xi2)
    }
}

pub fn decompose_output(s: &SymplecticMatrix, xi: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if xi.len() != s.dim() {
        return Err(MpkError::DimensionMismatch { expected: s.dim(), found: xi.len() });
    }
    Ok(OutputSplit::new(s, tol)?.split(xi))
}

/// Splitting R^d = (ker B)^⊥ ⊕ DᵀA(ker B) of the input variable.
#[derive(Clone, Debug)]
pub struct InputSplit {
    pub kernel_perp: Mat,
    pub dta_kernel: Mat,
    inv: Mat,
    rank: usize,
}

impl InputSplit {
    pub fn new(s: &SymplecticMatrix, tol: f64) -> Result<Self> {
        let bases = subspace_bases(&s.b(), tol);
        let kernel_perp = bases.kernel_perp.basis.clone();
        let dta_kernel = s.d().transpose() * s.a() * &bases.kernel.basis;
        let (inv, _) = split_matrix(&kernel_perp, &dta_kernel)?;
        Ok(InputSplit { kernel_perp, dta_kernel, inv, rank: bases.rank })
    }

    pub fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = linalg::matvec(&self.inv, x);
        let c1 = Vector::from_column_slice(&c[..self.rank]);
        let x1: Vec<f64> = (&self.kernel_perp * c1).iter().copied().collect();
        let x2 = x.iter().zip(&x1).map(|(a, b)| a - b).collect();
        (x1, x2)
    }
}

pub fn decompose_input(s: &SymplecticMatrix, x: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != s.dim() {
        return Err(MpkError::DimensionMismatch { expected: s.dim(), found: x.len() });
    }
    Ok(InputSplit::new(s, tol)?.split(x))
}

/// For x in ker B: x = (-BᵀC x) + (DᵀA x), the two pieces lying in
/// (ker B)^⊥ and DᵀA(ker B) respectively.
pub fn constructive_kernel_split(s: &SymplecticMatrix, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let btc = s.b().transpose() * s.c();
    let dta = s.d().transpose() * s.a();
    let x1 = linalg::matvec(&btc, x).into_iter().map(|v| -v).collect();
    (x1, linalg::matvec(&dta, x))
}
