use super::{standard_j, subspace_bases, SymplecticMatrix, TAU_SYMP};
use crate::linalg::{self, Mat};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct RelationTerm {
    pub relation: String,
    pub residual: f64,
    /// Smallest singular value of the restricted map, for isomorphism claims.
    pub min_singular_value: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockRelationReport {
    pub relation_id: String,
    pub reference: String,
    pub terms: Vec<RelationTerm>,
    pub residual: f64,
    pub satisfied: bool,
}

// (id, reference, three relation texts)
const ROWS: [(&str, &str, [&str; 3]); 8] = [
    ("i", "S", ["D^T(R(B)) in ker(B)^perp", "D: ker(B) -> R(B)^perp iso", "R(B)^perp in R(D)"]),
    ("ii", "SJ", ["C^T(R(A)) in ker(A)^perp", "C: ker(A) -> R(A)^perp iso", "R(A)^perp in R(C)"]),
    ("iii", "JS", ["B^T(R(D)) in ker(D)^perp", "B: ker(D) -> R(D)^perp iso", "R(D)^perp in R(B)"]),
    ("iv", "JSJ", ["A^T(R(C)) in ker(C)^perp", "A: ker(C) -> R(C)^perp iso", "R(C)^perp in R(A)"]),
    ("v", "S^-1", ["A(ker(B)^perp) in R(B)", "A^T: R(B)^perp -> ker(B) iso", "ker(B) in ker(A)^perp"]),
    ("vi", "S^-1 J", ["C(ker(D)^perp) in R(D)", "C^T: R(D)^perp -> ker(D) iso", "ker(D) in ker(C)^perp"]),
    ("vii", "J S^-1", ["B(ker(A)^perp) in R(A)", "B^T: R(A)^perp -> ker(A) iso", "ker(A) in ker(B)^perp"]),
    ("viii", "J S^-1 J", ["D(ker(C)^perp) in R(C)", "D^T: R(C)^perp -> ker(C) iso", "ker(C) in ker(D)^perp"]),
];

/// The three relations for a reference matrix [[A', B'], [C', D']]:
/// D'ᵀ(R(B')) ⊆ ker(B')^⊥, D': ker(B') → R(B')^⊥ bijective, R(B')^⊥ ⊆ R(D').
fn three_relations(r: &Mat, d: usize, tol: f64) -> [(f64, Option<f64>); 3] {
    let b = r.view((0, d), (d, d)).into_owned();
    let dd = r.view((d, d), (d, d)).into_owned();
    let sb = subspace_bases(&b, tol);
    let first = linalg::inclusion_residual(&dd.transpose(), &sb.range.basis, &sb.kernel_perp.basis);

    let w = &sb.kernel.basis;
    let z = &sb.range_perp.basis;
    let second = if w.ncols() == 0 {
        (0.0, None)
    } else {
        let restricted = z.transpose() * &dd * w;
        let smin = linalg::singular_values(&restricted).last().copied().unwrap_or(0.0);
        let incl = linalg::inclusion_residual(&dd, w, z);
        (if smin > tol { incl } else { 1.0 }, Some(smin))
    };

    let dd_range = subspace_bases(&dd, tol).range.basis;
    let third = linalg::inclusion_residual(&Mat::identity(d, d), z, &dd_range);
    [(first, None), second, (third, None)]
}

pub fn verify_block_relations(s: &SymplecticMatrix) -> Vec<BlockRelationReport> {
    verify_block_relations_tol(s, s.default_rank_tol(), TAU_SYMP)
}

pub fn verify_block_relations_tol(
    s: &SymplecticMatrix,
    rank_tol: f64,
    tau: f64,
) -> Vec<BlockRelationReport> {
    let d = s.dim();
    let j = standard_j(d);
    let m = s.matrix();
    let inv = s.inverse().matrix().clone();
    let refs = [
        m.clone(),
        m * &j,
        &j * m,
        &j * m * &j,
        inv.clone(),
        &inv * &j,
        &j * &inv,
        &j * &inv * &j,
    ];
    ROWS.iter()
        .zip(refs.iter())
        .map(|((id, name, texts), r)| {
            let res = three_relations(r, d, rank_tol);
            let terms: Vec<RelationTerm> = texts
                .iter()
                .zip(res.iter())
                .map(|(t, &(residual, sv))| RelationTerm {
                    relation: t.to_string(),
                    residual,
                    min_singular_value: sv,
                    satisfied: residual <= tau,
                })
                .collect();
            let residual = terms.iter().map(|t| t.residual).fold(0.0, f64::max);
            BlockRelationReport {
                relation_id: format!("({})", id),
                reference: name.to_string(),
                satisfied: terms.iter().all(|t| t.satisfied),
                terms,
                residual,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_satisfies_all_rows() {
        let rep = verify_block_relations(&SymplecticMatrix::standard_j(1));
        assert_eq!(rep.len(), 8);
        assert!(rep.iter().all(|r| r.satisfied));
        assert_eq!(rep[0].terms[2].residual, 0.0);
    }

    #[test]
    fn row_five_for_rank_one_example() {
        let e = Mat::from_row_slice(2, 2, &[-1.0, 2.0, -1.0, 1.0]);
        let s = SymplecticMatrix::dilation(&e)
            .unwrap()
            .compose(&SymplecticMatrix::partial_fourier(&[false, true]))
            .unwrap();
        let rep = verify_block_relations(&s);
        assert!(rep[4].terms[0].residual < 1e-12);
        assert!(rep.iter().all(|r| r.satisfied));
    }

    #[test]
    fn detects_a_broken_isomorphism() {
        // not symplectic: D kills ker(B)
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = 1.0;
        let res = three_relations(&m, 1, 1e-12);
        assert_eq!(res[1].0, 1.0);
    }
}
