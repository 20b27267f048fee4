use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the whole crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Symplecticity residual bound.
    pub tau_symp: f64,
    /// Band around eigenvalue 1 for the Hardy classification.
    pub tau_eig: f64,
    /// Fixed rank tolerance; when `None` it is d * sigma_max(S) * 1e-12.
    pub tol_rank: Option<f64>,
    /// Fail instead of warning on aliasing risks.
    pub strict: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tau_symp: 1e-9, tau_eig: 1e-8, tol_rank: None, strict: false }
    }
}
