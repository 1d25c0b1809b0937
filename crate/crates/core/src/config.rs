use serde::{Deserialize, Serialize};

/// Numerical tolerances and the seed shared by every routine.
///
/// All fields have defaults, so a partial JSON object is a valid config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Generic algebraic identities (J² = −1, compatibility, block identities).
    pub tol_alg: f64,
    /// Jacobi / Bianchi residuals.
    pub tol_jacobi: f64,
    /// Relative singular-value cutoff for rank and span decisions.
    pub tol_rank: f64,
    /// Feasibility of the Hermitian-symplectic system, relative to the right-hand side.
    pub tol_feas: f64,
    /// Kähler certificate, relative to the largest structure constant.
    pub tol_cert: f64,
    /// Relative cluster width used by the simultaneous diagonalizer.
    pub cluster_rel: f64,
    /// Relative cutoff below which a diagonal entry counts as zero in the pseudo-inverse.
    pub sigma_zero_rel: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol_alg: 1e-9,
            tol_jacobi: 1e-8,
            tol_rank: 1e-8,
            tol_feas: 1e-8,
            tol_cert: 1e-8,
            cluster_rel: 1e-6,
            sigma_zero_rel: 1e-8,
            seed: 0,
        }
    }
}
