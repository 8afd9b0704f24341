use serde::{Deserialize, Serialize};

/// Numeric tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericSettings {
    /// Structural checks: row sums of P, zero row/column sums of the Laplacian.
    pub structural_tol: f64,
    /// Residual cap for linear solves (stationary measure, hitting probabilities).
    pub solver_residual: f64,
    /// Relative eigenvalue tolerance for PSD checks; multiplied by the largest squared distance.
    pub psd_rel_tol: f64,
    /// Absolute tolerance on cycle defects and detailed balance.
    pub rev_tol: f64,
    /// Condition number above which an inverse is rejected.
    pub max_condition: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self {
            structural_tol: 1e-12,
            solver_residual: 1e-10,
            psd_rel_tol: 1e-9,
            rev_tol: 1e-8,
            max_condition: 1e14,
        }
    }
}
