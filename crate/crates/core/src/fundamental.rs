//! Fundamental matrix `Z`, the generalized inverse of the Laplacian.
//!
//! `raised[(i, j)]` is the expected excess number of visits to `j` starting
//! from `i`, relative to starting in equilibrium. `lowered[(i, j)]` divides
//! column `j` by `w_j`; it is the form that pairs with the Laplacian.

use nalgebra::{DMatrix, DVector};

use crate::chain::ErgodicChain;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    raised: DMatrix<f64>,
    lowered: DMatrix<f64>,
    w: DVector<f64>,
    condition: Option<f64>,
    terms: Option<usize>,
}

impl FundamentalMatrix {
    fn from_raised(raised: DMatrix<f64>, w: &DVector<f64>) -> Self {
        let n = raised.nrows();
        let lowered = DMatrix::from_fn(n, n, |i, j| raised[(i, j)] / w[j]);
        Self {
            raised,
            lowered,
            w: w.clone(),
            condition: None,
            terms: None,
        }
    }

    pub fn raised(&self) -> &DMatrix<f64> {
        &self.raised
    }

    pub fn lowered(&self) -> &DMatrix<f64> {
        &self.lowered
    }

    /// Equilibrium measure the matrix was centred against.
    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.raised.nrows()
    }

    /// 1-norm condition number of `I − P + P∞`, for the closed form.
    pub fn condition(&self) -> Option<f64> {
        self.condition
    }

    /// Number of series terms summed, for the series form.
    pub fn terms(&self) -> Option<usize> {
        self.terms
    }

    /// Largest |row sum| of the raised form.
    pub fn row_sum_defect(&self) -> f64 {
        self.raised
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from w-centred rows and columns of the lowered form.
    pub fn centering_defect(&self) -> f64 {
        let rows = &self.lowered * &self.w;
        let cols = self.lowered.transpose() * &self.w;
        linalg::max_abs_vec(&rows).max(linalg::max_abs_vec(&cols))
    }
}

fn limit_matrix(w: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    DMatrix::from_fn(n, n, |_, j| w[j])
}

/// Closed form `Z = (I − P + P∞)⁻¹ − P∞`, where every row of `P∞` is `w`.
pub fn fundamental_matrix(chain: &ErgodicChain) -> Result<FundamentalMatrix> {
    let n = chain.n();
    let w = chain.w().as_vector();
    let limit = limit_matrix(w);
    let a = DMatrix::identity(n, n) - chain.p() + &limit;
    let (inv, cond) = linalg::inverse_with_condition(&a)?;
    if cond > chain.settings().max_condition {
        return Err(Error::SolverFailure(format!(
            "I - P + P∞ has condition number {cond:e}"
        )));
    }
    let mut z = FundamentalMatrix::from_raised(inv - limit, w);
    z.condition = Some(cond);
    Ok(z)
}

/// Partial sums of `Σ_k (P^k − P∞)`, stopping once a term's max-abs entry drops
/// below `tail_tol`.
///
/// Slow for badly mixing chains; kept as an independent check on
/// [`fundamental_matrix`].
pub fn fundamental_matrix_series(
    chain: &ErgodicChain,
    max_terms: usize,
    tail_tol: f64,
) -> Result<FundamentalMatrix> {
    if max_terms == 0 {
        return Err(Error::InvalidArgument(
            "max_terms must be at least 1".into(),
        ));
    }
    let n = chain.n();
    let w = chain.w().as_vector();
    let limit = limit_matrix(w);
    let p = chain.p();
    let mut sum = DMatrix::identity(n, n) - &limit;
    let mut power = DMatrix::identity(n, n);
    let mut residual = f64::INFINITY;
    for k in 1..=max_terms {
        power = &power * p;
        let term = &power - &limit;
        residual = linalg::max_abs(&term);
        if residual < tail_tol {
            let mut z = FundamentalMatrix::from_raised(sum, w);
            z.terms = Some(k);
            return Ok(z);
        }
        sum += term;
    }
    Err(Error::NotConverged {
        terms: max_terms,
        residual,
    })
}

/// Residuals of `u·Z·Δ = u` and `Δ·Z·u = u` for a zero-mass vector `u`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GeneralizedInverseResidual {
    pub left: f64,
    pub right: f64,
}

impl GeneralizedInverseResidual {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

pub fn check_generalized_inverse(
    chain: &ErgodicChain,
    z: &FundamentalMatrix,
    u: &DVector<f64>,
) -> Result<GeneralizedInverseResidual> {
    let n = chain.n();
    if u.len() != n || z.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: u.len(),
        });
    }
    let mass = u.sum();
    let scale = linalg::max_abs_vec(u).max(1.0);
    if mass.abs() > chain.settings().structural_tol * scale {
        return Err(Error::NotMassZero(mass));
    }
    let delta = chain.delta();
    let zl = z.lowered();
    let left = (u.transpose() * zl * delta).transpose() - u;
    let right = delta * (zl * u) - u;
    Ok(GeneralizedInverseResidual {
        left: linalg::max_abs_vec(&left),
        right: linalg::max_abs_vec(&right),
    })
}

/// Max-abs entry of `Δ·Z·Δ − Δ`.
pub fn generalized_inverse_defect(chain: &ErgodicChain, z: &FundamentalMatrix) -> f64 {
    let delta = chain.delta();
    linalg::max_abs(&(delta * z.lowered() * delta - delta))
}
