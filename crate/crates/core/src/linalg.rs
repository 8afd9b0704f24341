//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Induced 1-norm (maximum absolute column sum).
pub(crate) fn norm_one(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse via LU with partial pivoting, together with the 1-norm condition number.
pub(crate) fn inverse_with_condition(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SolverFailure("matrix is singular".into()))?;
    let cond = norm_one(a) * norm_one(&inv);
    if !cond.is_finite() {
        return Err(Error::SolverFailure("non-finite condition number".into()));
    }
    Ok((inv, cond))
}

pub(crate) fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::SolverFailure("matrix is singular".into()))
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
