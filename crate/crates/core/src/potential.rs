//! Hitting times, commuting times, the cross-potential and the energy form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::ErgodicChain;
use crate::error::{check_index, check_pair, Error, Result};
use crate::fundamental::FundamentalMatrix;
use crate::linalg;

/// `M_ab = Z_bb − Z_ab` on the lowered form; expected steps to reach `b` from `a`.
pub fn hitting_times(z: &FundamentalMatrix) -> DMatrix<f64> {
    let zl = z.lowered();
    let n = z.n();
    DMatrix::from_fn(
        n,
        n,
        |a, b| if a == b { 0.0 } else { zl[(b, b)] - zl[(a, b)] },
    )
}

/// `T_ab = M_ab + M_ba`. Symmetric bit-for-bit.
pub fn commute_times(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(
        n,
        n,
        |a, b| if a == b { 0.0 } else { m[(a, b)] + m[(b, a)] },
    )
}

/// Hitting and commuting times derived from one fundamental matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CommuteStructure {
    hitting: DMatrix<f64>,
    commute: DMatrix<f64>,
}

impl CommuteStructure {
    pub fn new(z: &FundamentalMatrix) -> Self {
        let hitting = hitting_times(z);
        let commute = commute_times(&hitting);
        Self { hitting, commute }
    }

    pub fn hitting(&self) -> &DMatrix<f64> {
        &self.hitting
    }

    pub fn commute(&self) -> &DMatrix<f64> {
        &self.commute
    }

    pub fn max_commute(&self) -> f64 {
        linalg::max_abs(&self.commute)
    }

    /// Largest `T_ac − T_ab − T_bc` over all triples; nonpositive when every
    /// embedded triangle is weakly acute.
    pub fn triangle_excess(&self) -> f64 {
        let t = &self.commute;
        let n = t.nrows();
        let mut worst = f64::NEG_INFINITY;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    worst = worst.max(t[(a, c)] - t[(a, b)] - t[(b, c)]);
                }
            }
        }
        worst
    }
}

/// Lazy view of `N_abcd = Z_ac − Z_ad − Z_bc + Z_bd` over the lowered form.
///
/// Evaluated as `(Z_ac − Z_bc) + (Z_bd − Z_ad)`, which makes the sign
/// symmetries and `N_abab = T_ab` hold exactly in floating point.
#[derive(Debug, Clone, Copy)]
pub struct CrossPotential<'a> {
    z: &'a FundamentalMatrix,
}

/// Largest state count for which [`CrossPotential::materialize`] is allowed.
pub const MAX_MATERIALIZED_STATES: usize = 12;

impl<'a> CrossPotential<'a> {
    pub fn new(z: &'a FundamentalMatrix) -> Self {
        Self { z }
    }

    pub fn n(&self) -> usize {
        self.z.n()
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Result<f64> {
        let n = self.n();
        for i in [a, b, c, d] {
            check_index(i, n)?;
        }
        Ok(self.value(a, b, c, d))
    }

    pub(crate) fn value(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let z = self.z.lowered();
        (z[(a, c)] - z[(b, c)]) + (z[(b, d)] - z[(a, d)])
    }

    /// Full `n⁴` table in `a, b, c, d` row-major order; diagnostics only.
    pub fn materialize(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n > MAX_MATERIALIZED_STATES {
            return Err(Error::InvalidArgument(format!(
                "refusing to materialize {n}^4 cross-potential entries"
            )));
        }
        let mut out = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        out.push(self.value(a, b, c, d));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `Z'_ij = Σ_kl N_ikjl w_k w_l` for an arbitrary positive normalized `w`.
///
/// With the chain's own measure this reproduces the lowered `Z`; with any
/// other measure it differs by terms that vanish on zero-mass vectors.
pub fn recover_z_from_n(n_form: &CrossPotential<'_>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = n_form.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: w.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for k in 0..n {
            for l in 0..n {
                acc += n_form.value(i, k, j, l) * w[k] * w[l];
            }
        }
        acc
    }))
}

/// `B(u, v) = Σ_ij u_i Z_ij v_j`.
pub fn bilinear_form(z: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&(z * v))
}

/// Potential of a unit flow injected at `a` and extracted at `b`:
/// `φ_j = Z_aj − Z_bj`, shifted so that `φ_b = 0`.
pub fn unit_flow_potential(z: &FundamentalMatrix, a: usize, b: usize) -> Result<DVector<f64>> {
    check_pair(a, b, z.n())?;
    let zl = z.lowered();
    let shift = zl[(a, b)] - zl[(b, b)];
    Ok(DVector::from_fn(z.n(), |j, _| {
        (zl[(a, j)] - zl[(b, j)]) - shift
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Probability of hitting `a` before `b` from each state.
///
/// `Backward` runs the time-reversed chain. The interior equations
/// `p = P p` are solved directly after removing the two boundary states.
pub fn hitting_probabilities(
    chain: &ErgodicChain,
    a: usize,
    b: usize,
    direction: Direction,
) -> Result<DVector<f64>> {
    check_pair(a, b, chain.n())?;
    match direction {
        Direction::Forward => absorption_probabilities(chain, a, b),
        Direction::Backward => absorption_probabilities(&chain.time_reverse(), a, b),
    }
}

fn absorption_probabilities(chain: &ErgodicChain, a: usize, b: usize) -> Result<DVector<f64>> {
    let n = chain.n();
    let p = chain.p();
    let interior: Vec<usize> = (0..n).filter(|&i| i != a && i != b).collect();
    let mut out = DVector::zeros(n);
    out[a] = 1.0;
    if interior.is_empty() {
        return Ok(out);
    }
    let m = interior.len();
    let system = DMatrix::from_fn(m, m, |r, c| {
        let (i, j) = (interior[r], interior[c]);
        (if i == j { 1.0 } else { 0.0 }) - p[(i, j)]
    });
    let rhs = DVector::from_fn(m, |r, _| p[(interior[r], a)]);
    let x = linalg::solve(system.clone(), &rhs)?;
    let residual = linalg::max_abs_vec(&(system * &x - &rhs));
    if residual > chain.settings().solver_residual {
        return Err(Error::SolverFailure(format!(
            "hitting-probability residual {residual:e}"
        )));
    }
    for (r, &i) in interior.iter().enumerate() {
        out[i] = x[r].clamp(0.0, 1.0);
    }
    Ok(out)
}

/// `L(φ, ψ) = Σ_ij φ_i Δ_ij ψ_j`.
pub fn energy(chain: &ErgodicChain, phi: &DVector<f64>, psi: &DVector<f64>) -> f64 {
    EnergyForm::new(chain).eval(phi, psi)
}

/// The (generally non-symmetric) bilinear form of the Laplacian, on potentials
/// taken modulo additive constants.
#[derive(Debug, Clone, Copy)]
pub struct EnergyForm<'a> {
    chain: &'a ErgodicChain,
}

impl<'a> EnergyForm<'a> {
    pub fn new(chain: &'a ErgodicChain) -> Self {
        Self { chain }
    }

    pub fn eval(&self, phi: &DVector<f64>, psi: &DVector<f64>) -> f64 {
        phi.dot(&(self.chain.delta() * psi))
    }

    /// `½ Σ_ij w_i P_ij (x_i − x_j)²`, equal to `L(x, x)`.
    pub fn edge_sum(&self, x: &DVector<f64>) -> f64 {
        let p = self.chain.p();
        let w = self.chain.w();
        let n = self.chain.n();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = x[i] - x[j];
                acc += w[i] * p[(i, j)] * d * d;
            }
        }
        0.5 * acc
    }
}
