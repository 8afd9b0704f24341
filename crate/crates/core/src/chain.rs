//! Validated ergodic chains, their equilibrium measure and Laplacian.
//!
//! Index conventions follow the raised/lowered bookkeeping used throughout the
//! crate: `P[(i, j)]` is the probability of moving from `i` to `j`, the
//! equilibrium measure `w` carries a raised index, and the Laplacian
//! `Δ[(i, j)] = w_i (δ_ij − P_ij)` has both indices raised. Its negated
//! off-diagonal entries are equilibrium transition rates, which do not depend
//! on how the chain's time is parametrised.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::settings::NumericSettings;

/// A row-stochastic, irreducible and aperiodic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    p: DMatrix<f64>,
    labels: Vec<String>,
}

impl StochasticMatrix {
    /// Validates `p` with the default tolerances.
    pub fn new(p: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        Self::with_settings(p, labels, &NumericSettings::default())
    }

    pub fn with_settings(
        p: DMatrix<f64>,
        labels: Option<Vec<String>>,
        settings: &NumericSettings,
    ) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n {
            return Err(Error::NotSquare {
                rows: n,
                row: 0,
                cols: p.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::TooFewStates(n));
        }
        for i in 0..n {
            for j in 0..n {
                let v = p[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = p.row(i).iter().sum();
            if (sum - 1.0).abs() > settings.structural_tol {
                return Err(Error::RowSumViolation { row: i, sum });
            }
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: l.len(),
                })
            }
            Some(l) => l,
            None => default_labels(n),
        };
        check_irreducible(&p)?;
        let period = support_period(&p);
        if period > 1 {
            return Err(Error::Periodic(period));
        }
        Ok(Self { p, labels })
    }

    /// Builds from a row-major table, reporting the first ragged row as `NotSquare`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Self> {
        validate_chain(rows, labels, &NumericSettings::default())
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Validates a raw row-major table as a transition matrix.
pub fn validate_chain(
    rows: &[Vec<f64>],
    labels: Option<Vec<String>>,
    settings: &NumericSettings,
) -> Result<StochasticMatrix> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            row,
            cols: r.len(),
        });
    }
    let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    StochasticMatrix::with_settings(p, labels, settings)
}

pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        let next: Vec<usize> = (0..n)
            .filter(|&v| !seen[v] && u != v && edge(u, v))
            .collect();
        for v in next {
            seen[v] = true;
            queue.push_back(v);
        }
    }
    seen
}

fn check_irreducible(p: &DMatrix<f64>) -> Result<()> {
    let n = p.nrows();
    let forward = reachable(n, |u, v| p[(u, v)] > 0.0);
    let backward = reachable(n, |u, v| p[(v, u)] > 0.0);
    let unreachable: Vec<usize> = (0..n).filter(|&i| !forward[i]).collect();
    if !unreachable.is_empty() {
        return Err(Error::NotIrreducible(format!(
            "states {unreachable:?} cannot be reached from state 0"
        )));
    }
    let stuck: Vec<usize> = (0..n).filter(|&i| !backward[i]).collect();
    if !stuck.is_empty() {
        return Err(Error::NotIrreducible(format!(
            "state 0 cannot be reached from states {stuck:?}"
        )));
    }
    Ok(())
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period of a strongly connected support graph (self-loops included):
/// the gcd of `level(u) + 1 − level(v)` over every edge, with BFS levels from state 0.
fn support_period(p: &DMatrix<f64>) -> usize {
    let n = p.nrows();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if p[(u, v)] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for u in 0..n {
        for v in 0..n {
            if p[(u, v)] > 0.0 {
                g = gcd(g, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    g
}

/// The unique positive probability vector fixed by `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure(DVector<f64>);

impl EquilibriumMeasure {
    /// Accepts a positive vector summing to one.
    pub fn new(w: DVector<f64>, settings: &NumericSettings) -> Result<Self> {
        if let Some(i) = w.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InconsistentMeasure(format!(
                "weight {i} is not positive"
            )));
        }
        let total = w.sum();
        if (total - 1.0).abs() > settings.structural_tol {
            return Err(Error::InconsistentMeasure(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Self(w))
    }

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(w), &NumericSettings::default())
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for EquilibriumMeasure {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Solves `w (I − P) = 0` with one balance equation swapped for `Σ w = 1`.
pub fn stationary_measure(
    chain: &StochasticMatrix,
    settings: &NumericSettings,
) -> Result<EquilibriumMeasure> {
    let n = chain.n();
    let p = chain.matrix();
    let mut a = (DMatrix::identity(n, n) - p).transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let w = linalg::solve(a, &rhs)?;
    let residual = linalg::max_abs_vec(&(p.transpose() * &w - &w));
    if residual > settings.solver_residual {
        return Err(Error::SolverFailure(format!(
            "stationary residual {residual:e} exceeds {:e}",
            settings.solver_residual
        )));
    }
    if w.iter().any(|&x| x <= 0.0) {
        return Err(Error::SolverFailure(
            "stationary vector has nonpositive entries".into(),
        ));
    }
    Ok(EquilibriumMeasure(w))
}

/// `Δ_ij = w_i (δ_ij − P_ij)`, with zero row and column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    /// Checks square shape, sign pattern and zero row sums. Column sums are
    /// checked against a measure in [`chain_from_laplacian`].
    pub fn new(delta: DMatrix<f64>, settings: &NumericSettings) -> Result<Self> {
        let n = delta.nrows();
        if delta.ncols() != n {
            return Err(Error::NotSquare {
                rows: n,
                row: 0,
                cols: delta.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::TooFewStates(n));
        }
        for i in 0..n {
            for j in 0..n {
                let v = delta[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if i == j && v < 0.0 {
                    return Err(Error::InvalidLaplacian(format!("negative diagonal at {i}")));
                }
                if i != j && v > 0.0 {
                    return Err(Error::InvalidLaplacian(format!(
                        "positive off-diagonal entry at ({i}, {j})"
                    )));
                }
            }
            let sum: f64 = delta.row(i).iter().sum();
            if sum.abs() > settings.structural_tol {
                return Err(Error::InvalidLaplacian(format!("row {i} sums to {sum:e}")));
            }
        }
        Ok(Self(delta))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                row,
                cols: r.len(),
            });
        }
        Self::new(
            DMatrix::from_fn(n, n, |i, j| rows[i][j]),
            &NumericSettings::default(),
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn transpose(&self) -> Laplacian {
        Laplacian(self.0.transpose())
    }
}

pub fn laplacian(p: &DMatrix<f64>, w: &EquilibriumMeasure) -> Laplacian {
    let n = p.nrows();
    Laplacian(DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        w[i] * (delta - p[(i, j)])
    }))
}

/// A validated chain together with its equilibrium measure and Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicChain {
    matrix: StochasticMatrix,
    w: EquilibriumMeasure,
    laplacian: Laplacian,
    settings: NumericSettings,
}

impl ErgodicChain {
    pub fn new(matrix: StochasticMatrix) -> Result<Self> {
        Self::with_settings(matrix, NumericSettings::default())
    }

    pub fn with_settings(matrix: StochasticMatrix, settings: NumericSettings) -> Result<Self> {
        let w = stationary_measure(&matrix, &settings)?;
        let laplacian = laplacian(matrix.matrix(), &w);
        Ok(Self {
            matrix,
            w,
            laplacian,
            settings,
        })
    }

    /// Validates a row-major table and derives `w` and `Δ`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(StochasticMatrix::from_rows(rows, None)?)
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        self.matrix.matrix()
    }

    pub fn stochastic(&self) -> &StochasticMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        self.matrix.labels()
    }

    pub fn w(&self) -> &EquilibriumMeasure {
        &self.w
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        self.laplacian.matrix()
    }

    pub fn settings(&self) -> &NumericSettings {
        &self.settings
    }

    /// Largest |Δ_ij − Δ_ji|; zero exactly when detailed balance holds.
    pub fn detailed_balance_defect(&self) -> f64 {
        let d = self.delta();
        linalg::max_abs(&(d - d.transpose()))
    }

    /// The chain run backwards in equilibrium: `P̂_ij = w_j P_ji / w_i`.
    ///
    /// Shares `w`; its Laplacian is the transpose of this one.
    pub fn time_reverse(&self) -> ErgodicChain {
        let n = self.n();
        let p = self.p();
        let w = &self.w;
        let p_hat = DMatrix::from_fn(n, n, |i, j| w[j] * p[(j, i)] / w[i]);
        let laplacian = laplacian(&p_hat, w);
        ErgodicChain {
            matrix: StochasticMatrix {
                p: p_hat,
                labels: self.labels().to_vec(),
            },
            w: w.clone(),
            laplacian,
            settings: self.settings,
        }
    }
}

/// Recovers `P = I − Δ / w` (row-wise division) from a Laplacian and a measure.
///
/// Fails with `InfeasibleDiagonal(i)` when `w_i < Δ_ii`, which would force a
/// negative holding probability.
pub fn chain_from_laplacian(
    delta: &Laplacian,
    w: &EquilibriumMeasure,
    settings: &NumericSettings,
) -> Result<ErgodicChain> {
    let n = delta.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: w.len(),
        });
    }
    let d = delta.matrix();
    for j in 0..n {
        let col: f64 = d.column(j).iter().sum();
        if col.abs() > settings.structural_tol {
            return Err(Error::InconsistentMeasure(format!(
                "column {j} sums to {col:e}"
            )));
        }
    }
    if let Some(i) = (0..n).find(|&i| w[i] < d[(i, i)] - settings.structural_tol) {
        return Err(Error::InfeasibleDiagonal(i));
    }
    let p = DMatrix::from_fn(n, n, |i, j| {
        let delta_ij = if i == j { 1.0 } else { 0.0 };
        let v = delta_ij - d[(i, j)] / w[i];
        // Roundoff can push an entry just outside [0, 1].
        if v < 0.0 && (i == j || v > -settings.structural_tol) {
            0.0
        } else if v > 1.0 && v < 1.0 + settings.structural_tol {
            1.0
        } else {
            v
        }
    });
    let matrix = StochasticMatrix::with_settings(p, None, settings)?;
    Ok(ErgodicChain {
        matrix,
        w: w.clone(),
        laplacian: delta.clone(),
        settings: *settings,
    })
}
