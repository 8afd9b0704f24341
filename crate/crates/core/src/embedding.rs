//! Euclidean realization of commuting times.
//!
//! A symmetric table `T` of squared distances is realizable exactly when the
//! Gram matrix `G_ij = ½(T_ri + T_rj − T_ij)`, taken relative to a pinned
//! reference state `r`, is positive semidefinite. Commuting times of an
//! ergodic chain always pass; arbitrary tables may not.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::chain::ErgodicChain;
use crate::error::{check_index, check_pair, Error, Result};
use crate::fundamental::FundamentalMatrix;
use crate::linalg;
use crate::settings::NumericSettings;

#[derive(Debug, Clone, PartialEq)]
pub struct RealizabilityReport {
    /// Gram matrix over the states other than `ref_state`, in index order.
    pub gram: DMatrix<f64>,
    /// Original state index of each Gram row.
    pub states: Vec<usize>,
    /// Gram spectrum, ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub psd_tol: f64,
    pub realizable: bool,
    /// Eigenvector of the most negative eigenvalue when not realizable.
    pub witness: Option<Vec<f64>>,
    pub ref_state: usize,
}

/// Default PSD tolerance: `psd_rel_tol` times the largest squared distance.
pub fn default_psd_tol(t: &DMatrix<f64>) -> f64 {
    NumericSettings::default().psd_rel_tol * linalg::max_abs(t)
}

fn check_distance_table(t: &DMatrix<f64>) -> Result<()> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            row: 0,
            cols: t.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::TooFewStates(0));
    }
    let tol = NumericSettings::default().structural_tol * linalg::max_abs(t).max(1.0);
    for i in 0..n {
        if t[(i, i)].abs() > tol {
            return Err(Error::NonzeroDiagonal(i));
        }
        for j in 0..n {
            let v = t[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if (v - t[(j, i)]).abs() > tol {
                return Err(Error::NotSymmetric(i, j));
            }
            if v < -tol {
                return Err(Error::NegativeDistance(i, j));
            }
        }
    }
    Ok(())
}

fn gram_matrix(t: &DMatrix<f64>, reference: usize) -> (DMatrix<f64>, Vec<usize>) {
    let states: Vec<usize> = (0..t.nrows()).filter(|&i| i != reference).collect();
    let m = states.len();
    let gram = DMatrix::from_fn(m, m, |r, c| {
        let (i, j) = (states[r], states[c]);
        0.5 * (t[(reference, i)] + t[(reference, j)] - t[(i, j)])
    });
    (gram, states)
}

/// Ascending eigenpairs of a symmetric matrix.
fn sorted_eigen(gram: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(gram.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(gram.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn realizability_check(
    t: &DMatrix<f64>,
    reference: usize,
    psd_tol: f64,
) -> Result<RealizabilityReport> {
    check_distance_table(t)?;
    check_index(reference, t.nrows())?;
    let (gram, states) = gram_matrix(t, reference);
    let (eigenvalues, vectors) = sorted_eigen(&gram);
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let realizable = min_eigenvalue >= -psd_tol;
    let witness = (!realizable).then(|| vectors.column(0).iter().copied().collect());
    Ok(RealizabilityReport {
        gram,
        states,
        eigenvalues,
        min_eigenvalue,
        psd_tol,
        realizable,
        witness,
        ref_state: reference,
    })
}

/// Coordinates whose pairwise squared distances reproduce a commute-time table.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One row per state; columns ordered by decreasing Gram eigenvalue.
    pub coords: DMatrix<f64>,
    /// Full Gram spectrum, descending.
    pub eigenvalues: Vec<f64>,
    pub ref_state: usize,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn squared_distances(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |a, b| {
            (self.coords.row(a) - self.coords.row(b)).norm_squared()
        })
    }

    /// Max over pairs of `| ||x_a − x_b||² − T_ab |`.
    pub fn max_distance_error(&self, t: &DMatrix<f64>) -> f64 {
        linalg::max_abs(&(self.squared_distances() - t))
    }
}

/// Classical scaling with a pinned reference state: factor the Gram matrix and
/// keep the eigen-directions above `psd_tol`.
pub fn embed(t: &DMatrix<f64>, reference: usize, psd_tol: f64) -> Result<Embedding> {
    let report = realizability_check(t, reference, psd_tol)?;
    if !report.realizable {
        return Err(Error::NotRealizable(Box::new(report)));
    }
    let n = t.nrows();
    if n == 2 {
        let mut coords = DMatrix::zeros(2, 1);
        coords[(1 - reference, 0)] = t[(0, 1)].max(0.0).sqrt();
        return Ok(Embedding {
            coords,
            eigenvalues: report.eigenvalues,
            ref_state: reference,
        });
    }
    let (values, vectors) = sorted_eigen(&report.gram);
    let retained: Vec<usize> = (0..values.len())
        .rev()
        .filter(|&k| values[k] > psd_tol)
        .collect();
    let mut coords = DMatrix::zeros(n, retained.len());
    for (r, &state) in report.states.iter().enumerate() {
        for (c, &k) in retained.iter().enumerate() {
            coords[(state, c)] = vectors[(r, k)] * values[k].sqrt();
        }
    }
    let eigenvalues = values.into_iter().rev().collect();
    Ok(Embedding {
        coords,
        eigenvalues,
        ref_state: reference,
    })
}

/// Evaluates `Σ_ij (Z_ai − Z_bi) Δ_ij (Z_aj − Z_bj)` and returns its distance
/// from `T_ab`.
pub fn verify_embedding_via_z(
    chain: &ErgodicChain,
    z: &FundamentalMatrix,
    a: usize,
    b: usize,
) -> Result<f64> {
    let n = chain.n();
    check_index(a, n)?;
    check_index(b, n)?;
    if a == b {
        return Ok(0.0);
    }
    check_pair(a, b, n)?;
    let zl = z.lowered();
    let diff = DVector::from_fn(n, |i, _| zl[(a, i)] - zl[(b, i)]);
    let quad = diff.dot(&(chain.delta() * &diff));
    let t_ab = (zl[(b, b)] - zl[(a, b)]) + (zl[(a, a)] - zl[(b, a)]);
    Ok((quad - t_ab).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::fundamental_matrix;
    use crate::potential::CommuteStructure;

    fn counterexample() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            5,
            &[
                0.0, 7.0, 7.0, 7.0, 13.0, //
                7.0, 0.0, 12.0, 12.0, 7.0, //
                7.0, 12.0, 0.0, 12.0, 7.0, //
                7.0, 12.0, 12.0, 0.0, 7.0, //
                13.0, 7.0, 7.0, 7.0, 0.0,
            ],
        )
    }

    #[test]
    fn counterexample_gram_and_eigenvalue() {
        let t = counterexample();
        let report = realizability_check(&t, 0, default_psd_tol(&t)).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                14.0, 2.0, 2.0, 13.0, //
                2.0, 14.0, 2.0, 13.0, //
                2.0, 2.0, 14.0, 13.0, //
                13.0, 13.0, 13.0, 26.0,
            ],
        ) * 0.5;
        assert_eq!(report.gram, expected);
        let exact = 0.5 * (22.0 - 523f64.sqrt());
        assert!((report.min_eigenvalue - exact).abs() < 1e-12);
        assert!((report.min_eigenvalue + 0.434597).abs() < 1e-6);
        assert!(!report.realizable);
        let witness = DVector::from_vec(report.witness.clone().unwrap());
        let rayleigh = witness.dot(&(&report.gram * &witness)) / witness.norm_squared();
        assert!((rayleigh - exact).abs() < 1e-10);
        assert!(matches!(
            embed(&t, 0, default_psd_tol(&t)),
            Err(Error::NotRealizable(_))
        ));
    }

    #[test]
    fn equilateral_triangle() {
        let t = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let report = realizability_check(&t, 0, 1e-9).unwrap();
        assert!(report.realizable);
        assert!((report.eigenvalues[0] - 0.5).abs() < 1e-14);
        assert!((report.eigenvalues[1] - 1.5).abs() < 1e-14);
        let e = embed(&t, 0, 1e-9).unwrap();
        assert_eq!(e.dims(), 2);
        assert!(e.max_distance_error(&t) < 1e-14);
    }

    #[test]
    fn two_state_embedding_is_a_segment() {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]);
        let e = embed(&t, 0, 1e-9).unwrap();
        assert_eq!(e.coords.as_slice(), &[0.0, 2.0]);
        let e1 = embed(&t, 1, 1e-9).unwrap();
        assert_eq!(e1.coords.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn input_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(
            realizability_check(&asym, 0, 1e-9),
            Err(Error::NotSymmetric(0, 1))
        ));
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            realizability_check(&diag, 0, 1e-9),
            Err(Error::NonzeroDiagonal(0))
        ));
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(matches!(
            realizability_check(&neg, 0, 1e-9),
            Err(Error::NegativeDistance(0, 1))
        ));
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            realizability_check(&t, 2, 1e-9),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn biased_triangle_embeds_exactly() {
        let c = ErgodicChain::from_rows(&[
            vec![0.0, 0.75, 0.25],
            vec![0.25, 0.0, 0.75],
            vec![0.75, 0.25, 0.0],
        ])
        .unwrap();
        let z = fundamental_matrix(&c).unwrap();
        let t = CommuteStructure::new(&z).commute().clone();
        let e = embed(&t, 0, default_psd_tol(&t)).unwrap();
        assert!(e.dims() <= 2);
        assert!(e.max_distance_error(&t) < 1e-9);
        assert!(e.coords.row(0).iter().all(|&v| v == 0.0));
        for a in 0..3 {
            for b in 0..3 {
                assert!(verify_embedding_via_z(&c, &z, a, b).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn z_route_on_two_state() {
        let c = ErgodicChain::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let z = fundamental_matrix(&c).unwrap();
        assert!(verify_embedding_via_z(&c, &z, 0, 1).unwrap() < 1e-14);
        assert_eq!(verify_embedding_via_z(&c, &z, 1, 1).unwrap(), 0.0);
    }
}
