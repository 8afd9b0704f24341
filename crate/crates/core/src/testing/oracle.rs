//! Reference computations that share no code path with the library's
//! production routines.

use nalgebra::{DMatrix, DVector};

use crate::chain::ErgodicChain;

/// Hitting times by first-step analysis: for each target `b`, solve
/// `(I − P restricted to states ≠ b) m = 1`.
pub fn first_step_hitting_times(chain: &ErgodicChain) -> DMatrix<f64> {
    let n = chain.n();
    let p = chain.p();
    let mut out = DMatrix::zeros(n, n);
    for b in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != b).collect();
        let m = others.len();
        let a = DMatrix::from_fn(m, m, |r, c| {
            let (i, j) = (others[r], others[c]);
            (if i == j { 1.0 } else { 0.0 }) - p[(i, j)]
        });
        let times = a
            .lu()
            .solve(&DVector::from_element(m, 1.0))
            .expect("nonsingular");
        for (r, &i) in others.iter().enumerate() {
            out[(i, b)] = times[r];
        }
    }
    out
}

/// Stationary measure by repeated multiplication, starting from uniform.
pub fn power_iteration_stationary(chain: &ErgodicChain, iterations: usize) -> DVector<f64> {
    let n = chain.n();
    let pt = chain.p().transpose();
    let mut w = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..iterations {
        w = &pt * w;
    }
    w
}

/// `G = (Δ + 11ᵀ/n)⁻¹`. Since `1` spans both null spaces of `Δ`, the shift
/// is invertible and `Δ G Δ = Δ`.
fn shifted_inverse(chain: &ErgodicChain) -> DMatrix<f64> {
    let n = chain.n();
    let shifted = chain.delta().add_scalar(1.0 / n as f64);
    shifted
        .try_inverse()
        .expect("shifted Laplacian is invertible")
}

/// Commute times from the generalized inverse `G`:
/// `T_ab = (δ_a − δ_b)ᵀ G (δ_a − δ_b)`.
pub fn shifted_inverse_commute_times(chain: &ErgodicChain) -> DMatrix<f64> {
    let n = chain.n();
    let g = shifted_inverse(chain);
    DMatrix::from_fn(n, n, |a, b| g[(a, a)] - g[(a, b)] - g[(b, a)] + g[(b, b)])
}

/// Solves `Δᵀ φ = δ_a − δ_b` with `Gᵀ`, pinned to `φ_b = 0`.
pub fn shifted_inverse_unit_flow(chain: &ErgodicChain, a: usize, b: usize) -> DVector<f64> {
    let n = chain.n();
    let mut u = DVector::zeros(n);
    u[a] = 1.0;
    u[b] = -1.0;
    let phi = shifted_inverse(chain).transpose() * u;
    let shift = phi[b];
    phi.map(|x| x - shift)
}
