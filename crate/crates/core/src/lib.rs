//! Commuting times of finite ergodic Markov chains, reversible or not.
//!
//! The expected commuting time `T_ab` between two states behaves like a
//! squared Euclidean distance: the states of any ergodic chain can be placed in
//! Euclidean space so that `||x_a − x_b||² = T_ab`. This crate computes the
//! quantities involved and checks the surrounding structure numerically:
//!
//! - [`chain`]: validation, equilibrium measure, Laplacian `Δ`, time reversal;
//! - [`fundamental`]: the fundamental matrix `Z`, a generalized inverse of `Δ`;
//! - [`potential`]: hitting and commuting times, the cross-potential, unit-flow
//!   potentials, hitting probabilities and the energy form `L(φ, ψ)`;
//! - [`embedding`]: realizability of squared-distance tables and the embedding;
//! - [`structure`]: reversibility tests, the minimax saddle, the Dirichlet
//!   bound and monotonicity under added circulations;
//! - [`mc`]: Monte Carlo estimators that serve as an independent check;
//! - [`io`]: file formats shared with the command-line tool.
//!
//! ```
//! use commute_core::{fundamental_matrix, CommuteStructure, ErgodicChain};
//!
//! let chain = ErgodicChain::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
//! let z = fundamental_matrix(&chain).unwrap();
//! let times = CommuteStructure::new(&z);
//! assert!((times.commute()[(0, 1)] - 4.0).abs() < 1e-12);
//! ```

pub mod chain;
pub mod embedding;
pub mod error;
pub mod fundamental;
pub mod io;
mod linalg;
pub mod mc;
pub mod potential;
pub mod settings;
pub mod structure;

#[cfg(any(test, feature = "testing"))]
pub mod testing;

pub use nalgebra;

pub use chain::{
    chain_from_laplacian, laplacian, stationary_measure, validate_chain, EquilibriumMeasure,
    ErgodicChain, Laplacian, StochasticMatrix,
};
pub use embedding::{
    default_psd_tol, embed, realizability_check, verify_embedding_via_z, Embedding,
    RealizabilityReport,
};
pub use error::{Error, Result};
pub use fundamental::{
    check_generalized_inverse, fundamental_matrix, fundamental_matrix_series,
    generalized_inverse_defect, FundamentalMatrix, GeneralizedInverseResidual,
};
pub use mc::{
    estimate_commute_paint, estimate_excess_visits, estimate_hitting, simulate, Estimate,
    PaintEstimate, Start, TrajectorySample,
};
pub use potential::{
    commute_times, energy, hitting_probabilities, hitting_times, recover_z_from_n,
    unit_flow_potential, CommuteStructure, CrossPotential, Direction, EnergyForm,
};
pub use settings::NumericSettings;
pub use structure::{
    apply_circulations, dirichlet_bound, minimax_verify, minimax_verify_with_commute,
    monotonicity_experiment, reversibility_check, Circulation, ComparisonChain, MinimaxReport,
    MonotonicityConfig, MonotonicityReport, ReversibilityReport,
};
