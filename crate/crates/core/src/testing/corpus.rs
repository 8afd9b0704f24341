use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{ErgodicChain, StochasticMatrix};

fn normalize_rows(mut weights: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in weights.row_iter_mut() {
        let total: f64 = row.sum();
        row /= total;
    }
    weights
}

/// A random ergodic chain on `n` states, generally not reversible.
///
/// The support always contains a random Hamiltonian cycle; other edges and
/// self-loops appear with a per-chain random density.
pub fn random_chain(n: usize, rng: &mut impl Rng) -> ErgodicChain {
    loop {
        let density = rng.random_range(0.2..0.9);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut weights = DMatrix::zeros(n, n);
        for k in 0..n {
            weights[(order[k], order[(k + 1) % n])] = rng.random_range(0.2..1.0);
        }
        for i in 0..n {
            for j in 0..n {
                if weights[(i, j)] == 0.0 && rng.random_bool(if i == j { 0.3 } else { density }) {
                    weights[(i, j)] = rng.random_range(0.05..1.0);
                }
            }
        }
        let p = normalize_rows(weights);
        if let Ok(m) = StochasticMatrix::new(p, None) {
            if let Ok(chain) = ErgodicChain::new(m) {
                return chain;
            }
        }
    }
}

/// A random reversible chain: a random walk on a connected graph with
/// symmetric conductances and at least one self-loop.
pub fn random_reversible_chain(n: usize, rng: &mut impl Rng) -> ErgodicChain {
    loop {
        let density = rng.random_range(0.0..0.7);
        let mut c = DMatrix::zeros(n, n);
        for k in 1..n {
            let parent = rng.random_range(0..k);
            let g = rng.random_range(0.1..1.0);
            c[(k, parent)] = g;
            c[(parent, k)] = g;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if c[(i, j)] == 0.0 && rng.random_bool(density) {
                    let g = rng.random_range(0.1..1.0);
                    c[(i, j)] = g;
                    c[(j, i)] = g;
                }
            }
        }
        let looped = rng.random_range(0..n);
        c[(looped, looped)] = rng.random_range(0.1..1.0);
        let p = normalize_rows(c);
        if let Ok(m) = StochasticMatrix::new(p, None) {
            if let Ok(chain) = ErgodicChain::new(m) {
                return chain;
            }
        }
    }
}

/// Mixed corpus with state counts cycling through `2..=12`; every fourth chain is reversible.
pub fn corpus(count: usize, seed: u64) -> Vec<ErgodicChain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = 2 + k % 11;
            if k % 4 == 3 {
                random_reversible_chain(n, &mut rng)
            } else {
                random_chain(n, &mut rng)
            }
        })
        .collect()
}

pub fn reversible_corpus(count: usize, seed: u64) -> Vec<ErgodicChain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| random_reversible_chain(2 + k % 11, &mut rng))
        .collect()
}

/// Chains on `3..=12` states with a detailed-balance defect above `1e-6`.
pub fn nonreversible_corpus(count: usize, seed: u64) -> Vec<ErgodicChain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| loop {
            let chain = random_chain(3 + k % 10, &mut rng);
            if chain.detailed_balance_defect() > 1e-6 {
                break chain;
            }
        })
        .collect()
}
