use nalgebra::DMatrix;

use crate::chain::ErgodicChain;

/// Uniform rotation bias around a triangle; doubly stochastic and not reversible.
pub fn biased_triangle() -> ErgodicChain {
    ErgodicChain::from_rows(&[
        vec![0.0, 0.75, 0.25],
        vec![0.25, 0.0, 0.75],
        vec![0.75, 0.25, 0.0],
    ])
    .expect("valid fixture")
}

/// `P = [[½, ½], [½, ½]]`: `M_01 = 2`, `T_01 = 4`.
pub fn symmetric_two_state() -> ErgodicChain {
    ErgodicChain::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).expect("valid fixture")
}

pub fn birth_death() -> ErgodicChain {
    ErgodicChain::from_rows(&[
        vec![0.5, 0.5, 0.0],
        vec![0.25, 0.5, 0.25],
        vec![0.0, 0.5, 0.5],
    ])
    .expect("valid fixture")
}

/// Two states that swap with probability `1 − hold`.
pub fn lazy_two_cycle(hold: f64) -> ErgodicChain {
    ErgodicChain::from_rows(&[vec![hold, 1.0 - hold], vec![1.0 - hold, hold]])
        .expect("valid fixture")
}

/// Lazy random walk on a `side × side` grid graph.
pub fn grid_walk(side: usize) -> ErgodicChain {
    let n = side * side;
    let mut rows = vec![vec![0.0; n]; n];
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            let mut nbrs = Vec::new();
            if r > 0 {
                nbrs.push(i - side);
            }
            if r + 1 < side {
                nbrs.push(i + side);
            }
            if c > 0 {
                nbrs.push(i - 1);
            }
            if c + 1 < side {
                nbrs.push(i + 1);
            }
            rows[i][i] = 0.5;
            for &j in &nbrs {
                rows[i][j] = 0.5 / nbrs.len() as f64;
            }
        }
    }
    ErgodicChain::from_rows(&rows).expect("valid fixture")
}

/// Five-point squared-distance table that satisfies every triangle inequality
/// but has no Euclidean realization.
pub fn counterexample_t() -> DMatrix<f64> {
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

/// Lazy walk around a directed `n`-cycle: hold or step to `i + 1` with probability ½.
pub fn lazy_directed_cycle(n: usize) -> ErgodicChain {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 0.5;
        row[(i + 1) % n] = 0.5;
    }
    ErgodicChain::from_rows(&rows).expect("valid fixture")
}
