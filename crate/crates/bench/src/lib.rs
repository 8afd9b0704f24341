//! Inputs shared by the benchmarks.

use commute_core::testing::corpus::random_chain;
use commute_core::ErgodicChain;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn chain(n: usize, seed: u64) -> ErgodicChain {
    random_chain(n, &mut ChaCha8Rng::seed_from_u64(seed))
}
