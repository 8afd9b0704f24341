//! Monte Carlo estimators used as an independent check on the analytic results.
//!
//! All randomness comes from ChaCha8 ([`RNG_ALGORITHM`]). Episode-based
//! estimators give episode `k` its own stream (`set_stream(k)`) of a generator
//! seeded with the caller's seed, so results do not depend on evaluation order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::ErgodicChain;
use crate::error::{check_index, check_pair, Error, Result};
use crate::linalg;

pub const RNG_ALGORITHM: &str = "chacha8";

/// Fewest completed commutes accepted by the paint estimator.
pub const MIN_RENEWALS: usize = 30;

const BATCHES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "state")]
pub enum Start {
    State(usize),
    Stationary,
}

/// Sample mean with its standard error (absent for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub standard_error: Option<f64>,
    pub samples: usize,
}

impl Estimate {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let standard_error = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self {
            mean,
            standard_error,
            samples: n,
        }
    }

    /// `|mean − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        self.standard_error
            .map(|se| (self.mean - target).abs() / se)
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target).is_some_and(|z| z <= sigmas)
    }
}

/// Inverse-CDF sampler over the rows of `P`.
#[derive(Debug, Clone)]
struct Sampler {
    cdf: Vec<Vec<f64>>,
    last_positive: Vec<usize>,
}

impl Sampler {
    fn new(p: &DMatrix<f64>) -> Self {
        let n = p.nrows();
        let mut cdf = Vec::with_capacity(n);
        let mut last_positive = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            cdf.push(
                (0..n)
                    .map(|j| {
                        acc += p[(i, j)];
                        acc
                    })
                    .collect(),
            );
            last_positive.push((0..n).rev().find(|&j| p[(i, j)] > 0.0).unwrap_or(n - 1));
        }
        Self { cdf, last_positive }
    }

    fn draw_from(cdf: &[f64], fallback: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        cdf.iter().position(|&c| u < c).unwrap_or(fallback)
    }

    fn step(&self, state: usize, rng: &mut ChaCha8Rng) -> usize {
        Self::draw_from(&self.cdf[state], self.last_positive[state], rng)
    }
}

fn stationary_cdf(chain: &ErgodicChain) -> Vec<f64> {
    let mut acc = 0.0;
    chain
        .w()
        .as_vector()
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn initial_state(chain: &ErgodicChain, start: Start, rng: &mut ChaCha8Rng) -> Result<usize> {
    match start {
        Start::State(i) => {
            check_index(i, chain.n())?;
            Ok(i)
        }
        Start::Stationary => Ok(Sampler::draw_from(
            &stationary_cdf(chain),
            chain.n() - 1,
            rng,
        )),
    }
}

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

/// One simulated trajectory `X_0, …, X_steps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub steps: usize,
    pub rng_algorithm: String,
    pub rng_seed: u64,
    pub start: usize,
    /// Visits at times `1..=steps`.
    pub visit_counts: Vec<u64>,
    pub empirical_w: Vec<f64>,
    /// Batch-means standard error of each visit frequency.
    pub w_standard_error: Vec<Option<f64>>,
    /// `transition_counts[i][j]` counts steps from `i` to `j`.
    pub transition_counts: Vec<Vec<u64>>,
}

impl TrajectorySample {
    /// Backward-read transition frequencies, estimating the reversed chain's
    /// `P̂_ij`, with a binomial standard error per entry.
    pub fn reversed_transition_estimate(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.visit_counts.len();
        let mut estimate = DMatrix::zeros(n, n);
        let mut se = DMatrix::zeros(n, n);
        for i in 0..n {
            let arrivals = self.visit_counts[i] as f64;
            if arrivals == 0.0 {
                continue;
            }
            for j in 0..n {
                let p = self.transition_counts[j][i] as f64 / arrivals;
                estimate[(i, j)] = p;
                se[(i, j)] = (p * (1.0 - p) / arrivals).sqrt();
            }
        }
        (estimate, se)
    }
}

pub fn simulate(
    chain: &ErgodicChain,
    steps: usize,
    seed: u64,
    start: Start,
) -> Result<TrajectorySample> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let n = chain.n();
    let sampler = Sampler::new(chain.p());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = initial_state(chain, start, &mut rng)?;
    let batch_len = steps / BATCHES;
    let mut batch_counts = vec![vec![0u64; n]; if batch_len > 0 { BATCHES } else { 0 }];
    let mut visit_counts = vec![0u64; n];
    let mut transition_counts = vec![vec![0u64; n]; n];
    let mut state = first;
    for t in 0..steps {
        let next = sampler.step(state, &mut rng);
        visit_counts[next] += 1;
        transition_counts[state][next] += 1;
        if batch_len > 0 && t / batch_len < BATCHES {
            batch_counts[t / batch_len][next] += 1;
        }
        state = next;
    }
    let empirical_w = visit_counts
        .iter()
        .map(|&c| c as f64 / steps as f64)
        .collect();
    let w_standard_error = (0..n)
        .map(|i| {
            (batch_len > 0).then(|| {
                let freqs: Vec<f64> = batch_counts
                    .iter()
                    .map(|b| b[i] as f64 / batch_len as f64)
                    .collect();
                Estimate::from_samples(&freqs).standard_error.unwrap_or(0.0)
            })
        })
        .collect();
    Ok(TrajectorySample {
        steps,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        rng_seed: seed,
        start: first,
        visit_counts,
        empirical_w,
        w_standard_error,
        transition_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaintEstimate {
    /// `steps / R`.
    pub estimate: f64,
    pub standard_error: f64,
    /// Completed commutes (half the number of repaints).
    pub renewals: usize,
    pub steps: usize,
}

impl PaintEstimate {
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.estimate - target).abs() <= sigmas * self.standard_error
    }
}

/// Paint the particle green at `a` and red at `b` along one stationary-start
/// trajectory; each green→red→green round is one commute.
///
/// The renewal count depends only on the sequence of repaints, so `(a, b)` and
/// `(b, a)` give identical results for the same seed.
pub fn estimate_commute_paint(
    chain: &ErgodicChain,
    a: usize,
    b: usize,
    steps: usize,
    seed: u64,
) -> Result<PaintEstimate> {
    check_pair(a, b, chain.n())?;
    let sampler = Sampler::new(chain.p());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial_state(chain, Start::Stationary, &mut rng)?;
    let mut color: Option<bool> = None;
    let mut repaints: Vec<usize> = Vec::new();
    for t in 0..=steps {
        if t > 0 {
            state = sampler.step(state, &mut rng);
        }
        let painted = if state == a {
            Some(true)
        } else if state == b {
            Some(false)
        } else {
            None
        };
        if let Some(c) = painted {
            if color.is_some_and(|old| old != c) {
                repaints.push(t);
            }
            color = Some(c);
        }
    }
    let renewals = repaints.len() / 2;
    if renewals < MIN_RENEWALS {
        return Err(Error::TooFewRenewals(renewals));
    }
    let durations: Vec<f64> = repaints
        .windows(3)
        .step_by(2)
        .map(|w| (w[2] - w[0]) as f64)
        .collect();
    let mean = durations.iter().sum::<f64>() / durations.len() as f64;
    let var =
        durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (durations.len() - 1) as f64;
    let sd = var.sqrt();
    Ok(PaintEstimate {
        estimate: steps as f64 / renewals as f64,
        standard_error: sd / (renewals as f64).sqrt(),
        renewals,
        steps,
    })
}

/// Mean first-passage time from `a` to `b` over independent episodes.
pub fn estimate_hitting(
    chain: &ErgodicChain,
    a: usize,
    b: usize,
    episodes: usize,
    seed: u64,
) -> Result<Estimate> {
    check_pair(a, b, chain.n())?;
    if episodes == 0 {
        return Err(Error::InvalidArgument("episodes must be at least 1".into()));
    }
    let sampler = Sampler::new(chain.p());
    let times: Vec<f64> = (0..episodes)
        .map(|e| {
            let mut rng = episode_rng(seed, e);
            let (mut state, mut t) = (a, 0u64);
            while state != b {
                state = sampler.step(state, &mut rng);
                t += 1;
            }
            t as f64
        })
        .collect();
    Ok(Estimate::from_samples(&times))
}

/// Max-abs entry of `P^k − P∞`, the size of the first omitted series term.
pub fn series_residual(chain: &ErgodicChain, k: usize) -> f64 {
    let n = chain.n();
    let mut result = DMatrix::identity(n, n);
    let mut base = chain.p().clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    let w = chain.w();
    linalg::max_abs(&DMatrix::from_fn(n, n, |i, j| result[(i, j)] - w[j]))
}

/// Mean over episodes of `(visits to j at times 0..horizon) − horizon·w_j`,
/// starting from `start`. Estimates the raised `Z` entry `(i, j)` when starting at `i`.
pub fn estimate_excess_visits(
    chain: &ErgodicChain,
    start: Start,
    j: usize,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<Estimate> {
    check_index(j, chain.n())?;
    if episodes == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "horizon and episodes must be at least 1".into(),
        ));
    }
    let residual = series_residual(chain, horizon);
    if residual > 0.01 {
        log::warn!("horizon {horizon} is short for this chain: series residual {residual:.3e}");
    }
    let sampler = Sampler::new(chain.p());
    let baseline = horizon as f64 * chain.w()[j];
    let mut excess = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut rng = episode_rng(seed, e);
        let mut state = initial_state(chain, start, &mut rng)?;
        let mut visits = 0u64;
        for t in 0..horizon {
            if t > 0 {
                state = sampler.step(state, &mut rng);
            }
            visits += u64::from(state == j);
        }
        excess.push(visits as f64 - baseline);
    }
    Ok(Estimate::from_samples(&excess))
}
