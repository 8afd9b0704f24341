//! Structural laws of commuting times: the obstruction to reversibility, the
//! minimax characterization and the monotonicity law.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{chain_from_laplacian, EquilibriumMeasure, ErgodicChain, Laplacian};
use crate::error::{check_index, check_pair, Error, Result};
use crate::fundamental::{fundamental_matrix, FundamentalMatrix};
use crate::linalg;
use crate::potential::{hitting_probabilities, CommuteStructure, Direction, EnergyForm};
use crate::settings::NumericSettings;

/// Tolerance on energies and saddle identities.
pub const ENERGY_TOL: f64 = 1e-9;

fn cycle_sum(m: &DMatrix<f64>, a: usize, b: usize, c: usize) -> f64 {
    m[(a, b)] + m[(b, c)] + m[(c, a)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversibilityReport {
    /// Verdict of the cycle-sum test.
    pub reversible: bool,
    /// Max over 3-cycles through the ground state of the forward/backward hitting-time gap.
    pub max_cycle_defect: f64,
    /// Max |Δ_ij − Δ_ji|.
    pub detailed_balance_defect: f64,
    pub detailed_balance: bool,
    /// `Z_ij − Z_ji` with row and column of the ground state gauged to zero.
    pub obstruction: DMatrix<f64>,
    pub max_obstruction: f64,
    pub obstruction_vanishes: bool,
    pub ground_state: usize,
    pub rev_tol: f64,
}

impl ReversibilityReport {
    /// True when all three tests give the same verdict.
    pub fn criteria_agree(&self) -> bool {
        self.reversible == self.detailed_balance && self.reversible == self.obstruction_vanishes
    }
}

/// Antisymmetric part of the lowered `Z`, reduced modulo `a_i − a_j` so that the
/// ground state's row and column vanish. Entry `(i, j)` is then the integral of
/// the class around the triangle `i → j → ground → i`.
pub fn gauge_fixed_obstruction(z: &FundamentalMatrix, ground: usize) -> Result<DMatrix<f64>> {
    let n = z.n();
    check_index(ground, n)?;
    let zl = z.lowered();
    let raw = |i: usize, j: usize| zl[(i, j)] - zl[(j, i)];
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if i == ground || j == ground {
                continue;
            }
            let v = raw(i, j) + raw(j, ground) + raw(ground, i);
            out[(i, j)] = v;
            out[(j, i)] = -v;
        }
    }
    Ok(out)
}

/// Three equivalent reversibility tests: detailed balance on `Δ`, hitting-time
/// cycle sums over the 3-cycles through `ground` (a cycle basis), and vanishing
/// of the gauge-fixed obstruction class.
pub fn reversibility_check(
    chain: &ErgodicChain,
    hitting: &DMatrix<f64>,
    z: &FundamentalMatrix,
    ground: usize,
    rev_tol: f64,
) -> Result<ReversibilityReport> {
    let n = chain.n();
    check_index(ground, n)?;
    if hitting.nrows() != n || z.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: hitting.nrows(),
        });
    }
    let mut max_cycle_defect: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            if a == ground || b == ground {
                continue;
            }
            let forward = cycle_sum(hitting, a, b, ground);
            let backward = cycle_sum(hitting, a, ground, b);
            max_cycle_defect = max_cycle_defect.max((forward - backward).abs());
        }
    }
    let detailed_balance_defect = chain.detailed_balance_defect();
    let obstruction = gauge_fixed_obstruction(z, ground)?;
    let max_obstruction = linalg::max_abs(&obstruction);
    Ok(ReversibilityReport {
        reversible: max_cycle_defect <= rev_tol,
        max_cycle_defect,
        detailed_balance_defect,
        detailed_balance: detailed_balance_defect <= rev_tol,
        obstruction,
        max_obstruction,
        obstruction_vanishes: max_obstruction <= rev_tol,
        ground_state: ground,
        rev_tol,
    })
}

/// Max over all triples of `|(M_ab + M_bc + M_ca) − (M̂_ac + M̂_cb + M̂_ba)|`,
/// where `M̂` belongs to the reversed chain. Zero for every chain.
pub fn reversed_cycle_identity_defect(hitting: &DMatrix<f64>, reversed: &DMatrix<f64>) -> f64 {
    let n = hitting.nrows();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let lhs = cycle_sum(hitting, a, b, c);
                let rhs = cycle_sum(reversed, a, c, b);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletCheck {
    /// `L(φ̄, φ̄)`, which should equal `r_ab`.
    pub at_minimizer: f64,
    /// Smallest `L(φ, φ)` over the random trial potentials.
    pub min_trial_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxReport {
    pub a: usize,
    pub b: usize,
    pub commute_time: f64,
    /// `r_ab = 1 / T_ab`.
    pub rate: f64,
    /// `L(φ̄, ψ̄)`.
    pub saddle_value: f64,
    pub perturbations: usize,
    /// Largest `L(φ̄ + f, ψ̄ − f)` seen.
    pub max_value: f64,
    /// Largest `|L(φ̄ + f, ψ̄ − f) − (r_ab − L(f, f))|`.
    pub max_decomposition_error: f64,
    /// Smallest `L(f, f) / max(1, |f|∞²)`.
    pub min_self_energy: f64,
    /// Present for reversible chains.
    pub dirichlet: Option<DirichletCheck>,
}

impl MinimaxReport {
    pub fn saddle_error(&self) -> f64 {
        (self.saddle_value - self.rate).abs()
    }

    /// Worst violation of any checked identity or inequality; nonpositive means all hold.
    pub fn max_violation(&self) -> f64 {
        let mut worst = (self.saddle_error() - ENERGY_TOL)
            .max(self.max_value - self.rate - ENERGY_TOL)
            .max(self.max_decomposition_error - ENERGY_TOL)
            .max(-1e-12 - self.min_self_energy);
        if let Some(d) = &self.dirichlet {
            worst = worst
                .max((d.at_minimizer - self.rate).abs() - ENERGY_TOL)
                .max(self.rate - ENERGY_TOL - d.min_trial_energy);
        }
        worst
    }

    pub fn passed(&self) -> bool {
        self.max_violation() <= 0.0
    }
}

fn random_interior(n: usize, a: usize, b: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        if i == a || i == b {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        }
    })
}

/// Checks the saddle structure of `L` at the pair of hitting-probability
/// potentials `(φ̄, ψ̄)`: `L(φ̄, ψ̄) = r_ab` and, for random `f` vanishing at
/// `a` and `b`, `L(φ̄ + f, ψ̄ − f) = r_ab − L(f, f) ≤ r_ab`.
pub fn minimax_verify(
    chain: &ErgodicChain,
    a: usize,
    b: usize,
    num_perturbations: usize,
    seed: u64,
) -> Result<MinimaxReport> {
    check_pair(a, b, chain.n())?;
    let z = fundamental_matrix(chain)?;
    let t_ab = CommuteStructure::new(&z).commute()[(a, b)];
    minimax_verify_with_commute(chain, a, b, t_ab, num_perturbations, seed)
}

/// As [`minimax_verify`], with the commute time supplied by the caller.
pub fn minimax_verify_with_commute(
    chain: &ErgodicChain,
    a: usize,
    b: usize,
    commute_time: f64,
    num_perturbations: usize,
    seed: u64,
) -> Result<MinimaxReport> {
    let n = chain.n();
    check_pair(a, b, n)?;
    let form = EnergyForm::new(chain);
    let rate = 1.0 / commute_time;
    let psi = hitting_probabilities(chain, a, b, Direction::Forward)?;
    let phi = hitting_probabilities(chain, a, b, Direction::Backward)?;
    let saddle_value = form.eval(&phi, &psi);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_value = saddle_value;
    let mut max_decomposition_error: f64 = 0.0;
    let mut min_self_energy = f64::INFINITY;
    for _ in 0..num_perturbations {
        let f = random_interior(n, a, b, &mut rng);
        let value = form.eval(&(&phi + &f), &(&psi - &f));
        let self_energy = form.eval(&f, &f);
        max_value = max_value.max(value);
        max_decomposition_error = max_decomposition_error.max((value - (rate - self_energy)).abs());
        let scale = linalg::max_abs_vec(&f).powi(2).max(1.0);
        min_self_energy = min_self_energy.min(self_energy / scale);
    }
    if num_perturbations == 0 {
        min_self_energy = 0.0;
    }

    let dirichlet = (chain.detailed_balance_defect() <= chain.settings().rev_tol).then(|| {
        let mut min_trial_energy = f64::INFINITY;
        for _ in 0..num_perturbations.max(1) {
            let trial = &phi + random_interior(n, a, b, &mut rng);
            min_trial_energy = min_trial_energy.min(form.eval(&trial, &trial));
        }
        DirichletCheck {
            at_minimizer: form.eval(&phi, &phi),
            min_trial_energy,
        }
    });

    Ok(MinimaxReport {
        a,
        b,
        commute_time,
        rate,
        saddle_value,
        perturbations: num_perturbations,
        max_value,
        max_decomposition_error,
        min_self_energy,
        dirichlet,
    })
}

/// `L(φ, φ)` for a reversible chain and `φ` pinned to 1 at `a` and 0 at `b`:
/// an upper bound on `r_ab`, hence `1 / L(φ, φ)` bounds `T_ab` from below.
pub fn dirichlet_bound(
    chain: &ErgodicChain,
    a: usize,
    b: usize,
    phi: &DVector<f64>,
) -> Result<f64> {
    let n = chain.n();
    check_pair(a, b, n)?;
    let defect = chain.detailed_balance_defect();
    if defect > chain.settings().rev_tol {
        return Err(Error::NotReversible(defect));
    }
    if phi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: phi.len(),
        });
    }
    let tol = chain.settings().structural_tol;
    if (phi[a] - 1.0).abs() > tol || phi[b].abs() > tol {
        return Err(Error::InvalidPotential);
    }
    Ok(EnergyForm::new(chain).eval(phi, phi))
}

/// A uniform rate added along a directed cycle of distinct states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circulation {
    cycle: Vec<usize>,
    rate: f64,
}

impl Circulation {
    pub fn new(cycle: Vec<usize>, rate: f64) -> Result<Self> {
        if cycle.len() < 2 {
            return Err(Error::InvalidCirculation(
                "cycle needs at least two states".into(),
            ));
        }
        let mut sorted = cycle.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != cycle.len() {
            return Err(Error::InvalidCirculation("cycle repeats a state".into()));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidCirculation(format!(
                "rate {rate} is not positive"
            )));
        }
        Ok(Self { cycle, rate })
    }

    pub fn cycle(&self) -> &[usize] {
        &self.cycle
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Change to `Δ`: `−ε` on each cycle edge `(i, next)` and `+ε` on `(i, i)`.
    pub fn increment(&self, n: usize) -> Result<DMatrix<f64>> {
        let mut inc = DMatrix::zeros(n, n);
        for (k, &i) in self.cycle.iter().enumerate() {
            let j = self.cycle[(k + 1) % self.cycle.len()];
            check_index(i, n)?;
            check_index(j, n)?;
            inc[(i, j)] -= self.rate;
            inc[(i, i)] += self.rate;
        }
        Ok(inc)
    }
}

/// A chain in the class of a perturbed Laplacian `Δ̄`.
///
/// When `Δ̄` has a diagonal entry above the original measure, the realizing
/// chain uses `w̄ ∝ max(Δ̄_ii, w_i)`, or `max(2Δ̄_ii, w_i)` if the former is
/// periodic. Normalizing `w̄` slows the chain's clock by `time_scale`, the sum
/// of the unnormalized weights, so `chain` has Laplacian `Δ̄ / time_scale` and
/// times measured in its steps are `time_scale` times the times of `Δ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonChain {
    pub chain: ErgodicChain,
    pub rates: Laplacian,
    pub time_scale: f64,
}

impl ComparisonChain {
    /// Commute times of `Δ̄`, in the original chain's time units.
    pub fn commute_times(&self) -> Result<DMatrix<f64>> {
        let z = fundamental_matrix(&self.chain)?;
        Ok(CommuteStructure::new(&z).commute() / self.time_scale)
    }
}

/// Adds every circulation to `Δ` and realizes the result as a chain.
pub fn apply_circulations(
    chain: &ErgodicChain,
    circulations: &[Circulation],
) -> Result<ComparisonChain> {
    let n = chain.n();
    let settings = chain.settings();
    let mut delta_bar = chain.delta().clone();
    for c in circulations {
        delta_bar += c.increment(n)?;
    }
    let rates = Laplacian::new(delta_bar, settings)?;
    let d = rates.matrix();
    let w = chain.w();
    let first = if (0..n).all(|i| d[(i, i)] <= w[i]) {
        chain_from_laplacian(&rates, w, settings).map(|realized| ComparisonChain {
            chain: realized,
            rates: rates.clone(),
            time_scale: 1.0,
        })
    } else {
        let minimal: Vec<f64> = (0..n).map(|i| d[(i, i)].max(w[i])).collect();
        realize_scaled(&rates, &minimal, settings)
    };
    match first {
        // Equality w̄_i = Δ̄_ii removes the holding probability at i and can
        // leave a periodic chain. Doubling keeps every such P̄_ii at ½.
        Err(Error::Periodic(_)) => {
            let lazy: Vec<f64> = (0..n).map(|i| (2.0 * d[(i, i)]).max(w[i])).collect();
            realize_scaled(&rates, &lazy, settings)
        }
        other => other,
    }
}

fn realize_scaled(
    rates: &Laplacian,
    weights: &[f64],
    settings: &NumericSettings,
) -> Result<ComparisonChain> {
    let time_scale: f64 = weights.iter().sum();
    let scaled = Laplacian::new(rates.matrix() / time_scale, settings)?;
    let w_bar = DVector::from_iterator(weights.len(), weights.iter().map(|x| x / time_scale));
    let measure = EquilibriumMeasure::new(w_bar, settings)?;
    let realized = chain_from_laplacian(&scaled, &measure, settings)?;
    Ok(ComparisonChain {
        chain: realized,
        rates: rates.clone(),
        time_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonotonicityConfig {
    pub trials: usize,
    pub seed: u64,
    /// Flip the comparison (expect `T ≤ T̄`). Only useful for exercising the
    /// failure path; a correct implementation then reports violations.
    pub invert_comparison: bool,
}

impl MonotonicityConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            invert_comparison: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub completed: usize,
    /// Trials whose comparison chain could not be realized.
    pub skipped: usize,
    /// Number of `(trial, pair)` comparisons with `T̄ > T + tolerance`.
    pub violations: usize,
    /// Largest `(T̄_ij − T_ij) / max T` observed; `None` when no trial completed.
    pub worst_margin: Option<f64>,
    pub max_commute: f64,
    pub tolerance: f64,
    pub inverted: bool,
}

/// Draws 1–3 circulations on random cycles of 2–4 states with rates in `[0.001, 0.1)`.
pub fn random_circulations(n: usize, rng: &mut impl Rng) -> Vec<Circulation> {
    let count = rng.random_range(1..=3);
    (0..count)
        .map(|_| {
            let len = rng.random_range(2..=n.min(4));
            let cycle = sample(rng, n, len).into_vec();
            let rate = rng.random_range(0.001..0.1);
            Circulation::new(cycle, rate).expect("sampled cycles are valid")
        })
        .collect()
}

/// Random circulation trials checking `T̄ ≤ T` entrywise. Trial `k` draws from
/// its own stream of a ChaCha8 generator seeded with `seed`.
///
/// The inequality always holds for reversible chains. Non-reversible chains
/// can violate it: see `lazy_directed_cycle` in the test fixtures.
pub fn monotonicity_experiment(
    chain: &ErgodicChain,
    config: MonotonicityConfig,
) -> Result<MonotonicityReport> {
    let n = chain.n();
    let z = fundamental_matrix(chain)?;
    let base = CommuteStructure::new(&z).commute().clone();
    let max_commute = linalg::max_abs(&base);
    let tolerance = ENERGY_TOL * max_commute;
    let mut report = MonotonicityReport {
        trials: config.trials,
        completed: 0,
        skipped: 0,
        violations: 0,
        worst_margin: None,
        max_commute,
        tolerance,
        inverted: config.invert_comparison,
    };
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64);
        let circulations = random_circulations(n, &mut rng);
        let perturbed =
            match apply_circulations(chain, &circulations).and_then(|c| c.commute_times()) {
                Ok(t) => t,
                Err(err) => {
                    log::debug!("trial {trial} skipped: {err}");
                    report.skipped += 1;
                    continue;
                }
            };
        report.completed += 1;
        for i in 0..n {
            for j in (i + 1)..n {
                let (lower, upper) = if config.invert_comparison {
                    (base[(i, j)], perturbed[(i, j)])
                } else {
                    (perturbed[(i, j)], base[(i, j)])
                };
                let margin = (lower - upper) / max_commute;
                report.worst_margin = Some(report.worst_margin.map_or(margin, |m| m.max(margin)));
                if lower > upper + tolerance {
                    report.violations += 1;
                }
            }
        }
    }
    Ok(report)
}
