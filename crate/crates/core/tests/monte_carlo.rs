use commute_core::mc::{series_residual, RNG_ALGORITHM};
use commute_core::testing::fixtures;
use commute_core::{
    estimate_commute_paint, estimate_excess_visits, estimate_hitting, fundamental_matrix,
    hitting_probabilities, simulate, CommuteStructure, Direction, Start,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn two_state_visit_frequencies() {
    let chain = fixtures::symmetric_two_state();
    let sample = simulate(&chain, 100_000, 5, Start::State(0)).unwrap();
    assert_eq!(sample.rng_algorithm, RNG_ALGORITHM);
    for i in 0..2 {
        let se = sample.w_standard_error[i].unwrap();
        assert!(
            (sample.empirical_w[i] - 0.5).abs() <= 3.0 * se,
            "{} ± {}",
            sample.empirical_w[i],
            se
        );
    }
}

#[test]
fn simulation_is_deterministic() {
    let chain = fixtures::biased_triangle();
    let a = simulate(&chain, 1000, 77, Start::Stationary).unwrap();
    let b = simulate(&chain, 1000, 77, Start::Stationary).unwrap();
    assert_eq!(a, b);
}

#[test]
fn paint_estimates_match_commute_times() {
    let chain = fixtures::biased_triangle();
    let z = fundamental_matrix(&chain).unwrap();
    let t = CommuteStructure::new(&z).commute().clone();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let est = estimate_commute_paint(&chain, a, b, 1_000_000, 100 + a as u64).unwrap();
        assert!(est.within(t[(a, b)], 3.0), "{est:?} vs {}", t[(a, b)]);
        let swapped = estimate_commute_paint(&chain, b, a, 1_000_000, 100 + a as u64).unwrap();
        assert_eq!(est, swapped);
    }
}

#[test]
fn paint_scheme_on_a_non_reversible_chain() {
    let chain = commute_core::ErgodicChain::from_rows(&[
        vec![0.1, 0.6, 0.2, 0.1],
        vec![0.05, 0.1, 0.8, 0.05],
        vec![0.3, 0.0, 0.2, 0.5],
        vec![0.7, 0.1, 0.0, 0.2],
    ])
    .unwrap();
    assert!(chain.detailed_balance_defect() > 1e-3);
    let t = CommuteStructure::new(&fundamental_matrix(&chain).unwrap())
        .commute()
        .clone();
    let est = estimate_commute_paint(&chain, 0, 3, 500_000, 9).unwrap();
    assert!(est.within(t[(0, 3)], 3.0), "{est:?} vs {}", t[(0, 3)]);
}

#[test]
fn too_few_renewals_is_reported() {
    let chain = fixtures::symmetric_two_state();
    let err = estimate_commute_paint(&chain, 0, 1, 20, 1).unwrap_err();
    assert_eq!(err.code(), "too_few_renewals");
}

#[test]
fn hitting_estimates() {
    let two = fixtures::symmetric_two_state();
    let est = estimate_hitting(&two, 0, 1, 10_000, 3).unwrap();
    assert!(est.within(2.0, 3.0), "{est:?}");

    let single = estimate_hitting(&two, 0, 1, 1, 3).unwrap();
    assert!(single.standard_error.is_none());
    assert!(single.mean >= 1.0 && single.mean.fract() == 0.0);

    let tri = fixtures::biased_triangle();
    let m = CommuteStructure::new(&fundamental_matrix(&tri).unwrap())
        .hitting()
        .clone();
    for (a, b) in [(0, 1), (1, 0), (2, 0)] {
        let est = estimate_hitting(&tri, a, b, 10_000, 40 + b as u64).unwrap();
        assert!(est.within(m[(a, b)], 3.0), "{est:?} vs {}", m[(a, b)]);
    }
}

#[test]
fn excess_visits_estimate_z() {
    let two = fixtures::symmetric_two_state();
    let est = estimate_excess_visits(&two, Start::State(0), 0, 50, 10_000, 8).unwrap();
    assert!(est.within(0.5, 3.0), "{est:?}");

    let tri = fixtures::biased_triangle();
    let z = fundamental_matrix(&tri).unwrap();
    assert!(series_residual(&tri, 200) < 1e-10);
    for (i, j) in [(0, 0), (0, 1), (2, 1)] {
        let est =
            estimate_excess_visits(&tri, Start::State(i), j, 200, 10_000, 20 + i as u64).unwrap();
        assert!(
            est.within(z.raised()[(i, j)], 3.0),
            "{est:?} vs {}",
            z.raised()[(i, j)]
        );
    }

    let stationary = estimate_excess_visits(&tri, Start::Stationary, 1, 200, 10_000, 31).unwrap();
    assert!(stationary.within(0.0, 3.0), "{stationary:?}");
}

#[test]
fn backward_reading_matches_the_reversed_chain() {
    let chain = fixtures::biased_triangle();
    let reversed = chain.time_reverse();
    let sample = simulate(&chain, 200_000, 12, Start::Stationary).unwrap();
    let (estimate, se) = sample.reversed_transition_estimate();
    for i in 0..3 {
        for j in 0..3 {
            let target = reversed.p()[(i, j)];
            let err = (estimate[(i, j)] - target).abs();
            assert!(
                err <= 3.0 * se[(i, j)] + 1e-12,
                "({i},{j}): {} vs {target}",
                estimate[(i, j)]
            );
        }
    }
}

#[test]
fn forward_hitting_probability_matches_first_passage_frequency() {
    let chain = fixtures::biased_triangle();
    let p = hitting_probabilities(&chain, 0, 1, Direction::Forward).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let episodes = 10_000;
    let mut hits = 0;
    for _ in 0..episodes {
        let mut state = 2;
        while state == 2 {
            let u: f64 = rng.random();
            let row = chain.p().row(state);
            let mut acc = 0.0;
            state = (0..3)
                .find(|&k| {
                    acc += row[k];
                    u < acc
                })
                .unwrap_or(2);
        }
        hits += usize::from(state == 0);
    }
    let freq = hits as f64 / episodes as f64;
    let se = (p[2] * (1.0 - p[2]) / episodes as f64).sqrt();
    assert!((freq - p[2]).abs() <= 3.0 * se, "{freq} vs {}", p[2]);
}
