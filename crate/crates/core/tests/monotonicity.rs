use commute_core::nalgebra::DMatrix;
use commute_core::testing::{corpus, fixtures, oracle};
use commute_core::{
    apply_circulations, fundamental_matrix, monotonicity_experiment, Circulation, CommuteStructure,
    ErgodicChain, MonotonicityConfig,
};

fn commute(chain: &ErgodicChain) -> DMatrix<f64> {
    CommuteStructure::new(&fundamental_matrix(chain).unwrap())
        .commute()
        .clone()
}

#[test]
fn added_rates_never_slow_a_reversible_chain() {
    for (k, chain) in corpus::reversible_corpus(60, 31).iter().enumerate() {
        let report = monotonicity_experiment(chain, MonotonicityConfig::new(50, k as u64)).unwrap();
        assert_eq!(report.violations, 0, "chain {k}: {report:?}");
        assert!(report.completed > 0);
    }
}

#[test]
fn inverted_comparison_reports_violations() {
    let chain = fixtures::grid_walk(2);
    let mut config = MonotonicityConfig::new(20, 1);
    config.invert_comparison = true;
    assert!(monotonicity_experiment(&chain, config).unwrap().violations > 0);
}

/// A wire between opposite corners of a lazy directed 4-cycle lets the walker
/// fall back from 2 to 0 on its way from 1 to 3, so `T_13` grows from 8 to 28/3.
#[test]
fn added_rates_can_slow_a_non_reversible_chain() {
    let chain = fixtures::lazy_directed_cycle(4);
    let before = commute(&chain);
    assert!((before[(1, 3)] - 8.0).abs() < 1e-12);

    // Rate 0.1 · w = 0.025 each way between 0 and 2.
    let wire = Circulation::new(vec![0, 2], 0.025).unwrap();
    let comparison = apply_circulations(&chain, &[wire]).unwrap();
    assert_eq!(comparison.time_scale, 1.0);
    let after = comparison.commute_times().unwrap();
    assert!(
        (after[(1, 3)] - 28.0 / 3.0).abs() < 1e-12,
        "{}",
        after[(1, 3)]
    );
    assert!(after[(0, 2)] < before[(0, 2)]);

    let m = oracle::first_step_hitting_times(&comparison.chain);
    assert!((m[(1, 3)] + m[(3, 1)] - 28.0 / 3.0).abs() < 1e-12);

    let report = monotonicity_experiment(&chain, MonotonicityConfig::new(100, 0)).unwrap();
    assert!(report.violations > 0, "{report:?}");
}

#[test]
fn periodic_realizations_fall_back_to_a_lazier_measure() {
    // On two states Δ̄_00 = Δ̄_11, so a large enough rate forces w̄_i = Δ̄_ii at
    // both states and the flip-flop chain.
    let chain = ErgodicChain::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let before = commute(&chain);
    // Base rate w_0 P_01 = ¼; adding ¼ doubles it and adding ½ triples it.
    for (rate, factor) in [(0.25, 2.0), (0.5, 3.0)] {
        let c = apply_circulations(&chain, &[Circulation::new(vec![0, 1], rate).unwrap()]).unwrap();
        assert!(c.chain.p()[(0, 0)] >= 0.5 - 1e-12);
        let after = c.commute_times().unwrap();
        assert!(
            (after[(0, 1)] - before[(0, 1)] / factor).abs() < 1e-12,
            "{}",
            after[(0, 1)]
        );
    }
}
