mod common;

use std::collections::BTreeMap;

use adiasim::builder::{build_las_vegas, build_monte_carlo, ChainSet, SamplerGraph};
use adiasim::graph::{Meta, RegisterTriple};
use adiasim::observer::*;
use adiasim::stats::{tv_distance, EmpiricalDist};
use adiasim::toy::{or2_inputs, or2_tm, trivial_inputs, trivial_tm};
use common::props;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn or_lv() -> SamplerGraph {
    build_las_vegas(&ChainSet::from_tm(&or2_tm(), 2, &or2_inputs(), 100).unwrap()).unwrap()
}

fn synthetic_lv(t: usize, r: u32) -> SamplerGraph {
    let chains = (0..1usize << r)
        .map(|b| vec![RegisterTriple::new(vec![], Meta::ZERO, vec![(b & 1) as u8]); t])
        .collect();
    build_las_vegas(&ChainSet::new(r, chains).unwrap()).unwrap()
}

#[test]
fn exact_efficiency_limits() {
    let lv = or_lv();
    let lp = LayerProcess::new(&lv.layered).unwrap();
    let st = lp.stationary();
    assert!((st.p_minus - 1.0 / 3.0).abs() < 1e-12 && (st.p_plus - 1.0 / 3.0).abs() < 1e-12);
    let late = lp.efficiency(1e5);
    assert!((late.p_minus - st.p_minus).abs() < 1e-9);
    let early = lp.efficiency(0.0);
    assert_eq!(early.min(), 0.0);
    // From a +1 layer at wait 0 the +1 reading is certain.
    let p = lp.distribution(lv.layer_count() - 1, 0.0);
    assert_eq!(p[lv.layer_count() - 1], 1.0);
}

#[test]
fn monte_carlo_efficiency_matches_exact() {
    let lv = or_lv();
    let w = calibrate_wait(&lv.layered, 0.25).unwrap();
    let exact = LayerProcess::new(&lv.layered).unwrap().efficiency(w);
    let est = estimate_lv_efficiency(&lv.layered, w, 4000, 12);
    assert!(
        (est.p_minus - exact.p_minus).abs() < 0.04,
        "{est:?} vs {exact:?}"
    );
    assert!(
        (est.p_plus - exact.p_plus).abs() < 0.04,
        "{est:?} vs {exact:?}"
    );
}

#[test]
fn calibration_bounds() {
    let lv = or_lv();
    assert!(matches!(
        calibrate_wait(&lv.layered, 0.99),
        Err(ObserverError::Unachievable { .. })
    ));
    let w = calibrate_wait(&lv.layered, 0.25).unwrap();
    assert!(w.is_finite() && w > 0.0);
    let lp = LayerProcess::new(&lv.layered).unwrap();
    assert!(lp.efficiency(w).min() >= 0.25);
    assert!(lp.efficiency(w / 1.1).min() < 0.25);
}

#[test]
fn calibrated_wait_grows_quadratically() {
    let w1 = calibrate_wait(&synthetic_lv(5, 2).layered, 0.25).unwrap();
    let w2 = calibrate_wait(&synthetic_lv(10, 4).layered, 0.25).unwrap();
    let ratio = w2 / w1;
    assert!((3.0..=5.3).contains(&ratio), "{w1} {w2} {ratio}");
}

#[test]
fn lv_alternation_and_uniform_bit() {
    let cs = ChainSet::from_tm(&trivial_tm(), 1, &trivial_inputs(1), 10).unwrap();
    let lv = build_las_vegas(&cs).unwrap();
    let w = calibrate_wait(&lv.layered, 0.25).unwrap();
    let params = ProtocolParams::new(w, 1_000_000).unwrap();
    let start = lv.layered.layers()[lv.randomizer_layers.start][0];
    let run = lv_protocol(lv.graph(), start, &params, 20_000, 3).unwrap();
    let acc: Vec<_> = run.accepted().collect();
    assert_eq!(acc.len(), 20_000);
    for pair in acc.windows(2) {
        assert_eq!(pair[0].metadata, -pair[1].metadata);
    }
    assert!(acc.iter().all(|r| r.metadata != 0));
    let d: EmpiricalDist<Vec<u8>> = acc.iter().map(|r| r.value.clone()).collect();
    let target: BTreeMap<Vec<u8>, f64> = [(b"0".to_vec(), 0.5), (b"1".to_vec(), 0.5)].into();
    assert!(tv_distance(&d.weights(), &target).unwrap() < 0.02);
}

#[test]
fn lv_budget_exhaustion() {
    let lv = or_lv();
    let params = ProtocolParams::new(1.0, 3).unwrap();
    let err = lv_protocol(lv.graph(), 0, &params, 100, 1).unwrap_err();
    assert!(matches!(
        err,
        ObserverError::MeasurementBudgetExhausted {
            measurements: 3,
            ..
        }
    ));
}

#[test]
fn measurements_do_not_perturb_the_walk() {
    // With the same seed, reading every 1.5 time units or every 3 sees one
    // trajectory: coarse reading i and fine reading 2i+1 happen at the same time.
    let lv = or_lv();
    let start = lv.layered.layers()[0][0];
    let run = |wait: f64| {
        lv_protocol(
            lv.graph(),
            start,
            &ProtocolParams::new(wait, 10_000).unwrap(),
            30,
            5,
        )
        .unwrap()
    };
    let coarse = run(3.0).records;
    let fine = run(1.5).records;
    let mut compared = 0;
    for (i, c) in coarse.iter().enumerate() {
        let Some(f) = fine.get(2 * i + 1) else { break };
        assert_eq!(c.sim_time, f.sim_time);
        assert_eq!(c.metadata, f.metadata);
        compared += 1;
    }
    assert!(compared > 20);
}

#[test]
fn mc_records_every_measurement_on_or_machine() {
    let cs = ChainSet::from_tm(&or2_tm(), 2, &or2_inputs(), 100).unwrap();
    let mc = build_monte_carlo(&cs).unwrap();
    assert!(mc_protocol(&mc, 0, 5.0, 0, 1).unwrap().is_empty());
    let recs = mc_protocol(&mc, 0, 5.0, 500, 1).unwrap();
    assert_eq!(recs.len(), 500);
    assert!(recs
        .iter()
        .all(|r| !r.value.is_empty() && (r.metadata == 0 || r.metadata == 1)));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, rng_seed: RngSeed::Fixed(18), ..ProptestConfig::default() })]

    #[test]
    fn measurements_do_not_perturb(w in 0.5f64..4.0, seed in any::<u64>()) {
        props::measurements_do_not_perturb((w, seed))?;
    }

    #[test]
    fn lv_accepted_records_alternate(seed in any::<u64>()) {
        props::lv_accepted_records_alternate(seed)?;
    }

    #[test]
    fn attempt_tail_is_geometric(seed in any::<u64>()) {
        props::attempt_tail_is_geometric(seed)?;
    }

    #[test]
    fn mc_records_every_measurement(count in 0usize..300, seed in any::<u64>()) {
        props::mc_records_every_measurement((count, seed))?;
    }
}

#[test]
fn crossing_probability_matches_simulated_hitting() {
    let lv = synthetic_lv(3, 1);
    let lp = LayerProcess::new(&lv.layered).unwrap();
    let l = lv.layer_count();
    assert_eq!(lp.crossing_probability(0.0).unwrap(), 0.0);
    assert!(lp.crossing_probability(1e4).unwrap() > 1.0 - 1e-9);
    for t in [20.0, 60.0, 150.0] {
        let sim = adiasim::dynamics::layer_hitting_profile(&lv.layered, 0, t, 20_000, 9)[l - 1];
        let exact = lp.crossing_probability(t).unwrap();
        assert!((sim - exact).abs() < 0.015, "t={t}: {sim} vs {exact}");
    }
    let w = calibrate_hitting(&lv.layered, 0.25).unwrap();
    assert!(lp.crossing_probability(w).unwrap() >= 0.75);
    assert!(lp.crossing_probability(w / 1.1).unwrap() < 0.75);
}
