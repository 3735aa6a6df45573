//! One function per invariant. Each takes the generated case and fails through
//! `prop_assert!`, so it runs both inside `proptest!` and under a bare `TestRunner`.

use std::collections::HashMap;

use adiasim::builder::{
    build_las_vegas, build_mc_submachine, build_monte_carlo, couple_mc, lv_holding_len, ChainSet,
};
use adiasim::counter::{build_counter, verify_counter};
use adiasim::dynamics::{boltzmann, exact_occupancy, simulate_ct, Embedding, Record};
use adiasim::graph::{
    layer_decompose, GeneralMachine, Graph, LayeredGraph, Meta, NodeId, RegisterTriple,
};
use adiasim::observer::{calibrate_wait, lv_protocol, mc_protocol, ProtocolParams};
use adiasim::stats::{
    acceptance_curve, chi_square_uniform, ks_critical, ks_distance, lag_independence, tv_distance,
    tv_distance_vec, Level,
};
use adiasim::tm_builder::{
    assemble_lv_tm, assemble_mc_submachine_tm, assemble_mc_tm, prepare, Mode,
};
use adiasim::toy::{
    or2_inputs, or2_tm, standard_inputs, trivial_inputs, trivial_io_tm, trivial_tm,
};
use adiasim::trials::run_trials;
use adiasim::turing::{
    chains, check_reversible, parse_tm, print_tm, run, step_backward, step_forward, Back, Fwd,
    TMSpec,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseResult;

use super::{
    all_configs, as_map, exact_exit_distribution, has_odd_cycle, max_event_gap, toy_chains,
};

// graph

pub fn embed_of_reverse_is_identical(m: GeneralMachine) -> TestCaseResult {
    prop_assert!(m.is_reversible());
    let rev = m.reverse();
    prop_assert!(rev.is_reversible());
    prop_assert_eq!(m.embed(), rev.embed());
    Ok(())
}

pub fn layer_decompose_is_deterministic((g, root): (Graph, usize)) -> TestCaseResult {
    let root = (root % g.node_count()) as NodeId;
    let a = layer_decompose(&g, &[root]);
    let b = layer_decompose(&g, &[root]);
    prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    if let Ok(lg) = a {
        prop_assert_eq!(layer_decompose(&g, &lg.layers()[0]).unwrap(), lg);
    }
    Ok(())
}

pub fn layered_iff_no_odd_cycle(g: Graph) -> TestCaseResult {
    prop_assert_eq!(layer_decompose(&g, &[0]).is_ok(), !has_odd_cycle(&g));
    Ok(())
}

// turing

pub fn print_parse_round_trip(spec: TMSpec) -> TestCaseResult {
    prop_assert_eq!(parse_tm(&print_tm(&spec)).unwrap(), spec);
    Ok(())
}

pub fn backward_inverts_forward(spec: TMSpec) -> TestCaseResult {
    let len = if spec.tapes() == 1 { 3 } else { 2 };
    for c in all_configs(&spec, len) {
        if let Fwd::Next(n) = step_forward(&spec, &c).unwrap() {
            prop_assert_eq!(step_backward(&spec, &n).unwrap(), Back::Prev(c));
        }
    }
    Ok(())
}

pub fn reversible_chains_never_collide(spec: TMSpec) -> TestCaseResult {
    let len = if spec.tapes() == 1 { 3 } else { 2 };
    let configs = all_configs(&spec, len);
    let inputs: Vec<_> = configs
        .iter()
        .filter(|c| step_backward(&spec, c).unwrap() == Back::Initial)
        .cloned()
        .collect();
    let cs = chains(&spec, &inputs, configs.len() + 1).unwrap();
    prop_assert_eq!(cs.chains.len(), inputs.len());
    Ok(())
}

// counter

pub fn counter_is_reversible_and_retraceable(k: u32) -> TestCaseResult {
    let (spec, init) = build_counter(k).unwrap();
    prop_assert!(check_reversible(&spec).is_reversible());
    let rep = verify_counter(k, 1 << 20).unwrap();
    prop_assert_eq!(rep.increments, 1u64 << k);
    prop_assert_eq!(&rep.trace, &run(&spec, &init, 1 << 20).unwrap().trace);
    let mut c = rep.trace.last().unwrap().clone();
    for _ in 0..rep.total_steps {
        match step_backward(&spec, &c).unwrap() {
            Back::Prev(p) => c = p,
            other => prop_assert!(false, "stuck at {:?}", other),
        }
    }
    prop_assert_eq!(c, init);
    Ok(())
}

/// Steps per increment at `k` stay within 25% of the value at `k = 4`.
pub fn counter_is_amortized_linear(k: u32) -> TestCaseResult {
    let ratio =
        |k: u32| verify_counter(k, 1 << 20).unwrap().total_steps as f64 / (1u64 << k) as f64;
    let (r4, rk) = (ratio(4), ratio(k));
    prop_assert!((rk / r4 - 1.0).abs() < 0.25, "{} vs {}", r4, rk);
    Ok(())
}

// builder

pub fn built_graphs_are_layered_and_regular((r, lens): (u32, Vec<usize>)) -> TestCaseResult {
    let cs = toy_chains(r, &lens);
    let lv = build_las_vegas(&cs).unwrap();
    let sub = build_mc_submachine(&cs).unwrap();
    for g in [&lv.layered, &sub.layered] {
        prop_assert_eq!(&layer_decompose(g.graph(), &g.layers()[0]).unwrap(), g);
        prop_assert!(g.internal_regular(2));
    }
    Ok(())
}

pub fn lv_metadata_geography((r, lens): (u32, Vec<usize>)) -> TestCaseResult {
    let cs = toy_chains(r, &lens);
    let lv = build_las_vegas(&cs).unwrap();
    let h = lv_holding_len(cs.max_len(), r);
    prop_assert_eq!(lv.holding, h);
    let l = lv.layer_count();
    for (i, layer) in lv.layered.layers().iter().enumerate() {
        let want = if i < h {
            -1
        } else if i >= l - h {
            1
        } else {
            0
        };
        for &v in layer {
            prop_assert_eq!(lv.graph().register(v).metadata.get(), want);
        }
    }
    prop_assert!(l > 2 * h);
    Ok(())
}

pub fn randomizer_is_exactly_uniform(r: u32) -> TestCaseResult {
    let d = exact_exit_distribution(r);
    let u = 1.0 / d.len() as f64;
    prop_assert!(d.iter().all(|p| (p - u).abs() < 1e-10), "{:?}", d);
    Ok(())
}

pub fn coupling_conserves_layer_sum((r, lens): (u32, Vec<usize>)) -> TestCaseResult {
    let sub = build_mc_submachine(&toy_chains(r, &lens)).unwrap();
    let neg = sub.layered.map_metadata(Meta::neg);
    let mc = couple_mc(&sub.layered, &neg).unwrap();
    let l = sub.layer_count();
    for &(a, b) in mc.graph().edges() {
        for v in [a, b] {
            let (x, y) = mc.components[v as usize];
            prop_assert_eq!(sub.layered.layer_of(x) + neg.layer_of(y), l - 1);
        }
    }
    Ok(())
}

// tm-builder

/// Rule-level reversibility of M₁ and degree 2/2 in the reachable configuration graph.
pub fn assembled_machines_are_regular((r, t, lv): (u32, usize, bool)) -> TestCaseResult {
    let m = trivial_io_tm();
    let inputs = standard_inputs(&m, r, 0);
    let s = if lv {
        assemble_lv_tm(&m, r, t, &inputs)
    } else {
        assemble_mc_submachine_tm(&m, r, t, &inputs)
    }
    .unwrap();
    prop_assert!(check_reversible(&s.m1.spec).is_reversible());
    let cg = s.config_graph(200_000).unwrap();
    prop_assert!(s.layered(&cg).unwrap().internal_regular(2));
    Ok(())
}

pub fn augmented_chains_have_equal_length((r, t, lv): (u32, usize, bool)) -> TestCaseResult {
    let m = trivial_io_tm();
    let inputs = standard_inputs(&m, r, 0);
    let mode = if lv { Mode::LasVegas } else { Mode::MonteCarlo };
    let m1 = prepare(&m, r, t, &inputs, mode).unwrap();
    let lens: Vec<usize> = inputs
        .iter()
        .map(|c| run(&m1.spec, &m1.initial(c), 200_000).unwrap().trace.len())
        .collect();
    prop_assert!(lens.iter().all(|&l| l == lens[0]), "{:?}", lens);
    Ok(())
}

/// Same width and three-band metadata as the general construction; only the
/// band lengths differ (`hold` versus `2T + r + 1`).
pub fn tm_profile_matches_builder((r, t): (u32, usize)) -> TestCaseResult {
    tm_profile_matches_builder_for(&trivial_io_tm(), r, t)
}

pub fn tm_profile_matches_builder_for(m: &TMSpec, r: u32, t: usize) -> TestCaseResult {
    let inputs = standard_inputs(m, r, 0);
    let s = assemble_lv_tm(m, r, t, &inputs).unwrap();
    let lg = s.layered(&s.config_graph(200_000).unwrap()).unwrap();
    let (comp, hold) = s.m1.phases(&s.m1.initial(&inputs[0])).unwrap();
    prop_assert!(lg.internal_regular(2));
    let g = build_las_vegas(&ChainSet::from_tm(m, r, &inputs, 1000).unwrap()).unwrap();
    let width = 1usize << (r + 1);
    prop_assert!(lg
        .layer_sizes()
        .iter()
        .chain(&g.layered.layer_sizes())
        .all(|&w| w == width));
    prop_assert_eq!(lg.layer_count(), 2 * (comp + hold) + 2 * r as usize + 2);
    let bands = |l: &LayeredGraph| -> Result<Vec<(i8, usize)>, TestCaseError> {
        let mut out: Vec<(i8, usize)> = Vec::new();
        for layer in l.layers() {
            let m = l.graph().register(layer[0]).metadata.get();
            prop_assert_eq!(
                layer
                    .iter()
                    .filter(|&&v| l.graph().register(v).metadata.get() != m)
                    .count(),
                0
            );
            match out.last_mut() {
                Some((x, n)) if *x == m => *n += 1,
                _ => out.push((m, 1)),
            }
        }
        Ok(out)
    };
    let (tb, gb) = (bands(&lg)?, bands(&g.layered)?);
    prop_assert_eq!(tb.iter().map(|b| b.0).collect::<Vec<_>>(), vec![-1, 0, 1]);
    prop_assert_eq!(gb.iter().map(|b| b.0).collect::<Vec<_>>(), vec![-1, 0, 1]);
    prop_assert_eq!((tb[0].1, tb[2].1), (hold, hold));
    prop_assert_eq!((gb[0].1, gb[2].1), (g.holding, g.holding));
    prop_assert!(hold >= g.holding);
    Ok(())
}

/// Every reachable product configuration has exactly one holder, and the
/// component layer indices sum to `L - 1` at both ends of every edge.
/// Returns the number of reachable configurations.
pub fn mc_tm_has_one_holder(m: &TMSpec, r: u32, t: usize) -> Result<usize, TestCaseError> {
    let inputs = standard_inputs(m, r, 0);
    let mc = assemble_mc_tm(m, r, t, &inputs, 200_000).unwrap();
    let sub_cg = mc.sub.config_graph(200_000).unwrap();
    let sub_lg = mc.sub.layered(&sub_cg).unwrap();
    let layer: HashMap<_, usize> = sub_cg
        .configs
        .iter()
        .enumerate()
        .map(|(n, c)| (c.clone(), sub_lg.layer_of(n as NodeId)))
        .collect();
    let cg = mc.config_graph(2_000_000).unwrap();
    let sum = |n: NodeId| {
        let (a, b) = mc.split(&cg.configs[n as usize]);
        layer[&a] + layer[&b]
    };
    for (n, c) in cg.configs.iter().enumerate() {
        let (a, b) = mc.split(c);
        let holders = [&a, &b]
            .iter()
            .filter(|x| mc.sub.meta[x.state as usize] == 1)
            .count();
        prop_assert_eq!(holders, 1, "config {}", n);
        prop_assert!(mc.meta[c.state as usize] != 0);
    }
    for &(u, v) in cg.graph.edges() {
        prop_assert_eq!(sum(u), mc.sub_layers - 1);
        prop_assert_eq!(sum(v), mc.sub_layers - 1);
    }
    Ok(cg.configs.len())
}

// dynamics

pub fn detailed_balance((g, dg, kt): (Graph, Vec<f64>, f64)) -> TestCaseResult {
    let n = g.node_count();
    let e = Embedding::new(&g, dg.into_iter().cycle().take(n).collect(), kt, 1.0).unwrap();
    let p = boltzmann(&e);
    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for &(a, b) in g.edges() {
        prop_assert!((p[a as usize] * e.rate(a, b) - p[b as usize] * e.rate(b, a)).abs() < 1e-12);
    }
    Ok(())
}

pub fn adiabatic_rates_equal_base((g, dg, k_rate): (Graph, f64, f64)) -> TestCaseResult {
    let e = Embedding::new(&g, vec![dg; g.node_count()], 1.0, k_rate).unwrap();
    prop_assert!(e.is_adiabatic());
    for &(a, b) in g.edges() {
        prop_assert_eq!(e.rate(a, b), k_rate);
        prop_assert_eq!(e.rate(b, a), k_rate);
    }
    Ok(())
}

/// Simulated end-node histogram over `10^5` trials against the exact solution.
pub fn simulation_matches_exact((g, dg, t, seed): (Graph, Vec<f64>, f64, u64)) -> TestCaseResult {
    let n = g.node_count();
    let e = Embedding::new(&g, dg.into_iter().cycle().take(n).collect(), 1.0, 1.0).unwrap();
    let exact = exact_occupancy(&e, 0, t).unwrap();
    let mut counts = vec![0.0; n];
    for v in run_trials(100_000, seed, |i, _| {
        simulate_ct(&e, 0, t, seed ^ (i as u64) << 20, Record::All).end
    }) {
        counts[v as usize] += 1.0;
    }
    let tv = tv_distance_vec(&counts, &exact).unwrap();
    prop_assert!(tv < 0.02, "tv {}", tv);
    Ok(())
}

pub fn layer_process_is_a_path_walk(
    (r, lens, t, seed): (u32, Vec<usize>, f64, u64),
) -> TestCaseResult {
    let lv = build_las_vegas(&toy_chains(r, &lens)).unwrap();
    let lg = &lv.layered;
    let e = Embedding::adiabatic(lg.graph());
    let start = lg.layers()[0][0];
    let n = 20_000;
    let mut counts = vec![0u64; lg.layer_count()];
    for v in run_trials(n, seed, |i, _| {
        simulate_ct(
            &e,
            start,
            t,
            seed ^ (i as u64) << 20,
            Record::LayerCrossings(lg),
        )
        .end
    }) {
        counts[lg.layer_of(v)] += 1;
    }
    let l = lg.layer_count();
    let regs = vec![RegisterTriple::new(vec![], Meta::ZERO, vec![]); l];
    let path = Graph::new(regs, (1..l as NodeId).map(|i| (i - 1, i)).collect()).unwrap();
    let exact = exact_occupancy(&Embedding::adiabatic(&path).with_rate(2.0), 0, t).unwrap();
    let d = ks_distance(&counts, &exact).unwrap();
    prop_assert!(d < ks_critical(n as u64, Level::P05), "ks {}", d);
    Ok(())
}

pub fn walks_are_reproducible((g, seed, t): (Graph, u64, f64)) -> TestCaseResult {
    let e = Embedding::adiabatic(&g);
    prop_assert_eq!(
        simulate_ct(&e, 0, t, seed, Record::All),
        simulate_ct(&e, 0, t, seed, Record::All)
    );
    Ok(())
}

// observer

fn or_lv() -> adiasim::builder::SamplerGraph {
    build_las_vegas(&ChainSet::from_tm(&or2_tm(), 2, &or2_inputs(), 100).unwrap()).unwrap()
}

/// Reading every `w` or every `2w` sees the same trajectory at the shared times.
pub fn measurements_do_not_perturb((w, seed): (f64, u64)) -> TestCaseResult {
    let lv = or_lv();
    let start = lv.layered.layers()[0][0];
    let go = |wait: f64| {
        lv_protocol(
            lv.graph(),
            start,
            &ProtocolParams::new(wait, 10_000).unwrap(),
            20,
            seed,
        )
        .unwrap()
    };
    let (coarse, fine) = (go(2.0 * w).records, go(w).records);
    for (i, c) in coarse.iter().enumerate() {
        let Some(f) = fine.get(2 * i + 1) else { break };
        prop_assert_eq!(c.sim_time, f.sim_time);
        prop_assert_eq!(c.metadata, f.metadata);
    }
    Ok(())
}

pub fn lv_accepted_records_alternate(seed: u64) -> TestCaseResult {
    let lv = build_las_vegas(&ChainSet::from_tm(&trivial_tm(), 1, &trivial_inputs(1), 10).unwrap())
        .unwrap();
    let w = calibrate_wait(&lv.layered, 0.25).unwrap();
    let run = lv_protocol(
        lv.graph(),
        0,
        &ProtocolParams::new(w, 1_000_000).unwrap(),
        2000,
        seed,
    )
    .unwrap();
    let acc: Vec<_> = run.accepted().collect();
    prop_assert_eq!(acc.len(), 2000);
    prop_assert!(acc.iter().all(|r| r.metadata != 0));
    prop_assert!(acc.windows(2).all(|p| p[0].metadata == -p[1].metadata));
    Ok(())
}

pub fn attempt_tail_is_geometric(seed: u64) -> TestCaseResult {
    let lv = or_lv();
    let w = calibrate_wait(&lv.layered, 0.25).unwrap();
    let run = lv_protocol(
        lv.graph(),
        0,
        &ProtocolParams::new(w, 10_000_000).unwrap(),
        5000,
        seed,
    )
    .unwrap();
    for p in acceptance_curve(&run.attempts).iter().filter(|p| p.k <= 10) {
        prop_assert!(1.0 - p.empirical <= 1.0 - p.reference + 0.02, "{:?}", p);
    }
    Ok(())
}

pub fn mc_records_every_measurement((count, seed): (usize, u64)) -> TestCaseResult {
    let mc =
        build_monte_carlo(&ChainSet::from_tm(&or2_tm(), 2, &or2_inputs(), 100).unwrap()).unwrap();
    let recs = mc_protocol(&mc, 0, 3.0, count, seed).unwrap();
    prop_assert_eq!(recs.len(), count);
    prop_assert!(recs.iter().all(|r| r.metadata == 0 || r.metadata == 1));
    Ok(())
}

// stats

pub fn tv_matches_subset_oracle((p, q): (Vec<f64>, Vec<f64>)) -> TestCaseResult {
    let tv = tv_distance(&as_map(&p), &as_map(&q)).unwrap();
    prop_assert!((tv - max_event_gap(&p, &q)).abs() < 1e-12);
    Ok(())
}

pub fn tv_is_a_metric((p, q, r): (Vec<f64>, Vec<f64>, Vec<f64>)) -> TestCaseResult {
    let (mp, mq, mr) = (as_map(&p), as_map(&q), as_map(&r));
    let pq = tv_distance(&mp, &mq).unwrap();
    prop_assert_eq!(pq, tv_distance(&mq, &mp).unwrap());
    prop_assert!(pq <= tv_distance(&mp, &mr).unwrap() + tv_distance(&mr, &mq).unwrap() + 1e-12);
    prop_assert!((0.0..=1.0).contains(&pq));
    Ok(())
}

pub fn statistics_are_deterministic(xs: Vec<u8>) -> TestCaseResult {
    prop_assert_eq!(
        format!("{:?}", lag_independence(&xs)),
        format!("{:?}", lag_independence(&xs))
    );
    let counts: Vec<u64> = xs.iter().map(|&x| x as u64).collect();
    prop_assert_eq!(
        format!("{:?}", chi_square_uniform(&counts)),
        format!("{:?}", chi_square_uniform(&counts))
    );
    prop_assert_eq!(acceptance_curve(&counts), acceptance_curve(&counts));
    Ok(())
}
