//! Thin subcommands over the library.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use adiasim::builder::{build_las_vegas, build_monte_carlo, McGraph};
use adiasim::counter::{counter_spec, verify_counter};
use adiasim::dynamics::{exact_occupancy, Embedding, Walker, EXACT_LIMIT};
use adiasim::graph::{LayeredGraph, NodeId};
use adiasim::observer::{
    calibrate_hitting, calibrate_wait, lv_protocol, mc_protocol, ProtocolParams, SampleRecord,
};
use adiasim::stats::{acceptance_curve, lag_independence, tv_distance, EmpiricalDist, Level};
use adiasim::tm_builder::{assemble_lv_tm, assemble_mc_tm};
use adiasim::trials::run_trials;
use adiasim::turing::{chains, check_reversible, print_tm, TuringError};
use anyhow::{bail, Context, Result};

use crate::config::Mode;
use crate::machine::{chain_set, inputs, load_tm, rule_lines};
use crate::metrics::Metrics;
use crate::out::{read, OutDir};
use crate::records;

/// Efficiency the LV wait is calibrated to when none is given.
pub const LV_EFFICIENCY: f64 = 0.25;
/// Miss probability the MC base wait is calibrated to.
pub const MC_MISS: f64 = 0.25;

/// Returns whether the machine passed.
pub fn verify(tm: &Path, r: Option<u32>, t: usize) -> Result<bool> {
    let spec = load_tm(tm)?;
    let rep = check_reversible(&spec);
    let lines = rule_lines(&spec);
    println!(
        "machine {}: {} states, {} rules, {} tapes",
        tm.display(),
        spec.states().len(),
        lines.len(),
        spec.tapes()
    );
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut ok = rep.is_reversible();
    for (name, det, clashes) in [
        ("forward", rep.forward_deterministic, &rep.forward_clashes),
        (
            "backward",
            rep.backward_deterministic,
            &rep.backward_clashes,
        ),
    ] {
        println!("{name} deterministic: {}", yes(det));
        for &(i, j) in clashes {
            println!(
                "  clash: rule {i} `{}` and rule {j} `{}`",
                lines[i], lines[j]
            );
        }
    }
    if let Some(r) = r {
        match chains(&spec, &inputs(&spec, r), t) {
            Ok(cs) => println!(
                "chains: {} seeds, longest {} configurations, no shared configuration",
                cs.chains.len(),
                cs.max_len
            ),
            Err(TuringError::ChainCollision { a, b }) => {
                ok = false;
                println!("chains: seeds {a} and {b} reach a common configuration");
            }
            Err(e) => {
                ok = false;
                println!("chains: {e}");
            }
        }
    }
    println!("result: {}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

pub fn build(out: &OutDir, mode: Mode, tm: &Path, r: u32, t: usize, dest: &Path) -> Result<()> {
    let cs = chain_set(&load_tm(tm)?, r, t)?;
    let lg = match mode {
        Mode::Lv => {
            build_las_vegas(&cs)
                .context("building the Las Vegas graph")?
                .layered
        }
        Mode::Mc => {
            build_monte_carlo(&cs)
                .context("building the Monte Carlo graph")?
                .layered
        }
    };
    let p = out.write(dest, lg.to_dump())?;
    println!(
        "{} nodes, {} layers -> {}",
        lg.graph().node_count(),
        lg.layer_count(),
        p.display()
    );
    Ok(())
}

pub fn build_tm(
    out: &OutDir,
    mode: Mode,
    tm: &Path,
    r: u32,
    t: usize,
    limit: usize,
    dest: &Path,
) -> Result<()> {
    let m = load_tm(tm)?;
    let ins = inputs(&m, r);
    let (spec, sidecar) = match mode {
        Mode::Lv => {
            let s = assemble_lv_tm(&m, r, t, &ins).context("assembling the Las Vegas machine")?;
            (s.spec.clone(), s.meta_sidecar())
        }
        Mode::Mc => {
            let s = assemble_mc_tm(&m, r, t, &ins, limit)
                .context("assembling the Monte Carlo machine")?;
            (s.spec.clone(), s.meta_sidecar())
        }
    };
    let p = out.write(dest, print_tm(&spec))?;
    let mut meta = dest.as_os_str().to_owned();
    meta.push(".meta");
    let q = out.write(Path::new(&meta), sidecar)?;
    println!(
        "{} states, {} rules -> {}, {}",
        spec.states().len(),
        spec.rules().len(),
        p.display(),
        q.display()
    );
    Ok(())
}

pub fn counter(k: u32, trace: bool) -> Result<()> {
    let rep = verify_counter(k, usize::MAX).context("running the counter")?;
    let spec = counter_spec();
    let rev = check_reversible(&spec).is_reversible();
    println!("k {}", rep.k);
    println!("reversible {rev}");
    println!("increments {} (expected {})", rep.increments, 1u64 << k);
    println!("steps {}", rep.total_steps);
    println!(
        "steps per increment {:.3}",
        rep.total_steps as f64 / rep.increments as f64
    );
    if trace {
        for (i, c) in rep.trace.iter().enumerate() {
            println!("{i} {}", c.display(&spec));
        }
    }
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<LayeredGraph> {
    LayeredGraph::from_dump(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn start_node(lg: &LayeredGraph, start: Option<NodeId>) -> Result<NodeId> {
    match start {
        Some(s) if (s as usize) < lg.graph().node_count() => Ok(s),
        Some(s) => bail!("start node {s} is not in the graph"),
        None => Ok(lg.layers()[0][0]),
    }
}

pub fn simulate(
    out: &OutDir,
    graph: &Path,
    start: NodeId,
    duration: f64,
    trials: usize,
    seed: u64,
    dest: &Path,
) -> Result<()> {
    let lg = read_graph(graph)?;
    let start = start_node(&lg, Some(start))?;
    if !(duration >= 0.0 && duration.is_finite()) {
        bail!("duration must be a non-negative number");
    }
    let e = Embedding::adiabatic(lg.graph());
    let ends = run_trials(trials, seed, |_, rng| {
        Walker::new(&e, start, rng.clone()).advance_to(&e, duration)
    });
    let n = lg.graph().node_count();
    let mut counts = vec![0u64; n];
    for v in ends {
        counts[v as usize] += 1;
    }
    let exact = if n <= EXACT_LIMIT {
        Some(exact_occupancy(&e, start, duration)?)
    } else {
        None
    };
    let mut s = String::from("node,layer,count,empirical,exact\n");
    for v in 0..n {
        let ex = exact.as_ref().map(|p| p[v].to_string()).unwrap_or_default();
        let emp = counts[v] as f64 / trials.max(1) as f64;
        writeln!(
            s,
            "{v},{},{},{emp},{ex}",
            lg.layer_of(v as NodeId),
            counts[v]
        )
        .unwrap();
    }
    let p = out.write(dest, s)?;
    println!(
        "{trials} walks of duration {duration} from node {start} -> {}",
        p.display()
    );
    Ok(())
}

/// Where an observer run reads its graph, starts, and writes its records.
pub struct Observe<'a> {
    pub graph: &'a Path,
    pub start: Option<NodeId>,
    pub seed: u64,
    pub dest: &'a Path,
}

pub fn lv_run(
    out: &OutDir,
    o: &Observe,
    samples: usize,
    wait: Option<f64>,
    max: u64,
) -> Result<()> {
    let lg = read_graph(o.graph)?;
    let start = start_node(&lg, o.start)?;
    let wait = match wait {
        Some(w) => w,
        None => calibrate_wait(&lg, LV_EFFICIENCY).context("calibrating the wait")?,
    };
    let run = lv_protocol(
        lg.graph(),
        start,
        &ProtocolParams::new(wait, max)?,
        samples,
        o.seed,
    )?;
    let p = out.write(o.dest, records::to_csv(&run.records))?;
    println!(
        "wait {wait}: {} measurements, {samples} accepted -> {}",
        run.records.len(),
        p.display()
    );
    Ok(())
}

pub fn mc_run(out: &OutDir, o: &Observe, count: usize, c: f64, wait: Option<f64>) -> Result<()> {
    let mc = McGraph::from_layered(read_graph(o.graph)?)
        .context("graph is not a coupled Monte Carlo graph")?;
    let start = start_node(&mc.layered, o.start)?;
    let wait = match wait {
        Some(w) => w,
        None => c * calibrate_hitting(&mc.layered, MC_MISS).context("calibrating the wait")?,
    };
    let recs = mc_protocol(&mc, start, wait, count, o.seed)?;
    let p = out.write(o.dest, records::to_csv(&recs))?;
    println!(
        "wait {wait}: {} measurements -> {}",
        recs.len(),
        p.display()
    );
    Ok(())
}

/// Attempts per accepted sample, replaying the LV decision rule over the metadata column.
pub fn replay_attempts(recs: &[SampleRecord]) -> Vec<u64> {
    let mut obs = adiasim::observer::LvObserver::new();
    recs.iter()
        .filter_map(|r| obs.observe(r.metadata).1)
        .collect()
}

pub fn parse_target(s: &str) -> Result<BTreeMap<Vec<u8>, f64>> {
    let mut d = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .with_context(|| format!("target entry `{part}` is not value=probability"))?;
        let key =
            records::decode_value(k.trim()).with_context(|| format!("bad target value `{k}`"))?;
        let p: f64 = v
            .trim()
            .parse()
            .with_context(|| format!("bad probability `{v}`"))?;
        if !(p >= 0.0 && p.is_finite()) {
            bail!("probability `{v}` must be non-negative");
        }
        *d.entry(key).or_insert(0.0) += p;
    }
    if d.is_empty() {
        bail!("empty target");
    }
    Ok(d)
}

/// Metrics of a records file; also returns the LV acceptance curve CSV.
pub fn record_stats(
    recs: &[SampleRecord],
    mode: Mode,
    target: Option<&BTreeMap<Vec<u8>, f64>>,
) -> Result<(Metrics, String)> {
    let values: Vec<Vec<u8>> = recs
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.value.clone())
        .collect();
    let mut m = Metrics::new();
    m.put("measurements", recs.len())
        .put("samples", values.len());
    let mut curve = String::from("k,empirical,reference\n");
    if mode == Mode::Lv {
        let attempts = replay_attempts(recs);
        if attempts.len() != values.len() {
            bail!(
                "accepted flags disagree with the metadata column ({} vs {} acceptances)",
                values.len(),
                attempts.len()
            );
        }
        let post: u64 = attempts.iter().sum();
        m.put("rejected", recs.len() - values.len());
        m.put(
            "mean_attempts",
            if attempts.is_empty() {
                0.0
            } else {
                post as f64 / attempts.len() as f64
            },
        );
        for pt in acceptance_curve(&attempts) {
            writeln!(curve, "{},{},{}", pt.k, pt.empirical, pt.reference).unwrap();
        }
        let tail = acceptance_curve(&attempts)
            .iter()
            .map(|p| (1.0 - p.empirical) - (1.0 - p.reference))
            .fold(f64::NEG_INFINITY, f64::max);
        if tail.is_finite() {
            m.put("max_tail_excess", tail);
        }
    }
    if let Some(t) = target {
        let d: EmpiricalDist<Vec<u8>> = values.iter().cloned().collect();
        if d.total > 0 {
            m.put("tv_to_target", tv_distance(&d.weights(), t)?);
        }
    }
    if values.len() >= 2 {
        let lag = lag_independence(&values)?;
        m.put("lag_statistic", lag.statistic)
            .put("lag_df", lag.df)
            .put("lag_degenerate", lag.degenerate)
            .put("lag_pass_5pct", lag.passes(Level::P05));
    }
    Ok((m, curve))
}

pub fn stats(
    out: &OutDir,
    path: &Path,
    mode: Mode,
    target: Option<&str>,
    curve_out: Option<&Path>,
) -> Result<()> {
    let recs = records::from_csv(&read(path)?, path)?;
    let target = target.map(parse_target).transpose()?;
    let (m, curve) = record_stats(&recs, mode, target.as_ref())?;
    m.print();
    if let Some(dest) = curve_out {
        let p = out.write(dest, curve)?;
        println!("curve -> {}", p.display());
    }
    Ok(())
}
