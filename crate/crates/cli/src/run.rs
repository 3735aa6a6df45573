//! The end-to-end experiment: build, observe, measure, write artifacts.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use adiasim::builder::{build_las_vegas, build_monte_carlo};
use adiasim::dynamics::{Embedding, Walker};
use adiasim::observer::{
    calibrate_hitting, calibrate_wait, estimate_lv_efficiency, lv_protocol, mc_protocol,
    LayerProcess, ProtocolParams,
};
use adiasim::stats::{tv_distance, EmpiricalDist};
use adiasim::trials::run_trials;
use anyhow::{Context, Result};

use crate::cmd::{record_stats, LV_EFFICIENCY, MC_MISS};
use crate::config::{ExperimentConfig, Mode};
use crate::machine::{chain_set, load_tm, target};
use crate::metrics::Metrics;
use crate::out::OutDir;
use crate::records;

/// Multiples of the base wait in the MC curve.
pub const MC_CURVE: [f64; 3] = [1.0, 2.0, 4.0];

const MAX_MEASUREMENTS: u64 = 100_000_000;

pub fn run(out: &OutDir, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let clock = Instant::now();
    let spec = load_tm(&cfg.tm_path)?;
    let cs = chain_set(&spec, cfg.r, cfg.t)?;
    let target = target(&cs);
    let mut m = Metrics::new();
    m.put(
        "mode",
        match cfg.mode {
            Mode::Lv => "lv",
            Mode::Mc => "mc",
        },
    );
    m.put("r", cfg.r)
        .put("T", cfg.t)
        .put("seed", cfg.seed)
        .put("trials", cfg.trials);

    let (dump, recs, stats, curve) = match cfg.mode {
        Mode::Lv => {
            let lv = build_las_vegas(&cs).context("building the Las Vegas graph")?;
            let lg = &lv.layered;
            m.put("nodes", lg.graph().node_count())
                .put("layers", lg.layer_count());
            let wait = match cfg.wait {
                Some(w) => w,
                None => calibrate_wait(lg, LV_EFFICIENCY)?,
            };
            m.put("wait", wait)
                .put("wait_calibrated", cfg.wait.is_none());
            let lp = LayerProcess::new(lg)?;
            m.put("efficiency_exact", lp.efficiency(wait).min());
            m.put("efficiency_stationary", lp.stationary().min());
            m.put(
                "efficiency_estimated",
                estimate_lv_efficiency(lg, wait, cfg.trials, cfg.seed).min(),
            );
            let params = ProtocolParams::new(wait, MAX_MEASUREMENTS)?;
            let run = lv_protocol(
                lg.graph(),
                lg.layers()[0][0],
                &params,
                cfg.samples,
                cfg.seed,
            )?;
            m.put("bits_read", run.bits_read);
            let (stats, curve) = record_stats(&run.records, Mode::Lv, Some(&target))?;
            (lg.to_dump(), run.records, stats, curve)
        }
        Mode::Mc => {
            let mc = build_monte_carlo(&cs).context("building the Monte Carlo graph")?;
            let lg = &mc.layered;
            m.put("nodes", lg.graph().node_count())
                .put("layers", lg.layer_count());
            let base = calibrate_hitting(lg, MC_MISS)?;
            let wait = cfg.c * base;
            m.put("base_wait", base).put("c", cfg.c).put("wait", wait);
            let lp = LayerProcess::new(lg)?;
            m.put("refresh_probability_exact", lp.crossing_probability(wait)?);
            m.put("efficiency_exact", 1.0);
            let start = lg.layers()[0][0];
            let e = Embedding::adiabatic(lg.graph());
            let mut curve = String::from("c,wait,tv\n");
            for (i, &c) in MC_CURVE.iter().enumerate() {
                let w = c * base;
                let ends = run_trials(cfg.trials, cfg.seed.wrapping_add(1 + i as u64), |_, rng| {
                    let v = Walker::new(&e, start, rng.clone()).advance_to(&e, w);
                    mc.sample_output(v)
                        .expect("coupled nodes hold a sample")
                        .to_vec()
                });
                let d: EmpiricalDist<Vec<u8>> = ends.into_iter().collect();
                let tv = tv_distance(&d.weights(), &target)?;
                writeln!(curve, "{c},{w},{tv}").unwrap();
                m.put(&format!("tv_c{c}"), tv);
            }
            let recs = mc_protocol(&mc, start, wait, cfg.samples, cfg.seed)?;
            let (stats, _) = record_stats(&recs, Mode::Mc, Some(&target))?;
            (lg.to_dump(), recs, stats, curve)
        }
    };
    m.put("target_support", target.len());
    m.extend(stats);
    m.put("wall_clock_s", clock.elapsed().as_secs_f64());

    let dir = &cfg.output_dir;
    let files = [
        (dir.join("graph.dump"), dump),
        (dir.join("records.csv"), records::to_csv(&recs)),
        (dir.join("curve.csv"), curve),
        (dir.join("metrics.csv"), m.to_csv()),
        (dir.join("metrics.json"), m.to_json()),
    ];
    m.print();
    files
        .iter()
        .map(|(p, s)| out.write(Path::new(p), s))
        .collect()
}
