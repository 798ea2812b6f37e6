//! Seeded experiment execution: single runs, parallel sweeps over the
//! reset strength, and theory tables (bifurcation curve and cluster
//! bounds). Sweep results are deterministic for a fixed master seed
//! regardless of worker count: every run derives its own seed from
//! `(seed, point index, run index)` through a pure mixing function and
//! results are ordered by index, not completion time.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    bifurcation_curve, cluster_bounds, rc_instability_threshold, rc_invariance_thresholds,
    BifurcationCurve, ClusterBound,
};
use crate::classify::{classify, ShapeReport};
use crate::config::{ExperimentConfig, RiseSpec, SweepSpec, TheorySpec};
use crate::engine::{detect_clusters, simulate, ClusterPartition, EventLog, NetworkState,
    SimulateOptions};
use crate::error::{Error, Result};

/// SplitMix64 finalizer; the standard 64-bit avalanche mix.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for run `run_index` at sweep point `point_index`:
/// three chained SplitMix64 mixes of the master seed and both indices.
/// A pure function, so reproducibility is independent of scheduling.
pub fn child_seed(seed: u64, point_index: u64, run_index: u64) -> u64 {
    let a = splitmix64(seed ^ 0x243F_6A88_85A3_08D3);
    let b = splitmix64(a ^ point_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(b ^ run_index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Duration of the recurrence search window, in reference sections.
fn detection_window(dim: usize) -> usize {
    10 * dim
}

const RECURRENCE_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub log: EventLog,
    pub partition: ClusterPartition,
    pub final_state: NetworkState,
}

/// Runs one experiment: build coupling and initial condition from the
/// seed, simulate until the budget or until the section state recurs,
/// then extract the cluster partition.
pub fn run_single(config: &ExperimentConfig) -> Result<SingleRun> {
    run_seeded(config, config.seed.unwrap_or(0))
}

/// Like [`run_single`] with an explicit seed (used by sweeps).
pub fn run_seeded(config: &ExperimentConfig, seed: u64) -> Result<SingleRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coupling = config.build_coupling(&mut rng)?;
    let initial = config.build_initial(&mut rng)?;
    let reset = config.build_reset()?;
    let rise = config.build_rise()?;
    let (state, t0) = NetworkState::from_phases(&initial)?;
    let dim = config.state_dim();
    let opts = SimulateOptions {
        budget: match config.time {
            Some(t) => crate::engine::Budget::Time(t),
            None => crate::engine::Budget::Spikes(config.spikes),
        },
        ref_osc: 0,
        stop_on_recurrence: Some(RECURRENCE_TOL),
        recurrence_window: detection_window(dim),
    };
    let (log, final_state) = simulate(&state, t0, &coupling, &reset, &rise, &opts)?;
    let partition = detect_clusters(&log, detection_window(dim), RECURRENCE_TOL);
    Ok(SingleRun {
        log,
        partition,
        final_state,
    })
}

/// Per-run summary row of a sweep.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub point_index: usize,
    pub c: f64,
    pub run_index: usize,
    pub child_seed: u64,
    pub events: usize,
    pub spikes: u64,
    pub periodic: bool,
    pub period: Option<f64>,
    pub max_cluster: usize,
    pub sizes: Vec<usize>,
    pub error: Option<String>,
}

/// Aggregate over the runs of one grid point.
#[derive(Debug, Clone)]
pub struct PointAggregate {
    pub point_index: usize,
    pub c: f64,
    pub runs: usize,
    pub failed: usize,
    pub periodic_runs: usize,
    pub max_cluster_observed: usize,
    pub mean_max_cluster: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<RunOutcome>,
    pub aggregates: Vec<PointAggregate>,
}

/// Runs `runs` independent simulations per reset strength on the rayon
/// pool. Per-run failures are recorded in their row and the sweep
/// continues.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepSummary> {
    let sweep = config.sweep.clone().ok_or_else(|| {
        Error::config("sweep", "sweep section required for the sweep command")
    })?;
    let seed = config.seed.ok_or_else(|| Error::config("seed", "required"))?;
    let SweepSpec { c_values, runs } = sweep;
    let total = c_values.len() * runs;
    let rows: Vec<RunOutcome> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let point_index = flat / runs;
            let run_index = flat % runs;
            let c = c_values[point_index];
            let cseed = child_seed(seed, point_index as u64, run_index as u64);
            let cfg = config.with_reset_c(c);
            match run_seeded(&cfg, cseed) {
                Ok(run) => RunOutcome {
                    point_index,
                    c,
                    run_index,
                    child_seed: cseed,
                    events: run.log.records.len(),
                    spikes: run.log.total_spikes(),
                    periodic: run.partition.periodic,
                    period: run.partition.period,
                    max_cluster: run.partition.max_cluster(),
                    sizes: run.partition.sizes,
                    error: None,
                },
                Err(e) => RunOutcome {
                    point_index,
                    c,
                    run_index,
                    child_seed: cseed,
                    events: 0,
                    spikes: 0,
                    periodic: false,
                    period: None,
                    max_cluster: 0,
                    sizes: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut aggregates = Vec::with_capacity(c_values.len());
    for (point_index, &c) in c_values.iter().enumerate() {
        let chunk = &rows[point_index * runs..(point_index + 1) * runs];
        let ok: Vec<&RunOutcome> = chunk.iter().filter(|r| r.error.is_none()).collect();
        let max_cluster_observed = ok.iter().map(|r| r.max_cluster).max().unwrap_or(0);
        let mean = if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|r| r.max_cluster as f64).sum::<f64>() / ok.len() as f64
        };
        aggregates.push(PointAggregate {
            point_index,
            c,
            runs,
            failed: chunk.len() - ok.len(),
            periodic_runs: ok.iter().filter(|r| r.periodic).count(),
            max_cluster_observed,
            mean_max_cluster: mean,
        });
    }
    Ok(SweepSummary { rows, aggregates })
}

/// One row of the theory bound table.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub a1: usize,
    /// Flags of the invariance/instability certificates at the
    /// configured reset.
    pub bound: Option<ClusterBound>,
    /// Largest linear-reset strength below which invariance of an
    /// `a1`-avalanche is ensured.
    pub c_stable_below: f64,
    /// Largest linear-reset strength below which the necessary
    /// invariance conditions still hold; above it `a1`-avalanches split.
    pub c_unstable_above: f64,
    /// Onset of the return-map contraction certificate, if any.
    pub c_instability: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TheoryReport {
    pub shape: ShapeReport,
    pub bifurcation: Option<BifurcationCurve>,
    pub bounds: Option<Vec<BoundRow>>,
}

/// Produces the exact bifurcation curve (for the convex `U_b` family)
/// and/or the invariance bound table (for icpd/dcpd rise functions)
/// over `a = a_min..=a_max`.
pub fn run_theory(config: &ExperimentConfig) -> Result<TheoryReport> {
    let rise = config.build_rise()?;
    let reset = config.build_reset()?;
    let shape = classify(&rise)?;
    let theory = config.theory.clone().unwrap_or(TheorySpec {
        a_min: None,
        a_max: None,
    });
    let a_min = theory.a_min.unwrap_or(2);
    let a_max = theory.a_max.unwrap_or(config.n);

    let eps = match &config.coupling {
        crate::config::CouplingSpec::Homogeneous { eps } => *eps,
        crate::config::CouplingSpec::Meta { eps, .. } => *eps,
        crate::config::CouplingSpec::RandomUniform { eps_min, eps_max } => {
            0.5 * (eps_min + eps_max)
        }
    };

    let bifurcation = match &config.rise {
        RiseSpec::Ub { b } if *b < 0.0 => {
            let full = bifurcation_curve(config.n, eps, *b)?;
            let points = full
                .points
                .into_iter()
                .filter(|p| p.a >= a_min && p.a <= a_max)
                .collect();
            Some(BifurcationCurve { points })
        }
        _ => None,
    };

    let bounds = if shape.icpd || shape.dcpd {
        let rows: Vec<BoundRow> = (a_min..=a_max)
            .into_par_iter()
            .map(|a1| {
                let bound = cluster_bounds(a1, config.n, eps, &reset, &rise, &shape).ok();
                let (c_stable_below, c_unstable_above) =
                    rc_invariance_thresholds(a1, config.n, eps, &rise, shape.icpd)
                        .unwrap_or((f64::NAN, f64::NAN));
                let c_instability =
                    rc_instability_threshold(a1, config.n, eps, &rise).unwrap_or(None);
                BoundRow {
                    a1,
                    bound,
                    c_stable_below,
                    c_unstable_above,
                    c_instability,
                }
            })
            .collect();
        Some(rows)
    } else {
        None
    };

    Ok(TheoryReport {
        shape,
        bifurcation,
        bounds,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// runs.csv: one row per (point, run), ordered by index.
pub fn write_run_rows_csv(mut w: impl Write, rows: &[RunOutcome]) -> Result<()> {
    writeln!(
        w,
        "point_index,c,run_index,child_seed,events,spikes,periodic,period,max_cluster,sizes,error"
    )?;
    for r in rows {
        let sizes = r
            .sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.point_index,
            fmt_f64(r.c),
            r.run_index,
            r.child_seed,
            r.events,
            r.spikes,
            r.periodic,
            r.period.map(fmt_f64).unwrap_or_default(),
            r.max_cluster,
            sizes,
            r.error.clone().unwrap_or_default().replace(',', ";")
        )?;
    }
    Ok(())
}

/// summary.csv: one row per grid point.
pub fn write_aggregates_csv(mut w: impl Write, aggs: &[PointAggregate]) -> Result<()> {
    writeln!(
        w,
        "point_index,c,runs,failed,periodic_runs,max_cluster_observed,mean_max_cluster"
    )?;
    for a in aggs {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            a.point_index,
            fmt_f64(a.c),
            a.runs,
            a.failed,
            a.periodic_runs,
            a.max_cluster_observed,
            fmt_f64(a.mean_max_cluster)
        )?;
    }
    Ok(())
}

/// bifurcation.csv: columns a, c_cr, method, residual.
pub fn write_bifurcation_csv(mut w: impl Write, curve: &BifurcationCurve) -> Result<()> {
    writeln!(w, "a,c_cr,method,residual")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{}",
            p.a,
            fmt_f64(p.c_cr),
            if p.closed_form { "closed-form" } else { "bisection" },
            fmt_f64(p.residual)
        )?;
    }
    Ok(())
}

/// bounds.csv: invariance certificates and linear-reset thresholds.
pub fn write_bounds_csv(mut w: impl Write, rows: &[BoundRow]) -> Result<()> {
    writeln!(
        w,
        "a1,sufficient_ok,necessary_ok,instability_ok,c_stable_below,c_unstable_above,c_instability"
    )?;
    for r in rows {
        let (s, n, i) = match r.bound {
            Some(b) => (
                b.sufficient_ok.to_string(),
                b.necessary_ok.to_string(),
                b.instability_ok.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.a1,
            s,
            n,
            i,
            fmt_f64(r.c_stable_below),
            fmt_f64(r.c_unstable_above),
            r.c_instability.map(fmt_f64).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Structured-text shape report, one `key=value` per line.
pub fn write_shape_report(mut w: impl Write, config: &ExperimentConfig, shape: &ShapeReport) -> Result<()> {
    let rise = config.build_rise()?;
    writeln!(w, "family={:?}", rise.family())?;
    writeln!(w, "convex={}", shape.convex)?;
    writeln!(w, "concave={}", shape.concave)?;
    writeln!(w, "sigmoidal={}", shape.sigmoidal)?;
    writeln!(w, "icpd={}", shape.icpd)?;
    writeln!(w, "dcpd={}", shape.dcpd)?;
    writeln!(w, "method={:?}", shape.method)?;
    Ok(())
}

/// Writes all sweep artifacts into `dir`.
pub fn write_sweep_outputs(dir: &Path, summary: &SweepSummary) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let runs = std::fs::File::create(dir.join("runs.csv"))?;
    write_run_rows_csv(std::io::BufWriter::new(runs), &summary.rows)?;
    let aggs = std::fs::File::create(dir.join("summary.csv"))?;
    write_aggregates_csv(std::io::BufWriter::new(aggs), &summary.aggregates)?;
    Ok(())
}

/// Writes theory artifacts into `dir`.
pub fn write_theory_outputs(dir: &Path, report: &TheoryReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(curve) = &report.bifurcation {
        let f = std::fs::File::create(dir.join("bifurcation.csv"))?;
        write_bifurcation_csv(std::io::BufWriter::new(f), curve)?;
    }
    if let Some(rows) = &report.bounds {
        let f = std::fs::File::create(dir.join("bounds.csv"))?;
        write_bounds_csv(std::io::BufWriter::new(f), rows)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = preset("fig3").unwrap();
        cfg.n = 10;
        cfg.spikes = 2000;
        cfg.coupling = crate::config::CouplingSpec::Homogeneous { eps: 0.02 };
        cfg.sweep = Some(SweepSpec {
            c_values: vec![0.0, 0.5, 1.0],
            runs: 4,
        });
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn child_seed_pure_and_spread() {
        assert_eq!(child_seed(1, 2, 3), child_seed(1, 2, 3));
        assert_ne!(child_seed(1, 2, 3), child_seed(1, 3, 2));
        assert_ne!(child_seed(1, 2, 3), child_seed(2, 2, 3));
    }

    #[test]
    fn run_single_deterministic() {
        let mut cfg = tiny_config();
        cfg.sweep = None;
        let a = run_single(&cfg).unwrap();
        let b = run_single(&cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.partition, b.partition);
    }

    #[test]
    fn sweep_rows_ordered_and_deterministic() {
        let cfg = tiny_config();
        let s1 = run_sweep(&cfg).unwrap();
        let s2 = run_sweep(&cfg).unwrap();
        assert_eq!(s1.rows.len(), 12);
        for (i, r) in s1.rows.iter().enumerate() {
            assert_eq!(r.point_index, i / 4);
            assert_eq!(r.run_index, i % 4);
            assert!(r.error.is_none(), "{:?}", r.error);
        }
        let mut buf1 = Vec::new();
        write_run_rows_csv(&mut buf1, &s1.rows).unwrap();
        let mut buf2 = Vec::new();
        write_run_rows_csv(&mut buf2, &s2.rows).unwrap();
        assert_eq!(buf1, buf2, "byte-identical summaries");
    }

    #[test]
    fn sweep_extremes_match_theory() {
        // c = 0 keeps the perturbed synchronous state together;
        // c = 1 destroys every cluster
        let cfg = tiny_config();
        let s = run_sweep(&cfg).unwrap();
        let at = |c: f64| {
            s.aggregates
                .iter()
                .find(|a| (a.c - c).abs() < 1e-12)
                .unwrap()
        };
        assert_eq!(at(0.0).max_cluster_observed, 10);
        assert_eq!(at(1.0).max_cluster_observed, 1);
    }

    #[test]
    fn theory_report_for_ub() {
        let mut cfg = tiny_config();
        cfg.sweep = None;
        let rep = run_theory(&cfg).unwrap();
        let curve = rep.bifurcation.unwrap();
        assert_eq!(curve.points.len(), 9); // a = 2..=10
        let bounds = rep.bounds.unwrap();
        assert_eq!(bounds.len(), 9);
        // thresholds must decrease with cluster size
        assert!(bounds.first().unwrap().c_stable_below >= bounds.last().unwrap().c_stable_below);
        let mut buf = Vec::new();
        write_bifurcation_csv(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,c_cr,method,residual"));
        assert!(text.contains("closed-form"));
    }

    #[test]
    fn degenerate_sweep_equals_single_run() {
        let mut cfg = tiny_config();
        cfg.sweep = Some(SweepSpec {
            c_values: vec![0.5],
            runs: 1,
        });
        let sweep = run_sweep(&cfg).unwrap();
        let row = &sweep.rows[0];
        let single = run_seeded(&cfg.with_reset_c(0.5), child_seed(cfg.seed.unwrap(), 0, 0)).unwrap();
        assert_eq!(row.max_cluster, single.partition.max_cluster());
        assert_eq!(row.periodic, single.partition.periodic);
        assert_eq!(row.spikes, single.log.total_spikes());
    }
}
