//! Command-line front end: seeded simulations, parameter sweeps,
//! theory tables and rise-function classification.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pulsereset::config::{preset, ExperimentConfig};
use pulsereset::error::Error;
use pulsereset::experiment::{
    run_single, run_sweep, run_theory, write_shape_report, write_sweep_outputs,
    write_theory_outputs,
};

#[derive(Parser)]
#[command(
    name = "pulsereset",
    about = "Event-driven simulation and stability analysis of pulse-coupled oscillators with partial reset",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a TOML experiment config (omit when using --preset).
    config: Option<PathBuf>,
    /// Built-in experiment preset.
    #[arg(long, value_parser = ["fig3", "fig6", "fig7", "fig8"])]
    preset: Option<String>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: out/).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the event log and cluster summary.
    Simulate(CommonArgs),
    /// Run the configured sweep over reset strengths.
    Sweep(CommonArgs),
    /// Emit the bifurcation curve and cluster-bound tables.
    Theory(CommonArgs),
    /// Classify the configured rise function.
    Classify(CommonArgs),
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "preset",
                "pass either a config file or --preset, not both",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                "config",
                "a config file or --preset is required",
            ))
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn setup_workers(args: &CommonArgs) -> Result<(), Error> {
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::config("workers", e.to_string()))?;
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::CouplingUnsafe { .. } => {
            ExitCode::from(2)
        }
        Error::NonConvergence { .. } | Error::NoBracket { .. } | Error::Livelock { .. } => {
            ExitCode::from(3)
        }
        _ => ExitCode::FAILURE,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            setup_workers(&args)?;
            let out = run_single(&cfg)?;
            std::fs::create_dir_all(&args.out_dir)?;
            let f = std::fs::File::create(args.out_dir.join("events.log"))?;
            out.log
                .write_text(std::io::BufWriter::new(f), cfg.output.snapshot_every)?;
            let mut cl = std::fs::File::create(args.out_dir.join("clusters.txt"))?;
            use std::io::Write;
            writeln!(cl, "periodic={}", out.partition.periodic)?;
            writeln!(
                cl,
                "period={}",
                out.partition
                    .period
                    .map(|p| format!("{p:.16e}"))
                    .unwrap_or_default()
            )?;
            let sizes: Vec<String> = out.partition.sizes.iter().map(|s| s.to_string()).collect();
            writeln!(cl, "sizes={}", sizes.join(","))?;
            writeln!(cl, "events={}", out.log.records.len())?;
            writeln!(cl, "spikes={}", out.log.total_spikes())?;
            println!(
                "simulate: {} events, {} spikes, periodic={}, max cluster={}",
                out.log.records.len(),
                out.log.total_spikes(),
                out.partition.periodic,
                out.partition.max_cluster()
            );
            println!("wrote {}", args.out_dir.join("events.log").display());
            Ok(())
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args)?;
            setup_workers(&args)?;
            let summary = run_sweep(&cfg)?;
            write_sweep_outputs(&args.out_dir, &summary)?;
            for a in &summary.aggregates {
                println!(
                    "c={:<6.3} runs={} periodic={} max_cluster={} mean_max={:.2}",
                    a.c, a.runs, a.periodic_runs, a.max_cluster_observed, a.mean_max_cluster
                );
            }
            println!(
                "wrote {} and {}",
                args.out_dir.join("runs.csv").display(),
                args.out_dir.join("summary.csv").display()
            );
            Ok(())
        }
        Command::Theory(args) => {
            let cfg = load_config(&args)?;
            setup_workers(&args)?;
            let report = run_theory(&cfg)?;
            write_theory_outputs(&args.out_dir, &report)?;
            if let Some(curve) = &report.bifurcation {
                println!(
                    "bifurcation curve: {} points, c_cr({}) = {:.6} .. c_cr({}) = {:.6}",
                    curve.points.len(),
                    curve.points.last().map(|p| p.a).unwrap_or(0),
                    curve.points.last().map(|p| p.c_cr).unwrap_or(f64::NAN),
                    curve.points.first().map(|p| p.a).unwrap_or(0),
                    curve.points.first().map(|p| p.c_cr).unwrap_or(f64::NAN),
                );
            }
            if let Some(rows) = &report.bounds {
                println!("bound table: {} rows", rows.len());
            } else {
                println!("bounds unavailable: rise function is neither icpd nor dcpd");
            }
            println!("wrote tables under {}", args.out_dir.display());
            Ok(())
        }
        Command::Classify(args) => {
            let cfg = load_config(&args)?;
            let rise = cfg.build_rise()?;
            let shape = pulsereset::classify::classify(&rise)?;
            write_shape_report(std::io::stdout().lock(), &cfg, &shape)?;
            std::fs::create_dir_all(&args.out_dir)?;
            let f = std::fs::File::create(args.out_dir.join("shape.txt"))?;
            write_shape_report(f, &cfg, &shape)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
