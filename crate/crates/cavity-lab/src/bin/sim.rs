//! Experiment runner for the coupled cavity–ensemble array.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical alarm (guard,
//! conservation, NaN, truncation), 4 oracle dimension overflow, 1 other.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cavity_lab::config::ExperimentConfig;
use cavity_lab::experiments;
use cavity_lab::LabError;

#[derive(Parser)]
#[command(name = "sim", version, about = "Soliton laboratory for coupled cavity arrays with atomic ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and measured dispersion branches on a wavenumber grid.
    Dispersion(RunArgs),
    /// Launch a sech envelope and track amplitude, width, and speed.
    Soliton(RunArgs),
    /// Head-on two-soliton collision.
    Collide(RunArgs),
    /// Delocalization sweep over the ensemble size.
    Transition(RunArgs),
    /// Exact quantum evolution vs the mean-field equations at desk scale.
    #[command(name = "oracle-compare")]
    OracleCompare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set model.atoms=40 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory for CSV/JSON reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), LabError> {
    let (args, name): (&RunArgs, &str) = match &command {
        Command::Dispersion(a) => (a, "dispersion"),
        Command::Soliton(a) => (a, "soliton"),
        Command::Collide(a) => (a, "collide"),
        Command::Transition(a) => (a, "transition"),
        Command::OracleCompare(a) => (a, "oracle-compare"),
    };
    let cfg = ExperimentConfig::from_file(&args.config, &args.set)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.experiment.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    match command {
        Command::Dispersion(_) => {
            let report = experiments::run_dispersion(&cfg)?;
            report.write_files(&out_dir)?;
            match (report.summary.max_rel_err_plus, report.summary.max_rel_err_minus) {
                (Some(p), m) => println!(
                    "dispersion: {} points, max rel err optical {:.3e}{}",
                    report.summary.points,
                    p,
                    m.map(|v| format!(", acoustic {v:.3e}")).unwrap_or_default()
                ),
                _ => println!("dispersion: {} points (closed form only)", report.summary.points),
            }
        }
        Command::Soliton(_) => {
            let report = experiments::run_soliton(&cfg)?;
            report.write_files(&out_dir)?;
            let s = &report.summary;
            if s.empty_field {
                println!("soliton: empty field (zero amplitude); no envelope metrics");
            } else {
                println!(
                    "soliton: amp drift {:.2}%, width drift {:.2}%, speed {:.4} vs v_g {:.4}",
                    100.0 * s.amp_drift.unwrap_or(f64::NAN),
                    100.0 * s.width_drift.unwrap_or(f64::NAN),
                    s.measured_velocity.unwrap_or(f64::NAN),
                    s.v_g_predicted
                );
            }
        }
        Command::Collide(_) => {
            let report = experiments::run_collide(&cfg)?;
            report.write_files(&out_dir)?;
            let s = &report.summary;
            println!(
                "collide: amp changes {:.2}% / {:.2}%, min separation {:.1} d, collided: {}",
                100.0 * s.amp_change[0],
                100.0 * s.amp_change[1],
                s.min_separation,
                s.collided
            );
        }
        Command::Transition(_) => {
            let report = experiments::run_transition(&cfg)?;
            report.write_files(&out_dir)?;
            println!(
                "transition: {} points, spearman(score, c1/c2) = {}",
                report.points.len(),
                report
                    .summary
                    .spearman
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_else(|| "n/a".into())
            );
        }
        Command::OracleCompare(_) => {
            let report = experiments::run_oracle_compare(&cfg)?;
            report.write_files(&out_dir)?;
            let s = &report.summary;
            println!(
                "oracle-compare: dim {}, max |<a> - alpha| = {:.3e} vs bound {:.3e} ({})",
                s.dim,
                s.max_dev,
                s.bound,
                if s.within_bound { "within" } else { "EXCEEDED" }
            );
        }
    }
    Ok(())
}
