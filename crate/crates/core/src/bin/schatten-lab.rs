use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use schatten_lab::runner::{render, run, write_report, ExperimentConfig, ReportFormat};

/// Run a verify, estimate or strip-check experiment from a TOML config.
#[derive(Debug, Parser)]
#[command(name = "schatten-lab", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Report path; defaults to the config's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Never changes the report.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let format = cli.format.or(config.format).unwrap_or(ReportFormat::Json);
    let out = cli.out.clone().or_else(|| config.output.clone());

    let report = match run(&config, cli.jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match &out {
        Some(path) => write_report(&report, path, format),
        None => render(&report, format).map(|text| println!("{text}")),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    let s = report.status;
    eprintln!(
        "{:?}: {} failed checks, {} flagged instances, {} surviving review, {} ms",
        report.experiment, s.failed_checks, s.flagged_instances, s.surviving_flags,
        report.wall_clock.elapsed_ms
    );
    ExitCode::from(report.exit_code())
}
