use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcts_cli::config::{validate_config, Mode, RawConfig};
use dcts_cli::output::{fmt_float, write_run, write_sweep};
use dcts_cli::run::{self, SummaryRow};

#[derive(Parser)]
#[command(name = "dcts", version, about = "Run DCTS bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run policies on a synthetic scenario
    Simulate(Flags),
    /// Evaluate policies on a logged impression file
    Replay(Flags),
    /// Run a grid of configurations and summarize each point
    Sweep(Flags),
    /// Check a configuration and report every problem
    Validate(Flags),
}

#[derive(Args)]
struct Flags {
    /// Experiment configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; replication r uses seed + r
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core)
    #[arg(long)]
    workers: Option<usize>,
}

fn load(flags: &Flags, mode: Option<Mode>) -> anyhow::Result<RawConfig> {
    let mut raw = match &flags.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    raw.apply_env(std::env::vars());
    if let Some(seed) = flags.seed {
        raw.set("base_seed", &seed.to_string());
    }
    if let Some(out) = &flags.out {
        raw.set("output_dir", &out.to_string_lossy());
    }
    if let Some(w) = flags.workers {
        raw.set("workers", &w.to_string());
    }
    if let Some(m) = mode {
        raw.set("mode", &m.to_string());
    }
    Ok(raw)
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<10} {:>12} {:>12} {:>12}",
        "policy", "mean_ctr", "ci95", "relative"
    );
    for s in rows {
        println!(
            "{:<10} {:>12} {:>12} {:>12}",
            s.policy,
            fmt_float(s.ctr.mean),
            fmt_float(s.ctr.half_width),
            s.relative_ctr.map(fmt_float).unwrap_or_else(|| "-".into())
        );
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (flags, mode) = match &cli.command {
        Command::Simulate(f) => (f, Some(Mode::Simulate)),
        Command::Replay(f) => (f, Some(Mode::Replay)),
        Command::Sweep(f) => (f, Some(Mode::Sweep)),
        Command::Validate(f) => (f, None),
    };
    let raw = load(flags, mode)?;
    let cfg = match validate_config(&raw) {
        Ok(cfg) => cfg,
        Err(diagnostics) => {
            for d in &diagnostics {
                eprintln!("error: {d}");
            }
            eprintln!("{} problem(s) in configuration", diagnostics.len());
            return Ok(ExitCode::FAILURE);
        }
    };

    match mode {
        None => println!("configuration ok"),
        Some(Mode::Simulate) => {
            let out = run::simulate(&cfg)?;
            write_run(&cfg.output_dir, &out)?;
            print_summary(&out.summary);
        }
        Some(Mode::Replay) => {
            let (out, report) = run::replay(&cfg)?;
            write_run(&cfg.output_dir, &out)?;
            eprintln!(
                "impressions: {} read, {} deduplicated; clicks: {} read, {} attributed, {} orphan, {} duplicate",
                report.impressions_read,
                report.impressions_deduplicated,
                report.clicks_read,
                report.clicks_attributed,
                report.orphan_clicks,
                report.duplicate_clicks
            );
            print_summary(&out.summary);
        }
        Some(Mode::Sweep) => {
            let out = run::sweep(&cfg)?;
            write_sweep(&cfg.output_dir, &out)?;
            for p in &out.points {
                let label: Vec<String> = p.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("[{}]", label.join(" "));
                print_summary(&p.summary);
            }
        }
    }
    if mode.is_some() {
        eprintln!("wrote {}", cfg.output_dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
