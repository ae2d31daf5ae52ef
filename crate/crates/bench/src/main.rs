use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrobust_bench::report::{format_medians, parse_table, SUMMARY_FILE, TABLE_FILE};
use qrobust_bench::{emit_report, run_experiment, BenchError, ExperimentConfig, OutputFormat, Result};

#[derive(Parser)]
#[command(
    name = "qrobust",
    version,
    about = "Robustness experiments for hybrid quantum classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate without attack or defense.
    Baseline(Opts),
    /// Baseline plus the configured attack.
    Attack(Opts),
    /// Baseline, attack (if any) and the configured defense.
    Defend(Opts),
    /// Run every cell of the configured depth / noise grid.
    Sweep(Opts),
    /// Recompute medians from an existing results table.
    Report(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    config: PathBuf,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "both")]
    format: OutputFormat,
}

fn run(cli: Cli) -> Result<()> {
    let (opts, which) = match &cli.command {
        Command::Baseline(o) => (o, "baseline"),
        Command::Attack(o) => (o, "attack"),
        Command::Defend(o) => (o, "defend"),
        Command::Sweep(o) => (o, "sweep"),
        Command::Report(o) => (o, "report"),
    };
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(s) = opts.seed {
        cfg.seeds = vec![s];
    }
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(BenchError::Config(format!("'{which}' needs {what} in the config")))
        }
    };
    match which {
        "baseline" => {
            cfg.attack = None;
            cfg.defense = None;
            cfg.sweep = None;
        }
        "attack" => {
            need(cfg.attack.is_some(), "an [attack] section")?;
            cfg.defense = None;
            cfg.sweep = None;
        }
        "defend" => {
            need(cfg.defense.is_some(), "a [defense] section")?;
            cfg.sweep = None;
        }
        "sweep" => need(cfg.sweep.is_some(), "a [sweep] section")?,
        _ => {
            let path = out.join(TABLE_FILE);
            let text = std::fs::read_to_string(&path).map_err(|source| BenchError::Io {
                path: path.clone(),
                source,
            })?;
            let (hash, rows) = parse_table(&text)?;
            let body = format!("config hash: {hash}\n\nmedians over seeds\n{}", format_medians(&rows));
            print!("{body}");
            let path = out.join(SUMMARY_FILE);
            return std::fs::write(&path, body).map_err(|source| BenchError::Io { path, source });
        }
    }
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    for path in emit_report(&report, &out, opts.format)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrobust: {e}");
            ExitCode::FAILURE
        }
    }
}
