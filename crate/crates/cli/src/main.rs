use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use novak_core::checks;
use novak_core::harness::{format_summary, run_experiment, summarize, RunConfig, RunTrace};

#[derive(Parser)]
#[command(name = "novak", version, about = "Run and summarize optimizer experiments")]
struct Cli {
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write one CSV per seed.
    Run {
        config: PathBuf,
        /// Replace the config's seed list (repeatable).
        #[arg(long = "seed-override", value_name = "SEED")]
        seeds: Vec<u64>,
        /// Write CSVs here instead of the config's `output`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Summarize trajectory CSVs, grouped by run name.
    Summarize {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Loss threshold for the steps-to-threshold column.
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        /// Step budget for the sentinel value; defaults to the last logged step.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Run the acceptance checks.
    Check {
        /// Run only these checks (repeatable).
        #[arg(long, value_name = "ID")]
        only: Vec<u8>,
    },
}

fn run(config: PathBuf, seeds: Vec<u64>, output_dir: Option<PathBuf>, quiet: bool) -> Result<bool> {
    let mut cfg = RunConfig::load(&config)?;
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    if let Some(dir) = output_dir {
        cfg.output = dir;
    }
    let result = run_experiment(&cfg)?;
    let paths = result.write(&cfg.output)?;
    let failures = result.failures().count();
    if !quiet {
        for p in &paths {
            println!("wrote {}", p.display());
        }
        let traces: Vec<RunTrace> = result
            .runs
            .iter()
            .map(|r| RunTrace { group: result.name.clone(), seed: Some(r.seed), records: r.records.clone() })
            .collect();
        print!("{}", format_summary(&summarize(&traces, 1e-3, Some(cfg.steps)), 1e-3));
    }
    for r in result.failures() {
        let f = r.failure.as_ref().expect("failed run has a failure");
        eprintln!("seed {} failed at step {}: {}", r.seed, f.step, f.message);
    }
    Ok(failures == 0)
}

fn summarize_files(csv: &[PathBuf], threshold: f64, budget: Option<usize>) -> Result<bool> {
    let traces = csv
        .iter()
        .map(|p| RunTrace::load(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    print!("{}", format_summary(&summarize(&traces, threshold, budget), threshold));
    Ok(true)
}

fn check(only: &[u8]) -> Result<bool> {
    let outcomes = if only.is_empty() {
        checks::run_all()
    } else {
        let mut out = Vec::new();
        for &id in only {
            match checks::run(id) {
                Some(o) => out.push(o),
                None => bail!("no check with id {id} (valid: 1-{})", checks::CHECKS.len()),
            }
        }
        out
    };
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed} of {} checks passed", outcomes.len());
    Ok(passed == outcomes.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "warn"
    } else {
        "info"
    }))
    .format_timestamp(None)
    .init();
    let outcome = match cli.command {
        Command::Run { config, seeds, output_dir } => run(config, seeds, output_dir, cli.quiet),
        Command::Summarize { csv, threshold, budget } => summarize_files(&csv, threshold, budget),
        Command::Check { only } => check(&only),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
