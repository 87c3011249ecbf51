use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use fracvi_cli::{parse_config, run, Command, RunConfig};

/// Solvers and invariant checks for fractional obstacle problems.
///
/// Exit status: 0 when every invariant passes, 1 when an invariant fails,
/// 2 on configuration, I/O or solver errors.
#[derive(Debug, Parser)]
#[command(name = "fracvi", version)]
struct Cli {
    /// Command to run; may instead be given as `command = ...` in the config.
    #[arg(value_enum)]
    command: Option<Command>,

    /// Configuration file. Without one, built-in defaults are used.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory. Precedence: this flag, then FRACVI_OUT, then
    /// `output_dir` in the config, then `fracvi-out`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print the full summary to stdout.
    #[arg(long, short)]
    verbose: bool,
}

fn load(cli: &Cli) -> anyhow::Result<(RunConfig, Command, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
            if let Some(dir) = path.parent() {
                cfg.resolve_paths(dir);
            }
            cfg
        }
        None => RunConfig::default(),
    };
    let command = match (cli.command, cfg.command) {
        (Some(a), Some(b)) if a != b => {
            anyhow::bail!("command line asks for `{a}` but the config names `{b}`")
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => anyhow::bail!("no command given on the command line or in the config"),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("FRACVI_OUT").map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("fracvi-out"));
    Ok((cfg, command, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, command, out) = match load(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cfg, command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.write(&out) {
        eprintln!("error: writing artifacts to {}: {e}", out.display());
        return ExitCode::from(2);
    }
    if cli.verbose {
        print!("{}", report.summary());
    }
    for inv in report.invariants.iter().filter(|i| !i.passed) {
        eprintln!("invariant {} violated: value {:e}, limit {:e}", inv.name, inv.value, inv.limit);
    }
    if let Some(f) = &report.failure {
        eprintln!("error: {f} (partial artifacts in {})", out.display());
        return ExitCode::from(2);
    }
    let passed = report.passed();
    println!("{command}: {} ({})", if passed { "PASS" } else { "FAIL" }, out.display());
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
