use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use wentzell::config::{Command, ExperimentConfig};
use wentzell::experiments::{invariant_suite, run, Check};
use wentzell::Error;

/// Wentzell–Laplace eigenvalue experiments. Each subcommand writes CSV files
/// into the configured output directory and exits 0 iff its checks pass.
#[derive(Parser)]
#[command(name = "wentzell", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set beta=0.1,1,10`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (same as `--set output=DIR`).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Print every check; without a subcommand, run the built-in invariant suite.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Eigenvalues of one domain: index,lambda.
    Spectrum,
    /// Bound chain with its intermediate quantities along a family.
    Bounds,
    /// t,lambda1,M1,M2,M3 along each family.
    Sweep,
    /// lambda1 against eccentricity for ellipses, one column per beta.
    EigenCurves,
    /// Eigenvalue branches through the disk and their slopes.
    ShapeDeriv,
    /// Second derivative of lambda1+lambda2 at the disk: closed form against FD.
    SecondOrder,
    /// Spherical-harmonic identity table.
    HarmonicsCheck,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Bounds => Command::Bounds,
            Sub::Sweep => Command::Sweep,
            Sub::EigenCurves => Command::EigenCurves,
            Sub::ShapeDeriv => Command::ShapeDeriv,
            Sub::SecondOrder => Command::SecondOrder,
            Sub::HarmonicsCheck => Command::HarmonicsCheck,
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("WENTZELL_THREADS") {
        let n: usize = v.parse().with_context(|| format!("WENTZELL_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn report(checks: &[Check], verbose: bool) -> bool {
    let mut ok = true;
    for c in checks {
        ok &= c.passed;
        if verbose || !c.passed {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                eprintln!("{tag} {}", c.name);
            } else {
                eprintln!("{tag} {} ({})", c.name, c.detail);
            }
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    eprintln!("{} checks, {failed} failed", checks.len());
    ok
}

fn load(cli: &Cli, command: Command) -> Result<ExperimentConfig, Error> {
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config {
            key: "config".into(),
            message: format!("{}: {e}", p.display()),
        })?),
        None => None,
    };
    let mut overrides = cli.overrides.clone();
    if let Some(o) = &cli.output {
        overrides.push(format!("output={}", o.display()));
    }
    ExperimentConfig::load(command, text.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let Some(sub) = cli.command else {
        if cli.check {
            return if report(&invariant_suite(), true) { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
        eprintln!("error: no subcommand (see --help)");
        return ExitCode::from(2);
    };
    let cfg = match load(&cli, sub.into()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = run(&cfg).map_err(anyhow::Error::from).and_then(|r| {
        let files = r.write(&cfg.output).with_context(|| format!("writing to {}", cfg.output.display()))?;
        Ok((r, files))
    });
    match result {
        Ok((r, files)) => {
            for f in files {
                println!("{}", f.display());
            }
            if report(&r.checks, cli.check) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
