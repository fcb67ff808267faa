//! Batch experiment runner.
//!
//! ```text
//! twoq run <config.json> [--out-dir DIR] [--seed-override N]
//!                        [--engines a,b,c] [--verbose]
//! ```
//!
//! Exit codes: 0 all checks passed, 1 invariant or engine failure,
//! 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use twoq_cli::{run_experiment, ConfigError, Engine, ExperimentConfig};

const USAGE: &str = "usage: twoq run <config.json> [--out-dir DIR] \
[--seed-override N] [--engines a,b,c] [--verbose]";

struct Args {
    config: PathBuf,
    out_dir: PathBuf,
    seed_override: Option<u64>,
    engines_override: Option<Vec<Engine>>,
    verbose: bool,
}

fn parse_args(mut argv: impl Iterator<Item = String>) -> Result<Args, String> {
    match argv.next().as_deref() {
        Some("run") => {}
        Some(other) => return Err(format!("unknown command '{other}'\n{USAGE}")),
        None => return Err(USAGE.to_string()),
    }
    let config = PathBuf::from(argv.next().ok_or(USAGE)?);
    let mut args = Args {
        config,
        out_dir: PathBuf::from("."),
        seed_override: None,
        engines_override: None,
        verbose: false,
    };
    while let Some(flag) = argv.next() {
        match flag.as_str() {
            "--out-dir" => {
                args.out_dir = PathBuf::from(argv.next().ok_or("--out-dir needs a value")?);
            }
            "--seed-override" => {
                let v = argv.next().ok_or("--seed-override needs a value")?;
                args.seed_override = Some(v.parse().map_err(|_| format!("bad seed '{v}'"))?);
            }
            "--engines" => {
                let v = argv.next().ok_or("--engines needs a value")?;
                let engines = v
                    .split(',')
                    .map(Engine::from_str)
                    .collect::<Result<Vec<_>, _>>()?;
                args.engines_override = Some(engines);
            }
            "--verbose" => args.verbose = true,
            other => return Err(format!("unknown flag '{other}'\n{USAGE}")),
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args = match parse_args(std::env::args().skip(1)) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };

    let mut cfg = match ExperimentConfig::from_file(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed_override {
        if let Some(sim) = &mut cfg.sim {
            sim.seed = seed;
        }
    }
    if let Some(engines) = args.engines_override {
        cfg.engines = engines;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("{}", ConfigError::Invalid(e.to_string()));
        return ExitCode::from(2);
    }

    match run_experiment(&cfg, &args.out_dir, args.verbose) {
        Ok(report) => {
            if args.verbose {
                for row in &report.rows {
                    eprintln!(
                        "r={:.4} engine={} ks={:.4} tv={:.4}",
                        row.r, row.engine, row.ks, row.tv
                    );
                }
            }
            println!("{}", report.csv_path.display());
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                for (r, e, msg) in &report.failures {
                    eprintln!("FAIL r={r} engine={e}: {msg}");
                }
                for v in &report.invariant_violations {
                    eprintln!("INVARIANT {v}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("io error: {e}");
            ExitCode::from(1)
        }
    }
}
