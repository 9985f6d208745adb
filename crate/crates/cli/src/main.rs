//! `corrugate <experiment-kind> --config <path> [--out <path>] [--seed <u64>]`
//!
//! Exit codes: 0 all tolerances pass, 1 a tolerance failed, 2 configuration
//! or domain error.

use std::path::PathBuf;
use std::process::ExitCode;

use corrugate_cli::{run_experiment, Config, ExperimentKind};

struct Args {
    kind: ExperimentKind,
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

fn usage() -> String {
    format!(
        "usage: corrugate <experiment-kind> --config <path> [--out <path>] [--seed <u64>]\n\
         experiment kinds: {}",
        ExperimentKind::ALL_NAMES
    )
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut kind = None;
    let mut config = None;
    let mut out = None;
    let mut seed = None;
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let v = it.next().ok_or("--config needs a path")?;
                config = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it.next().ok_or("--out needs a path")?;
                out = Some(PathBuf::from(v));
            }
            "--seed" => {
                let v = it.next().ok_or("--seed needs an integer")?;
                seed = Some(v.parse::<u64>().map_err(|_| format!("bad seed '{v}'"))?);
            }
            "--help" | "-h" => return Err(usage()),
            other if kind.is_none() && !other.starts_with('-') => {
                kind = Some(
                    ExperimentKind::parse(other)
                        .ok_or_else(|| format!("unknown experiment '{other}'\n{}", usage()))?,
                );
            }
            other => return Err(format!("unexpected argument '{other}'\n{}", usage())),
        }
    }
    Ok(Args {
        kind: kind.ok_or_else(usage)?,
        config: config.ok_or_else(|| format!("missing --config\n{}", usage()))?,
        out,
        seed,
    })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let cfg = match Config::from_file(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    // The config seed is read unconditionally (CLI --seed overrides it) so
    // the strict unknown-key check stays quiet about it.
    let cfg_seed = match cfg.get_u64_or("seed", 42) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let seed = args.seed.unwrap_or(cfg_seed);
    match run_experiment(args.kind, &cfg, seed) {
        Ok(report) => {
            let csv = report.to_csv();
            if let Some(path) = &args.out {
                if let Err(e) = report.write_csv(path) {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
                eprintln!("wrote {}", path.display());
            }
            print!("{csv}");
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("FAIL: tolerance violated (see report)");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
