//! Command-line front end `wgbic`.
//!
//! Exit codes: 0 success, 1 run error or failed check, 2 bad configuration or
//! usage, 3 no resonant solution.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;

use clap::{Args, Parser, Subcommand};

use commands::{CmdResult, Failure};
use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "wgbic", version, about = "Bound states of two emitters in a one-dimensional waveguide")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Override one key, e.g. --set model.lambda=0.05 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output format: csv, json or both.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the resonant bound mode.
    Solve,
    /// Sweep one parameter and record an observable.
    Scan(ScanArgs),
    /// Emitter entanglement of the N-excitation bound state.
    Fock(FockArgs),
    /// Time evolution in the discretized model.
    Evolve(EvolveArgs),
    /// Run every internal consistency check.
    Verify,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// lambda, d or omega0.
    #[arg(long)]
    axis: Option<String>,
    /// Comma separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// start:stop:points
    #[arg(long)]
    range: Option<String>,
    /// p_at, E, omega0_required or detuning.
    #[arg(long)]
    observable: Option<String>,
}

#[derive(Debug, Args)]
struct FockArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "p-at")]
    p_at: Option<f64>,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// psiN, singleA, bell_minus or custom.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long = "custom-file")]
    custom_file: Option<String>,
    /// Comma separated ω0 offsets; runs a detuning sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offsets: Option<Vec<f64>>,
    #[arg(long)]
    sector: Option<u32>,
    #[arg(long)]
    horizon: Option<f64>,
}

fn json_list(xs: &[f64]) -> String {
    serde_json::to_string(xs).expect("floats serialize")
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Global flags and subcommand flags as `--set` assignments, in precedence order.
fn overrides(cli: &Cli) -> Result<Vec<String>, ConfigError> {
    let mut o = cli.set.clone();
    if let Some(dir) = &cli.out {
        o.push(format!("output.dir={}", quoted(dir)));
    }
    if let Some(f) = &cli.format {
        o.push(format!("output.format={}", quoted(f)));
    }
    match &cli.command {
        Command::Scan(a) => {
            if let Some(axis) = &a.axis {
                o.push(format!("scan.axis={}", quoted(axis)));
            }
            if let Some(obs) = &a.observable {
                o.push(format!("scan.observable={}", quoted(obs)));
            }
            if let Some(v) = &a.values {
                o.push(format!("scan.values={}", json_list(v)));
            }
            if let Some(r) = &a.range {
                let parts: Vec<&str> = r.split(':').collect();
                let bad = || ConfigError(format!("--range expects start:stop:points, got {r:?}"));
                if parts.len() != 3 {
                    return Err(bad());
                }
                let start: f64 = parts[0].parse().map_err(|_| bad())?;
                let stop: f64 = parts[1].parse().map_err(|_| bad())?;
                let points: usize = parts[2].parse().map_err(|_| bad())?;
                o.push(format!("scan.start={start:?}"));
                o.push(format!("scan.stop={stop:?}"));
                o.push(format!("scan.points={points}"));
                o.push("scan.values=null".into());
            }
        }
        Command::Fock(a) => {
            if let Some(n) = a.n {
                o.push(format!("fock.n={n}"));
            }
            if let Some(p) = a.p_at {
                o.push(format!("fock.p_at={p:?}"));
            }
        }
        Command::Evolve(a) => {
            if let Some(s) = &a.initial {
                o.push(format!("dynamics.initial={}", quoted(s)));
            }
            if let Some(f) = &a.custom_file {
                o.push(format!("dynamics.custom_file={}", quoted(f)));
            }
            if let Some(v) = &a.offsets {
                o.push(format!("dynamics.offsets={}", json_list(v)));
            }
            if let Some(s) = a.sector {
                o.push(format!("dynamics.sector={s}"));
            }
            if let Some(h) = a.horizon {
                o.push(format!("dynamics.horizon={h:?}"));
            }
        }
        Command::Solve | Command::Verify => {}
    }
    Ok(o)
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let text = match &cli.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?),
        None => None,
    };
    RunConfig::load(text.as_deref(), &overrides(cli)?)
}

fn dispatch(cli: &Cli) -> CmdResult {
    let cfg = load(cli)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::Scan(_) => commands::scan_cmd(&cfg),
        Command::Fock(_) => commands::fock_cmd(&cfg),
        Command::Evolve(_) => commands::evolve_cmd(&cfg),
        Command::Verify => commands::verify_cmd(&cfg),
    }
}

fn failure_code(f: &Failure) -> i32 {
    match f {
        Failure::Config(_) => EXIT_CONFIG,
        Failure::Run(crate::Error::NoSolution(_)) => EXIT_NO_SOLUTION,
        Failure::Run(_) | Failure::Io(_) => EXIT_FAILURE,
    }
}

/// Parse `args`, run, print a report and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(done) => {
            print!("{}", done.summary);
            for f in &done.files {
                eprintln!("wrote {}", f.display());
            }
            done.code
        }
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("config error: {}", e.0),
                Failure::Run(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("i/o error: {e}"),
            }
            failure_code(&f)
        }
    }
}
