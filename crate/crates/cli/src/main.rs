//! `ecf`: command-line front end for ecf-core.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or parse error,
//! 3 budget refusal, 4 failed verification.

mod args;
mod commands;
mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches};

use args::{Cli, Command};
use output::{read_manifest, render, RunManifest};

/// Interval precision when `ECF_PRECISION_BITS` is unset; enough for 40 decimal digits.
const DEFAULT_PRECISION_BITS: u32 = 160;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Budget(String),
    Verification(String),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Verification(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Other(m) | Failure::Verification(m) => f.write_str(m),
            Failure::Budget(m) => write!(f, "refused: {m}"),
        }
    }
}

impl From<ecf_core::Error> for Failure {
    fn from(e: ecf_core::Error) -> Self {
        use ecf_core::Error as E;
        match e {
            E::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            E::NoCertifiedTrials { .. } => Failure::Other(e.to_string()),
            E::Domain(_) | E::NotAdmissible(_) | E::EmptyWord | E::InvalidArgument(_) => Failure::Usage(e.to_string()),
        }
    }
}

macro_rules! runtime_failure {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Other(e.to_string())
            }
        }
    )*};
}

runtime_failure!(std::io::Error, serde_json::Error, csv::Error, std::string::FromUtf8Error);

fn precision_from_env() -> Result<u32, Failure> {
    match std::env::var("ECF_PRECISION_BITS") {
        Err(_) => Ok(DEFAULT_PRECISION_BITS),
        Ok(s) => match s.trim().parse::<u32>() {
            Ok(p) if (16..=1 << 20).contains(&p) => Ok(p),
            _ => Err(Failure::Usage(format!("ECF_PRECISION_BITS must be an integer in 16..=1048576, got {s:?}"))),
        },
    }
}

/// The arguments without `--output`/`-o` and its value.
fn reproducible_argv(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if std::mem::take(&mut skip) {
            continue;
        }
        if a == "--output" || a == "-o" {
            skip = true;
        } else if !(a.starts_with("--output=") || (a.starts_with("-o") && !a.starts_with("--"))) {
            out.push(a.clone());
        }
    }
    out
}

/// Subcommand name and every argument value it was run with, defaults included.
fn params(matches: &ArgMatches) -> (String, BTreeMap<String, String>) {
    let root = Cli::command();
    let mut map = BTreeMap::new();
    let mut collect = |def: &clap::Command, m: &ArgMatches| {
        for arg in def.get_arguments() {
            let id = arg.get_id().as_str();
            if id == "output" {
                continue;
            }
            if let Ok(Some(raw)) = m.try_get_raw(id) {
                let v: Vec<String> = raw.map(|s| s.to_string_lossy().into_owned()).collect();
                map.insert(id.to_string(), v.join(","));
            }
        }
    };
    collect(&root, matches);
    let name = match matches.subcommand() {
        Some((name, sub)) => {
            if let Some(def) = root.find_subcommand(name) {
                collect(def, sub);
            }
            name.to_string()
        }
        None => String::new(),
    };
    (name, map)
}

fn execute(args: Vec<String>, precision: Option<u32>, output: Option<std::path::PathBuf>) -> Result<(), Failure> {
    let argv: Vec<OsString> = std::iter::once(OsString::from("ecf")).chain(args.iter().map(OsString::from)).collect();
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(Failure::Usage(String::new()));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Command::Replay { manifest } = &cli.command {
        let m = read_manifest(&std::fs::read_to_string(manifest)?)?;
        return execute(m.argv, Some(m.precision), cli.output.clone());
    }
    let prec = match precision {
        Some(p) => p,
        None => precision_from_env()?,
    };
    let (command, params) = params(&matches);
    let (seed, rng) = commands::seed_and_rng(&cli.command);
    let manifest = RunManifest {
        command,
        params,
        argv: reproducible_argv(&args),
        seed,
        precision: prec,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        rng,
    };
    let outcome = commands::run(&cli.command, prec)?;
    let text = render(cli.format, &manifest, &outcome.report)?;
    match output.or(cli.output) {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match execute(args, None, None) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = f.to_string();
            if !msg.is_empty() {
                eprintln!("ecf: {msg}");
            }
            ExitCode::from(f.exit_code())
        }
    }
}
