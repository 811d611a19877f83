//! `grouprec`: run pipeline stages from the command line.

mod commands;
mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::json;

use commands::{Command, Context};
use config::{Overrides, RunConfig};
use grouprec_core::Error;

#[derive(Debug, Parser)]
#[command(name = "grouprec", version, about = "Private group recommendation pipeline")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Serialize)]
struct Seeds {
    exchange: u64,
    padding: u64,
    split: u64,
    grouping: Option<u64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'static str,
    args: Vec<String>,
    config: &'a RunConfig,
    seeds: Seeds,
    outputs: Vec<String>,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Usage(_) | Error::Strategy(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn error_record(e: &Error) -> serde_json::Value {
    let mut rec = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Config { param, .. } = e {
        rec["param"] = json!(param);
    }
    json!({ "error": rec })
}

fn fail(e: &Error, dir: Option<&Path>) -> ExitCode {
    let rec = error_record(e);
    eprintln!("{rec}");
    if let Some(d) = dir.filter(|d| d.is_dir()) {
        let _ = std::fs::write(d.join("error.json"), format!("{rec:#}\n"));
    }
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code != 0 {
                let rec = json!({ "error": { "kind": "usage", "message": e.kind().to_string() } });
                eprintln!("{rec}");
            }
            return ExitCode::from(code as u8);
        }
    };
    let config = match RunConfig::resolve(&cli.overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e, None),
    };
    let dir = config.output_dir.clone();
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return fail(&Error::io(&dir, e), None);
    }
    let ctx = Context {
        config: &config,
        dir: dir.clone(),
    };
    let outputs = match commands::run(&cli.command, &ctx) {
        Ok(o) => o,
        Err(e) => return fail(&e, Some(&dir)),
    };
    let manifest = Manifest {
        tool: "grouprec",
        version: env!("CARGO_PKG_VERSION"),
        core_version: grouprec_core::VERSION,
        command: cli.command.name(),
        args: std::env::args().skip(1).collect(),
        config: &config,
        seeds: Seeds {
            exchange: config.exchange.seed,
            padding: config.exchange.padding_seed,
            split: config.eval.split_seed,
            grouping: match config.grouping {
                grouprec_core::GroupingStrategy::Random { seed, .. } => Some(seed),
                _ => None,
            },
        },
        outputs,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = std::fs::write(&path, text + "\n") {
        return fail(&Error::io(path, e), None);
    }
    ExitCode::SUCCESS
}
