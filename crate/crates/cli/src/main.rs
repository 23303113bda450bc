mod args;
mod commands;
mod io;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{Context, Outcome};
use manifest::{resolve_paths, RunManifest};
use rstat::{Error, Workers};

/// 0 ok, 1 I/O, parse and other errors, 2 nothing found, 3 negative input.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::NotFound) => 2,
        Some(Error::NegativeValue { .. }) => 3,
        _ => 1,
    }
}

/// Fill in defaults that depend on other arguments so the manifest records
/// the run as executed.
fn materialize(command: &mut Command) -> Result<()> {
    if let Command::Simulate(a) = command {
        if a.n.is_none() {
            a.n = Some(commands::default_n(&commands::parse_spec(&a.dist)?));
        }
    }
    resolve_paths(command)
}

fn execute(command: &Command, ctx: Context) -> Result<Outcome> {
    match command {
        Command::Detect(a) => commands::detect(a),
        Command::Simulate(a) => commands::simulate(a, ctx),
        Command::Exact(a) => commands::exact(a),
        Command::Knee(a) => commands::knee(a),
        Command::Pareto(a) => commands::pareto(a, ctx),
        Command::Replay(_) => unreachable!("replay is unwrapped before execution"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let workers = Workers::from_count(Some(cli.workers));
    let (mut command, seed) = match cli.command {
        Command::Replay(r) => {
            let m = RunManifest::load(&r.manifest)?;
            (m.command()?, m.root_seed)
        }
        other => (other, cli.seed),
    };
    materialize(&mut command)?;

    let started = Instant::now();
    let outcome = execute(&command, Context { seed, workers })?;
    let manifest = RunManifest::new(&command, seed, started.elapsed().as_secs_f64())?;
    match cli.manifest.as_deref().or(outcome.manifest.as_deref()) {
        Some(path) => manifest.save(path)?,
        None => eprintln!("{}", serde_json::to_string(&manifest)?),
    }

    if outcome.not_found {
        eprintln!("error: {}", Error::NotFound);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
