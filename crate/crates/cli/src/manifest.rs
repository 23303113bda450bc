use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::Command;

/// Everything needed to rerun a command and get the same outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Arguments with every default filled in and paths made absolute.
    pub config: serde_json::Value,
    pub root_seed: u64,
    pub tool_version: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &Command, root_seed: u64, duration_secs: f64) -> Result<Self> {
        let tagged = serde_json::to_value(command)?;
        let config = match tagged {
            serde_json::Value::Object(mut map) if map.len() == 1 => {
                map.remove(command.name()).unwrap_or_default()
            }
            other => bail!("cannot record {} in a manifest: {other}", command.name()),
        };
        Ok(Self {
            subcommand: command.name().to_string(),
            config,
            root_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs,
        })
    }

    pub fn command(&self) -> Result<Command> {
        let mut tagged = serde_json::Map::new();
        tagged.insert(self.subcommand.clone(), self.config.clone());
        serde_json::from_value(serde_json::Value::Object(tagged))
            .with_context(|| format!("manifest config does not describe a {} run", self.subcommand))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn absolute(p: &mut PathBuf) -> Result<()> {
    *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
    Ok(())
}

fn absolute_opt(p: &mut Option<PathBuf>) -> Result<()> {
    match p {
        Some(p) => absolute(p),
        None => Ok(()),
    }
}

/// Make every path in the command absolute so a manifest replays from any
/// working directory.
pub fn resolve_paths(command: &mut Command) -> Result<()> {
    match command {
        Command::Detect(a) => {
            absolute(&mut a.input)?;
            absolute_opt(&mut a.output)
        }
        Command::Simulate(a) => absolute(&mut a.out),
        Command::Exact(a) => absolute_opt(&mut a.output),
        Command::Knee(a) => {
            absolute(&mut a.input)?;
            absolute_opt(&mut a.output)
        }
        Command::Pareto(a) => absolute_opt(&mut a.output),
        Command::Replay(a) => absolute(&mut a.manifest),
    }
}
