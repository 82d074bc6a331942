// SPDX-License-Identifier: Apache-2.0

//! Run configuration, loadable from and savable to TOML.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cse::compact::SelectionStrategy;
use cse::cycles::DEFAULT_CAP;
use cse::smt::SolverConfig;
use cse::tree::Limits;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classic,
    Compact,
}

/// Everything needed to reproduce a run besides the program text, the
/// seed inside `strategy` and the solver version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub subcommand: String,
    pub program: PathBuf,
    pub solver: SolverConfig,
    pub limits: Limits,
    pub mode: Mode,
    pub strategy: SelectionStrategy,
    pub cycles_cap: usize,
    /// JSON output.
    pub out: Option<PathBuf>,
    /// Graphviz output of the tree.
    pub dot: Option<PathBuf>,
    pub verbosity: u8,
    /// Largest parameter value tried by `verify`; derived from the depth
    /// when absent.
    pub bound: Option<u64>,
    /// Depth of the compact tree built by `verify`; defaults to the
    /// classic depth.
    pub compact_depth: Option<usize>,
    /// Largest iteration count unrolled when `verify` checks templates.
    pub nu_max: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            subcommand: String::new(),
            program: PathBuf::new(),
            solver: SolverConfig::persistent(),
            limits: Limits::default(),
            mode: Mode::Compact,
            strategy: SelectionStrategy::First,
            cycles_cap: DEFAULT_CAP,
            out: None,
            dot: None,
            verbosity: 0,
            bound: None,
            compact_depth: None,
            nu_max: 3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}
