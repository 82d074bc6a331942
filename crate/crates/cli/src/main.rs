// SPDX-License-Identifier: Apache-2.0

//! `cse`: parse flowgraph programs, enumerate cycles, compute templates, run
//! classic or compact symbolic execution and cross-check the two.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cse::classic::run_classic;
use cse::compact::{run_compact, SelectionStrategy};
use cse::cycles::{enumerate_cycles, CycleSet};
use cse::smt::Solver;
use cse::templates::TemplatePool;
use cse::tree::{ExecTree, FORMAT_VERSION};
use cse::verify::{check_completeness, check_soundness, check_template_properties, TemplateReport};
use cse::{parse_flowgraph, Flowgraph};
use serde_json::json;

use config::{Mode, RunConfig};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_LIMIT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cse",
    version,
    about = "Classic and compact symbolic execution of flowgraph programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration as TOML.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// SMT-LIB2 solver executable.
    #[arg(long, global = true)]
    solver: Option<PathBuf>,
    /// Per-query solver timeout in milliseconds.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    /// Log every solver script and answer to this directory.
    #[arg(long, global = true)]
    log_queries: Option<PathBuf>,
    /// Answer solver queries from a directory written by --log-queries.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    /// Maximum number of cycles enumerated.
    #[arg(long, global = true)]
    cycles_cap: Option<usize>,
    /// Write JSON output here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Args)]
struct Exploration {
    /// classic or compact (run only).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// never, first, random or random:<seed>.
    #[arg(long)]
    strategy: Option<SelectionStrategy>,
    /// Seed for the random strategy.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long, visible_alias = "depth")]
    max_depth: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a program and print it back.
    Parse { program: Option<PathBuf> },
    /// List the cycles of a program.
    Cycles { program: Option<PathBuf> },
    /// Compute a template for every cycle.
    Templates { program: Option<PathBuf> },
    /// Build a symbolic execution tree.
    Run {
        program: Option<PathBuf>,
        #[command(flatten)]
        explore: Exploration,
        /// Write the tree as Graphviz.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Build both trees and check them against each other.
    Verify {
        program: Option<PathBuf>,
        #[command(flatten)]
        explore: Exploration,
        /// Largest parameter value tried.
        #[arg(long)]
        bound: Option<u64>,
        /// Depth of the compact tree; defaults to --depth.
        #[arg(long)]
        compact_depth: Option<usize>,
        /// Largest iteration count unrolled when checking templates.
        #[arg(long)]
        nu_max: Option<u64>,
    },
    /// Build both trees and print their statistics side by side.
    Compare {
        program: Option<PathBuf>,
        #[command(flatten)]
        explore: Exploration,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = configure(&cli)?;
    init_logging(cfg.verbosity);
    if let Some(path) = &cli.common.save_config {
        fs::write(path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
    }
    let fg = load_program(&cfg.program)?;
    for w in fg.warnings() {
        log::warn!("{}: {w}", cfg.program.display());
    }
    match cfg.subcommand.as_str() {
        "parse" => {
            print!("{fg}");
            Ok(EXIT_OK)
        }
        "cycles" => cmd_cycles(&fg, &cfg),
        "templates" => cmd_templates(&fg, &cfg),
        "run" => cmd_run(&fg, &cfg),
        "verify" => cmd_verify(&fg, &cfg),
        "compare" => cmd_compare(&fg, &cfg),
        other => bail!("unknown subcommand `{other}`"),
    }
}

fn configure(cli: &Cli) -> Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let (name, program, explore) = match &cli.cmd {
        Cmd::Parse { program } => ("parse", program, None),
        Cmd::Cycles { program } => ("cycles", program, None),
        Cmd::Templates { program } => ("templates", program, None),
        Cmd::Run {
            program,
            explore,
            dot,
        } => {
            cfg.dot = dot.clone().or(cfg.dot);
            ("run", program, Some(explore))
        }
        Cmd::Verify {
            program,
            explore,
            bound,
            compact_depth,
            nu_max,
        } => {
            cfg.bound = bound.or(cfg.bound);
            cfg.compact_depth = compact_depth.or(cfg.compact_depth);
            cfg.nu_max = nu_max.unwrap_or(cfg.nu_max);
            ("verify", program, Some(explore))
        }
        Cmd::Compare { program, explore } => ("compare", program, Some(explore)),
    };
    cfg.subcommand = name.to_string();
    if let Some(p) = program {
        cfg.program = p.clone();
    }
    if cfg.program.as_os_str().is_empty() {
        bail!("no program given");
    }
    if let Some(x) = explore {
        cfg.mode = x.mode.unwrap_or(cfg.mode);
        cfg.strategy = x.strategy.unwrap_or(cfg.strategy);
        if let Some(seed) = x.seed {
            cfg.strategy = match cfg.strategy {
                SelectionStrategy::Random(_) => SelectionStrategy::Random(seed),
                other => other,
            };
        }
        cfg.limits.max_nodes = x.max_nodes.unwrap_or(cfg.limits.max_nodes);
        cfg.limits.max_depth = x.max_depth.unwrap_or(cfg.limits.max_depth);
    }
    if let Some(p) = &c.solver {
        cfg.solver.path = p.clone();
    }
    cfg.solver.timeout_ms = c.timeout_ms.unwrap_or(cfg.solver.timeout_ms);
    cfg.solver.log_dir = c.log_queries.clone().or(cfg.solver.log_dir.take());
    cfg.solver.replay_dir = c.replay.clone().or(cfg.solver.replay_dir.take());
    cfg.cycles_cap = c.cycles_cap.unwrap_or(cfg.cycles_cap);
    cfg.out = c.out.clone().or(cfg.out.take());
    cfg.verbosity = cfg.verbosity.max(c.verbose);
    Ok(cfg)
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
}

fn load_program(path: &Path) -> Result<Flowgraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_flowgraph(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(path) = path {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn write_json(path: &Option<PathBuf>, value: &serde_json::Value) -> Result<()> {
    write_output(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn cycles(fg: &Flowgraph, cfg: &RunConfig) -> CycleSet {
    let set = enumerate_cycles(fg, cfg.cycles_cap);
    if set.truncated {
        log::warn!("cycle enumeration stopped at {} cycles", cfg.cycles_cap);
    }
    set
}

fn pool(fg: &Flowgraph, cfg: &RunConfig, solver: &Solver) -> TemplatePool {
    TemplatePool::compute(fg, &cycles(fg, cfg).cycles, solver)
}

fn cmd_cycles(fg: &Flowgraph, cfg: &RunConfig) -> Result<u8> {
    let set = cycles(fg, cfg);
    for c in &set.cycles {
        let e = &fg.edges[c.witness];
        let exits: Vec<String> = c
            .exits
            .iter()
            .map(|&x| format!("{}->{}", fg.edges[x].src, fg.edges[x].dst))
            .collect();
        println!(
            "{} entry {} witness {}->{} exits {}",
            c.core_string(),
            c.entry,
            e.src,
            e.dst,
            exits.join(" ")
        );
    }
    println!(
        "{} cycles{}",
        set.cycles.len(),
        if set.truncated { " (truncated)" } else { "" }
    );
    write_json(
        &cfg.out,
        &json!({
            "format_version": FORMAT_VERSION,
            "truncated": set.truncated,
            "cycles": set.cycles.iter().map(|c| c.to_json(fg)).collect::<Vec<_>>(),
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_templates(fg: &Flowgraph, cfg: &RunConfig) -> Result<u8> {
    let solver = Solver::new(cfg.solver.clone());
    let pool = pool(fg, cfg, &solver);
    for t in &pool.templates {
        print!("{t}");
    }
    for (c, e) in &pool.failures {
        println!("no template for {}: {e}", c.core_string());
    }
    println!(
        "{} templates, {} failures",
        pool.templates.len(),
        pool.failures.len()
    );
    write_json(
        &cfg.out,
        &json!({
            "format_version": FORMAT_VERSION,
            "templates": pool.templates.iter().map(|t| t.to_json(fg)).collect::<Vec<_>>(),
            "failures": pool.failures.iter().map(|(c, e)| json!({
                "cycle": c.to_json(fg),
                "reason": e.to_string(),
            })).collect::<Vec<_>>(),
        }),
    )?;
    Ok(EXIT_OK)
}

fn build(fg: &Flowgraph, cfg: &RunConfig, mode: Mode, solver: &Solver) -> ExecTree {
    match mode {
        Mode::Classic => run_classic(fg, solver, &cfg.limits),
        Mode::Compact => {
            let pool = pool(fg, cfg, solver).applicable();
            run_compact(fg, &pool, cfg.strategy, solver, &cfg.limits)
        }
    }
}

fn cmd_run(fg: &Flowgraph, cfg: &RunConfig) -> Result<u8> {
    let solver = Solver::new(cfg.solver.clone());
    let tree = build(fg, cfg, cfg.mode, &solver);
    println!("{}", tree.summary());
    write_output(&cfg.out, &(tree.to_json_string() + "\n"))?;
    write_output(&cfg.dot, &tree.to_dot(true))?;
    match tree.limit_tripped {
        Some(kind) => {
            log::warn!("stopped by the {kind:?} limit");
            Ok(EXIT_LIMIT)
        }
        None => Ok(EXIT_OK),
    }
}

fn cmd_compare(fg: &Flowgraph, cfg: &RunConfig) -> Result<u8> {
    let solver = Solver::new(cfg.solver.clone());
    let compact = build(fg, cfg, Mode::Compact, &solver);
    let classic = build(fg, cfg, Mode::Classic, &solver);
    println!(
        "{:<8} {:>8} {:>14} {:>12} {:>18}  limit",
        "mode", "nodes", "failed_leaves", "smt_unknown", "templates_applied"
    );
    for (name, t) in [("compact", &compact), ("classic", &classic)] {
        let limit = t
            .limit_tripped
            .map_or("-".to_string(), |k| format!("{k:?}").to_lowercase());
        println!(
            "{:<8} {:>8} {:>14} {:>12} {:>18}  {limit}",
            name,
            t.len(),
            t.failed_leaves(),
            t.stats.smt_unknown,
            t.stats.templates_applied
        );
    }
    let stats = |t: &ExecTree| {
        json!({
            "nodes": t.len(),
            "failed_leaves": t.failed_leaves(),
            "smt_unknown": t.stats.smt_unknown,
            "templates_applied": t.stats.templates_applied,
            "limit_tripped": t.limit_tripped,
        })
    };
    write_json(
        &cfg.out,
        &json!({
            "format_version": FORMAT_VERSION,
            "compact": stats(&compact),
            "classic": stats(&classic),
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(fg: &Flowgraph, cfg: &RunConfig) -> Result<u8> {
    let solver = Solver::new(cfg.solver.clone());
    let templates = pool(fg, cfg, &solver);
    let applicable = templates.applicable();
    let depth = cfg.limits.max_depth;
    let shortest = applicable
        .iter()
        .map(|t| t.cycle.core.len())
        .min()
        .unwrap_or(1)
        .max(1);
    let bound = cfg.bound.unwrap_or((depth / shortest) as u64);
    let classic = run_classic(fg, &solver, &cfg.limits);
    let mut compact_limits = cfg.limits;
    compact_limits.max_depth = cfg.compact_depth.unwrap_or(depth);
    let compact = run_compact(fg, &applicable, cfg.strategy, &solver, &compact_limits);

    let mut properties = TemplateReport::default();
    for t in &templates.templates {
        properties
            .checks
            .extend(check_template_properties(fg, &t.cycle, t, cfg.nu_max, &solver).checks);
    }
    let sound = check_soundness(fg, &classic, &compact, &applicable, bound, &solver);
    let complete = check_completeness(fg, &compact, &classic, &applicable, bound, &solver);

    let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!("classic: {}", classic.summary());
    println!("compact: {}", compact.summary());
    println!("{:<13} {:<6} detail", "check", "result");
    println!(
        "{:<13} {:<6} {} checks up to nu={}, {} failed",
        "templates",
        mark(properties.passed()),
        properties.checks.len(),
        cfg.nu_max,
        properties.failures().count()
    );
    for (name, r) in [("soundness", &sound), ("completeness", &complete)] {
        let detail = match &r.aborted {
            Some(why) => format!("aborted: {why}"),
            None => format!("bound {bound}: {}", r.summary()),
        };
        println!("{name:<13} {:<6} {detail}", mark(r.passed()));
    }
    write_json(
        &cfg.out,
        &json!({
            "format_version": FORMAT_VERSION,
            "bound": bound,
            "classic": classic.summary(),
            "compact": compact.summary(),
            "templates": properties,
            "soundness": sound,
            "completeness": complete,
        }),
    )?;
    if properties.passed() && sound.passed() && complete.passed() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_MISMATCH)
    }
}
