// SPDX-License-Identifier: Apache-2.0

//! Tri-state satisfiability checks through an external SMT-LIB2 solver.
//!
//! Every query is a self-contained script. Answers can be logged to a
//! directory and later replayed from it, which makes runs reproducible
//! without a solver installed.

mod emit;
mod process;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::sym::{
    instantiate, simplify_formula, var, Assignment, Formula, ParamId, Params, Valuation,
};
pub use emit::{emit, EmitError};
use process::{Session, Sexp};

const WITNESS_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatResult {
    pub verdict: Verdict,
    /// Values of the scalars, parameters and bound-free array reads of the
    /// query; only present for `Sat` when models are enabled.
    pub model: Option<Assignment>,
    pub elapsed: Duration,
    pub diagnostic: Option<String>,
}

impl SatResult {
    fn quick(verdict: Verdict) -> SatResult {
        SatResult {
            verdict,
            model: (verdict == Verdict::Sat).then(Assignment::default),
            elapsed: Duration::ZERO,
            diagnostic: None,
        }
    }

    fn unknown(msg: impl Into<String>, elapsed: Duration) -> SatResult {
        SatResult {
            verdict: Verdict::Unknown,
            model: None,
            elapsed,
            diagnostic: Some(msg.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub timeout_ms: u64,
    pub logic: Option<String>,
    /// Write every script and answer here as `q<n>.smt2` / `q<n>.out`.
    pub log_dir: Option<PathBuf>,
    /// Answer queries from a directory written by `log_dir` instead of
    /// running a solver.
    pub replay_dir: Option<PathBuf>,
    /// Keep one solver process alive and `(reset)` it between queries.
    pub persistent: bool,
    pub models: bool,
    /// Largest parameter value tried when searching for a satisfying
    /// instance after an undecided answer; 0 disables the search.
    pub witness_bound: u64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            path: std::env::var_os("CSE_SOLVER")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("z3")),
            args: vec!["-in".into()],
            timeout_ms: 5000,
            logic: None,
            log_dir: None,
            replay_dir: None,
            persistent: false,
            models: true,
            witness_bound: 1,
        }
    }
}

impl SolverConfig {
    pub fn persistent() -> SolverConfig {
        SolverConfig {
            persistent: true,
            ..SolverConfig::default()
        }
    }

    pub(crate) fn is_z3(&self) -> bool {
        self.path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().starts_with("z3"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverStats {
    /// Queries sent to a solver process or answered from a replay log.
    pub queries: u64,
    pub sat: u64,
    pub unsat: u64,
    pub unknown: u64,
    pub cache_hits: u64,
    /// Queries decided by simplification alone.
    pub trivial: u64,
}

#[derive(Clone)]
struct Answer {
    verdict: Verdict,
    model: Option<Assignment>,
    diagnostic: Option<String>,
}

struct Inner {
    session: Option<Session>,
    counter: u64,
    cache: HashMap<String, Answer>,
    replay: Option<HashMap<String, String>>,
    stats: SolverStats,
}

/// Shared solver front end; safe to use from several threads.
pub struct Solver {
    cfg: SolverConfig,
    inner: Mutex<Inner>,
}

fn load_replay(dir: &Path) -> HashMap<String, String> {
    let mut out = HashMap::new();
    let Ok(entries) = fs::read_dir(dir) else {
        log::warn!("cannot read replay directory {}", dir.display());
        return out;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "smt2") {
            let answer = path.with_extension("out");
            if let (Ok(q), Ok(a)) = (fs::read_to_string(&path), fs::read_to_string(&answer)) {
                out.insert(q, a);
            }
        }
    }
    out
}

fn parse_answer(lines: &[String], decls: &emit::Decls) -> Answer {
    let unknown = |msg: String| Answer {
        verdict: Verdict::Unknown,
        model: None,
        diagnostic: Some(msg),
    };
    let mut it = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty());
    let verdict = match it.next() {
        Some("sat") => Verdict::Sat,
        Some("unsat") => Verdict::Unsat,
        Some("unknown") => Verdict::Unknown,
        Some(other) => return unknown(format!("unexpected solver output `{other}`")),
        None => return unknown("empty solver output".into()),
    };
    // z3 reports an error for get-value after unsat or unknown.
    let rest: Vec<&str> = it.filter(|l| !l.starts_with("(error")).collect();
    let model = if verdict == Verdict::Sat && !rest.is_empty() {
        read_model(&rest.join(" "), decls)
    } else if verdict == Verdict::Sat {
        Some(Assignment::default())
    } else {
        None
    };
    Answer {
        verdict,
        model,
        diagnostic: (verdict == Verdict::Unknown).then(|| "solver answered unknown".into()),
    }
}

fn read_model(text: &str, decls: &emit::Decls) -> Option<Assignment> {
    let Sexp::List(pairs) = Sexp::parse(text)? else {
        return None;
    };
    let mut values = pairs.iter().map(|p| match p {
        Sexp::List(kv) if kv.len() == 2 => kv[1].as_int(),
        _ => None,
    });
    let mut m = Assignment::default();
    for v in &decls.scalars {
        m.ints.insert(v.clone(), values.next()??);
    }
    for p in &decls.params {
        m.params.insert(ParamId(p.0), values.next()??);
    }
    for (a, _) in &decls.reads {
        let idx = values.next()??;
        let val = values.next()??;
        m.cells.insert((var(a), idx), val);
    }
    Some(m)
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Solver {
        let replay = cfg.replay_dir.as_deref().map(load_replay);
        if let Some(dir) = &cfg.log_dir {
            if let Err(e) = fs::create_dir_all(dir) {
                log::warn!("cannot create query log directory {}: {e}", dir.display());
            }
        }
        Solver {
            cfg,
            inner: Mutex::new(Inner {
                session: None,
                counter: 0,
                cache: HashMap::new(),
                replay,
                stats: SolverStats::default(),
            }),
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn stats(&self) -> SolverStats {
        self.lock().stats
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Decides satisfiability of `phi`. Free parameters are ordinary
    /// integer constants; no sign constraint is added for them.
    ///
    /// When the solver gives up on a formula with parameters, small
    /// valuations are tried: a satisfiable instance proves `phi`
    /// satisfiable. Unsatisfiability is never concluded this way.
    pub fn satisfiable(&self, phi: &Formula) -> SatResult {
        let first = self.decide(phi);
        if first.verdict != Verdict::Unknown || self.cfg.witness_bound == 0 {
            return first;
        }
        let params = phi.params();
        if params.is_empty() {
            return first;
        }
        let candidates = Valuation::enumerate(&params, self.cfg.witness_bound);
        for nu in candidates.into_iter().take(WITNESS_ATTEMPTS) {
            let Ok(inst) = instantiate(phi, &nu) else {
                continue;
            };
            let mut r = self.decide(&inst);
            if r.verdict == Verdict::Sat {
                if let Some(m) = r.model.as_mut() {
                    m.params.extend(nu.iter().map(|(p, v)| (p, v as i64)));
                }
                r.elapsed += first.elapsed;
                r.diagnostic = Some(format!("witnessed by {nu}"));
                return r;
            }
        }
        first
    }

    fn decide(&self, phi: &Formula) -> SatResult {
        let started = Instant::now();
        let phi = simplify_formula(phi);
        if let Formula::Bool(b) = phi {
            self.lock().stats.trivial += 1;
            return SatResult::quick(if b { Verdict::Sat } else { Verdict::Unsat });
        }
        let decls = match emit::collect(&phi, None) {
            Ok(d) => d,
            Err(e) => return SatResult::unknown(e.to_string(), started.elapsed()),
        };
        let script = emit::script(&decls, &phi, self.cfg.logic.as_deref(), self.cfg.models);
        let mut inner = self.lock();
        if let Some(a) = inner.cache.get(&script).cloned() {
            inner.stats.cache_hits += 1;
            return SatResult {
                verdict: a.verdict,
                model: a.model,
                elapsed: started.elapsed(),
                diagnostic: a.diagnostic,
            };
        }
        inner.stats.queries += 1;
        let raw = match &inner.replay {
            Some(map) => map
                .get(&script)
                .map(|s| s.lines().map(String::from).collect::<Vec<_>>())
                .ok_or_else(|| "no recorded answer for query".to_string()),
            None => self.run(&mut inner, &script),
        };
        let answer = match raw {
            Ok(lines) => {
                self.log_query(&mut inner, &script, &lines.join("\n"));
                parse_answer(&lines, &decls)
            }
            Err(msg) => {
                self.log_query(&mut inner, &script, &format!("; {msg}"));
                inner.stats.unknown += 1;
                return SatResult::unknown(msg, started.elapsed());
            }
        };
        match answer.verdict {
            Verdict::Sat => inner.stats.sat += 1,
            Verdict::Unsat => inner.stats.unsat += 1,
            Verdict::Unknown => inner.stats.unknown += 1,
        }
        if let Some(d) = &answer.diagnostic {
            log::debug!("solver: {d}");
        }
        inner.cache.insert(script, answer.clone());
        SatResult {
            verdict: answer.verdict,
            model: answer.model,
            elapsed: started.elapsed(),
            diagnostic: answer.diagnostic,
        }
    }

    fn run(&self, inner: &mut Inner, script: &str) -> Result<Vec<String>, String> {
        let limit = Duration::from_millis(self.cfg.timeout_ms + 1000);
        if inner.session.is_none() {
            inner.session = Some(Session::spawn(&self.cfg)?);
        }
        let session = inner.session.as_mut().expect("session present");
        let out = session.run(script, limit);
        match &out {
            Ok(_) if self.cfg.persistent => {
                if session.reset().is_err() {
                    inner.session = None;
                }
            }
            _ => inner.session = None,
        }
        out
    }

    fn log_query(&self, inner: &mut Inner, script: &str, answer: &str) {
        inner.counter += 1;
        let Some(dir) = &self.cfg.log_dir else { return };
        let n = inner.counter;
        let q = dir.join(format!("q{n:06}.smt2"));
        let a = dir.join(format!("q{n:06}.out"));
        if let Err(e) = fs::write(&q, script).and_then(|_| fs::write(&a, answer)) {
            log::warn!("cannot log query {n}: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::{eval_formula, BoundVar, CmpOp, Expr};

    fn lt(a: Expr, b: Expr) -> Formula {
        Formula::cmp(CmpOp::Lt, a, b)
    }

    #[cfg(unix)]
    #[test]
    fn undecided_parametric_queries_get_a_witness() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let fake = dir.path().join("fake-solver");
        fs::write(
            &fake,
            "#!/bin/sh\nwhile true; do\n  q=$(sed '/cse-done/q')\n  [ -z \"$q\" ] && exit 0\n  \
             if echo \"$q\" | grep -q forall; then echo unknown; else echo sat; fi\n  echo cse-done\ndone\n",
        )
        .unwrap();
        fs::set_permissions(&fake, fs::Permissions::from_mode(0o755)).unwrap();
        let cfg = SolverConfig {
            path: fake,
            args: Vec::new(),
            models: false,
            ..SolverConfig::default()
        };
        let t = BoundVar(0);
        let k = Expr::Param(ParamId(0));
        let phi = Formula::and([
            Formula::cmp(CmpOp::Ge, k.clone(), Expr::Int(0)),
            Formula::forall(t, Expr::Int(0), k, lt(Expr::Bound(t), Expr::sym("n"))),
        ]);
        let r = Solver::new(cfg.clone()).satisfiable(&phi);
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.diagnostic.as_deref(), Some("witnessed by {k#0=0}"));
        let off = Solver::new(SolverConfig {
            witness_bound: 0,
            ..cfg.clone()
        });
        assert_eq!(off.satisfiable(&phi).verdict, Verdict::Unknown);
        let unbounded = Formula::forall(
            t,
            Expr::Int(0),
            Expr::sym("n"),
            lt(Expr::Bound(t), Expr::sym("m")),
        );
        assert_eq!(
            Solver::new(cfg).satisfiable(&unbounded).verdict,
            Verdict::Unknown
        );
    }

    #[test]
    fn trivial_queries_skip_the_process() {
        let s = Solver::new(SolverConfig {
            path: "/nonexistent/solver".into(),
            ..SolverConfig::default()
        });
        assert_eq!(s.satisfiable(&Formula::Bool(true)).verdict, Verdict::Sat);
        assert_eq!(
            s.satisfiable(&lt(Expr::Int(1), Expr::Int(0))).verdict,
            Verdict::Unsat
        );
        let r = s.satisfiable(&lt(Expr::sym("i"), Expr::sym("n")));
        assert_eq!(r.verdict, Verdict::Unknown);
        assert!(r.diagnostic.unwrap().contains("cannot start solver"));
    }

    #[test]
    fn contradiction_is_unsat() {
        let s = Solver::new(SolverConfig::default());
        let i = Expr::sym("i");
        let n = Expr::sym("n");
        let phi = Formula::and([lt(i.clone(), n.clone()), Formula::cmp(CmpOp::Ge, i, n)]);
        assert_eq!(s.satisfiable(&phi).verdict, Verdict::Unsat);
    }

    #[test]
    fn models_satisfy_quantifier_free_queries() {
        let s = Solver::new(SolverConfig::persistent());
        let i = Expr::sym("i");
        let phi = Formula::and([
            lt(Expr::Int(3), i.clone()),
            Formula::cmp(
                CmpOp::Eq,
                Expr::select("A", i.clone() + Expr::Int(1)),
                Expr::Int(-7),
            ),
            Formula::cmp(CmpOp::Ne, Expr::select("A", Expr::Int(0)), Expr::sym("x")),
        ]);
        let r = s.satisfiable(&phi);
        assert_eq!(r.verdict, Verdict::Sat);
        let m = r.model.unwrap();
        assert_eq!(eval_formula(&phi, &m), Some(true));
    }

    #[test]
    fn pow_axioms_fix_small_powers() {
        let s = Solver::new(SolverConfig::default());
        let p = Expr::pow(Expr::Int(2), Expr::Int(3));
        // Built unsimplified so the power reaches the solver.
        let phi = Formula::Cmp(CmpOp::Ne, p, Expr::Int(8));
        let decls = emit::collect(&phi, None).unwrap();
        assert!(decls.pow);
        let script = emit::script(&decls, &phi, None, false);
        let mut inner = s.lock();
        let out = s.run(&mut inner, &script).unwrap();
        assert_eq!(out.first().map(String::as_str), Some("unsat"));
    }

    #[test]
    fn quantified_template_condition_is_sat() {
        let s = Solver::new(SolverConfig::default());
        let k = Expr::Param(ParamId(0));
        let t = BoundVar(0);
        let phi = Formula::and([
            Formula::cmp(CmpOp::Ge, k.clone(), Expr::Int(0)),
            Formula::forall(
                t,
                Expr::Int(0),
                k.clone(),
                Formula::and([
                    lt(Expr::Bound(t), Expr::sym("n")),
                    Formula::cmp(CmpOp::Ne, Expr::select("A", Expr::Bound(t)), Expr::sym("x")),
                ]),
            ),
            lt(k.clone(), Expr::sym("n")),
            Formula::cmp(CmpOp::Eq, Expr::select("A", k), Expr::sym("x")),
        ]);
        let r = s.satisfiable(&phi);
        assert_eq!(r.verdict, Verdict::Sat);
        let m = r.model.unwrap();
        let kv = m.params[&ParamId(0)];
        assert!(kv >= 0);
        assert!(m.ints[&var("n")] > kv);
        assert_eq!(m.cells[&(var("A"), kv)], m.ints[&var("x")]);
    }

    #[test]
    fn log_and_replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let phi = lt(Expr::sym("a"), Expr::sym("b") - Expr::Int(2));
        let logged = Solver::new(SolverConfig {
            log_dir: Some(dir.path().to_path_buf()),
            ..SolverConfig::default()
        });
        let first = logged.satisfiable(&phi);
        assert_eq!(first.verdict, Verdict::Sat);
        assert!(dir.path().join("q000001.smt2").exists());
        let replayed = Solver::new(SolverConfig {
            path: "/nonexistent/solver".into(),
            replay_dir: Some(dir.path().to_path_buf()),
            ..SolverConfig::default()
        });
        let again = replayed.satisfiable(&phi);
        assert_eq!(again.verdict, Verdict::Sat);
        assert_eq!(again.model, first.model);
        let other = replayed.satisfiable(&lt(Expr::sym("a"), Expr::Int(0)));
        assert_eq!(other.verdict, Verdict::Unknown);
    }

    #[test]
    fn cache_answers_repeated_queries() {
        let s = Solver::new(SolverConfig::default());
        let phi = lt(Expr::sym("q"), Expr::Int(0));
        s.satisfiable(&phi);
        s.satisfiable(&phi);
        let st = s.stats();
        assert_eq!((st.queries, st.cache_hits), (1, 1));
    }
}
