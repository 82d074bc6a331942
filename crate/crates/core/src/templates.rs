// SPDX-License-Identifier: Apache-2.0

//! Loop summaries.
//!
//! A template describes the effect of running a cycle core `k` times and
//! then leaving through one exit edge, for any `k >= 0`. The memory after
//! `k` iterations is derived variable by variable from a single iteration
//! by three rules, tried in order:
//!
//! 1. `a + c` for an integer literal `c` becomes `a + k*c`;
//! 2. `a * c` becomes `a * pow(c, k)`;
//! 3. any `g` whose symbols all have a derived value `v` becomes
//!    `ite(k > 0, v[k-1]<g>, a)`.
//!
//! Rules are applied until nothing changes; any variable left without a
//! value makes the computation fail.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::classic::execute_path;
use crate::cycles::Cycle;
use crate::flowgraph::{EdgeId, Flowgraph, Loc, Path};
use crate::smt::{Solver, Verdict};
use crate::sym::{
    linear_in_atom, replace_param, simplify_expr, simplify_formula, BoundVar, CmpOp, Expr, Formula,
    Memory, Node, ParamId, State, Var,
};

/// Parameter used inside every template; renamed on application.
pub const TEMPLATE_PARAM: ParamId = ParamId(0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateExit {
    pub edge: EdgeId,
    /// Core prefix from the entry followed by the exit edge.
    pub prefix: Path,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub entry: Loc,
    pub param: ParamId,
    pub cycle: Cycle,
    /// Memory after `param` iterations of the core.
    pub theta_star: Memory,
    /// Condition for `param` iterations of the core to be feasible.
    pub phi_star: Formula,
    pub exits: Vec<TemplateExit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateFailure {
    #[error("one iteration of the core is not provably feasible")]
    CoreInfeasibleOrUnknown,
    #[error("no closed form for {}", .0.iter().map(|v| v.as_ref()).collect::<Vec<_>>().join(", "))]
    MemoryDerivationIncomplete(BTreeSet<Var>),
    #[error("feasibility of exit edge #{0} is unknown")]
    ExitFeasibilityUnknown(EdgeId),
}

impl Template {
    /// Templates without feasible exits are never applied.
    pub fn is_applicable(&self) -> bool {
        !self.exits.is_empty()
    }

    /// Covered paths of exit `i` with parameter `p`, e.g. `(cdb)^k#0 ce`.
    pub fn label(&self, i: usize, p: ParamId) -> String {
        let tail: String = self.exits[i].prefix.locs[1..]
            .iter()
            .map(|l| l.as_ref())
            .collect();
        format!("({})^{} {}", self.cycle.body_string(), p, tail)
    }

    /// Exit states with the template parameter renamed to `p`.
    pub fn instances(&self, p: ParamId) -> Vec<State> {
        self.exits
            .iter()
            .map(|x| replace_param(&x.state, self.param, &Expr::Param(p)))
            .collect()
    }

    pub fn to_json(&self, fg: &Flowgraph) -> serde_json::Value {
        let mem = |m: &Memory| -> BTreeMap<String, String> {
            m.iter()
                .map(|(v, e)| (v.to_string(), e.to_string()))
                .collect()
        };
        serde_json::json!({
            "entry": self.entry.as_ref(),
            "cycle": self.cycle.to_json(fg),
            "param": self.param.to_string(),
            "theta_star": mem(&self.theta_star),
            "phi_star": self.phi_star.to_string(),
            "exits": self.exits.iter().enumerate().map(|(i, x)| serde_json::json!({
                "edge": x.edge,
                "label": self.label(i, self.param),
                "loc": x.state.loc.as_ref(),
                "memory": mem(&x.state.mem),
                "pc": x.state.pc.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "template at {} from cycle {}",
            self.entry,
            self.cycle.core_string()
        )?;
        for (v, e) in self.theta_star.iter() {
            writeln!(f, "  {v} -> {e}")?;
        }
        writeln!(f, "  phi* = {}", self.phi_star)?;
        for (i, x) in self.exits.iter().enumerate() {
            writeln!(f, "  exit {}: {}", self.label(i, self.param), x.state.pc)?;
        }
        Ok(())
    }
}

fn symbols(e: &Expr) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    e.walk(&mut |n| match n {
        Node::Expr(Expr::Sym(v)) | Node::Expr(Expr::Select(v, _)) => {
            out.insert(v.clone());
        }
        _ => {}
    });
    out
}

/// Memory after `kappa` iterations, given the memory `theta` of one
/// iteration. On failure returns the variables without a closed form.
pub fn derive_parametric_memory(
    theta: &Memory,
    fg: &Flowgraph,
    kappa: ParamId,
) -> Result<Memory, BTreeSet<Var>> {
    let k = Expr::Param(kappa);
    let mut star: BTreeMap<Var, Option<Expr>> = BTreeMap::new();
    for a in &fg.sig.arrays {
        star.insert(a.clone(), Some(Expr::Sym(a.clone())));
    }
    for a in &fg.sig.ints {
        star.insert(a.clone(), None);
    }
    loop {
        let mut change = false;
        for a in &fg.sig.ints {
            if star[a].is_some() {
                continue;
            }
            let g = simplify_expr(theta.get(a).expect("memory covers every variable"));
            let own = Expr::Sym(a.clone());
            let linear = linear_in_atom(&g).filter(|(atom, _, _)| *atom == own);
            let value = match linear {
                Some((_, 1, c)) => Some(simplify_expr(&(own.clone() + k.clone() * Expr::Int(c)))),
                Some((_, c, 0)) => Some(simplify_expr(
                    &(own.clone() * Expr::pow(Expr::Int(c), k.clone())),
                )),
                _ if symbols(&g)
                    .iter()
                    .all(|b| star.get(b).is_some_and(Option::is_some)) =>
                {
                    let known = Memory::from_entries(
                        star.iter()
                            .filter_map(|(v, e)| Some((v.clone(), e.clone()?))),
                    );
                    let previous =
                        replace_param(&known.apply(&g), kappa, &(k.clone() - Expr::Int(1)));
                    Some(simplify_expr(&Expr::ite(
                        Formula::cmp(CmpOp::Gt, k.clone(), Expr::Int(0)),
                        previous,
                        own.clone(),
                    )))
                }
                _ => None,
            };
            if value.is_some() {
                star.insert(a.clone(), value);
                change = true;
            }
        }
        if !change {
            break;
        }
    }
    let missing: BTreeSet<Var> = star
        .iter()
        .filter(|(_, e)| e.is_none())
        .map(|(v, _)| v.clone())
        .collect();
    if !missing.is_empty() {
        return Err(missing);
    }
    Ok(Memory::from_entries(
        star.into_iter()
            .map(|(v, e)| (v, e.expect("checked above"))),
    ))
}

/// `kappa >= 0 && forall t in [0, kappa) . theta_star[t]<phi>`.
pub fn build_parametric_pc(theta_star: &Memory, phi: &Formula, kappa: ParamId) -> Formula {
    let t = BoundVar(phi.max_bound().map_or(0, |b| b + 1));
    let at_t = replace_param(theta_star, kappa, &Expr::Bound(t));
    let body = simplify_formula(&at_t.apply(phi));
    simplify_formula(&Formula::and([
        Formula::cmp(CmpOp::Ge, Expr::Param(kappa), Expr::Int(0)),
        Formula::forall(t, Expr::Int(0), Expr::Param(kappa), body),
    ]))
}

pub fn compute_template(
    fg: &Flowgraph,
    c: &Cycle,
    solver: &Solver,
) -> Result<Template, TemplateFailure> {
    let kappa = TEMPLATE_PARAM;
    let identity = Memory::identity(&fg.vars());
    let truth = Formula::Bool(true);
    let once = execute_path(fg, &c.core, &identity, &truth).expect("cycle cores are valid paths");
    if solver.satisfiable(&once.pc).verdict != Verdict::Sat {
        return Err(TemplateFailure::CoreInfeasibleOrUnknown);
    }
    let theta_star = derive_parametric_memory(&once.mem, fg, kappa)
        .map_err(TemplateFailure::MemoryDerivationIncomplete)?;
    let phi_star = build_parametric_pc(&theta_star, &once.pc, kappa);
    let loop_state = State::new(c.entry.clone(), theta_star.clone(), phi_star.clone());
    let mut exits = Vec::new();
    for &x in &c.exits {
        let prefix = c.exit_prefix(fg, x).expect("exits leave the core");
        let hat =
            execute_path(fg, &prefix, &identity, &truth).expect("exit prefixes are valid paths");
        match solver.satisfiable(&hat.pc).verdict {
            Verdict::Unknown => return Err(TemplateFailure::ExitFeasibilityUnknown(x)),
            Verdict::Unsat => {}
            Verdict::Sat => exits.push(TemplateExit {
                edge: x,
                prefix,
                state: loop_state.compose(&hat).expect("same variables"),
            }),
        }
    }
    Ok(Template {
        entry: c.entry.clone(),
        param: kappa,
        cycle: c.clone(),
        theta_star,
        phi_star,
        exits,
    })
}

/// Outcome of computing a template for every cycle.
#[derive(Debug, Clone, Default)]
pub struct TemplatePool {
    pub templates: Vec<Template>,
    pub failures: Vec<(Cycle, TemplateFailure)>,
}

impl TemplatePool {
    pub fn compute(fg: &Flowgraph, cycles: &[Cycle], solver: &Solver) -> TemplatePool {
        let mut pool = TemplatePool::default();
        for c in cycles {
            match compute_template(fg, c, solver) {
                Ok(t) => pool.templates.push(t),
                Err(e) => {
                    log::info!("no template for {c}: {e}");
                    pool.failures.push((c.clone(), e));
                }
            }
        }
        pool
    }

    /// Templates that can be applied, in pool order.
    pub fn applicable(&self) -> Vec<Template> {
        self.templates
            .iter()
            .filter(|t| t.is_applicable())
            .cloned()
            .collect()
    }
}
