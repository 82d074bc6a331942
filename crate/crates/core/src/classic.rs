// SPDX-License-Identifier: Apache-2.0

//! Classic symbolic execution: every edge is executed one at a time.

use crate::flowgraph::{Edge, Flowgraph, FlowgraphError, Instr, Path};
use crate::smt::Solver;
use crate::sym::{simplify_expr, simplify_formula, Formula, Memory, State};
use crate::tree::{explore, initial_state, Candidate, ExecTree, Limits, NodeKind, Origin};

/// Executes the instructions of one edge from `s`.
pub fn step_edge(s: &State, e: &Edge) -> State {
    let mut mem = s.mem.clone();
    let mut pc = s.pc.clone();
    for instr in &e.body {
        match instr {
            Instr::Assign(v, rhs) => {
                let value = simplify_expr(&mem.apply(rhs));
                mem.set(v.clone(), value);
            }
            Instr::Assume(c) => {
                pc = match simplify_formula(&mem.apply(c)) {
                    Formula::Bool(true) => pc,
                    Formula::Bool(false) => Formula::Bool(false),
                    c => simplify_formula(&Formula::and([pc, c])),
                };
            }
        }
    }
    State::new(e.dst.clone(), mem, pc)
}

/// Executes the path `rho` from `(first location, mem, pc)` without any
/// feasibility checks.
pub fn execute_path(
    fg: &Flowgraph,
    rho: &Path,
    mem: &Memory,
    pc: &Formula,
) -> Result<State, FlowgraphError> {
    fg.check_path(rho)?;
    let mut s = State::new(rho.first().clone(), mem.clone(), pc.clone());
    for &id in &rho.edges {
        s = step_edge(&s, fg.edge(id)?);
    }
    Ok(s)
}

/// One candidate per outgoing edge of `s.loc`, in declaration order.
pub fn compute_classic_successors(fg: &Flowgraph, s: &State) -> Vec<State> {
    fg.successors(&s.loc)
        .map(|succ| succ.iter().map(|(_, e)| step_edge(s, e)).collect())
        .unwrap_or_default()
}

pub(crate) fn classic_candidates(fg: &Flowgraph, s: &State) -> Vec<Candidate> {
    fg.successors(&s.loc)
        .unwrap_or_default()
        .into_iter()
        .map(|(id, e)| Candidate {
            state: step_edge(s, e),
            kind: NodeKind::Normal,
            origin: Origin::Edge { edge: id },
        })
        .collect()
}

pub fn run_classic(fg: &Flowgraph, solver: &Solver, lim: &Limits) -> ExecTree {
    run_classic_from(fg, initial_state(fg), solver, lim)
}

/// Classic tree rooted at an arbitrary state.
pub fn run_classic_from(fg: &Flowgraph, root: State, solver: &Solver, lim: &Limits) -> ExecTree {
    explore(fg, root, solver, lim, |n| classic_candidates(fg, &n.state))
}
