// SPDX-License-Identifier: Apache-2.0

//! Logical equivalence of parameter-free program states.

use std::collections::BTreeSet;

use super::eval::{eval_expr, eval_formula, HashedEnv};
use super::expr::{CmpOp, Expr, Formula, Node, Var};
use super::simplify::{simplify_expr, simplify_formula};
use super::state::State;
use crate::smt::{Solver, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Equivalence {
    Yes,
    No,
    Unknown,
}

const SAMPLES: u64 = 16;
const FRESH_INDEX: &str = "cse_ix";

fn arrays_of(s: &State, out: &mut BTreeSet<Var>) {
    let mut visit = |n: Node<'_>| {
        if let Node::Expr(Expr::Select(a, _)) = n {
            out.insert(a.clone());
        }
    };
    s.pc.walk(&mut visit);
    for (_, e) in s.mem.iter() {
        e.walk(&mut visit);
    }
}

/// Formula that is satisfiable iff the two memory entries can differ.
fn differ(a: &Expr, b: &Expr, arrays: &BTreeSet<Var>) -> Formula {
    match (a, b) {
        (Expr::Sym(x), Expr::Sym(y)) if arrays.contains(x) || arrays.contains(y) => {
            let ix = Expr::sym(FRESH_INDEX);
            Formula::cmp(
                CmpOp::Ne,
                Expr::Select(x.clone(), Box::new(ix.clone())),
                Expr::Select(y.clone(), Box::new(ix)),
            )
        }
        _ => Formula::cmp(CmpOp::Ne, a.clone(), b.clone()),
    }
}

/// Decides whether two states denote the same set of concrete states: same
/// location, every memory entry equal for all inputs, and equivalent path
/// conditions. Both states should be parameter-free.
pub fn states_equivalent(s1: &State, s2: &State, solver: &Solver) -> Equivalence {
    if s1.loc != s2.loc || !s1.mem.vars().eq(s2.mem.vars()) {
        return Equivalence::No;
    }
    let pc1 = simplify_formula(&s1.pc);
    let pc2 = simplify_formula(&s2.pc);
    let diffs: Vec<(Expr, Expr)> = s1
        .mem
        .iter()
        .zip(s2.mem.iter())
        .map(|((_, a), (_, b))| (simplify_expr(a), simplify_expr(b)))
        .filter(|(a, b)| a != b)
        .collect();
    if diffs.is_empty() && pc1 == pc2 {
        return Equivalence::Yes;
    }

    for seed in 0..SAMPLES {
        let env = HashedEnv {
            seed,
            span: 4 + 4 * seed as i64,
        };
        let mem_refuted = diffs.iter().any(|(a, b)| {
            matches!((eval_expr(a, &env), eval_expr(b, &env)), (Some(x), Some(y)) if x != y)
        });
        let pc_refuted = matches!(
            (eval_formula(&pc1, &env), eval_formula(&pc2, &env)),
            (Some(x), Some(y)) if x != y
        );
        if mem_refuted || pc_refuted {
            return Equivalence::No;
        }
    }

    let mut arrays = BTreeSet::new();
    arrays_of(s1, &mut arrays);
    arrays_of(s2, &mut arrays);
    let mut queries = Vec::new();
    if !diffs.is_empty() {
        queries.push(Formula::Or(
            diffs.iter().map(|(a, b)| differ(a, b, &arrays)).collect(),
        ));
    }
    if pc1 != pc2 {
        queries.push(Formula::and([pc1.clone(), Formula::not(pc2.clone())]));
        queries.push(Formula::and([pc2, Formula::not(pc1)]));
    }
    let mut unknown = false;
    for q in &queries {
        match solver.satisfiable(q).verdict {
            Verdict::Sat => return Equivalence::No,
            Verdict::Unknown => unknown = true,
            Verdict::Unsat => {}
        }
    }
    if unknown {
        Equivalence::Unknown
    } else {
        Equivalence::Yes
    }
}
