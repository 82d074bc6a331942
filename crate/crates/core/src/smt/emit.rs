// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB2 script generation.
//!
//! Scalar symbols become integer constants `s_<v>`, parameters `k_<n>`,
//! quantified variables `t_<n>`, and each array `A` an uninterpreted
//! function `a_A : Int -> Int`. Declarations are emitted in sorted order so
//! the same formula always yields the same script.

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::flowgraph::Signature;
use crate::sym::{Expr, Formula, Node, ParamId, Var};

pub const POW_FN: &str = "cse_pow";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("`{0}` is used both as a scalar and as an array")]
    SortClash(String),
}

/// Symbols occurring in a formula, grouped by kind.
#[derive(Debug, Default)]
pub(crate) struct Decls {
    pub scalars: BTreeSet<Var>,
    pub arrays: BTreeSet<Var>,
    pub params: BTreeSet<ParamId>,
    pub pow: bool,
    /// Array reads whose index contains no bound variable, as (array, index).
    pub reads: BTreeSet<(Var, Expr)>,
}

fn has_bound(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |n| found |= matches!(n, Node::Expr(Expr::Bound(_))));
    found
}

pub(crate) fn collect(phi: &Formula, sig: Option<&Signature>) -> Result<Decls, EmitError> {
    let mut d = Decls::default();
    phi.walk(&mut |n| match n {
        Node::Expr(Expr::Sym(v)) => {
            d.scalars.insert(v.clone());
        }
        Node::Expr(Expr::Select(a, i)) => {
            d.arrays.insert(a.clone());
            if !has_bound(i) {
                d.reads.insert((a.clone(), (**i).clone()));
            }
        }
        Node::Expr(Expr::Param(p)) => {
            d.params.insert(*p);
        }
        Node::Expr(Expr::Pow(..)) => d.pow = true,
        _ => {}
    });
    if let Some(v) = d.scalars.intersection(&d.arrays).next() {
        return Err(EmitError::SortClash(v.to_string()));
    }
    if let Some(sig) = sig {
        if let Some(v) = d.scalars.iter().find(|v| !sig.ints.contains(*v)) {
            return Err(EmitError::UndeclaredSymbol(v.to_string()));
        }
        if let Some(v) = d.arrays.iter().find(|v| !sig.arrays.contains(*v)) {
            return Err(EmitError::UndeclaredSymbol(v.to_string()));
        }
    }
    Ok(d)
}

fn int_lit(v: i64, out: &mut String) {
    if v < 0 {
        let _ = write!(out, "(- {})", v.unsigned_abs());
    } else {
        let _ = write!(out, "{v}");
    }
}

pub(crate) fn expr(e: &Expr, out: &mut String) {
    let bin = |op: &str, a: &Expr, b: &Expr, out: &mut String| {
        let _ = write!(out, "({op} ");
        expr(a, out);
        out.push(' ');
        expr(b, out);
        out.push(')');
    };
    match e {
        Expr::Int(v) => int_lit(*v, out),
        Expr::Sym(v) => {
            let _ = write!(out, "s_{v}");
        }
        Expr::Param(p) => {
            let _ = write!(out, "k_{}", p.0);
        }
        Expr::Bound(b) => {
            let _ = write!(out, "t_{}", b.0);
        }
        Expr::Add(a, b) => bin("+", a, b, out),
        Expr::Sub(a, b) => bin("-", a, b, out),
        Expr::Mul(a, b) => bin("*", a, b, out),
        Expr::Pow(a, b) => bin(POW_FN, a, b, out),
        Expr::Select(a, i) => {
            let _ = write!(out, "(a_{a} ");
            expr(i, out);
            out.push(')');
        }
        Expr::Ite(c, a, b) => {
            out.push_str("(ite ");
            formula(c, out);
            out.push(' ');
            expr(a, out);
            out.push(' ');
            expr(b, out);
            out.push(')');
        }
    }
}

fn nary(op: &str, xs: &[Formula], unit: &str, out: &mut String) {
    match xs {
        [] => out.push_str(unit),
        [x] => formula(x, out),
        _ => {
            let _ = write!(out, "({op}");
            for x in xs {
                out.push(' ');
                formula(x, out);
            }
            out.push(')');
        }
    }
}

pub(crate) fn formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Formula::Cmp(op, a, b) => {
            let (head, negate) = match op.symbol() {
                "==" => ("=", false),
                "!=" => ("=", true),
                s => (s, false),
            };
            if negate {
                out.push_str("(not ");
            }
            let _ = write!(out, "({head} ");
            expr(a, out);
            out.push(' ');
            expr(b, out);
            out.push(')');
            if negate {
                out.push(')');
            }
        }
        Formula::And(xs) => nary("and", xs, "true", out),
        Formula::Or(xs) => nary("or", xs, "false", out),
        Formula::Not(x) => {
            out.push_str("(not ");
            formula(x, out);
            out.push(')');
        }
        Formula::Implies(a, b) => {
            out.push_str("(=> ");
            formula(a, out);
            out.push(' ');
            formula(b, out);
            out.push(')');
        }
        Formula::Forall { var, lo, hi, body } => {
            let t = format!("t_{}", var.0);
            let _ = write!(out, "(forall (({t} Int)) (=> (and (<= ");
            expr(lo, out);
            let _ = write!(out, " {t}) (< {t} ");
            expr(hi, out);
            out.push_str(")) ");
            formula(body, out);
            out.push_str("))");
        }
    }
}

fn preamble(d: &Decls, logic: Option<&str>, out: &mut String) {
    if let Some(l) = logic {
        let _ = writeln!(out, "(set-logic {l})");
    }
    for v in &d.scalars {
        let _ = writeln!(out, "(declare-const s_{v} Int)");
    }
    for p in &d.params {
        let _ = writeln!(out, "(declare-const k_{} Int)", p.0);
    }
    for a in &d.arrays {
        let _ = writeln!(out, "(declare-fun a_{a} (Int) Int)");
    }
    if d.pow {
        let _ = writeln!(out, "(declare-fun {POW_FN} (Int Int) Int)");
        let _ = writeln!(out, "(assert (forall ((c Int)) (= ({POW_FN} c 0) 1)))");
        let _ = writeln!(
            out,
            "(assert (forall ((c Int) (k Int)) (=> (>= k 0) (= ({POW_FN} c (+ k 1)) (* c ({POW_FN} c k))))))"
        );
    }
}

/// Terms whose values make up a model, in the order they are requested.
pub(crate) fn model_terms(d: &Decls) -> Vec<String> {
    let mut terms: Vec<String> = d.scalars.iter().map(|v| format!("s_{v}")).collect();
    terms.extend(d.params.iter().map(|p| format!("k_{}", p.0)));
    for (a, i) in &d.reads {
        let mut idx = String::new();
        expr(i, &mut idx);
        terms.push(idx.clone());
        terms.push(format!("(a_{a} {idx})"));
    }
    terms
}

/// Complete script for `phi`: declarations, the assertion and `check-sat`,
/// followed by a `get-value` request when `models` is set.
pub(crate) fn script(d: &Decls, phi: &Formula, logic: Option<&str>, models: bool) -> String {
    let mut out = String::new();
    preamble(d, logic, &mut out);
    out.push_str("(assert ");
    formula(phi, &mut out);
    out.push_str(")\n(check-sat)\n");
    let terms = model_terms(d);
    if models && !terms.is_empty() {
        let _ = writeln!(out, "(get-value ({}))", terms.join(" "));
    }
    out
}

/// Solver script for `phi` over the variables declared in `sig`.
pub fn emit(phi: &Formula, sig: &Signature) -> Result<String, EmitError> {
    let d = collect(phi, Some(sig))?;
    Ok(script(&d, phi, None, false))
}
