// SPDX-License-Identifier: Apache-2.0

//! Symbolic memories, program states and the operations relating them:
//! simultaneous symbol substitution, composition and parameter
//! instantiation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{Expr, Formula, ParamId, Params, Var};
use super::simplify::{simplify_expr, simplify_formula};
use crate::flowgraph::Loc;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("memories range over different variables: {0:?} vs {1:?}")]
    MismatchedUniverse(Vec<String>, Vec<String>),
    #[error("valuation has no value for parameter {0}")]
    MissingParameter(ParamId),
}

/// Replacement rules applied to the leaves of a term.
pub struct Rewrite<'a> {
    pub symbol: Option<&'a dyn Fn(&Var) -> Option<Expr>>,
    pub param: Option<&'a dyn Fn(ParamId) -> Option<Expr>>,
}

/// Terms that can be rewritten leaf-wise.
pub trait Term: Sized {
    fn rewrite(&self, rw: &Rewrite<'_>) -> Self;
    fn normalize(&self) -> Self;
}

impl Term for Expr {
    fn rewrite(&self, rw: &Rewrite<'_>) -> Expr {
        match self {
            Expr::Int(_) | Expr::Bound(_) => self.clone(),
            Expr::Sym(v) => rw.symbol.and_then(|f| f(v)).unwrap_or_else(|| self.clone()),
            Expr::Param(p) => rw.param.and_then(|f| f(*p)).unwrap_or_else(|| self.clone()),
            Expr::Add(a, b) => a.rewrite(rw) + b.rewrite(rw),
            Expr::Sub(a, b) => a.rewrite(rw) - b.rewrite(rw),
            Expr::Mul(a, b) => a.rewrite(rw) * b.rewrite(rw),
            Expr::Pow(a, b) => Expr::pow(a.rewrite(rw), b.rewrite(rw)),
            Expr::Select(arr, i) => {
                // Arrays are read-only, so an array entry is always a symbol.
                let target = match rw.symbol.and_then(|f| f(arr)) {
                    Some(Expr::Sym(b)) => b,
                    _ => arr.clone(),
                };
                Expr::Select(target, Box::new(i.rewrite(rw)))
            }
            Expr::Ite(c, a, b) => Expr::ite(c.rewrite(rw), a.rewrite(rw), b.rewrite(rw)),
        }
    }

    fn normalize(&self) -> Expr {
        simplify_expr(self)
    }
}

impl Term for Formula {
    fn rewrite(&self, rw: &Rewrite<'_>) -> Formula {
        match self {
            Formula::Bool(_) => self.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.rewrite(rw), b.rewrite(rw)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.rewrite(rw)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.rewrite(rw)).collect()),
            Formula::Not(x) => Formula::not(x.rewrite(rw)),
            Formula::Implies(a, b) => Formula::implies(a.rewrite(rw), b.rewrite(rw)),
            Formula::Forall { var, lo, hi, body } => {
                Formula::forall(*var, lo.rewrite(rw), hi.rewrite(rw), body.rewrite(rw))
            }
        }
    }

    fn normalize(&self) -> Formula {
        simplify_formula(self)
    }
}

/// Total map from program variables to symbolic values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Memory(BTreeMap<Var, Expr>);

impl Memory {
    /// The identity memory: every variable holds its own symbol.
    pub fn identity<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Memory {
        Memory(
            vars.into_iter()
                .map(|v| (v.clone(), Expr::Sym(v.clone())))
                .collect(),
        )
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Var, Expr)>) -> Memory {
        Memory(entries.into_iter().collect())
    }

    pub fn get(&self, v: &str) -> Option<&Expr> {
        self.0.get(v)
    }

    pub fn set(&mut self, v: Var, e: Expr) {
        self.0.insert(v, e);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Expr)> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self<x>`: every symbol in `x` simultaneously replaced by its value
    /// in this memory. Bound variables and parameters are untouched.
    pub fn apply<T: Term>(&self, x: &T) -> T {
        let lookup = |v: &Var| self.0.get(v).cloned();
        x.rewrite(&Rewrite {
            symbol: Some(&lookup),
            param: None,
        })
    }

    /// Composition `self ⋄ other`: the effect of `self` followed by `other`.
    pub fn compose(&self, other: &Memory) -> Result<Memory, SymError> {
        if !self.0.keys().eq(other.0.keys()) {
            return Err(SymError::MismatchedUniverse(
                self.0.keys().map(|k| k.to_string()).collect(),
                other.0.keys().map(|k| k.to_string()).collect(),
            ));
        }
        Ok(Memory(
            other
                .0
                .iter()
                .map(|(v, e)| (v.clone(), simplify_expr(&self.apply(e))))
                .collect(),
        ))
    }

    pub fn simplified(&self) -> Memory {
        Memory(
            self.0
                .iter()
                .map(|(v, e)| (v.clone(), simplify_expr(e)))
                .collect(),
        )
    }
}

impl Term for Memory {
    fn rewrite(&self, rw: &Rewrite<'_>) -> Memory {
        Memory(
            self.0
                .iter()
                .map(|(v, e)| (v.clone(), e.rewrite(rw)))
                .collect(),
        )
    }

    fn normalize(&self) -> Memory {
        self.simplified()
    }
}

impl Params for Memory {
    fn collect_params(&self, out: &mut BTreeSet<ParamId>) {
        self.0.values().for_each(|e| e.collect_params(out));
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {e}")?;
        }
        f.write_str("}")
    }
}

/// A program state `(location, memory, path condition)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub loc: Loc,
    pub mem: Memory,
    pub pc: Formula,
}

impl State {
    pub fn new(loc: Loc, mem: Memory, pc: Formula) -> State {
        State { loc, mem, pc }
    }

    /// Parameters occurring in the memory or the path condition.
    pub fn params(&self) -> BTreeSet<ParamId> {
        let mut out = self.mem.params();
        self.pc.collect_params(&mut out);
        out
    }

    /// `self ⋄ next`: location of `next`, composed memory, and the path
    /// condition `self.pc ∧ self.mem<next.pc>`.
    pub fn compose(&self, next: &State) -> Result<State, SymError> {
        let mem = self.mem.compose(&next.mem)?;
        let extra = simplify_formula(&self.mem.apply(&next.pc));
        Ok(State {
            loc: next.loc.clone(),
            mem,
            pc: simplify_formula(&Formula::and([self.pc.clone(), extra])),
        })
    }
}

impl Params for State {
    fn collect_params(&self, out: &mut BTreeSet<ParamId>) {
        self.mem.collect_params(out);
        self.pc.collect_params(out);
    }
}

impl Term for State {
    fn rewrite(&self, rw: &Rewrite<'_>) -> State {
        State {
            loc: self.loc.clone(),
            mem: self.mem.rewrite(rw),
            pc: self.pc.rewrite(rw),
        }
    }

    fn normalize(&self) -> State {
        State {
            loc: self.loc.clone(),
            mem: self.mem.simplified(),
            pc: simplify_formula(&self.pc),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.loc, self.mem, self.pc)
    }
}

/// Assignment of non-negative integers to parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Valuation(BTreeMap<u32, u64>);

impl Valuation {
    pub fn new() -> Valuation {
        Valuation::default()
    }

    pub fn single(p: ParamId, v: u64) -> Valuation {
        let mut out = Valuation::new();
        out.insert(p, v);
        out
    }

    pub fn insert(&mut self, p: ParamId, v: u64) {
        self.0.insert(p.0, v);
    }

    pub fn get(&self, p: ParamId) -> Option<u64> {
        self.0.get(&p.0).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, u64)> + '_ {
        self.0.iter().map(|(k, v)| (ParamId(*k), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Union of two valuations; `None` if they disagree on a shared parameter.
    pub fn union(&self, other: &Valuation) -> Option<Valuation> {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            match out.0.insert(*k, *v) {
                Some(old) if old != *v => return None,
                _ => {}
            }
        }
        Some(out)
    }

    /// Every valuation of `params` with values in `0..=bound`, in
    /// lexicographic order (first parameter varies slowest).
    pub fn enumerate(params: &BTreeSet<ParamId>, bound: u64) -> Vec<Valuation> {
        let mut out = vec![Valuation::new()];
        for p in params {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..=bound).map(move |n| {
                        let mut v = v.clone();
                        v.insert(*p, n);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (p, v)) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}={v}")?;
        }
        f.write_str("}")
    }
}

/// `x<ν>`: every parameter replaced by its value, then normalized.
pub fn instantiate<T: Term + Params>(x: &T, nu: &Valuation) -> Result<T, SymError> {
    if let Some(missing) = x.params().into_iter().find(|p| nu.get(*p).is_none()) {
        return Err(SymError::MissingParameter(missing));
    }
    let lookup = |p: ParamId| nu.get(p).map(|v| Expr::Int(v as i64));
    Ok(x.rewrite(&Rewrite {
        symbol: None,
        param: Some(&lookup),
    })
    .normalize())
}

/// Replaces parameter `p` by an arbitrary expression, then normalizes.
pub fn replace_param<T: Term>(x: &T, p: ParamId, by: &Expr) -> T {
    let lookup = |q: ParamId| (q == p).then(|| by.clone());
    x.rewrite(&Rewrite {
        symbol: None,
        param: Some(&lookup),
    })
    .normalize()
}

/// Source of parameter ids that are never handed out twice.
#[derive(Debug, Default)]
pub struct ParamGen(AtomicU32);

impl ParamGen {
    pub fn new() -> ParamGen {
        ParamGen::default()
    }

    pub fn fresh(&self) -> ParamId {
        ParamId(self.0.fetch_add(1, Ordering::Relaxed))
    }
}
