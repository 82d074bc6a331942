// SPDX-License-Identifier: Apache-2.0

//! Concrete evaluation of expressions and formulas over integer inputs.
//!
//! Evaluation is partial: overflow, negative exponents, unbound leaves and
//! quantifier ranges wider than [`MAX_FORALL_RANGE`] yield `None`. Logical
//! connectives follow Kleene's three-valued logic so a definite `false`
//! conjunct still decides a conjunction with an undefined sibling.

use std::collections::BTreeMap;

use super::expr::{BoundVar, Expr, Formula, ParamId, Var};

pub const MAX_FORALL_RANGE: i64 = 4096;

/// Source of concrete values for the leaves of a term.
pub trait Env {
    fn int(&self, v: &str) -> Option<i64>;
    fn param(&self, p: ParamId) -> Option<i64>;
    fn read(&self, array: &str, index: i64) -> Option<i64>;
}

/// Finite environment; array cells not listed read as `array_default`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub ints: BTreeMap<Var, i64>,
    pub params: BTreeMap<ParamId, i64>,
    pub cells: BTreeMap<(Var, i64), i64>,
    pub array_default: Option<i64>,
}

impl Env for Assignment {
    fn int(&self, v: &str) -> Option<i64> {
        self.ints.get(v).copied()
    }

    fn param(&self, p: ParamId) -> Option<i64> {
        self.params.get(&p).copied()
    }

    fn read(&self, array: &str, index: i64) -> Option<i64> {
        self.cells
            .get(&(Var::from(array), index))
            .copied()
            .or(self.array_default)
    }
}

/// Environment whose values are pseudo-random functions of a seed. Array
/// cells are hashed from (array, index) so every index has a value.
#[derive(Debug, Clone)]
pub struct HashedEnv {
    pub seed: u64,
    pub span: i64,
}

impl HashedEnv {
    fn mix(&self, tag: &str, extra: i64) -> i64 {
        // FNV-1a over the tag, then a splitmix finalizer.
        let mut h: u64 = 0xcbf29ce484222325 ^ self.seed;
        for b in tag.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= extra as u64;
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
        h ^= h >> 31;
        let width = (2 * self.span + 1) as u64;
        (h % width) as i64 - self.span
    }
}

impl Env for HashedEnv {
    fn int(&self, v: &str) -> Option<i64> {
        Some(self.mix(v, 0x5157))
    }

    fn param(&self, _: ParamId) -> Option<i64> {
        None
    }

    fn read(&self, array: &str, index: i64) -> Option<i64> {
        Some(self.mix(array, index.wrapping_mul(0x9e37)))
    }
}

pub fn eval_expr(e: &Expr, env: &dyn Env) -> Option<i64> {
    eval_e(e, env, &mut Vec::new())
}

pub fn eval_formula(f: &Formula, env: &dyn Env) -> Option<bool> {
    eval_f(f, env, &mut Vec::new())
}

fn eval_e(e: &Expr, env: &dyn Env, bound: &mut Vec<(BoundVar, i64)>) -> Option<i64> {
    match e {
        Expr::Int(v) => Some(*v),
        Expr::Sym(v) => env.int(v),
        Expr::Param(p) => env.param(*p),
        Expr::Bound(b) => bound.iter().rev().find(|(x, _)| x == b).map(|(_, v)| *v),
        Expr::Add(a, b) => eval_e(a, env, bound)?.checked_add(eval_e(b, env, bound)?),
        Expr::Sub(a, b) => eval_e(a, env, bound)?.checked_sub(eval_e(b, env, bound)?),
        Expr::Mul(a, b) => eval_e(a, env, bound)?.checked_mul(eval_e(b, env, bound)?),
        Expr::Pow(a, b) => {
            let base = eval_e(a, env, bound)?;
            let exp = u32::try_from(eval_e(b, env, bound)?).ok()?;
            base.checked_pow(exp)
        }
        Expr::Select(arr, i) => env.read(arr, eval_e(i, env, bound)?),
        Expr::Ite(c, a, b) => {
            if eval_f(c, env, bound)? {
                eval_e(a, env, bound)
            } else {
                eval_e(b, env, bound)
            }
        }
    }
}

fn kleene_and(items: impl Iterator<Item = Option<bool>>) -> Option<bool> {
    let mut unknown = false;
    for v in items {
        match v {
            Some(false) => return Some(false),
            None => unknown = true,
            Some(true) => {}
        }
    }
    (!unknown).then_some(true)
}

fn eval_f(f: &Formula, env: &dyn Env, bound: &mut Vec<(BoundVar, i64)>) -> Option<bool> {
    match f {
        Formula::Bool(b) => Some(*b),
        Formula::Cmp(op, a, b) => Some(op.holds(eval_e(a, env, bound)?, eval_e(b, env, bound)?)),
        Formula::And(xs) => {
            let vals: Vec<_> = xs.iter().map(|x| eval_f(x, env, bound)).collect();
            kleene_and(vals.into_iter())
        }
        Formula::Or(xs) => {
            let vals: Vec<_> = xs
                .iter()
                .map(|x| eval_f(x, env, bound).map(|b| !b))
                .collect();
            kleene_and(vals.into_iter()).map(|b| !b)
        }
        Formula::Not(x) => eval_f(x, env, bound).map(|b| !b),
        Formula::Implies(a, b) => {
            let (a, b) = (eval_f(a, env, bound), eval_f(b, env, bound));
            match (a, b) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            }
        }
        Formula::Forall { var, lo, hi, body } => {
            let lo = eval_e(lo, env, bound)?;
            let hi = eval_e(hi, env, bound)?;
            if hi.saturating_sub(lo) > MAX_FORALL_RANGE {
                return None;
            }
            let mut vals = Vec::new();
            for t in lo..hi {
                bound.push((*var, t));
                vals.push(eval_f(body, env, bound));
                bound.pop();
            }
            kleene_and(vals.into_iter())
        }
    }
}
