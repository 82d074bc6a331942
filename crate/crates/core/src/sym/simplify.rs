// SPDX-License-Identifier: Apache-2.0

//! Semantics-preserving normalization.
//!
//! Arithmetic is rewritten into a sum of monomials `c0 + c1*m1 + ... ` with
//! integer coefficients, monomials ordered by the derived `Ord` on their
//! atoms and the constant last. Anything that is not `+`, `-`, `*` or an
//! integer literal is an atom (symbols, parameters, bound variables, array
//! reads, powers and if-then-else terms whose arguments are themselves
//! normalized). The rendering is a pure function of the polynomial, which
//! makes `simplify` idempotent.

use std::collections::BTreeMap;

use super::expr::{BoundVar, Expr, Formula};

type Monomial = Vec<Expr>;

/// Products and sums that would exceed this many monomials are kept
/// unexpanded as atoms.
const MAX_TERMS: usize = 256;

/// Quantifiers over constant ranges at most this wide become conjunctions.
pub const MAX_EXPANDED_RANGE: i64 = 16;

fn subst_bound_expr(e: &Expr, b: BoundVar, v: i64) -> Expr {
    let go = |x: &Expr| Box::new(subst_bound_expr(x, b, v));
    match e {
        Expr::Bound(x) if *x == b => Expr::Int(v),
        Expr::Int(_) | Expr::Sym(_) | Expr::Param(_) | Expr::Bound(_) => e.clone(),
        Expr::Add(x, y) => Expr::Add(go(x), go(y)),
        Expr::Sub(x, y) => Expr::Sub(go(x), go(y)),
        Expr::Mul(x, y) => Expr::Mul(go(x), go(y)),
        Expr::Pow(x, y) => Expr::Pow(go(x), go(y)),
        Expr::Select(a, i) => Expr::Select(a.clone(), go(i)),
        Expr::Ite(c, x, y) => Expr::Ite(Box::new(subst_bound(c, b, v)), go(x), go(y)),
    }
}

/// Replaces the bound variable `b` by the literal `v`.
fn subst_bound(f: &Formula, b: BoundVar, v: i64) -> Formula {
    let e = |x: &Expr| subst_bound_expr(x, b, v);
    match f {
        Formula::Bool(_) => f.clone(),
        Formula::Cmp(op, x, y) => Formula::Cmp(*op, e(x), e(y)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| subst_bound(x, b, v)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| subst_bound(x, b, v)).collect()),
        Formula::Not(x) => Formula::Not(Box::new(subst_bound(x, b, v))),
        Formula::Implies(x, y) => Formula::Implies(
            Box::new(subst_bound(x, b, v)),
            Box::new(subst_bound(y, b, v)),
        ),
        Formula::Forall { var, lo, hi, body } => Formula::Forall {
            var: *var,
            lo: e(lo),
            hi: e(hi),
            body: if *var == b {
                body.clone()
            } else {
                Box::new(subst_bound(body, b, v))
            },
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Poly(BTreeMap<Monomial, i64>);

impl Poly {
    fn constant(c: i64) -> Poly {
        let mut p = Poly::default();
        p.add_term(Vec::new(), c);
        p
    }

    fn atom(e: Expr) -> Poly {
        let mut p = Poly::default();
        p.add_term(vec![e], 1);
        p
    }

    fn add_term(&mut self, mono: Monomial, c: i64) -> Option<()> {
        if c == 0 {
            return Some(());
        }
        let slot = self.0.entry(mono).or_insert(0);
        *slot = slot.checked_add(c)?;
        if *slot == 0 {
            self.0.retain(|_, v| *v != 0);
        }
        Some(())
    }

    fn as_constant(&self) -> Option<i64> {
        match self.0.len() {
            0 => Some(0),
            1 => self.0.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    fn add(mut self, other: &Poly, sign: i64) -> Option<Poly> {
        for (m, c) in &other.0 {
            self.add_term(m.clone(), c.checked_mul(sign)?)?;
        }
        Some(self)
    }

    fn mul(&self, other: &Poly) -> Option<Poly> {
        if self.0.len() * other.0.len() > MAX_TERMS {
            return None;
        }
        let mut out = Poly::default();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let mut m: Monomial = m1.iter().chain(m2.iter()).cloned().collect();
                m.sort();
                out.add_term(m, c1.checked_mul(*c2)?)?;
            }
        }
        Some(out)
    }

    fn render(&self) -> Expr {
        let constant = self.0.get(&Vec::new()).copied().unwrap_or(0);
        let mut acc: Option<Expr> = None;
        for (mono, &c) in self.0.iter().filter(|(m, _)| !m.is_empty()) {
            let product = mono
                .iter()
                .cloned()
                .reduce(|a, b| a * b)
                .expect("non-empty monomial");
            acc = Some(match acc {
                None if c == 1 => product,
                None => Expr::Int(c) * product,
                Some(prev) if c == 1 => prev + product,
                Some(prev) if c == -1 => prev - product,
                Some(prev) if c < 0 && c != i64::MIN => prev - Expr::Int(-c) * product,
                Some(prev) => prev + Expr::Int(c) * product,
            });
        }
        match acc {
            None => Expr::Int(constant),
            Some(e) if constant == 0 => e,
            Some(e) if constant < 0 && constant != i64::MIN => e - Expr::Int(-constant),
            Some(e) => e + Expr::Int(constant),
        }
    }
}

fn checked_pow(base: i64, exp: i64) -> Option<i64> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

fn to_poly(e: &Expr) -> Poly {
    let fallback = |e: &Expr| Poly::atom(e.clone());
    match e {
        Expr::Int(v) => Poly::constant(*v),
        Expr::Sym(_) | Expr::Param(_) | Expr::Bound(_) => Poly::atom(e.clone()),
        Expr::Add(..) | Expr::Sub(..) => {
            // Sums are left-leaning chains; walk the spine without recursion.
            let mut rights = Vec::new();
            let mut cur = e;
            while let Expr::Add(a, b) | Expr::Sub(a, b) = cur {
                rights.push((if matches!(cur, Expr::Add(..)) { 1 } else { -1 }, b));
                cur = a;
            }
            let mut acc = to_poly(cur);
            for (sign, b) in rights.into_iter().rev() {
                let pb = to_poly(b);
                acc = match acc.clone().add(&pb, sign) {
                    Some(p) if p.0.len() <= MAX_TERMS => p,
                    _ if sign > 0 => fallback(&(acc.render() + pb.render())),
                    _ => fallback(&(acc.render() - pb.render())),
                };
            }
            acc
        }
        Expr::Mul(a, b) => {
            let (pa, pb) = (to_poly(a), to_poly(b));
            pa.mul(&pb)
                .unwrap_or_else(|| Poly::atom(pa.render() * pb.render()))
        }
        Expr::Pow(b, k) => {
            let (b, k) = (simplify_expr(b), simplify_expr(k));
            match (b.as_int(), k.as_int()) {
                (_, Some(0)) => Poly::constant(1),
                (Some(1), _) => Poly::constant(1),
                (Some(bv), Some(kv)) if kv > 0 => match checked_pow(bv, kv) {
                    Some(v) => Poly::constant(v),
                    None => Poly::atom(Expr::pow(b, k)),
                },
                _ => Poly::atom(Expr::pow(b, k)),
            }
        }
        Expr::Select(a, i) => Poly::atom(Expr::Select(a.clone(), Box::new(simplify_expr(i)))),
        Expr::Ite(c, a, b) => match simplify_formula(c) {
            Formula::Bool(true) => to_poly(a),
            Formula::Bool(false) => to_poly(b),
            c => {
                let (a, b) = (simplify_expr(a), simplify_expr(b));
                if a == b {
                    to_poly(&a)
                } else {
                    Poly::atom(Expr::ite(c, a, b))
                }
            }
        },
    }
}

pub fn simplify_expr(e: &Expr) -> Expr {
    to_poly(e).render()
}

/// `Some(c)` when `e` normalizes to the literal `c`.
pub fn constant_value(e: &Expr) -> Option<i64> {
    to_poly(e).as_constant()
}

/// Decomposes `e` as `coeff * atom + constant` after normalization, where
/// `atom` is a single non-arithmetic term.
pub fn linear_in_atom(e: &Expr) -> Option<(Expr, i64, i64)> {
    let p = to_poly(e);
    let constant = p.0.get(&Vec::new()).copied().unwrap_or(0);
    let mut terms = p.0.iter().filter(|(m, _)| !m.is_empty());
    let (mono, &coeff) = terms.next()?;
    if terms.next().is_some() || mono.len() != 1 {
        return None;
    }
    Some((mono[0].clone(), coeff, constant))
}

pub fn simplify_formula(f: &Formula) -> Formula {
    match f {
        Formula::Bool(b) => Formula::Bool(*b),
        Formula::Cmp(op, a, b) => {
            let (pa, pb) = (to_poly(a), to_poly(b));
            if let Some(diff) = pa.clone().add(&pb, -1).and_then(|d| d.as_constant()) {
                return Formula::Bool(op.holds(diff, 0));
            }
            Formula::Cmp(*op, pa.render(), pb.render())
        }
        Formula::And(xs) => {
            let mut out = Vec::new();
            for x in xs {
                match simplify_formula(x) {
                    Formula::Bool(true) => {}
                    Formula::Bool(false) => return Formula::Bool(false),
                    Formula::And(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            match out.len() {
                0 => Formula::Bool(true),
                1 => out.pop().unwrap(),
                _ => Formula::And(out),
            }
        }
        Formula::Or(xs) => {
            let mut out = Vec::new();
            for x in xs {
                match simplify_formula(x) {
                    Formula::Bool(false) => {}
                    Formula::Bool(true) => return Formula::Bool(true),
                    Formula::Or(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            match out.len() {
                0 => Formula::Bool(false),
                1 => out.pop().unwrap(),
                _ => Formula::Or(out),
            }
        }
        Formula::Not(x) => match simplify_formula(x) {
            Formula::Bool(b) => Formula::Bool(!b),
            Formula::Not(inner) => *inner,
            other => Formula::not(other),
        },
        Formula::Implies(a, b) => match (simplify_formula(a), simplify_formula(b)) {
            (Formula::Bool(false), _) | (_, Formula::Bool(true)) => Formula::Bool(true),
            (Formula::Bool(true), b) => b,
            (a, Formula::Bool(false)) => simplify_formula(&Formula::not(a)),
            (a, b) => Formula::implies(a, b),
        },
        Formula::Forall { var, lo, hi, body } => {
            let (plo, phi) = (to_poly(lo), to_poly(hi));
            let empty = phi
                .clone()
                .add(&plo, -1)
                .and_then(|d| d.as_constant())
                .is_some_and(|width| width <= 0);
            if empty {
                return Formula::Bool(true);
            }
            if let (Some(lo), Some(hi)) = (plo.as_constant(), phi.as_constant()) {
                if hi - lo <= MAX_EXPANDED_RANGE {
                    let parts = (lo..hi).map(|t| subst_bound(body, *var, t));
                    return simplify_formula(&Formula::and(parts));
                }
            }
            match simplify_formula(body) {
                Formula::Bool(true) => Formula::Bool(true),
                body => Formula::forall(*var, plo.render(), phi.render(), body),
            }
        }
    }
}
