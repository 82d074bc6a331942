// SPDX-License-Identifier: Apache-2.0

//! Expression and formula trees shared by the program IR and the symbolic
//! engine.
//!
//! Program expressions are stored with the same node types: a program
//! variable `v` read inside an instruction is `Expr::Sym(v)`, which is
//! exactly what executing the instruction substitutes through the current
//! symbolic memory.

use std::fmt;
use std::sync::Arc;

/// Name of a program variable. The symbol `~v` carries the same name.
pub type Var = Arc<str>;

pub fn var(name: &str) -> Var {
    Arc::from(name)
}

/// Iteration-count parameter, printed `k#<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct ParamId(pub u32);

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k#{}", self.0)
    }
}

/// Variable bound by a `Formula::Forall`, printed `t<n>`. The index is the
/// nesting depth of the binding quantifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoundVar(pub u32);

impl fmt::Display for BoundVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Int(i64),
    Sym(Var),
    Param(ParamId),
    Bound(BoundVar),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    /// Read of a read-only array symbol.
    Select(Var, Box<Expr>),
    Ite(Box<Formula>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, l: i64, r: i64) -> bool {
        match self {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Gt => l > r,
            CmpOp::Ge => l >= r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bool(bool),
    Cmp(CmpOp, Expr, Expr),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `forall var in [lo, hi) . body`
    Forall {
        var: BoundVar,
        lo: Expr,
        hi: Expr,
        body: Box<Formula>,
    },
}

impl Expr {
    pub fn sym(name: &str) -> Expr {
        Expr::Sym(var(name))
    }

    pub fn select(array: &str, index: Expr) -> Expr {
        Expr::Select(var(array), Box::new(index))
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        Expr::Pow(Box::new(base), Box::new(exp))
    }

    pub fn ite(cond: Formula, then: Expr, otherwise: Expr) -> Expr {
        Expr::Ite(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Expr::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Pre-order visit of every sub-expression, descending into formulas
    /// nested under `Ite`.
    pub fn walk(&self, f: &mut dyn FnMut(Node<'_>)) {
        f(Node::Expr(self));
        match self {
            Expr::Int(_) | Expr::Sym(_) | Expr::Param(_) | Expr::Bound(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Select(_, i) => i.walk(f),
            Expr::Ite(c, a, b) => {
                c.walk(f);
                a.walk(f);
                b.walk(f);
            }
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::Int(v)
    }
}

impl From<ParamId> for Expr {
    fn from(p: ParamId) -> Expr {
        Expr::Param(p)
    }
}

impl From<BoundVar> for Expr {
    fn from(b: BoundVar) -> Expr {
        Expr::Bound(b)
    }
}

/// Borrowed view of a node during a walk.
#[derive(Clone, Copy)]
pub enum Node<'a> {
    Expr(&'a Expr),
    Formula(&'a Formula),
}

impl Formula {
    pub fn cmp(op: CmpOp, l: impl Into<Expr>, r: impl Into<Expr>) -> Formula {
        Formula::Cmp(op, l.into(), r.into())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::And(vec![
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        ])
    }

    pub fn forall(var: BoundVar, lo: Expr, hi: Expr, body: Formula) -> Formula {
        Formula::Forall {
            var,
            lo,
            hi,
            body: Box::new(body),
        }
    }

    /// Conjunction that flattens nested conjunctions and drops `true`.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Bool(true) => {}
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

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::Bool(true))
    }

    pub fn walk(&self, f: &mut dyn FnMut(Node<'_>)) {
        f(Node::Formula(self));
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.walk(f)),
            Formula::Not(x) => x.walk(f),
            Formula::Implies(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::Forall { lo, hi, body, .. } => {
                lo.walk(f);
                hi.walk(f);
                body.walk(f);
            }
        }
    }

    pub fn has_quantifier(&self) -> bool {
        let mut found = false;
        self.walk(&mut |n| {
            if let Node::Formula(Formula::Forall { .. }) = n {
                found = true;
            }
        });
        found
    }

    /// Deepest bound-variable index used by any quantifier, if any.
    pub fn max_bound(&self) -> Option<u32> {
        let mut max = None;
        self.walk(&mut |n| {
            let b = match n {
                Node::Formula(Formula::Forall { var, .. }) => Some(var.0),
                Node::Expr(Expr::Bound(v)) => Some(v.0),
                _ => None,
            };
            if let Some(b) = b {
                max = Some(max.map_or(b, |m: u32| m.max(b)));
            }
        });
        max
    }
}

/// Free parameters of a term.
pub trait Params {
    fn collect_params(&self, out: &mut std::collections::BTreeSet<ParamId>);

    fn params(&self) -> std::collections::BTreeSet<ParamId> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_params(&mut out);
        out
    }
}

fn params_of(node: Node<'_>, out: &mut std::collections::BTreeSet<ParamId>) {
    if let Node::Expr(Expr::Param(p)) = node {
        out.insert(*p);
    }
}

impl Params for Expr {
    fn collect_params(&self, out: &mut std::collections::BTreeSet<ParamId>) {
        self.walk(&mut |n| params_of(n, out));
    }
}

impl Params for Formula {
    fn collect_params(&self, out: &mut std::collections::BTreeSet<ParamId>) {
        self.walk(&mut |n| params_of(n, out));
    }
}

/// Printing style: symbolic (`~v`, `A(i)`) or program source (`v`, `A[i]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Symbolic,
    Program,
}

pub struct Pretty<'a, T: ?Sized> {
    item: &'a T,
    style: Style,
}

impl Expr {
    pub fn pretty(&self, style: Style) -> Pretty<'_, Expr> {
        Pretty { item: self, style }
    }
}

impl Formula {
    pub fn pretty(&self, style: Style) -> Pretty<'_, Formula> {
        Pretty { item: self, style }
    }
}

impl fmt::Display for Pretty<'_, Expr> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.item, self.style, 0)
    }
}

impl fmt::Display for Pretty<'_, Formula> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self.item, self.style, 0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, Style::Symbolic, 0)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Style::Symbolic, 0)
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Int(v) if *v < 0 => 2,
        _ => 3,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, style: Style, min: u8) -> fmt::Result {
    let prec = expr_prec(e);
    if prec < min {
        f.write_str("(")?;
    }
    match e {
        Expr::Int(v) => write!(f, "{v}")?,
        Expr::Sym(v) => match style {
            Style::Symbolic => write!(f, "~{v}")?,
            Style::Program => write!(f, "{v}")?,
        },
        Expr::Param(p) => write!(f, "{p}")?,
        Expr::Bound(b) => write!(f, "{b}")?,
        Expr::Add(a, b) => {
            write_expr(f, a, style, 1)?;
            f.write_str(" + ")?;
            write_expr(f, b, style, 2)?;
        }
        Expr::Sub(a, b) => {
            write_expr(f, a, style, 1)?;
            f.write_str(" - ")?;
            write_expr(f, b, style, 2)?;
        }
        Expr::Mul(a, b) => {
            write_expr(f, a, style, 2)?;
            f.write_str(" * ")?;
            write_expr(f, b, style, 3)?;
        }
        Expr::Pow(a, b) => {
            f.write_str("pow(")?;
            write_expr(f, a, style, 0)?;
            f.write_str(", ")?;
            write_expr(f, b, style, 0)?;
            f.write_str(")")?;
        }
        Expr::Select(a, i) => {
            let (open, close) = match style {
                Style::Symbolic => ("(", ")"),
                Style::Program => ("[", "]"),
            };
            write!(f, "{a}{open}")?;
            write_expr(f, i, style, 0)?;
            f.write_str(close)?;
        }
        Expr::Ite(c, a, b) => {
            f.write_str("ite(")?;
            write_formula(f, c, style, 0)?;
            f.write_str(", ")?;
            write_expr(f, a, style, 0)?;
            f.write_str(", ")?;
            write_expr(f, b, style, 0)?;
            f.write_str(")")?;
        }
    }
    if prec < min {
        f.write_str(")")?;
    }
    Ok(())
}

fn formula_prec(p: &Formula) -> u8 {
    match p {
        Formula::Implies(..) => 1,
        Formula::Or(xs) if xs.len() > 1 => 2,
        Formula::And(xs) if xs.len() > 1 => 3,
        Formula::Forall { .. } => 1,
        _ => 5,
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, p: &Formula, style: Style, min: u8) -> fmt::Result {
    let prec = formula_prec(p);
    if prec < min {
        f.write_str("(")?;
    }
    match p {
        Formula::Bool(b) => write!(f, "{b}")?,
        Formula::Cmp(op, a, b) => {
            write_expr(f, a, style, 1)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, style, 1)?;
        }
        Formula::And(xs) | Formula::Or(xs) if xs.is_empty() => {
            write!(f, "{}", matches!(p, Formula::And(_)))?;
        }
        Formula::And(xs) | Formula::Or(xs) => {
            let (sep, inner) = if matches!(p, Formula::And(_)) {
                (" && ", 4)
            } else {
                (" || ", 3)
            };
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    f.write_str(sep)?;
                }
                write_formula(f, x, style, if xs.len() == 1 { min } else { inner })?;
            }
        }
        Formula::Not(x) => {
            f.write_str("!")?;
            write_formula(f, x, style, 5)?;
        }
        Formula::Implies(a, b) => {
            write_formula(f, a, style, 2)?;
            f.write_str(" -> ")?;
            write_formula(f, b, style, 1)?;
        }
        Formula::Forall { var, lo, hi, body } => {
            write!(f, "forall {var} in [")?;
            write_expr(f, lo, style, 0)?;
            f.write_str(", ")?;
            write_expr(f, hi, style, 0)?;
            f.write_str(") . ")?;
            write_formula(f, body, style, 1)?;
        }
    }
    if prec < min {
        f.write_str(")")?;
    }
    Ok(())
}
