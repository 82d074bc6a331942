// SPDX-License-Identifier: Apache-2.0

//! Parser for the line-oriented flowgraph format.
//!
//! ```text
//! program linSrch
//! int i r n x
//! array A
//! start a
//! exit g
//! edge a -> b : i := 0
//! edge b -> c : assume i < n
//! ```

use std::collections::BTreeSet;

use super::{Edge, Flowgraph, FlowgraphError, Instr, Loc, Signature};
use crate::sym::{var, CmpOp, Expr, Formula, Node, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

const PUNCT: [&str; 22] = [
    "->", ":=", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "+", "-", "*", "(", ")", "[",
    "]", ":", ";", ",", "=",
];

fn lex(line: &str, lineno: usize) -> Result<Vec<Spanned>, FlowgraphError> {
    let code = line.split('#').next().unwrap_or("");
    let bytes = code.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(code[start..i].to_string()),
                col,
            });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let v = code[start..i].parse().map_err(|_| FlowgraphError::Syntax {
                line: lineno,
                col,
                msg: format!("integer literal `{}` out of range", &code[start..i]),
            })?;
            out.push(Spanned {
                tok: Tok::Int(v),
                col,
            });
        } else if let Some(p) = PUNCT.iter().find(|p| code[i..].starts_with(**p)) {
            out.push(Spanned {
                tok: Tok::Punct(p),
                col,
            });
            i += p.len();
        } else {
            return Err(FlowgraphError::Syntax {
                line: lineno,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.eol_col, |s| s.col)
    }

    fn err(&self, msg: impl Into<String>) -> FlowgraphError {
        FlowgraphError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), FlowgraphError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn ident(&mut self) -> Result<String, FlowgraphError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), FlowgraphError> {
        if self.done() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn int_expr(&mut self) -> Result<Expr, FlowgraphError> {
        let mut acc = self.term()?;
        loop {
            if self.eat("+") {
                acc = acc + self.term()?;
            } else if self.eat("-") {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FlowgraphError> {
        let mut acc = self.unary()?;
        while self.eat("*") {
            acc = acc * self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, FlowgraphError> {
        if self.eat("-") {
            return Ok(match self.unary()? {
                Expr::Int(v) => Expr::Int(-v),
                other => Expr::Int(0) - other,
            });
        }
        match self.next() {
            Some(Tok::Int(v)) => Ok(Expr::Int(v)),
            Some(Tok::Ident(name)) if name == "true" || name == "false" => {
                self.pos -= 1;
                Err(self.err("expected integer expression"))
            }
            Some(Tok::Ident(name)) => {
                if self.eat("[") {
                    let idx = self.int_expr()?;
                    self.expect("]")?;
                    Ok(Expr::Select(var(&name), Box::new(idx)))
                } else {
                    Ok(Expr::Sym(var(&name)))
                }
            }
            Some(Tok::Punct("(")) => {
                let e = self.int_expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected integer expression"))
            }
        }
    }

    fn bool_expr(&mut self) -> Result<Formula, FlowgraphError> {
        let mut parts = vec![self.conj()?];
        while self.eat("||") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<Formula, FlowgraphError> {
        let mut parts = vec![self.negation()?];
        while self.eat("&&") {
            parts.push(self.negation()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        })
    }

    fn negation(&mut self) -> Result<Formula, FlowgraphError> {
        if self.eat("!") {
            return Ok(Formula::not(self.negation()?));
        }
        match self.peek() {
            Some(Tok::Ident(s)) if s == "true" || s == "false" => {
                let b = s == "true";
                self.pos += 1;
                return Ok(Formula::Bool(b));
            }
            Some(Tok::Punct("(")) => {
                // Either a parenthesized condition or the start of an
                // arithmetic operand; try the former first.
                let save = self.pos;
                self.pos += 1;
                if let Ok(f) = self.bool_expr() {
                    if self.eat(")") && !self.at_arith_continuation() {
                        return Ok(f);
                    }
                }
                self.pos = save;
            }
            _ => {}
        }
        let lhs = self.int_expr()?;
        let op = match self.next() {
            Some(Tok::Punct("==")) | Some(Tok::Punct("=")) => CmpOp::Eq,
            Some(Tok::Punct("!=")) => CmpOp::Ne,
            Some(Tok::Punct("<")) => CmpOp::Lt,
            Some(Tok::Punct("<=")) => CmpOp::Le,
            Some(Tok::Punct(">")) => CmpOp::Gt,
            Some(Tok::Punct(">=")) => CmpOp::Ge,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected comparison operator"));
            }
        };
        let rhs = self.int_expr()?;
        Ok(Formula::Cmp(op, lhs, rhs))
    }

    fn at_arith_continuation(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Punct(
                "+" | "-" | "*" | "==" | "=" | "!=" | "<" | "<=" | ">" | ">="
            ))
        )
    }

    fn instr(&mut self) -> Result<Instr, FlowgraphError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "skip" => {
                self.pos += 1;
                Ok(Instr::skip())
            }
            Some(Tok::Ident(s)) if s == "assume" => {
                self.pos += 1;
                Ok(Instr::Assume(self.bool_expr()?))
            }
            Some(Tok::Ident(_)) => {
                let v = self.ident()?;
                self.expect(":=")?;
                Ok(Instr::Assign(var(&v), self.int_expr()?))
            }
            _ => Err(self.err("expected instruction")),
        }
    }
}

const KEYWORDS: [&str; 11] = [
    "program", "int", "array", "start", "exit", "error", "edge", "assume", "skip", "true", "false",
];

struct EdgeSite {
    line: usize,
    col: usize,
}

/// Parses and validates a flowgraph.
pub fn parse_flowgraph(text: &str) -> Result<Flowgraph, FlowgraphError> {
    let mut name: Option<String> = None;
    let mut locations: Vec<Loc> = Vec::new();
    let mut start: Option<(Loc, usize)> = None;
    let mut exits = BTreeSet::new();
    let mut errors = BTreeSet::new();
    let mut sig = Signature::default();
    let mut edges = Vec::new();
    let mut sites = Vec::new();

    let intern = |l: String, locations: &mut Vec<Loc>| -> Loc {
        if let Some(x) = locations.iter().find(|x| x.as_ref() == l) {
            return x.clone();
        }
        let x: Loc = Loc::from(l.as_str());
        locations.push(x.clone());
        x
    };

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let toks = lex(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: lineno,
            eol_col: raw.len() + 1,
        };
        let semantic = |col: usize, msg: String| FlowgraphError::Semantic {
            line: lineno,
            col,
            msg,
        };
        let head = cur.ident()?;
        match head.as_str() {
            "program" => {
                if name.is_some() {
                    return Err(cur.err("duplicate `program` line"));
                }
                name = Some(cur.ident()?);
                cur.expect_end()?;
            }
            "int" | "array" => {
                if cur.done() {
                    return Err(cur.err("expected variable names"));
                }
                while !cur.done() {
                    let col = cur.col();
                    let v = cur.ident()?;
                    if KEYWORDS.contains(&v.as_str()) {
                        return Err(semantic(col, format!("`{v}` is a keyword")));
                    }
                    let v: Var = var(&v);
                    if sig.ints.contains(&v) || sig.arrays.contains(&v) {
                        return Err(semantic(col, format!("variable `{v}` declared twice")));
                    }
                    if head == "int" {
                        sig.ints.insert(v);
                    } else {
                        sig.arrays.insert(v);
                    }
                }
            }
            "start" => {
                let col = cur.col();
                if start.is_some() {
                    return Err(semantic(col, "duplicate `start` line".into()));
                }
                let l = intern(cur.ident()?, &mut locations);
                start = Some((l, lineno));
                cur.expect_end()?;
            }
            "exit" | "error" => {
                while !cur.done() {
                    let col = cur.col();
                    let l = intern(cur.ident()?, &mut locations);
                    let (mine, other) = if head == "exit" {
                        (&mut exits, &errors)
                    } else {
                        (&mut errors, &exits)
                    };
                    if other.contains(&l) {
                        return Err(semantic(
                            col,
                            format!("location `{l}` is both an exit and an error location"),
                        ));
                    }
                    mine.insert(l);
                }
            }
            "edge" => {
                let col = cur.col();
                let src = intern(cur.ident()?, &mut locations);
                cur.expect("->")?;
                let dst = intern(cur.ident()?, &mut locations);
                cur.expect(":")?;
                let mut body = vec![cur.instr()?];
                while cur.eat(";") {
                    body.push(cur.instr()?);
                }
                cur.expect_end()?;
                edges.push(Edge { src, dst, body });
                sites.push(EdgeSite { line: lineno, col });
            }
            other => {
                cur.pos = 0;
                return Err(cur.err(format!("unknown declaration `{other}`")));
            }
        }
    }

    let name = name.ok_or(FlowgraphError::Syntax {
        line: 1,
        col: 1,
        msg: "missing `program` line".into(),
    })?;
    let (start, _) = start.ok_or(FlowgraphError::Semantic {
        line: text.lines().count().max(1),
        col: 1,
        msg: "missing `start` line".into(),
    })?;

    let fg = Flowgraph {
        name,
        locations,
        start,
        exits,
        errors,
        sig,
        edges,
    };

    for (e, site) in fg.edges.iter().zip(&sites) {
        let semantic = |msg: String| FlowgraphError::Semantic {
            line: site.line,
            col: site.col,
            msg,
        };
        if fg.exits.contains(&e.src) {
            return Err(semantic(format!("edge leaves exit location `{}`", e.src)));
        }
        if fg.errors.contains(&e.src) {
            return Err(semantic(format!("edge leaves error location `{}`", e.src)));
        }
        for ins in &e.body {
            let mut problem = None;
            let mut check = |n: Node<'_>| {
                if problem.is_none() {
                    problem = fg.validate_expr_vars(n).err();
                }
            };
            match ins {
                Instr::Assign(v, rhs) => {
                    if fg.sig.arrays.contains(v) {
                        return Err(semantic(format!("assignment to read-only array `{v}`")));
                    }
                    if !fg.sig.ints.contains(v) {
                        return Err(semantic(format!("assignment to undeclared variable `{v}`")));
                    }
                    rhs.walk(&mut check);
                }
                Instr::Assume(c) => c.walk(&mut check),
            }
            if let Some(msg) = problem {
                return Err(semantic(msg));
            }
        }
    }

    for w in fg.warnings() {
        log::warn!("{}: {w}", fg.name);
    }
    Ok(fg)
}
