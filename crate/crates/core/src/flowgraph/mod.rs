// SPDX-License-Identifier: Apache-2.0

//! Program representation: a flowgraph of locations connected by edges
//! labelled with instruction sequences.

mod parse;
mod print;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sym::{Expr, Formula, Node, Var};

pub use parse::parse_flowgraph;

/// Location identifier.
pub type Loc = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instr {
    Assign(Var, Expr),
    Assume(Formula),
}

impl Instr {
    pub fn skip() -> Instr {
        Instr::Assume(Formula::Bool(true))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: Loc,
    pub dst: Loc,
    pub body: Vec<Instr>,
}

/// Index of an edge in declaration order.
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowgraphError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: semantic error: {msg}")]
    Semantic {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// Declared variables, split by sort.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub ints: BTreeSet<Var>,
    pub arrays: BTreeSet<Var>,
}

impl Signature {
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.ints.iter().chain(self.arrays.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flowgraph {
    pub name: String,
    /// In order of first mention.
    pub locations: Vec<Loc>,
    pub start: Loc,
    pub exits: BTreeSet<Loc>,
    pub errors: BTreeSet<Loc>,
    pub sig: Signature,
    pub edges: Vec<Edge>,
}

impl Flowgraph {
    pub fn has_location(&self, l: &str) -> bool {
        self.locations.iter().any(|x| x.as_ref() == l)
    }

    pub fn location(&self, l: &str) -> Option<&Loc> {
        self.locations.iter().find(|x| x.as_ref() == l)
    }

    /// Every declared variable, sorted, integers and arrays alike.
    pub fn vars(&self) -> Vec<Var> {
        let mut all: Vec<Var> = self.sig.vars().cloned().collect();
        all.sort();
        all
    }

    pub fn is_terminal(&self, l: &str) -> bool {
        self.exits.contains(l) || self.errors.contains(l)
    }

    /// Outgoing edges of `l` in declaration order, with their ids.
    pub fn successors(&self, l: &str) -> Result<Vec<(EdgeId, &Edge)>, FlowgraphError> {
        if !self.has_location(l) {
            return Err(FlowgraphError::UnknownLocation(l.to_string()));
        }
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.src.as_ref() == l)
            .collect())
    }

    pub fn edges_into<'a>(&'a self, l: &'a str) -> impl Iterator<Item = (EdgeId, &'a Edge)> + 'a {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.dst.as_ref() == l)
    }

    /// Locations not reachable from `start`, in declaration order.
    pub fn unreachable(&self) -> Vec<Loc> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut queue = VecDeque::from([self.start.as_ref()]);
        seen.insert(self.start.as_ref());
        while let Some(l) = queue.pop_front() {
            for e in self.edges.iter().filter(|e| e.src.as_ref() == l) {
                if seen.insert(e.dst.as_ref()) {
                    queue.push_back(e.dst.as_ref());
                }
            }
        }
        self.locations
            .iter()
            .filter(|l| !seen.contains(l.as_ref()))
            .cloned()
            .collect()
    }

    /// Non-fatal diagnostics.
    pub fn warnings(&self) -> Vec<String> {
        let unreachable = self.unreachable();
        if unreachable.is_empty() {
            return Vec::new();
        }
        let names: Vec<&str> = unreachable.iter().map(|l| l.as_ref()).collect();
        vec![format!("unreachable locations: {}", names.join(" "))]
    }

    pub fn path(&self, edges: &[EdgeId]) -> Result<Path, FlowgraphError> {
        let first = edges
            .first()
            .ok_or_else(|| FlowgraphError::InvalidPath("empty edge list".into()))?;
        let mut p = Path::at(self.edge(*first)?.src.clone());
        for &id in edges {
            p.push(self, id)?;
        }
        Ok(p)
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge, FlowgraphError> {
        self.edges
            .get(id)
            .ok_or_else(|| FlowgraphError::InvalidPath(format!("no edge #{id}")))
    }

    pub fn check_path(&self, p: &Path) -> Result<(), FlowgraphError> {
        if p.locs.len() != p.edges.len() + 1 {
            return Err(FlowgraphError::InvalidPath(
                "location and edge counts disagree".into(),
            ));
        }
        if !self.has_location(&p.locs[0]) {
            return Err(FlowgraphError::UnknownLocation(p.locs[0].to_string()));
        }
        for (k, &id) in p.edges.iter().enumerate() {
            let e = self.edge(id)?;
            if e.src != p.locs[k] || e.dst != p.locs[k + 1] {
                return Err(FlowgraphError::InvalidPath(format!(
                    "edge #{id} does not join {} and {}",
                    p.locs[k],
                    p.locs[k + 1]
                )));
            }
        }
        Ok(())
    }

    /// Checks the structural invariants of a parsed program.
    pub(crate) fn validate_expr_vars(&self, node: Node<'_>) -> Result<(), String> {
        match node {
            Node::Expr(Expr::Sym(v)) if !self.sig.ints.contains(v) => {
                if self.sig.arrays.contains(v) {
                    Err(format!("array `{v}` used as an integer"))
                } else {
                    Err(format!("undeclared variable `{v}`"))
                }
            }
            Node::Expr(Expr::Select(a, _)) if !self.sig.arrays.contains(a) => {
                if self.sig.ints.contains(a) {
                    Err(format!("integer `{a}` indexed as an array"))
                } else {
                    Err(format!("undeclared array `{a}`"))
                }
            }
            _ => Ok(()),
        }
    }
}

/// A path through the flowgraph: `locs[k] --edges[k]--> locs[k+1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub locs: Vec<Loc>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn at(l: Loc) -> Path {
        Path {
            locs: vec![l],
            edges: Vec::new(),
        }
    }

    pub fn first(&self) -> &Loc {
        &self.locs[0]
    }

    pub fn last(&self) -> &Loc {
        self.locs.last().expect("paths are non-empty")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn push(&mut self, fg: &Flowgraph, id: EdgeId) -> Result<(), FlowgraphError> {
        let e = fg.edge(id)?;
        if &e.src != self.last() {
            return Err(FlowgraphError::InvalidPath(format!(
                "edge #{id} starts at {}, path ends at {}",
                e.src,
                self.last()
            )));
        }
        self.locs.push(e.dst.clone());
        self.edges.push(id);
        Ok(())
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn join(&self, other: &Path) -> Result<Path, FlowgraphError> {
        if other.first() != self.last() {
            return Err(FlowgraphError::InvalidPath(format!(
                "cannot join path ending at {} with path starting at {}",
                self.last(),
                other.first()
            )));
        }
        let mut out = self.clone();
        out.locs.extend(other.locs.iter().skip(1).cloned());
        out.edges.extend(other.edges.iter().copied());
        Ok(out)
    }

    /// Location string, e.g. `bcdb`.
    pub fn loc_string(&self) -> String {
        self.locs.iter().map(|l| l.as_ref()).collect()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.locs.iter().map(|l| l.as_ref()).collect();
        f.write_str(&names.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LINSRCH;

    #[test]
    fn successors_follow_declaration_order() {
        let fg = parse_flowgraph(LINSRCH).unwrap();
        let succ: Vec<String> = fg
            .successors("b")
            .unwrap()
            .iter()
            .map(|(_, e)| print::edge_line(e))
            .collect();
        assert_eq!(
            succ,
            ["edge b -> c : assume i < n", "edge b -> f : assume i >= n"]
        );
        assert!(fg.successors("g").unwrap().is_empty());
        let d: Vec<String> = fg
            .successors("d")
            .unwrap()
            .iter()
            .map(|(_, e)| print::edge_line(e))
            .collect();
        assert_eq!(d, ["edge d -> b : i := i + 1"]);
        assert!(matches!(
            fg.successors("zz"),
            Err(FlowgraphError::UnknownLocation(_))
        ));
    }

    #[test]
    fn paths_are_checked() {
        let fg = parse_flowgraph(LINSRCH).unwrap();
        let p = fg.path(&[1, 4, 5]).unwrap();
        assert_eq!(p.loc_string(), "bcdb");
        assert!(fg.path(&[1, 5]).is_err());
        let mut bad = p.clone();
        bad.locs[1] = Loc::from("f");
        assert!(fg.check_path(&bad).is_err());
    }

    #[test]
    fn reports_unreachable_locations() {
        let fg = parse_flowgraph(
            "program p\nint x\nstart a\nexit c\nedge a -> c : skip\nedge b -> c : x := 1\n",
        )
        .unwrap();
        assert_eq!(fg.unreachable(), vec![Loc::from("b")]);
        assert_eq!(fg.warnings(), ["unreachable locations: b"]);
        let fg = parse_flowgraph(LINSRCH).unwrap();
        assert!(fg.warnings().is_empty());
    }
}
