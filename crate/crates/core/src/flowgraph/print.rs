// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::{Edge, Flowgraph, Instr};
use crate::sym::{Formula, Style};

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Assume(Formula::Bool(true)) => f.write_str("skip"),
            Instr::Assume(c) => write!(f, "assume {}", c.pretty(Style::Program)),
            Instr::Assign(v, e) => write!(f, "{v} := {}", e.pretty(Style::Program)),
        }
    }
}

pub(crate) fn edge_line(e: &Edge) -> String {
    let body: Vec<String> = e.body.iter().map(|i| i.to_string()).collect();
    format!("edge {} -> {} : {}", e.src, e.dst, body.join("; "))
}

fn join<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    items.into_iter().collect::<Vec<_>>().join(" ")
}

/// Canonical source text; parsing it yields an equal flowgraph.
impl fmt::Display for Flowgraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "program {}", self.name)?;
        if !self.sig.ints.is_empty() {
            writeln!(f, "int {}", join(self.sig.ints.iter().map(|v| v.as_ref())))?;
        }
        if !self.sig.arrays.is_empty() {
            writeln!(
                f,
                "array {}",
                join(self.sig.arrays.iter().map(|v| v.as_ref()))
            )?;
        }
        writeln!(f, "start {}", self.start)?;
        if !self.exits.is_empty() {
            writeln!(f, "exit {}", join(self.exits.iter().map(|l| l.as_ref())))?;
        }
        if !self.errors.is_empty() {
            writeln!(f, "error {}", join(self.errors.iter().map(|l| l.as_ref())))?;
        }
        for e in &self.edges {
            writeln!(f, "{}", edge_line(e))?;
        }
        Ok(())
    }
}
