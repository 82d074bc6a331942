// SPDX-License-Identifier: Apache-2.0

//! Symbolic execution trees and the breadth-first driver shared by the
//! classic and compact engines.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::flowgraph::{EdgeId, Flowgraph, Loc};
use crate::smt::{Solver, Verdict};
use crate::sym::{Formula, Memory, ParamId, State, Style};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub max_nodes: usize,
    /// Nodes at this depth are not expanded; the root has depth 0.
    pub max_depth: usize,
    pub wall_clock: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits {
            max_nodes: 100_000,
            max_depth: 64,
            wall_clock: None,
        }
    }
}

impl Limits {
    pub fn depth(max_depth: usize) -> Limits {
        Limits {
            max_depth,
            ..Limits::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Nodes,
    Depth,
    WallClock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Normal,
    FailedLeaf,
    Template {
        template: usize,
        param: ParamId,
        /// Paths covered by the node, e.g. `(cdb)^k#0 ce`.
        label: String,
    },
}

/// How a node was produced from its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "via", rename_all = "snake_case")]
pub enum Origin {
    Root,
    Edge { edge: EdgeId },
    TemplateExit { template: usize, exit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    pub state: State,
    pub kind: NodeKind,
    pub origin: Origin,
    /// Whether the driver computed successors for this node.
    pub expanded: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TreeStats {
    pub smt_unknown: usize,
    pub templates_applied: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecTree {
    pub nodes: Vec<TreeNode>,
    pub limit_tripped: Option<LimitKind>,
    pub stats: TreeStats,
}

impl ExecTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    pub fn failed_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::FailedLeaf)
            .count()
    }

    pub fn template_nodes(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Template { .. }))
            .count()
    }

    /// A leaf at which execution really ended: an exit or error location,
    /// or a node whose successors were all infeasible. Leaves cut off by a
    /// limit and failed leaves are not genuine.
    pub fn is_genuine_leaf(&self, fg: &Flowgraph, n: &TreeNode) -> bool {
        n.children.is_empty()
            && n.kind != NodeKind::FailedLeaf
            && (n.expanded || fg.is_terminal(&n.state.loc))
    }

    /// Node ids from the root to `id`, inclusive.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn reached(&self, l: &str) -> bool {
        self.nodes
            .iter()
            .any(|n| n.state.loc.as_ref() == l && n.kind != NodeKind::FailedLeaf)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|n| {
                let memory: BTreeMap<String, String> = n
                    .state
                    .mem
                    .iter()
                    .map(|(v, e)| (v.to_string(), e.to_string()))
                    .collect();
                serde_json::json!({
                    "id": n.id,
                    "parent": n.parent,
                    "children": n.children,
                    "depth": n.depth,
                    "kind": n.kind,
                    "origin": n.origin,
                    "expanded": n.expanded,
                    "loc": n.state.loc.as_ref(),
                    "memory": memory,
                    "pc": n.state.pc.to_string(),
                    "params": n.state.params().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "format_version": FORMAT_VERSION,
            "nodes": nodes,
            "limit_tripped": self.limit_tripped,
            "stats": self.stats,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("tree serializes")
    }

    pub fn to_dot(&self, with_pc: bool) -> String {
        let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"monospace\"];\n");
        for n in &self.nodes {
            let mut label = n.state.loc.to_string();
            if let NodeKind::Template { label: l, .. } = &n.kind {
                let _ = write!(label, " [{l}]");
            }
            if with_pc {
                let _ = write!(
                    label,
                    "\\n{}",
                    escape(&n.state.pc.pretty(Style::Symbolic).to_string())
                );
            }
            let style = match n.kind {
                NodeKind::Normal => "",
                NodeKind::FailedLeaf => ", style=dashed",
                NodeKind::Template { .. } => ", style=rounded",
            };
            let _ = writeln!(out, "  n{} [label=\"{}\"{}];", n.id, label, style);
        }
        for n in &self.nodes {
            for c in &n.children {
                let _ = writeln!(out, "  n{} -> n{};", n.id, c);
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "nodes={} failed_leaves={} smt_unknown={} templates_applied={}",
            self.len(),
            self.failed_leaves(),
            self.stats.smt_unknown,
            self.stats.templates_applied
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// A successor proposed by an engine, before the feasibility check.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub state: State,
    pub kind: NodeKind,
    pub origin: Origin,
}

/// The starting state `(start, identity memory, true)`.
pub fn initial_state(fg: &Flowgraph) -> State {
    State::new(
        fg.start.clone(),
        Memory::identity(&fg.vars()),
        Formula::Bool(true),
    )
}

/// Breadth-first construction of a tree from `root`. `expand` proposes the
/// successors of a state; feasible ones become children, undecided ones
/// become failed leaves and infeasible ones are dropped.
pub(crate) fn explore(
    fg: &Flowgraph,
    root: State,
    solver: &Solver,
    lim: &Limits,
    mut expand: impl FnMut(&TreeNode) -> Vec<Candidate>,
) -> ExecTree {
    let started = Instant::now();
    let mut tree = ExecTree {
        nodes: vec![TreeNode {
            id: 0,
            parent: None,
            children: Vec::new(),
            depth: 0,
            state: root,
            kind: NodeKind::Normal,
            origin: Origin::Root,
            expanded: false,
        }],
        limit_tripped: None,
        stats: TreeStats::default(),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let node = &tree.nodes[id];
        if fg.is_terminal(&node.state.loc) {
            continue;
        }
        if node.depth >= lim.max_depth {
            tree.limit_tripped.get_or_insert(LimitKind::Depth);
            continue;
        }
        if lim.wall_clock.is_some_and(|w| started.elapsed() > w) {
            tree.limit_tripped = Some(LimitKind::WallClock);
            break;
        }
        let parent_pc = node.state.pc.clone();
        let depth = node.depth + 1;
        let mut accepted = Vec::new();
        for c in expand(node) {
            // The parent's condition is known satisfiable.
            let verdict = if c.state.pc == parent_pc {
                Verdict::Sat
            } else {
                solver.satisfiable(&c.state.pc).verdict
            };
            match verdict {
                Verdict::Sat => accepted.push(c),
                Verdict::Unknown => {
                    tree.stats.smt_unknown += 1;
                    accepted.push(Candidate {
                        kind: NodeKind::FailedLeaf,
                        ..c
                    });
                }
                Verdict::Unsat => tree.stats.pruned += 1,
            }
        }
        if tree.nodes.len() + accepted.len() > lim.max_nodes {
            tree.limit_tripped = Some(LimitKind::Nodes);
            break;
        }
        tree.nodes[id].expanded = true;
        for c in accepted {
            let child = tree.nodes.len();
            if c.kind != NodeKind::FailedLeaf {
                queue.push_back(child);
            }
            tree.nodes[id].children.push(child);
            tree.nodes.push(TreeNode {
                id: child,
                parent: Some(id),
                children: Vec::new(),
                depth,
                state: c.state,
                kind: c.kind,
                origin: c.origin,
                expanded: false,
            });
        }
    }
    tree
}

/// Location of every node, for quick structural assertions.
pub fn locations(tree: &ExecTree) -> Vec<Loc> {
    tree.nodes.iter().map(|n| n.state.loc.clone()).collect()
}
