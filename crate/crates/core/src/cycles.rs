// SPDX-License-Identifier: Apache-2.0

//! Cycles of a flowgraph.
//!
//! A cycle is a cyclic path `e w e` whose locations in `w e` are pairwise
//! distinct (the core), together with its first location `e` (the entry)
//! and every edge that leaves the core (the exits). A core only counts as a
//! cycle with entry `e` when some edge `(u, e)` reaches `e` from a location
//! other than the one preceding `e` on the core; that edge is kept as the
//! entry witness.
//!
//! Elementary circuits of the location graph are found with Johnson's
//! algorithm, expanded over parallel edges and then tried in every
//! rotation.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::flowgraph::{EdgeId, Flowgraph, Loc, Path};

pub const DEFAULT_CAP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cycle {
    /// Starts and ends at `entry`.
    pub core: Path,
    pub entry: Loc,
    pub witness: EdgeId,
    /// Sorted by edge id.
    pub exits: Vec<EdgeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycleError {
    #[error("edge #{0} does not leave the core")]
    ExitNotOnCore(EdgeId),
}

impl Cycle {
    /// Location string of the core, e.g. `bcdb`.
    pub fn core_string(&self) -> String {
        self.core.loc_string()
    }

    /// Locations after the entry, e.g. `cdb` for the core `bcdb`.
    pub fn body_string(&self) -> String {
        self.core.locs[1..].iter().map(|l| l.as_ref()).collect()
    }

    /// The core prefix from the entry to the start of `exit`, followed by
    /// `exit` itself.
    pub fn exit_prefix(&self, fg: &Flowgraph, exit: EdgeId) -> Result<Path, CycleError> {
        if !self.exits.contains(&exit) {
            return Err(CycleError::ExitNotOnCore(exit));
        }
        let e = fg.edge(exit).map_err(|_| CycleError::ExitNotOnCore(exit))?;
        let k = self.core.locs[..self.core.len()]
            .iter()
            .position(|l| *l == e.src)
            .ok_or(CycleError::ExitNotOnCore(exit))?;
        let mut p = Path::at(self.entry.clone());
        for &id in &self.core.edges[..k] {
            p.push(fg, id).expect("core edges are consecutive");
        }
        p.push(fg, exit).expect("exit starts on the core");
        Ok(p)
    }

    pub fn to_json(&self, fg: &Flowgraph) -> serde_json::Value {
        let edge = |id: EdgeId| {
            let e = &fg.edges[id];
            serde_json::json!({ "id": id, "src": e.src.as_ref(), "dst": e.dst.as_ref() })
        };
        serde_json::json!({
            "core": self.core_string(),
            "core_edges": self.core.edges,
            "entry": self.entry.as_ref(),
            "witness": edge(self.witness),
            "exits": self.exits.iter().map(|&x| edge(x)).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} entry {}", self.core_string(), self.entry)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleSet {
    #[serde(skip)]
    pub cycles: Vec<Cycle>,
    pub truncated: bool,
}

/// Elementary circuits of a directed graph given by adjacency lists; each
/// circuit starts at its smallest vertex. Stops after `cap` circuits.
fn johnson(adj: &[Vec<usize>], cap: usize) -> (Vec<Vec<usize>>, bool) {
    struct St<'a> {
        adj: &'a [Vec<usize>],
        start: usize,
        blocked: Vec<bool>,
        b: Vec<BTreeSet<usize>>,
        stack: Vec<usize>,
        out: Vec<Vec<usize>>,
        cap: usize,
    }

    fn unblock(st: &mut St<'_>, u: usize) {
        st.blocked[u] = false;
        let waiting = std::mem::take(&mut st.b[u]);
        for w in waiting {
            if st.blocked[w] {
                unblock(st, w);
            }
        }
    }

    fn circuit(st: &mut St<'_>, v: usize) -> bool {
        let adj = st.adj;
        let mut found = false;
        st.stack.push(v);
        st.blocked[v] = true;
        for &w in &adj[v] {
            if w < st.start || st.out.len() >= st.cap {
                continue;
            }
            if w == st.start {
                st.out.push(st.stack.clone());
                found = true;
            } else if !st.blocked[w] && circuit(st, w) {
                found = true;
            }
        }
        if found {
            unblock(st, v);
        } else {
            for &w in &adj[v] {
                if w >= st.start {
                    st.b[w].insert(v);
                }
            }
        }
        st.stack.pop();
        found
    }

    let n = adj.len();
    let mut st = St {
        adj,
        start: 0,
        blocked: vec![false; n],
        b: vec![BTreeSet::new(); n],
        stack: Vec::new(),
        out: Vec::new(),
        cap,
    };
    for s in 0..n {
        st.start = s;
        st.blocked.iter_mut().for_each(|x| *x = false);
        st.b.iter_mut().for_each(|x| x.clear());
        circuit(&mut st, s);
        if st.out.len() >= cap {
            break;
        }
    }
    let truncated = st.out.len() >= cap;
    (st.out, truncated)
}

/// Builds the cycle with the given core if the core has an entry witness.
pub(crate) fn make_cycle(fg: &Flowgraph, core: Path) -> Option<Cycle> {
    let entry = core.first().clone();
    let pred = &core.locs[core.len() - 1];
    let witness = fg
        .edges
        .iter()
        .position(|e| e.dst == entry && e.src != *pred)?;
    let on_core: BTreeSet<&Loc> = core.locs.iter().collect();
    let exits = fg
        .edges
        .iter()
        .enumerate()
        .filter(|(id, e)| on_core.contains(&e.src) && !core.edges.contains(id))
        .map(|(id, _)| id)
        .collect();
    Some(Cycle {
        core,
        entry,
        witness,
        exits,
    })
}

fn sort_key(c: &Cycle) -> (Vec<String>, String, Vec<EdgeId>) {
    let ring: Vec<String> = c.core.locs[..c.core.len()]
        .iter()
        .map(|l| l.to_string())
        .collect();
    let normalized = (0..ring.len())
        .map(|r| {
            let mut v = ring.clone();
            v.rotate_left(r);
            v
        })
        .min()
        .unwrap_or_default();
    (normalized, c.entry.to_string(), c.core.edges.clone())
}

/// All cycles of `fg`, sorted by rotation-normalized core, then entry.
/// At most `cap` cycles are returned; `truncated` reports whether more
/// might exist.
pub fn enumerate_cycles(fg: &Flowgraph, cap: usize) -> CycleSet {
    let index = |l: &Loc| {
        fg.locations
            .iter()
            .position(|x| x == l)
            .expect("known location")
    };
    let n = fg.locations.len();
    let mut adj = vec![Vec::new(); n];
    for e in &fg.edges {
        let (u, v) = (index(&e.src), index(&e.dst));
        if !adj[u].contains(&v) {
            adj[u].push(v);
        }
    }
    let (circuits, mut truncated) = johnson(&adj, cap);
    let mut cycles = Vec::new();
    'outer: for circ in circuits {
        let m = circ.len();
        // Edge choices for each step of the circuit.
        let steps: Vec<Vec<EdgeId>> = (0..m)
            .map(|k| {
                let (u, v) = (&fg.locations[circ[k]], &fg.locations[circ[(k + 1) % m]]);
                fg.edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.src == *u && e.dst == *v)
                    .map(|(id, _)| id)
                    .collect()
            })
            .collect();
        let mut choices: Vec<Vec<EdgeId>> = vec![Vec::new()];
        for s in &steps {
            choices = choices
                .into_iter()
                .flat_map(|c| {
                    s.iter().map(move |&id| {
                        let mut c = c.clone();
                        c.push(id);
                        c
                    })
                })
                .collect();
        }
        for edges in choices {
            for r in 0..m {
                let mut rotated = edges.clone();
                rotated.rotate_left(r);
                let core = fg.path(&rotated).expect("circuit edges form a path");
                if let Some(c) = make_cycle(fg, core) {
                    if cycles.len() >= cap {
                        truncated = true;
                        break 'outer;
                    }
                    cycles.push(c);
                }
            }
        }
    }
    cycles.sort_by_cached_key(sort_key);
    CycleSet { cycles, truncated }
}
