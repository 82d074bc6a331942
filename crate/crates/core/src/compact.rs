// SPDX-License-Identifier: Apache-2.0

//! Compact symbolic execution: where a template is available, one tree step
//! covers every number of loop iterations at once.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classic::classic_candidates;
use crate::flowgraph::Flowgraph;
use crate::smt::Solver;
use crate::sym::ParamGen;
use crate::templates::Template;
use crate::tree::{explore, initial_state, Candidate, ExecTree, Limits, NodeKind, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    Never,
    First,
    Random(u64),
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionStrategy::Never => f.write_str("never"),
            SelectionStrategy::First => f.write_str("first"),
            SelectionStrategy::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for SelectionStrategy {
    type Err = String;

    /// `never`, `first`, `random` (seed 0) or `random:<seed>`.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "never" => Ok(SelectionStrategy::Never),
            "first" => Ok(SelectionStrategy::First),
            "random" => Ok(SelectionStrategy::Random(0)),
            _ => s
                .strip_prefix("random:")
                .and_then(|n| n.parse().ok())
                .map(SelectionStrategy::Random)
                .ok_or_else(|| format!("unknown strategy `{s}`")),
        }
    }
}

/// Random generator owned by a compact run.
pub fn strategy_rng(strat: SelectionStrategy) -> ChaCha8Rng {
    let seed = match strat {
        SelectionStrategy::Random(seed) => seed,
        _ => 0,
    };
    ChaCha8Rng::seed_from_u64(seed)
}

/// Picks a template whose entry is `l`, returning its index in `pool`.
/// Templates without exits are never picked.
pub fn choose_template<'a>(
    l: &str,
    pool: &'a [Template],
    strat: SelectionStrategy,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, &'a Template)> {
    let matching: Vec<(usize, &Template)> = pool
        .iter()
        .enumerate()
        .filter(|(_, t)| t.entry.as_ref() == l && t.is_applicable())
        .collect();
    match strat {
        SelectionStrategy::Never => None,
        _ if matching.is_empty() => None,
        SelectionStrategy::First => matching.first().copied(),
        SelectionStrategy::Random(_) => Some(matching[rng.gen_range(0..matching.len())]),
    }
}

pub fn run_compact(
    fg: &Flowgraph,
    pool: &[Template],
    strat: SelectionStrategy,
    solver: &Solver,
    lim: &Limits,
) -> ExecTree {
    let params = ParamGen::new();
    let mut rng = strategy_rng(strat);
    let mut applied = 0;
    let mut tree = explore(fg, initial_state(fg), solver, lim, |n| {
        let Some((ti, t)) = choose_template(&n.state.loc, pool, strat, &mut rng) else {
            return classic_candidates(fg, &n.state);
        };
        let p = params.fresh();
        applied += 1;
        t.instances(p)
            .into_iter()
            .enumerate()
            .map(|(i, inst)| Candidate {
                state: n
                    .state
                    .compose(&inst)
                    .expect("states share the variables of fg"),
                kind: NodeKind::Template {
                    template: ti,
                    param: p,
                    label: t.label(i, p),
                },
                origin: Origin::TemplateExit {
                    template: ti,
                    exit: i,
                },
            })
            .collect()
    });
    tree.stats.templates_applied = applied;
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::run_classic;
    use crate::corpus::{LINSRCH, TWOLOOPS};
    use crate::cycles::{enumerate_cycles, DEFAULT_CAP};
    use crate::flowgraph::parse_flowgraph;
    use crate::smt::SolverConfig;
    use crate::sym::ParamId;
    use crate::templates::TemplatePool;

    fn pool(fg: &Flowgraph, solver: &Solver) -> Vec<Template> {
        let cycles = enumerate_cycles(fg, DEFAULT_CAP).cycles;
        TemplatePool::compute(fg, &cycles, solver).applicable()
    }

    #[test]
    fn strategies_parse() {
        assert_eq!("first".parse(), Ok(SelectionStrategy::First));
        assert_eq!("random:7".parse(), Ok(SelectionStrategy::Random(7)));
        assert!("sometimes".parse::<SelectionStrategy>().is_err());
    }

    #[test]
    fn choice_rules() {
        let fg = parse_flowgraph(LINSRCH).unwrap();
        let solver = Solver::new(SolverConfig::default());
        let p = pool(&fg, &solver);
        let mut rng = strategy_rng(SelectionStrategy::First);
        assert!(choose_template("c", &p, SelectionStrategy::First, &mut rng).is_none());
        assert_eq!(
            choose_template("b", &p, SelectionStrategy::First, &mut rng).map(|(i, _)| i),
            Some(0)
        );
        assert!(choose_template("b", &p, SelectionStrategy::Never, &mut rng).is_none());
        let two = vec![p[0].clone(), p[0].clone()];
        let picks = |seed| {
            let mut rng = strategy_rng(SelectionStrategy::Random(seed));
            (0..16)
                .map(|_| {
                    choose_template("b", &two, SelectionStrategy::Random(seed), &mut rng)
                        .unwrap()
                        .0
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(picks(7), picks(7));
        assert!(picks(7).contains(&0) && picks(7).contains(&1));
    }

    #[test]
    fn fresh_parameters_are_distinct() {
        let g = ParamGen::new();
        assert_eq!(g.fresh(), ParamId(0));
        let ids: std::collections::BTreeSet<_> = (0..10).map(|_| g.fresh()).collect();
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn linsrch_compact_tree() {
        let fg = parse_flowgraph(LINSRCH).unwrap();
        let solver = Solver::new(SolverConfig::persistent());
        let p = pool(&fg, &solver);
        let t = run_compact(
            &fg,
            &p,
            SelectionStrategy::First,
            &solver,
            &Limits::default(),
        );
        let locs: Vec<&str> = t.nodes.iter().map(|n| n.state.loc.as_ref()).collect();
        assert_eq!(locs, ["a", "b", "f", "e", "g", "g"]);
        assert_eq!(t.template_nodes(), 2);
        assert_eq!(t.stats.templates_applied, 1);
        assert!(t.limit_tripped.is_none());
        let labels: Vec<String> = t
            .nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Template { label, .. } => Some(label.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(labels, ["(cdb)^k#0 f", "(cdb)^k#0 ce"]);
    }

    #[test]
    fn never_matches_classic() {
        let fg = parse_flowgraph(TWOLOOPS).unwrap();
        let solver = Solver::new(SolverConfig::persistent());
        let p = pool(&fg, &solver);
        let lim = Limits::depth(9);
        let a = run_compact(&fg, &p, SelectionStrategy::Never, &solver, &lim);
        let b = run_classic(&fg, &solver, &lim);
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn repeated_application_uses_disjoint_parameters() {
        let fg = parse_flowgraph(TWOLOOPS).unwrap();
        let solver = Solver::new(SolverConfig::persistent());
        let p = pool(&fg, &solver);
        let t = run_compact(
            &fg,
            &p,
            SelectionStrategy::First,
            &solver,
            &Limits::depth(12),
        );
        let mut seen = std::collections::BTreeSet::new();
        for n in &t.nodes {
            if let NodeKind::Template { param, .. } = n.kind {
                let path = t.path_to(n.id);
                let applications: std::collections::BTreeSet<ParamId> = path
                    .iter()
                    .filter_map(|&id| match t.nodes[id].kind {
                        NodeKind::Template { param, .. } => Some(param),
                        _ => None,
                    })
                    .collect();
                assert_eq!(n.state.params(), applications);
                seen.insert((n.parent, param));
            }
        }
        let params: std::collections::BTreeSet<ParamId> = seen.iter().map(|(_, p)| *p).collect();
        let parents: std::collections::BTreeSet<_> = seen.iter().map(|(p, _)| *p).collect();
        assert_eq!(params.len(), parents.len());
    }
}
