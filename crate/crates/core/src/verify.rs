// SPDX-License-Identifier: Apache-2.0

//! Bounded differential checks between classic and compact trees, and
//! between templates and concrete unrolling.
//!
//! Parameters are instantiated with values up to a bound and the resulting
//! states are compared with [`states_equivalent`].

use std::collections::BTreeSet;

use serde::Serialize;

use crate::classic::{compute_classic_successors, execute_path};
use crate::cycles::Cycle;
use crate::flowgraph::Flowgraph;
use crate::smt::{Solver, Verdict};
use crate::sym::{
    instantiate, states_equivalent, Equivalence, Formula, Memory, ParamId, State, Valuation,
};
use crate::templates::Template;
use crate::tree::{ExecTree, NodeKind, Origin, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveReason {
    SolverUnknown,
    BoundExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LeafVerdict {
    Matched {
        leaf: usize,
        counterpart: usize,
        valuation: Valuation,
    },
    Unmatched {
        leaf: usize,
        /// The failing valuation, when the check was per valuation.
        valuation: Option<Valuation>,
    },
    Inconclusive {
        leaf: usize,
        reason: InconclusiveReason,
    },
}

impl LeafVerdict {
    pub fn leaf(&self) -> usize {
        match self {
            LeafVerdict::Matched { leaf, .. }
            | LeafVerdict::Unmatched { leaf, .. }
            | LeafVerdict::Inconclusive { leaf, .. } => *leaf,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    /// One verdict per checked genuine leaf, by leaf id.
    pub verdicts: Vec<LeafVerdict>,
    pub bound: u64,
    /// Leaves cut off by a limit, not checked.
    pub excluded: usize,
    /// Valuations skipped because the instantiated condition is
    /// unsatisfiable (completeness only).
    pub infeasible_valuations: usize,
    /// Valuations whose classic counterpart would lie below the classic
    /// tree's depth (completeness only).
    pub out_of_depth_valuations: usize,
    /// Compact leaves with no feasible instance within the classic tree's
    /// depth; not checked (completeness only).
    pub beyond_classic_depth: usize,
    /// Set when a tree contains failed leaves; no verdicts then.
    pub aborted: Option<String>,
}

impl MatchReport {
    pub fn matched(&self) -> usize {
        self.count(|v| matches!(v, LeafVerdict::Matched { .. }))
    }

    pub fn unmatched(&self) -> usize {
        self.count(|v| matches!(v, LeafVerdict::Unmatched { .. }))
    }

    pub fn inconclusive(&self, reason: InconclusiveReason) -> usize {
        self.count(|v| matches!(v, LeafVerdict::Inconclusive { reason: r, .. } if *r == reason))
    }

    fn count(&self, f: impl Fn(&LeafVerdict) -> bool) -> usize {
        self.verdicts.iter().filter(|v| f(v)).count()
    }

    /// No abort and no unmatched leaf.
    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.unmatched() == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "leaves={} matched={} unmatched={} unknown={} bound_exhausted={} excluded={} beyond_depth={}",
            self.verdicts.len(),
            self.matched(),
            self.unmatched(),
            self.inconclusive(InconclusiveReason::SolverUnknown),
            self.inconclusive(InconclusiveReason::BoundExhausted),
            self.excluded,
            self.beyond_classic_depth
        )
    }
}

/// Number of classic steps covered by the path to a compact node, as an
/// affine function of the template parameters on that path.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Span {
    base: u64,
    /// Core length per parameter, sorted by parameter.
    coeffs: Vec<(ParamId, u64)>,
}

impl Span {
    fn of(tree: &ExecTree, pool: &[Template], id: usize) -> Option<Span> {
        let mut base = 0;
        let mut coeffs = Vec::new();
        for nid in tree.path_to(id).into_iter().skip(1) {
            let n = &tree.nodes[nid];
            match n.origin {
                Origin::Root => {}
                Origin::Edge { .. } => base += 1,
                Origin::TemplateExit { template, exit } => {
                    let t = pool.get(template)?;
                    base += t.exits.get(exit)?.prefix.len() as u64;
                    let NodeKind::Template { param, .. } = n.kind else {
                        return None;
                    };
                    coeffs.push((param, t.cycle.core.len() as u64));
                }
            }
        }
        coeffs.sort();
        Some(Span { base, coeffs })
    }

    fn params(&self) -> BTreeSet<ParamId> {
        self.coeffs.iter().map(|(p, _)| *p).collect()
    }

    fn at(&self, nu: &Valuation) -> u64 {
        self.base
            + self
                .coeffs
                .iter()
                .map(|(p, c)| c * nu.get(*p).unwrap_or(0))
                .sum::<u64>()
    }

    /// Valuations with every value in `0..=limit` and span at most `reach`,
    /// in lexicographic order.
    fn within(&self, limit: u64, reach: u64) -> Vec<Valuation> {
        fn go(
            coeffs: &[(ParamId, u64)],
            left: u64,
            limit: u64,
            cur: &mut Valuation,
            out: &mut Vec<Valuation>,
        ) {
            let Some(((p, c), rest)) = coeffs.split_first() else {
                out.push(cur.clone());
                return;
            };
            for v in 0..=limit.min(left / c) {
                cur.insert(*p, v);
                go(rest, left - v * c, limit, cur, out);
            }
        }
        let mut out = Vec::new();
        if let Some(left) = reach.checked_sub(self.base) {
            go(&self.coeffs, left, limit, &mut Valuation::new(), &mut out);
        }
        out
    }

    /// Valuations with every value in `0..=limit` and span `target`, in
    /// lexicographic order.
    fn solutions(&self, target: u64, limit: u64) -> Vec<Valuation> {
        fn go(
            coeffs: &[(ParamId, u64)],
            left: u64,
            limit: u64,
            cur: &mut Valuation,
            out: &mut Vec<Valuation>,
        ) {
            let Some(((p, c), rest)) = coeffs.split_first() else {
                if left == 0 {
                    out.push(cur.clone());
                }
                return;
            };
            for v in 0..=limit.min(left / c) {
                cur.insert(*p, v);
                go(rest, left - v * c, limit, cur, out);
            }
        }
        let mut out = Vec::new();
        if let Some(left) = target.checked_sub(self.base) {
            go(&self.coeffs, left, limit, &mut Valuation::new(), &mut out);
        }
        out
    }
}

fn genuine_leaves<'a>(
    fg: &'a Flowgraph,
    t: &'a ExecTree,
) -> impl Iterator<Item = &'a TreeNode> + 'a {
    t.leaves().filter(move |n| t.is_genuine_leaf(fg, n))
}

fn failed_leaf_diagnostic(t: &ExecTree, tp: &ExecTree) -> Option<String> {
    match (t.failed_leaves(), tp.failed_leaves()) {
        (0, 0) => None,
        (a, b) => Some(format!(
            "trees contain failed leaves (classic {a}, compact {b}); the check requires none"
        )),
    }
}

enum Search {
    Found(usize, Valuation),
    NotFound { unknown: bool },
}

/// Every genuine leaf of the classic tree `t` must be equivalent to some
/// genuine leaf of the compact tree `tp` under a valuation bounded by
/// `bound`. `pool` is the template list `tp` was built with.
pub fn check_soundness(
    fg: &Flowgraph,
    t: &ExecTree,
    tp: &ExecTree,
    pool: &[Template],
    bound: u64,
    solver: &Solver,
) -> MatchReport {
    let mut report = MatchReport {
        bound,
        aborted: failed_leaf_diagnostic(t, tp),
        ..MatchReport::default()
    };
    if report.aborted.is_some() {
        return report;
    }
    report.excluded = t.leaves().filter(|n| !t.is_genuine_leaf(fg, n)).count();
    let mut candidates = Vec::new();
    for n in genuine_leaves(fg, tp) {
        match Span::of(tp, pool, n.id) {
            Some(span) => candidates.push((n, span)),
            None => {
                report.aborted = Some(format!(
                    "compact node {} does not fit the template pool",
                    n.id
                ));
                return report;
            }
        }
    }
    for e in genuine_leaves(fg, t) {
        let depth = e.depth as u64;
        let same_loc: Vec<&(&TreeNode, Span)> = candidates
            .iter()
            .filter(|(c, _)| c.state.loc == e.state.loc)
            .collect();
        let try_all = |vals: &mut dyn Iterator<Item = (usize, Valuation)>| -> Search {
            let mut unknown = false;
            for (id, nu) in vals {
                let Ok(inst) = instantiate(&tp.nodes[id].state, &nu) else {
                    continue;
                };
                match states_equivalent(&e.state, &inst, solver) {
                    Equivalence::Yes => return Search::Found(id, nu),
                    Equivalence::Unknown => unknown = true,
                    Equivalence::No => {}
                }
            }
            Search::NotFound { unknown }
        };
        // Valuations reproducing the classic path length come first.
        let mut aligned = same_loc.iter().flat_map(|(c, span)| {
            span.solutions(depth, bound)
                .into_iter()
                .map(|nu| (c.id, nu))
        });
        let mut outcome = try_all(&mut aligned);
        if let Search::NotFound { unknown } = outcome {
            let mut rest = same_loc.iter().flat_map(|(c, span)| {
                Valuation::enumerate(&span.params(), bound)
                    .into_iter()
                    .filter(move |nu| span.at(nu) != depth)
                    .map(|nu| (c.id, nu))
            });
            outcome = match try_all(&mut rest) {
                Search::NotFound { unknown: u } => Search::NotFound {
                    unknown: unknown || u,
                },
                found => found,
            };
        }
        let verdict = match outcome {
            Search::Found(counterpart, valuation) => LeafVerdict::Matched {
                leaf: e.id,
                counterpart,
                valuation,
            },
            Search::NotFound { unknown: true } => LeafVerdict::Inconclusive {
                leaf: e.id,
                reason: InconclusiveReason::SolverUnknown,
            },
            Search::NotFound { unknown: false } => {
                let beyond = same_loc.iter().any(|(_, span)| {
                    span.solutions(depth, depth)
                        .iter()
                        .any(|nu| nu.iter().any(|(_, v)| v > bound))
                });
                if beyond {
                    LeafVerdict::Inconclusive {
                        leaf: e.id,
                        reason: InconclusiveReason::BoundExhausted,
                    }
                } else {
                    LeafVerdict::Unmatched {
                        leaf: e.id,
                        valuation: None,
                    }
                }
            }
        };
        log::debug!("soundness: {verdict:?}");
        report.verdicts.push(verdict);
    }
    report
}

/// For every genuine leaf of the compact tree `tp` and every valuation up to
/// `bound` under which its condition is satisfiable, some genuine leaf of
/// the classic tree `t` must be equivalent to the instantiated state.
/// Valuations whose classic counterpart lies deeper than `t` reaches are
/// counted but not checked.
pub fn check_completeness(
    fg: &Flowgraph,
    tp: &ExecTree,
    t: &ExecTree,
    pool: &[Template],
    bound: u64,
    solver: &Solver,
) -> MatchReport {
    let mut report = MatchReport {
        bound,
        aborted: failed_leaf_diagnostic(t, tp),
        ..MatchReport::default()
    };
    if report.aborted.is_some() {
        return report;
    }
    report.excluded = tp.leaves().filter(|n| !tp.is_genuine_leaf(fg, n)).count();
    let reach = if t.limit_tripped.is_some() {
        t.nodes.iter().map(|n| n.depth as u64).max().unwrap_or(0)
    } else {
        u64::MAX
    };
    let classic: Vec<&TreeNode> = genuine_leaves(fg, t).collect();
    for e in genuine_leaves(fg, tp) {
        let Some(span) = Span::of(tp, pool, e.id) else {
            report.aborted = Some(format!(
                "compact node {} does not fit the template pool",
                e.id
            ));
            report.verdicts.clear();
            return report;
        };
        let mut first: Option<(usize, Valuation)> = None;
        let mut failing: Option<Valuation> = None;
        let mut unknown = false;
        if span.base > reach {
            report.beyond_classic_depth += 1;
            continue;
        }
        let checkable = span.within(bound, reach);
        let all = (bound + 1).saturating_pow(span.coeffs.len() as u32);
        report.out_of_depth_valuations += all.saturating_sub(checkable.len() as u64) as usize;
        for nu in checkable {
            let steps = span.at(&nu);
            let Ok(inst) = instantiate(&e.state, &nu) else {
                failing.get_or_insert(nu);
                continue;
            };
            match solver.satisfiable(&inst.pc).verdict {
                Verdict::Unsat => {
                    report.infeasible_valuations += 1;
                    continue;
                }
                Verdict::Unknown => {
                    unknown = true;
                    continue;
                }
                Verdict::Sat => {}
            }
            let mut order: Vec<&&TreeNode> =
                classic.iter().filter(|c| c.state.loc == inst.loc).collect();
            order.sort_by_key(|c| (c.depth as u64 != steps, c.id));
            let mut saw_unknown = false;
            let hit = order
                .iter()
                .find(|c| match states_equivalent(&c.state, &inst, solver) {
                    Equivalence::Yes => true,
                    Equivalence::Unknown => {
                        saw_unknown = true;
                        false
                    }
                    Equivalence::No => false,
                });
            match hit {
                Some(c) => {
                    first.get_or_insert((c.id, nu));
                }
                None if saw_unknown => unknown = true,
                None => {
                    failing.get_or_insert(nu);
                }
            }
        }
        let verdict = if let Some(valuation) = failing {
            LeafVerdict::Unmatched {
                leaf: e.id,
                valuation: Some(valuation),
            }
        } else if unknown {
            LeafVerdict::Inconclusive {
                leaf: e.id,
                reason: InconclusiveReason::SolverUnknown,
            }
        } else if let Some((counterpart, valuation)) = first {
            LeafVerdict::Matched {
                leaf: e.id,
                counterpart,
                valuation,
            }
        } else if reach == u64::MAX
            || span.within(reach, reach).len() > span.within(bound, reach).len()
        {
            LeafVerdict::Inconclusive {
                leaf: e.id,
                reason: InconclusiveReason::BoundExhausted,
            }
        } else {
            // Every instance the classic tree could contain is infeasible.
            report.beyond_classic_depth += 1;
            continue;
        };
        log::debug!("completeness: {verdict:?}");
        report.verdicts.push(verdict);
    }
    report
}

/// Outcome for one exit and one iteration count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateCheck {
    pub exit: usize,
    pub nu: u64,
    /// Template instance against concrete execution of the unrolled path.
    pub unrolled: Equivalence,
    /// Whether the instantiated exit condition is satisfiable.
    pub feasible: Verdict,
    /// Classic expansion along the unrolled path; `None` when the instance
    /// is infeasible and no classic counterpart is required.
    pub classic: Option<Equivalence>,
}

impl TemplateCheck {
    pub fn passed(&self) -> bool {
        self.unrolled == Equivalence::Yes
            && match self.feasible {
                Verdict::Sat => self.classic == Some(Equivalence::Yes),
                Verdict::Unsat => true,
                Verdict::Unknown => false,
            }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TemplateReport {
    pub checks: Vec<TemplateCheck>,
}

impl TemplateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(TemplateCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TemplateCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Follows `rho` through classic successor computation from `root`,
/// checking every step's condition as the tree driver would. `None` if
/// some step is not provably feasible.
fn classic_along(fg: &Flowgraph, root: State, edges: &[usize], solver: &Solver) -> Option<State> {
    let mut s = root;
    for &id in edges {
        let e = fg.edge(id).ok()?;
        let k = fg
            .successors(&s.loc)
            .ok()?
            .iter()
            .position(|(eid, _)| *eid == id)?;
        let next = compute_classic_successors(fg, &s).swap_remove(k);
        debug_assert_eq!(next.loc, e.dst);
        if next.pc != s.pc && solver.satisfiable(&next.pc).verdict != Verdict::Sat {
            return None;
        }
        s = next;
    }
    Some(s)
}

/// Checks template `t` of cycle `c` against concrete unrolling for every
/// exit and every iteration count up to `nu_max`, from the generic entry
/// state `(entry, identity, true)`.
pub fn check_template_properties(
    fg: &Flowgraph,
    c: &Cycle,
    t: &Template,
    nu_max: u64,
    solver: &Solver,
) -> TemplateReport {
    let identity = Memory::identity(&fg.vars());
    let generic = State::new(c.entry.clone(), identity.clone(), Formula::Bool(true));
    let mut report = TemplateReport::default();
    for (i, exit) in t.exits.iter().enumerate() {
        let mut path = crate::flowgraph::Path::at(c.entry.clone());
        for nu in 0..=nu_max {
            if nu > 0 {
                path = path
                    .join(&c.core)
                    .expect("core starts and ends at the entry");
            }
            let full = path.join(&exit.prefix).expect("prefix starts at the entry");
            let valuation = Valuation::single(t.param, nu);
            let instance = instantiate(&exit.state, &valuation).expect("one parameter");
            let composed = generic.compose(&instance).expect("same variables");
            let concrete = execute_path(fg, &full, &identity, &Formula::Bool(true))
                .expect("unrolled path is valid");
            let unrolled = states_equivalent(&concrete, &composed, solver);
            let feasible = solver.satisfiable(&composed.pc).verdict;
            let classic = (feasible == Verdict::Sat).then(|| {
                match classic_along(fg, generic.clone(), &full.edges, solver) {
                    Some(s) => states_equivalent(&s, &composed, solver),
                    None => Equivalence::No,
                }
            });
            report.checks.push(TemplateCheck {
                exit: i,
                nu,
                unrolled,
                feasible,
                classic,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::run_classic;
    use crate::compact::{run_compact, SelectionStrategy};
    use crate::corpus::{LINSRCH, TWOLOOPS};
    use crate::cycles::{enumerate_cycles, DEFAULT_CAP};
    use crate::flowgraph::parse_flowgraph;
    use crate::smt::SolverConfig;
    use crate::templates::{compute_template, TemplatePool};
    use crate::tree::Limits;

    struct Setup {
        fg: Flowgraph,
        solver: Solver,
        pool: Vec<Template>,
    }

    fn setup(src: &str) -> Setup {
        let fg = parse_flowgraph(src).unwrap();
        let solver = Solver::new(SolverConfig::persistent());
        let cycles = enumerate_cycles(&fg, DEFAULT_CAP).cycles;
        let pool = TemplatePool::compute(&fg, &cycles, &solver).applicable();
        Setup { fg, solver, pool }
    }

    #[test]
    fn span_solutions() {
        let span = Span {
            base: 2,
            coeffs: vec![(ParamId(0), 3), (ParamId(1), 2)],
        };
        let sols: Vec<String> = span.solutions(9, 4).iter().map(|v| v.to_string()).collect();
        assert_eq!(sols, ["{k#0=1, k#1=2}"]);
        assert_eq!(span.solutions(1, 4), Vec::<Valuation>::new());
        let within: Vec<String> = span.within(4, 7).iter().map(|v| v.to_string()).collect();
        assert_eq!(
            within,
            [
                "{k#0=0, k#1=0}",
                "{k#0=0, k#1=1}",
                "{k#0=0, k#1=2}",
                "{k#0=1, k#1=0}",
                "{k#0=1, k#1=1}"
            ]
        );
        // 3a + 2b = 12
        assert_eq!(span.solutions(14, 2).len(), 0);
        assert_eq!(span.solutions(14, 4).len(), 2);
    }

    #[test]
    fn linsrch_soundness_matches_each_iteration_count() {
        let s = setup(LINSRCH);
        let t = run_classic(&s.fg, &s.solver, &Limits::depth(10));
        let tp = run_compact(
            &s.fg,
            &s.pool,
            SelectionStrategy::First,
            &s.solver,
            &Limits::default(),
        );
        let r = check_soundness(&s.fg, &t, &tp, &s.pool, 4, &s.solver);
        assert!(r.passed(), "{}", r.summary());
        assert!(r.excluded > 0);
        let mut found = BTreeSet::new();
        for v in &r.verdicts {
            let LeafVerdict::Matched {
                leaf, valuation, ..
            } = v
            else {
                panic!("{v:?}");
            };
            assert_eq!(t.nodes[*leaf].state.loc.as_ref(), "g");
            found.insert(valuation.get(ParamId(0)).unwrap());
        }
        // Exit via f takes 3 + 3k steps, exit via e takes 4 + 3k.
        assert_eq!(found, BTreeSet::from([0, 1, 2]));
        assert_eq!(r.verdicts.len(), 6);
    }

    #[test]
    fn bound_exhaustion_is_inconclusive() {
        let s = setup(LINSRCH);
        let t = run_classic(&s.fg, &s.solver, &Limits::depth(40));
        let tp = run_compact(
            &s.fg,
            &s.pool,
            SelectionStrategy::First,
            &s.solver,
            &Limits::default(),
        );
        let r = check_soundness(&s.fg, &t, &tp, &s.pool, 4, &s.solver);
        assert_eq!(r.unmatched(), 0);
        assert!(r.inconclusive(InconclusiveReason::BoundExhausted) > 0);
        let r6 = check_soundness(&s.fg, &t, &tp, &s.pool, 12, &s.solver);
        assert!(r6.matched() > r.matched());
        assert_eq!(r6.unmatched(), 0);
    }

    #[test]
    fn linsrch_completeness() {
        let s = setup(LINSRCH);
        let t = run_classic(&s.fg, &s.solver, &Limits::depth(30));
        let tp = run_compact(
            &s.fg,
            &s.pool,
            SelectionStrategy::First,
            &s.solver,
            &Limits::default(),
        );
        let r = check_completeness(&s.fg, &tp, &t, &s.pool, 4, &s.solver);
        assert_eq!(r.verdicts.len(), 2);
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.matched(), 2);
    }

    #[test]
    fn completeness_flags_a_wrong_tree() {
        let s = setup(LINSRCH);
        let t = run_classic(&s.fg, &s.solver, &Limits::depth(30));
        let mut tp = run_compact(
            &s.fg,
            &s.pool,
            SelectionStrategy::First,
            &s.solver,
            &Limits::default(),
        );
        let leaf = tp.leaves().next().unwrap().id;
        tp.nodes[leaf]
            .state
            .mem
            .set(crate::sym::var("x"), crate::sym::Expr::Int(7));
        let r = check_completeness(&s.fg, &tp, &t, &s.pool, 2, &s.solver);
        assert_eq!(r.unmatched(), 1);
    }

    #[test]
    fn loop_free_programs_match_without_parameters() {
        let src = "program p\nint x y\nstart a\nexit z\n\
                   edge a -> b : assume x > 0; y := 1\n\
                   edge a -> b : assume x <= 0; y := 2\n\
                   edge b -> z : x := x + y\n";
        let s = setup(src);
        let t = run_classic(&s.fg, &s.solver, &Limits::default());
        let tp = run_compact(
            &s.fg,
            &s.pool,
            SelectionStrategy::First,
            &s.solver,
            &Limits::default(),
        );
        for r in [
            check_soundness(&s.fg, &t, &tp, &s.pool, 4, &s.solver),
            check_completeness(&s.fg, &tp, &t, &s.pool, 4, &s.solver),
        ] {
            assert_eq!(r.matched(), 2);
            assert_eq!(r.verdicts.len(), 2);
            for v in &r.verdicts {
                assert!(
                    matches!(v, LeafVerdict::Matched { valuation, .. } if valuation.is_empty())
                );
            }
        }
    }

    #[test]
    fn failed_leaves_abort() {
        let s = setup(LINSRCH);
        let t = run_classic(&s.fg, &s.solver, &Limits::depth(6));
        let mut tp = t.clone();
        let id = tp.leaves().next().unwrap().id;
        tp.nodes[id].kind = NodeKind::FailedLeaf;
        let r = check_soundness(&s.fg, &t, &tp, &s.pool, 2, &s.solver);
        assert!(r.aborted.is_some() && r.verdicts.is_empty());
        assert!(!r.passed());
    }

    #[test]
    fn twoloops_both_directions() {
        let s = setup(TWOLOOPS);
        let t = run_classic(&s.fg, &s.solver, &Limits::depth(18));
        let tp = run_compact(
            &s.fg,
            &s.pool,
            SelectionStrategy::First,
            &s.solver,
            &Limits::depth(20),
        );
        let sound = check_soundness(&s.fg, &t, &tp, &s.pool, 4, &s.solver);
        let complete = check_completeness(&s.fg, &tp, &t, &s.pool, 4, &s.solver);
        assert!(sound.passed(), "{}", sound.summary());
        assert!(complete.passed(), "{}", complete.summary());
        assert!(sound.matched() > 0 && complete.matched() > 0);
    }

    #[test]
    fn linsrch_template_against_unrolling() {
        let s = setup(LINSRCH);
        let c = enumerate_cycles(&s.fg, DEFAULT_CAP).cycles.remove(0);
        let t = compute_template(&s.fg, &c, &s.solver).unwrap();
        let r = check_template_properties(&s.fg, &c, &t, 5, &s.solver);
        assert_eq!(r.checks.len(), 12);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn a_wrong_template_is_caught() {
        let s = setup(LINSRCH);
        let c = enumerate_cycles(&s.fg, DEFAULT_CAP).cycles.remove(0);
        let mut t = compute_template(&s.fg, &c, &s.solver).unwrap();
        let wrong = crate::sym::Expr::sym("i")
            + crate::sym::Expr::Param(t.param) * crate::sym::Expr::Int(2);
        for x in &mut t.exits {
            x.state.mem.set(crate::sym::var("i"), wrong.clone());
        }
        let r = check_template_properties(&s.fg, &c, &t, 2, &s.solver);
        assert!(!r.passed());
        assert!(r.checks.iter().any(|k| k.nu == 0 && k.passed()));
    }
}
