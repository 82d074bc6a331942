// SPDX-License-Identifier: Apache-2.0

//! Shared helpers for integration tests: random terms and the composition
//! law checks.

#![allow(dead_code)]

use cse::smt::{Solver, Verdict};
use cse::sym::{
    instantiate, simplify_formula, states_equivalent, var, CmpOp, Equivalence, Expr, Formula,
    Memory, ParamId, State, Valuation, Var,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INSTANCES: usize = 200;
pub const MAX_DEPTH: u32 = 4;
pub const VARS: [&str; 4] = ["a", "b", "c", "d"];

pub struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<Var>,
    params: Vec<ParamId>,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            vars: VARS.iter().map(|v| var(v)).collect(),
            params: Vec::new(),
        }
    }

    pub fn with_params(mut self, params: &[ParamId]) -> Gen {
        self.params = params.to_vec();
        self
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn expr(&mut self, depth: u32) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.45);
        if leaf {
            return match self.rng.gen_range(0..3) {
                0 => Expr::Int(self.rng.gen_range(-3..=3)),
                1 if !self.params.is_empty() => {
                    Expr::Param(*self.params.choose(&mut self.rng).unwrap())
                }
                _ => Expr::Sym(self.vars.choose(&mut self.rng).unwrap().clone()),
            };
        }
        let a = Box::new(self.expr(depth - 1));
        let b = Box::new(self.expr(depth - 1));
        match self.rng.gen_range(0..4) {
            0 => Expr::Add(a, b),
            1 => Expr::Sub(a, b),
            2 => Expr::Mul(a, b),
            _ => Expr::Ite(Box::new(self.formula(depth - 1)), a, b),
        }
    }

    pub fn formula(&mut self, depth: u32) -> Formula {
        let ops = [
            CmpOp::Eq,
            CmpOp::Ne,
            CmpOp::Lt,
            CmpOp::Le,
            CmpOp::Gt,
            CmpOp::Ge,
        ];
        if depth <= 1 || self.rng.gen_bool(0.4) {
            let op = *ops.choose(&mut self.rng).unwrap();
            let d = depth.saturating_sub(1);
            return Formula::Cmp(op, self.expr(d), self.expr(d));
        }
        match self.rng.gen_range(0..3) {
            0 => Formula::And(vec![self.formula(depth - 1), self.formula(depth - 1)]),
            1 => Formula::Or(vec![self.formula(depth - 1), self.formula(depth - 1)]),
            _ => Formula::Not(Box::new(self.formula(depth - 1))),
        }
    }

    pub fn memory(&mut self) -> Memory {
        let vars = self.vars.clone();
        Memory::from_entries(vars.into_iter().map(|v| {
            let e = if self.rng.gen_bool(0.3) {
                Expr::Sym(v.clone())
            } else {
                let depth = self.rng.gen_range(1..=MAX_DEPTH);
                self.expr(depth)
            };
            (v, e)
        }))
    }

    pub fn state(&mut self) -> State {
        let pc = if self.rng.gen_bool(0.2) {
            Formula::Bool(true)
        } else {
            self.formula(2)
        };
        State::new("l".into(), self.memory(), pc)
    }

    pub fn valuation(&mut self, params: &[ParamId]) -> Valuation {
        let mut nu = Valuation::new();
        for p in params {
            nu.insert(*p, self.rng.gen_range(0..=4));
        }
        nu
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub yes: usize,
    pub no: usize,
    pub unknown: usize,
}

impl Tally {
    fn add(&mut self, e: Equivalence) {
        match e {
            Equivalence::Yes => self.yes += 1,
            Equivalence::No => self.no += 1,
            Equivalence::Unknown => self.unknown += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.yes + self.no + self.unknown
    }

    /// Zero refutations and at most 2% undecided.
    pub fn acceptable(&self) -> bool {
        self.no == 0 && self.unknown * 50 <= self.total()
    }
}

fn validity(negation: Formula, solver: &Solver) -> Equivalence {
    match solver.satisfiable(&negation).verdict {
        Verdict::Unsat => Equivalence::Yes,
        Verdict::Sat => Equivalence::No,
        Verdict::Unknown => Equivalence::Unknown,
    }
}

pub fn formulas_equivalent(f: &Formula, g: &Formula, solver: &Solver) -> Equivalence {
    if simplify_formula(f) == simplify_formula(g) {
        return Equivalence::Yes;
    }
    validity(Formula::not(Formula::iff(f.clone(), g.clone())), solver)
}

pub fn memories_equivalent(m: &Memory, n: &Memory, solver: &Solver) -> Equivalence {
    let mut out = Equivalence::Yes;
    for ((v, a), (w, b)) in m.iter().zip(n.iter()) {
        assert_eq!(v, w);
        if a == b {
            continue;
        }
        match validity(Formula::cmp(CmpOp::Ne, a.clone(), b.clone()), solver) {
            Equivalence::No => return Equivalence::No,
            Equivalence::Unknown => out = Equivalence::Unknown,
            Equivalence::Yes => {}
        }
    }
    out
}

/// `(θ ⋄ θ')<φ>` against `θ<θ'<φ>>`.
pub fn law_substitution(seed: u64, solver: &Solver) -> Tally {
    let mut g = Gen::new(seed);
    let mut t = Tally::default();
    for _ in 0..INSTANCES {
        let (m, n, phi) = (g.memory(), g.memory(), g.formula(MAX_DEPTH));
        let lhs = m.compose(&n).unwrap().apply(&phi);
        let rhs = m.apply(&n.apply(&phi));
        t.add(formulas_equivalent(&lhs, &rhs, solver));
    }
    t
}

/// `θ<ψ> ∧ θ<ψ'>` against `θ<ψ ∧ ψ'>`, compared syntactically after
/// simplification.
pub fn law_conjunction(seed: u64) -> Tally {
    let mut g = Gen::new(seed);
    let mut t = Tally::default();
    for _ in 0..INSTANCES {
        let (m, p, q) = (g.memory(), g.formula(MAX_DEPTH), g.formula(MAX_DEPTH));
        let lhs = simplify_formula(&Formula::and([m.apply(&p), m.apply(&q)]));
        let rhs = simplify_formula(&m.apply(&Formula::and([p, q])));
        t.add(if lhs == rhs {
            Equivalence::Yes
        } else {
            Equivalence::No
        });
    }
    t
}

/// Associativity of memory composition.
pub fn law_memory_assoc(seed: u64, solver: &Solver) -> Tally {
    let mut g = Gen::new(seed);
    let mut t = Tally::default();
    for _ in 0..INSTANCES {
        let (a, b, c) = (g.memory(), g.memory(), g.memory());
        let lhs = a.compose(&b.compose(&c).unwrap()).unwrap();
        let rhs = a.compose(&b).unwrap().compose(&c).unwrap();
        t.add(memories_equivalent(&lhs, &rhs, solver));
    }
    t
}

/// Associativity of state composition.
pub fn law_state_assoc(seed: u64, solver: &Solver) -> Tally {
    let mut g = Gen::new(seed);
    let mut t = Tally::default();
    for _ in 0..INSTANCES {
        let (a, b, c) = (g.state(), g.state(), g.state());
        let lhs = a.compose(&b.compose(&c).unwrap()).unwrap();
        let rhs = a.compose(&b).unwrap().compose(&c).unwrap();
        t.add(states_equivalent(&lhs, &rhs, solver));
    }
    t
}

/// `s<ν> ⋄ s'<ν'>` against `(s ⋄ s')<ν ∪ ν'>`, with one shared parameter
/// on which the valuations agree.
pub fn law_instantiation(seed: u64, solver: &Solver) -> Tally {
    let (p, q, r) = (ParamId(0), ParamId(1), ParamId(2));
    let mut g1 = Gen::new(seed).with_params(&[p, q]);
    let mut g2 = Gen::new(seed ^ 0x5eed).with_params(&[q, r]);
    let mut t = Tally::default();
    for _ in 0..INSTANCES {
        let (s1, s2) = (g1.state(), g2.state());
        let shared = g1.valuation(&[q]);
        let nu1 = g1.valuation(&[p]).union(&shared).unwrap();
        let nu2 = g2.valuation(&[r]).union(&shared).unwrap();
        let both = nu1.union(&nu2).unwrap();
        let lhs = instantiate(&s1, &nu1)
            .unwrap()
            .compose(&instantiate(&s2, &nu2).unwrap())
            .unwrap();
        let rhs = instantiate(&s1.compose(&s2).unwrap(), &both).unwrap();
        t.add(states_equivalent(&lhs, &rhs, solver));
    }
    t
}

/// `m ⋄ θI = m`, `θI ⋄ m = m` and `θI<φ> = φ`, syntactically after
/// simplification.
pub fn law_identity(seed: u64) -> Tally {
    let mut g = Gen::new(seed);
    let id = Memory::identity(g.vars());
    let mut t = Tally::default();
    for _ in 0..INSTANCES {
        let (m, phi) = (g.memory(), g.formula(MAX_DEPTH));
        let ok = m.compose(&id).unwrap() == m.simplified()
            && id.compose(&m).unwrap() == m.simplified()
            && simplify_formula(&id.apply(&phi)) == simplify_formula(&phi);
        t.add(if ok {
            Equivalence::Yes
        } else {
            Equivalence::No
        });
    }
    t
}
