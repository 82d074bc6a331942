// SPDX-License-Identifier: Apache-2.0

//! Symbolic expressions, formulas, memories and states.

mod equiv;
mod eval;
mod expr;
mod simplify;
mod state;

pub use equiv::{states_equivalent, Equivalence};
pub use eval::{eval_expr, eval_formula, Assignment, Env, HashedEnv, MAX_FORALL_RANGE};
pub use expr::{var, BoundVar, CmpOp, Expr, Formula, Node, ParamId, Params, Pretty, Style, Var};
pub use simplify::{constant_value, linear_in_atom, simplify_expr, simplify_formula};
pub use state::{
    instantiate, replace_param, Memory, ParamGen, Rewrite, State, SymError, Term, Valuation,
};
