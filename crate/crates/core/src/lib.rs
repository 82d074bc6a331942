// SPDX-License-Identifier: Apache-2.0

//! Classic and compact symbolic execution for a small flowgraph language.
//!
//! A program is parsed into a [`flowgraph::Flowgraph`]. The classic engine
//! builds a breadth-first symbolic execution tree; the compact engine first
//! enumerates [`cycles`], summarizes each into a parametric
//! [`templates::Template`] and applies templates while building the tree,
//! which keeps trees of loop programs small. [`verify`] cross-checks the two
//! engines by instantiating parameters with small values.

pub mod classic;
pub mod compact;
pub mod corpus;
pub mod cycles;
pub mod flowgraph;
pub mod smt;
pub mod sym;
pub mod templates;
pub mod tree;
pub mod verify;

pub use flowgraph::{parse_flowgraph, Flowgraph};
pub use sym::{Expr, Formula, Memory, State, Valuation};
