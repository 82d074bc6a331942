// SPDX-License-Identifier: Apache-2.0

//! Sample programs shipped with the engine.

pub const LINSRCH: &str = include_str!("../../../programs/linsrch.fg");
pub const BRANCHLOOP: &str = include_str!("../../../programs/branchloop.fg");
pub const NESTED: &str = include_str!("../../../programs/nested.fg");
pub const INSSORT_OUTER: &str = include_str!("../../../programs/inssort_outer.fg");
pub const TWOLOOPS: &str = include_str!("../../../programs/twoloops.fg");
pub const CONSTLOOP: &str = include_str!("../../../programs/constloop.fg");
pub const ONELOOP_ERR: &str = include_str!("../../../programs/oneloop_err.fg");
pub const TWOLOOPS_ERR: &str = include_str!("../../../programs/twoloops_err.fg");

/// The loop programs used for cross-checking the two engines.
pub const THEOREM_CORPUS: [(&str, &str); 6] = [
    ("linsrch", LINSRCH),
    ("branchloop", BRANCHLOOP),
    ("inssort_outer", INSSORT_OUTER),
    ("twoloops", TWOLOOPS),
    ("constloop", CONSTLOOP),
    ("nested", NESTED),
];

/// Every shipped program.
pub const ALL: [(&str, &str); 8] = [
    ("linsrch", LINSRCH),
    ("branchloop", BRANCHLOOP),
    ("inssort_outer", INSSORT_OUTER),
    ("twoloops", TWOLOOPS),
    ("constloop", CONSTLOOP),
    ("nested", NESTED),
    ("oneloop_err", ONELOOP_ERR),
    ("twoloops_err", TWOLOOPS_ERR),
];
