//! Repairing relational databases with delta rules.
//!
//! A delta program names, for each base relation `R`, conditions under which a
//! tuple of `R` must be deleted (moved into the delta relation `-R`). A set of
//! deletions is stabilizing when, after applying it, no rule can fire. This
//! crate evaluates delta programs and computes stabilizing sets under four
//! semantics:
//!
//! - **end**: derive every deletion against the original instance, then delete
//!   them all at once;
//! - **stage**: repeatedly fire all applicable rules and delete their heads;
//! - **step**: fire one rule at a time, aiming for the fewest deletions
//!   (greedy heuristic over the provenance graph);
//! - **independent**: the minimum stabilizing set, found by a min-ones SAT
//!   search over a boolean provenance formula.
//!
//! ```
//! use delta_repair::oracles::running_example;
//! use delta_repair::repair::{repair, Semantics};
//!
//! let ex = running_example();
//! let res = repair(&ex.program, &ex.db, Semantics::Independent, &Default::default()).unwrap();
//! assert_eq!(res.deleted.len(), 3);
//! assert!(res.stable);
//! ```

pub mod eval;
pub mod lang;
pub mod model;
pub mod oracles;
pub mod provenance;
pub mod repair;
pub mod solver;

pub use lang::{DeltaProgram, DeltaRule};
pub use model::{Database, DatabaseBuilder, Schema, TupleId, Value};
