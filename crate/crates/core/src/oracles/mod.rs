//! Reference implementations and instance builders used to check the engine:
//! exhaustive searches for the independent and step results, hand-built
//! fixtures, a vertex-cover encoding, and seeded instance generators.

mod brute;
mod fixtures;
mod generate;
mod vertex_cover;

use thiserror::Error;

use crate::eval::EvalError;

pub use brute::{brute_force_independent, brute_force_step, DEFAULT_NODE_GUARD, DEFAULT_SIZE_GUARD};
pub use fixtures::{
    independent_gap, running_example, stage_below_step, stage_end_gap, step_below_stage, two_results, Example,
    RUNNING_EXAMPLE_PROGRAM,
};
pub use generate::{generate_instance, random_instance, GenerateError, Template};
pub use vertex_cover::{encode_vertex_cover, min_vertex_cover, random_connected_graph, Graph, VcVariant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what}: {found} exceeds the guard of {limit}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        found: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no stabilizing set found")]
    NoStabilizingSet,
}
