//! Provenance of rule firings: a boolean formula over tuple variables for the
//! independent semantics and a layered derivation graph for the step
//! heuristic.

mod formula;
mod graph;

pub use formula::{build_formula, Literal, ProvenanceFormula};
pub use graph::{build_graph, AssignmentGroup, ProvenanceGraph};
