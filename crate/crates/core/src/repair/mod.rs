//! Stabilizing sets under each semantics, plus cross-semantics comparison.

mod independent;
mod report;
mod step;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{run_end, run_stage, EvalError};
use crate::lang::DeltaProgram;
use crate::model::{Database, TupleId, Value};
use crate::solver::SolverError;

pub use independent::{run_independent, run_independent_with};
pub use report::{ComparisonReport, PhaseReport, ResultReport, RunReport, TupleRef};
pub use step::{run_step_greedy, validate_step_realizability, DEFAULT_REALIZABILITY_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    End,
    Stage,
    Step,
    Independent,
}

impl Semantics {
    pub const ALL: [Semantics; 4] = [
        Semantics::End,
        Semantics::Stage,
        Semantics::Step,
        Semantics::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Semantics::End => "end",
            Semantics::Stage => "stage",
            Semantics::Step => "step",
            Semantics::Independent => "independent",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "end" => Ok(Semantics::End),
            "stage" => Ok(Semantics::Stage),
            "step" => Ok(Semantics::Step),
            "ind" | "independent" => Ok(Semantics::Independent),
            other => Err(format!("unknown semantics `{other}`")),
        }
    }
}

/// One rule firing: which rule, under which variable bindings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub rule_id: usize,
    pub bindings: BTreeMap<String, Value>,
}

/// Time spent per phase: evaluating rules (and building provenance),
/// processing provenance into solver or traversal input, and solving or
/// traversing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseTimes {
    pub eval: Duration,
    pub process_provenance: Duration,
    pub solve: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProvenanceStats {
    pub clauses: usize,
    pub variables: usize,
    pub nodes: usize,
    pub assignments: usize,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairResult {
    pub semantics: Semantics,
    /// Originally live tuples the repair deletes.
    pub deleted: BTreeSet<TupleId>,
    /// Whether deleting `deleted` leaves a stable instance.
    pub stable: bool,
    /// End and stage results are unique and always optimal; the step
    /// heuristic never claims optimality; independent mirrors the solver's
    /// proof.
    pub optimal: bool,
    /// Derivation rounds (end), stages (stage), firings (step), 0
    /// (independent).
    pub rounds_or_steps: usize,
    pub wall_time: Duration,
    pub phases: PhaseTimes,
    pub provenance: Option<ProvenanceStats>,
    pub firing_sequence: Option<Vec<Firing>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("realizability search exceeded {0} states")]
    SearchLimit(usize),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Default)]
pub struct RepairOptions {
    /// Time limit for the independent-semantics solver.
    pub budget: Option<Duration>,
}

pub fn repair(
    program: &DeltaProgram,
    db: &Database,
    semantics: Semantics,
    options: &RepairOptions,
) -> Result<RepairResult, RepairError> {
    Ok(match semantics {
        Semantics::End => run_end(program, db)?,
        Semantics::Stage => run_stage(program, db)?,
        Semantics::Step => run_step_greedy(program, db)?,
        Semantics::Independent => run_independent(program, db, options.budget)?,
    })
}

#[derive(Debug, Clone)]
pub struct AllResults {
    pub results: BTreeMap<Semantics, RepairResult>,
    pub comparison: ComparisonReport,
}

/// Runs every semantics on the same input and compares the results.
pub fn run_all(program: &DeltaProgram, db: &Database, budget: Option<Duration>) -> Result<AllResults, RepairError> {
    let options = RepairOptions { budget };
    let mut results = BTreeMap::new();
    for s in Semantics::ALL {
        results.insert(s, repair(program, db, s, &options)?);
    }
    let comparison = ComparisonReport::from_results(&results);
    if !comparison.stage_subset_end || !comparison.step_subset_end {
        return Err(RepairError::Invariant(
            "stage and step results must be contained in the end result".into(),
        ));
    }
    Ok(AllResults { results, comparison })
}
