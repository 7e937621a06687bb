//! Serializable views of repair results.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Database, TupleId, Value};
use crate::repair::{Firing, ProvenanceStats, RepairResult, Semantics};

/// A tuple by stable id (`Relation:ordinal`) plus its values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleRef {
    pub id: String,
    pub relation: String,
    pub values: Vec<Value>,
}

impl TupleRef {
    pub fn new(db: &Database, t: TupleId) -> Self {
        let tuple = db.tuple(t);
        TupleRef {
            id: db.label(t),
            relation: db.schema().relation(tuple.relation).name.clone(),
            values: tuple.values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub eval_ms: f64,
    pub process_provenance_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub semantics: Semantics,
    pub size: usize,
    pub deleted: Vec<TupleRef>,
    pub stable: bool,
    pub optimal: bool,
    pub rounds_or_steps: usize,
    /// Omitted unless timings were requested, so reports are reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub firing_sequence: Option<Vec<Firing>>,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

impl ResultReport {
    pub fn new(db: &Database, r: &RepairResult, timings: bool) -> Self {
        ResultReport {
            semantics: r.semantics,
            size: r.deleted.len(),
            deleted: r.deleted.iter().map(|&t| TupleRef::new(db, t)).collect(),
            stable: r.stable,
            optimal: r.optimal,
            rounds_or_steps: r.rounds_or_steps,
            wall_time_ms: timings.then(|| ms(r.wall_time)),
            phases: timings.then(|| PhaseReport {
                eval_ms: ms(r.phases.eval),
                process_provenance_ms: ms(r.phases.process_provenance),
                solve_ms: ms(r.phases.solve),
            }),
            provenance: r.provenance.clone(),
            firing_sequence: r.firing_sequence.clone(),
        }
    }
}

/// Pairwise containment verdicts between the four results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sizes: BTreeMap<Semantics, usize>,
    pub step_eq_stage: bool,
    pub ind_subset_stage: bool,
    pub ind_subset_step: bool,
    pub stage_subset_end: bool,
    pub step_subset_end: bool,
}

impl ComparisonReport {
    pub fn from_results(results: &BTreeMap<Semantics, RepairResult>) -> Self {
        let empty = BTreeSet::new();
        let set = |s: Semantics| results.get(&s).map_or(&empty, |r| &r.deleted);
        let (end, stage, step, ind) = (
            set(Semantics::End),
            set(Semantics::Stage),
            set(Semantics::Step),
            set(Semantics::Independent),
        );
        ComparisonReport {
            sizes: results.iter().map(|(s, r)| (*s, r.deleted.len())).collect(),
            step_eq_stage: step == stage,
            ind_subset_stage: ind.is_subset(stage),
            ind_subset_step: ind.is_subset(step),
            stage_subset_end: stage.is_subset(end),
            step_subset_end: step.is_subset(end),
        }
    }
}

/// Everything a repair run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub results: Vec<ResultReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
}
