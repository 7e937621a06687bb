use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::eval::{EvalError, Evaluator};
use crate::lang::DeltaProgram;
use crate::model::{Database, TupleId, Value};

/// One assignment found while deriving end semantics: a hyperedge from its
/// inputs to the delta image of `head`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssignmentGroup {
    pub rule_id: usize,
    pub bindings: BTreeMap<String, Value>,
    pub head: TupleId,
    /// Distinct tuples used through base atoms (the head among them).
    pub base_inputs: Vec<TupleId>,
    /// Distinct tuples whose delta images are used.
    pub delta_inputs: Vec<TupleId>,
    /// Derivation round the assignment was found in.
    pub layer: u32,
}

/// Layered derivation graph of end semantics.
#[derive(Debug, Clone, Serialize)]
pub struct ProvenanceGraph {
    groups: Vec<AssignmentGroup>,
    layer: BTreeMap<TupleId, u32>,
    benefit: BTreeMap<TupleId, i64>,
    /// Deleted before evaluation started.
    initial: BTreeSet<TupleId>,
    num_layers: usize,
}

pub fn build_graph(program: &DeltaProgram, db: &Database) -> Result<ProvenanceGraph, EvalError> {
    let ev = Evaluator::new(program, db)?;
    Ok(ProvenanceGraph::from_evaluator(&ev, program, db))
}

impl ProvenanceGraph {
    pub(crate) fn from_evaluator(ev: &Evaluator, program: &DeltaProgram, db: &Database) -> Self {
        let trace = ev.end_fixpoint(db, true);
        let mut groups: Vec<AssignmentGroup> = trace
            .assignments
            .iter()
            .map(|r| {
                let a = ev.recorded_assignment(r);
                let rule = program.rule(a.rule_id);
                let mut base = BTreeSet::new();
                let mut delta = BTreeSet::new();
                for (atom, &t) in rule.body.iter().zip(&a.atom_images) {
                    if atom.is_delta {
                        delta.insert(t);
                    } else {
                        base.insert(t);
                    }
                }
                AssignmentGroup {
                    rule_id: a.rule_id,
                    bindings: a.bindings,
                    head: a.head,
                    base_inputs: base.into_iter().collect(),
                    delta_inputs: delta.into_iter().collect(),
                    layer: r.round,
                }
            })
            .collect();
        groups.sort_by(|a, b| {
            (a.layer, a.head, a.rule_id, &a.base_inputs, &a.delta_inputs).cmp(&(
                b.layer,
                b.head,
                b.rule_id,
                &b.base_inputs,
                &b.delta_inputs,
            ))
        });

        let layer: BTreeMap<TupleId, u32> = trace.derived.iter().map(|&t| (t, trace.layer[t.index()])).collect();
        let mut benefit: BTreeMap<TupleId, i64> = BTreeMap::new();
        for g in &groups {
            for &t in &g.base_inputs {
                *benefit.entry(t).or_default() += 1;
            }
            for &t in &g.delta_inputs {
                *benefit.entry(t).or_default() -= 1;
            }
        }
        ProvenanceGraph {
            groups,
            layer,
            benefit,
            initial: db.deleted_set().to_btree(),
            num_layers: trace.rounds,
        }
    }

    pub fn groups(&self) -> &[AssignmentGroup] {
        &self.groups
    }

    /// Derived delta nodes with their layers, by tuple id.
    pub fn delta_layers(&self) -> &BTreeMap<TupleId, u32> {
        &self.layer
    }

    pub fn layer(&self, t: TupleId) -> Option<u32> {
        self.layer.get(&t).copied()
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    /// Assignments using `t` through a base atom minus those using its delta
    /// image. Zero for tuples the graph never mentions.
    pub fn benefit(&self, t: TupleId) -> i64 {
        self.benefit.get(&t).copied().unwrap_or(0)
    }

    pub fn benefits(&self) -> &BTreeMap<TupleId, i64> {
        &self.benefit
    }

    pub fn initially_deleted(&self) -> &BTreeSet<TupleId> {
        &self.initial
    }

    /// Tuples appearing as base inputs.
    pub fn base_nodes(&self) -> BTreeSet<TupleId> {
        self.groups.iter().flat_map(|g| g.base_inputs.iter().copied()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.base_nodes().len() + self.layer.len()
    }

    /// Graphviz rendering: base tuples as ellipses labelled with their
    /// benefit, delta tuples as boxes labelled with their layer, and one
    /// point node per assignment.
    pub fn to_dot(&self, db: &Database) -> String {
        let quote = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph provenance {\n  rankdir=LR;\n");
        for t in self.base_nodes() {
            let _ = writeln!(
                out,
                "  t{} [label=\"{}\\nbenefit {}\"];",
                t.0,
                quote(&db.label(t)),
                self.benefit(t)
            );
        }
        let mut delta_nodes: BTreeSet<TupleId> = self.layer.keys().copied().collect();
        delta_nodes.extend(self.groups.iter().flat_map(|g| g.delta_inputs.iter().copied()));
        for t in delta_nodes {
            let layer = self.layer(t).map_or("initial".to_string(), |l| format!("layer {l}"));
            let _ = writeln!(
                out,
                "  d{} [shape=box, label=\"-{}\\n{}\"];",
                t.0,
                quote(&db.label(t)),
                layer
            );
        }
        for (i, g) in self.groups.iter().enumerate() {
            let _ = writeln!(out, "  a{i} [shape=point, xlabel=\"rule {}\"];", g.rule_id);
            for t in &g.base_inputs {
                let _ = writeln!(out, "  t{} -> a{i};", t.0);
            }
            for t in &g.delta_inputs {
                let _ = writeln!(out, "  d{} -> a{i};", t.0);
            }
            let _ = writeln!(out, "  a{i} -> d{};", g.head.0);
        }
        out.push_str("}\n");
        out
    }
}
