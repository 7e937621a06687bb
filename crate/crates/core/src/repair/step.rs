use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::Instant;

use crate::eval::{EvalError, Evaluator};
use crate::lang::DeltaProgram;
use crate::model::{Database, TupleId};
use crate::provenance::ProvenanceGraph;
use crate::repair::{Firing, PhaseTimes, ProvenanceStats, RepairError, RepairResult, Semantics};

pub const DEFAULT_REALIZABILITY_LIMIT: usize = 100_000;

/// Greedy step-semantics repair over the end-semantics provenance graph.
///
/// Layers are visited in order. Within a layer, undecided delta nodes are
/// taken by decreasing benefit (ties: smallest id). A node whose derivations
/// in its layer have all been disabled moves to the layer of its earliest
/// remaining derivation. Selecting `t` disables
/// every assignment that uses `t` through a non-head base atom; a node whose
/// assignments are all disabled is dropped, which in turn disables the
/// assignments that need its delta image.
///
/// When a node is selected, all delta inputs of one of its live assignments
/// have already been selected, so the selection order is itself an enabled
/// firing sequence; it is returned in `firing_sequence`.
pub fn run_step_greedy(program: &DeltaProgram, db: &Database) -> Result<RepairResult, RepairError> {
    let start = Instant::now();
    let ev = Evaluator::new(program, db)?;
    let graph = ProvenanceGraph::from_evaluator(&ev, program, db);
    let eval = start.elapsed();

    let t = Instant::now();
    let groups = graph.groups();
    let mut by_head: HashMap<TupleId, Vec<usize>> = HashMap::new();
    let mut uses_base: HashMap<TupleId, Vec<usize>> = HashMap::new();
    let mut uses_delta: HashMap<TupleId, Vec<usize>> = HashMap::new();
    let mut pending = vec![0u32; groups.len()];
    for (gi, g) in groups.iter().enumerate() {
        by_head.entry(g.head).or_default().push(gi);
        for &b in g.base_inputs.iter().filter(|&&b| b != g.head) {
            uses_base.entry(b).or_default().push(gi);
        }
        for &d in &g.delta_inputs {
            uses_delta.entry(d).or_default().push(gi);
            if !graph.initially_deleted().contains(&d) {
                pending[gi] += 1;
            }
        }
    }
    let mut alive: HashMap<TupleId, usize> = by_head.iter().map(|(&h, gs)| (h, gs.len())).collect();
    let mut by_layer: BTreeMap<u32, Vec<TupleId>> = BTreeMap::new();
    for (&t, &l) in graph.delta_layers() {
        by_layer.entry(l).or_default().push(t);
    }
    let process_provenance = t.elapsed();

    let t = Instant::now();
    let mut dead = vec![false; groups.len()];
    let mut removed: HashSet<TupleId> = HashSet::new();
    let mut selected: BTreeSet<TupleId> = BTreeSet::new();
    let mut firings = Vec::new();

    while let Some((layer, mut nodes)) = by_layer.pop_first() {
        nodes.sort_by_key(|&t| (Reverse(graph.benefit(t)), t));
        for node in nodes {
            if removed.contains(&node) || selected.contains(&node) {
                continue;
            }
            let Some(&gi) = by_head[&node].iter().find(|&&g| !dead[g] && pending[g] == 0) else {
                // Every derivation in this layer was disabled; the remaining
                // ones need deltas from later layers.
                let next = by_head[&node]
                    .iter()
                    .filter(|&&g| !dead[g])
                    .map(|&g| groups[g].layer)
                    .min()
                    .filter(|&l| l > layer)
                    .ok_or_else(|| {
                        RepairError::Invariant(format!("live node {} has no enabled assignment", db.label(node)))
                    })?;
                by_layer.entry(next).or_default().push(node);
                continue;
            };
            selected.insert(node);
            firings.push(Firing {
                rule_id: groups[gi].rule_id,
                bindings: groups[gi].bindings.clone(),
            });
            for &g in uses_delta.get(&node).map_or(&[][..], Vec::as_slice) {
                pending[g] -= 1;
            }
            let mut work: Vec<usize> = uses_base.get(&node).cloned().unwrap_or_default();
            while let Some(g) = work.pop() {
                if dead[g] {
                    continue;
                }
                dead[g] = true;
                let h = groups[g].head;
                let count = alive.get_mut(&h).expect("head");
                *count -= 1;
                if *count == 0 && !selected.contains(&h) && removed.insert(h) {
                    work.extend(uses_delta.get(&h).map_or(&[][..], Vec::as_slice));
                }
            }
        }
    }
    let solve = t.elapsed();

    let after = db.apply_deletion(selected.iter().copied()).map_err(EvalError::from)?;
    let stable = ev.is_stable(&after);
    Ok(RepairResult {
        semantics: Semantics::Step,
        rounds_or_steps: selected.len(),
        deleted: selected,
        stable,
        optimal: false,
        wall_time: start.elapsed(),
        phases: PhaseTimes {
            eval,
            process_provenance,
            solve,
        },
        provenance: Some(ProvenanceStats {
            nodes: graph.node_count(),
            assignments: groups.len(),
            layers: graph.num_layers(),
            ..Default::default()
        }),
        firing_sequence: Some(firings),
    })
}

/// Searches for an enabled firing sequence that deletes exactly `s`, trying
/// heads in end-derivation layer order and backtracking. Returns `None` when
/// no such sequence exists.
pub fn validate_step_realizability(
    program: &DeltaProgram,
    db: &Database,
    s: &BTreeSet<TupleId>,
    node_limit: usize,
) -> Result<Option<Vec<Firing>>, RepairError> {
    let ev = Evaluator::new(program, db)?;
    let layer = ev.end_fixpoint(db, false).layer;
    let mut search = Realize {
        ev: &ev,
        target: s,
        layer: &layer,
        failed: HashSet::new(),
        visited: 0,
        limit: node_limit,
        path: Vec::new(),
    };
    if s.iter().any(|&t| !db.is_live(t)) {
        return Ok(None);
    }
    Ok(search.go(db)?.then_some(search.path))
}

struct Realize<'a> {
    ev: &'a Evaluator,
    target: &'a BTreeSet<TupleId>,
    layer: &'a [u32],
    failed: HashSet<Vec<TupleId>>,
    visited: usize,
    limit: usize,
    path: Vec<Firing>,
}

impl Realize<'_> {
    fn go(&mut self, state: &Database) -> Result<bool, RepairError> {
        let done: Vec<TupleId> = state.deleted_set().iter().collect();
        if self.target.iter().all(|t| state.is_deleted(*t)) {
            return Ok(true);
        }
        if self.failed.contains(&done) {
            return Ok(false);
        }
        self.visited += 1;
        if self.visited > self.limit {
            return Err(RepairError::SearchLimit(self.limit));
        }
        // first enabled assignment per target head
        let mut options: BTreeMap<(u32, TupleId), Firing> = BTreeMap::new();
        for i in 0..self.ev.rule_count() {
            for a in self.ev.assignments(i, state) {
                if self.target.contains(&a.head) {
                    options
                        .entry((self.layer[a.head.index()], a.head))
                        .or_insert_with(|| a.firing());
                }
            }
        }
        for ((_, head), firing) in options {
            let next = state.apply_deletion([head]).map_err(EvalError::from)?;
            self.path.push(firing);
            if self.go(&next)? {
                return Ok(true);
            }
            self.path.pop();
        }
        self.failed.insert(done);
        Ok(false)
    }
}
