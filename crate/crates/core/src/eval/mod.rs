//! Assignment enumeration, stability checks, and the end and stage
//! semantics.

mod plan;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::lang::{validate_rule, DeltaProgram, DeltaRule, ProgramErrors, ResolvedRule, Term};
use crate::model::{Catalog, Database, ModelError, TupleId, TupleSet, Value};
use crate::repair::{Firing, PhaseTimes, RepairResult, Semantics};
use plan::{CompiledRule, Enumerator, Indexes};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("program and database use different schemas")]
    SchemaMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Program(#[from] ProgramErrors),
    #[error("step {step}: {reason}")]
    InvalidFiring { step: usize, reason: String },
}

/// A satisfying grounding of a rule body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RuleAssignment {
    pub rule_id: usize,
    /// Tuple each body atom maps to, in body order. For a delta atom this is
    /// the tuple whose delta image is used.
    pub atom_images: Vec<TupleId>,
    pub bindings: BTreeMap<String, Value>,
    /// The tuple whose delta image the rule derives.
    pub head: TupleId,
}

impl RuleAssignment {
    pub fn firing(&self) -> Firing {
        Firing {
            rule_id: self.rule_id,
            bindings: self.bindings.clone(),
        }
    }

    /// Human-readable grounding, e.g. `rule 1: -Author(4, "Marge") :- ...`.
    pub fn describe(&self, program: &DeltaProgram, db: &Database) -> String {
        let rule = program.rule(self.rule_id);
        let ground = |t: &Term| match t {
            Term::Var(v) => self.bindings[v].to_string(),
            Term::Const(c) => c.to_string(),
        };
        let atom = |a: &crate::lang::Atom| {
            let args: Vec<String> = a.terms.iter().map(ground).collect();
            format!(
                "{}{}({})",
                if a.is_delta { "-" } else { "" },
                a.relation,
                args.join(", ")
            )
        };
        let body: Vec<String> = rule
            .body
            .iter()
            .zip(&self.atom_images)
            .map(|(a, id)| format!("{} [{}]", atom(a), db.label(*id)))
            .collect();
        format!("rule {}: {} :- {}", rule.id, atom(&rule.head), body.join(", "))
    }
}

/// Compiled rules plus the indexes they probe, bound to one catalog.
pub struct Evaluator {
    catalog: Arc<Catalog>,
    rules: Vec<CompiledRule>,
    indexes: Indexes,
}

impl Evaluator {
    pub fn new(program: &DeltaProgram, db: &Database) -> Result<Self, EvalError> {
        if program.schema() != db.schema() {
            return Err(EvalError::SchemaMismatch);
        }
        let pairs: Vec<(&DeltaRule, &ResolvedRule)> = program
            .rules()
            .iter()
            .enumerate()
            .map(|(i, r)| (r, program.resolved(i)))
            .collect();
        Ok(Self::from_rules(&pairs, db))
    }

    fn from_rules(rules: &[(&DeltaRule, &ResolvedRule)], db: &Database) -> Self {
        let catalog = Arc::clone(db.catalog());
        let mut indexes = Indexes::default();
        let rules = rules
            .iter()
            .map(|(r, res)| {
                let mut c = CompiledRule::compile(r, res);
                c.attach_indexes(&catalog, &mut indexes);
                c
            })
            .collect();
        Evaluator {
            catalog,
            rules,
            indexes,
        }
    }

    fn check_db(&self, db: &Database) {
        assert!(
            Arc::ptr_eq(&self.catalog, db.catalog()),
            "database does not share the evaluator's catalog"
        );
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    fn enumerator(&self) -> Enumerator<'_> {
        Enumerator {
            catalog: &self.catalog,
            indexes: &self.indexes,
        }
    }

    fn make_assignment(&self, rule: &CompiledRule, slots: &[Value], images: &[TupleId]) -> RuleAssignment {
        RuleAssignment {
            rule_id: rule.rule_id,
            atom_images: images.to_vec(),
            bindings: rule.vars.iter().cloned().zip(slots.iter().cloned()).collect(),
            head: images[rule.head_match],
        }
    }

    /// Every grounding of rule `idx` (position in the evaluator) with base
    /// atoms over `base` and delta atoms over `delta`.
    pub(crate) fn for_each<F>(&self, idx: usize, base: &TupleSet, delta: &TupleSet, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[Value], &[TupleId]) -> ControlFlow<()>,
    {
        let rule = &self.rules[idx];
        let sets: Vec<&TupleSet> = rule
            .atom_is_delta
            .iter()
            .map(|&d| if d { delta } else { base })
            .collect();
        self.enumerator().run(&rule.full, rule.vars.len(), &sets, f)
    }

    /// Groundings that use at least one delta image from `new`, each reported
    /// once. `old` must be `all \ new`.
    fn for_each_new<F>(
        &self,
        idx: usize,
        base: &TupleSet,
        all: &TupleSet,
        new: &TupleSet,
        old: &TupleSet,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[Value], &[TupleId]) -> ControlFlow<()>,
    {
        let rule = &self.rules[idx];
        for (vi, &k) in rule.delta_atoms.iter().enumerate() {
            let sets: Vec<&TupleSet> = (0..rule.atom_is_delta.len())
                .map(|j| {
                    if !rule.atom_is_delta[j] {
                        base
                    } else if j == k {
                        new
                    } else if j < k {
                        old
                    } else {
                        all
                    }
                })
                .collect();
            self.enumerator().run(&rule.variants[vi], rule.vars.len(), &sets, f)?;
        }
        ControlFlow::Continue(())
    }

    /// All assignments of rule `idx` in `db`, sorted by image vectors.
    pub fn assignments(&self, idx: usize, db: &Database) -> Vec<RuleAssignment> {
        self.check_db(db);
        let rule = &self.rules[idx];
        let live = db.live_set();
        let mut out = Vec::new();
        let _ = self.for_each(idx, &live, db.deleted_set(), &mut |slots, images| {
            out.push(self.make_assignment(rule, slots, images));
            ControlFlow::Continue(())
        });
        out.sort_by(|a, b| a.atom_images.cmp(&b.atom_images));
        out
    }

    /// The smallest assignment (by rule, then image vector) satisfied in `db`.
    pub fn first_violation(&self, db: &Database) -> Option<RuleAssignment> {
        (0..self.rules.len()).find_map(|i| self.assignments(i, db).into_iter().next())
    }

    pub fn is_stable(&self, db: &Database) -> bool {
        self.check_db(db);
        let live = db.live_set();
        (0..self.rules.len()).all(|i| {
            self.for_each(i, &live, db.deleted_set(), &mut |_, _| ControlFlow::Break(()))
                .is_continue()
        })
    }

    /// Derives delta tuples to fixpoint with base atoms frozen at `db`'s live
    /// tuples.
    pub(crate) fn end_fixpoint(&self, db: &Database, record: bool) -> EndTrace {
        self.check_db(db);
        let n = db.loaded_len();
        let base = db.live_set();
        let mut all = db.deleted_set().clone();
        let mut layer = vec![0u32; n];
        let mut order = Vec::new();
        let mut recorded = Vec::new();
        let mut new = TupleSet::new(n);

        let mut collect = |round: u32,
                           rule: &CompiledRule,
                           slots: &[Value],
                           images: &[TupleId],
                           all: &TupleSet,
                           next: &mut TupleSet| {
            let head = images[rule.head_match];
            if !all.contains(head) && next.insert(head) {
                layer[head.index()] = round;
                order.push(head);
            }
            if record {
                recorded.push(Recorded {
                    rule_idx: rule.rule_id,
                    slots: slots.to_vec(),
                    images: images.to_vec(),
                    round,
                });
            }
            ControlFlow::Continue(())
        };

        for (i, rule) in self.rules.iter().enumerate() {
            let _ = self.for_each(i, &base, &all, &mut |s, im| collect(1, rule, s, im, &all, &mut new));
        }
        let mut round = 1;
        while !new.is_empty() {
            all.union_with(&new);
            let old = all.difference(&new);
            let mut next = TupleSet::new(n);
            round += 1;
            for (i, rule) in self.rules.iter().enumerate() {
                let _ = self.for_each_new(i, &base, &all, &new, &old, &mut |s, im| {
                    collect(round, rule, s, im, &all, &mut next)
                });
            }
            new = next;
        }
        EndTrace {
            derived: order,
            layer,
            rounds: round as usize - 1,
            assignments: recorded,
        }
    }

    /// Stage semantics: fire everything applicable, delete, repeat.
    /// Returns the final deleted set and the number of stages that deleted
    /// something.
    pub(crate) fn stage_fixpoint(&self, db: &Database) -> (Database, usize) {
        self.check_db(db);
        let n = db.loaded_len();
        let mut state = db.clone();
        let mut heads = TupleSet::new(n);
        let live = state.live_set();
        for (i, rule) in self.rules.iter().enumerate() {
            let _ = self.for_each(i, &live, state.deleted_set(), &mut |_, im| {
                heads.insert(im[rule.head_match]);
                ControlFlow::Continue(())
            });
        }
        let mut stages = 0;
        while !heads.is_empty() {
            stages += 1;
            let mut deleted = state.deleted_set().clone();
            deleted.union_with(&heads);
            state = state.with_deleted(deleted);
            let live = state.live_set();
            let old = state.deleted_set().difference(&heads);
            let mut next = TupleSet::new(n);
            for (i, rule) in self.rules.iter().enumerate() {
                let _ = self.for_each_new(i, &live, state.deleted_set(), &heads, &old, &mut |_, im| {
                    next.insert(im[rule.head_match]);
                    ControlFlow::Continue(())
                });
            }
            heads = next;
        }
        (state, stages)
    }

    /// Checks that `firing` is a satisfying assignment in `db`.
    pub fn ground(&self, program: &DeltaProgram, firing: &Firing, db: &Database) -> Result<RuleAssignment, String> {
        self.check_db(db);
        let Some(rule) = program.rules().get(firing.rule_id) else {
            return Err(format!("unknown rule {}", firing.rule_id));
        };
        let value = |t: &Term| -> Result<Value, String> {
            match t {
                Term::Const(c) => Ok(c.clone()),
                Term::Var(v) => firing
                    .bindings
                    .get(v)
                    .cloned()
                    .ok_or_else(|| format!("variable `{v}` of rule {} is unbound", rule.id)),
            }
        };
        let resolved = program.resolved(rule.id);
        let mut images = Vec::with_capacity(rule.body.len());
        for (atom, rel) in rule.body.iter().zip(&resolved.atom_rels) {
            let values = atom.terms.iter().map(value).collect::<Result<Vec<_>, _>>()?;
            let id = self.catalog.lookup(*rel, &values);
            let ok = match id {
                Some(id) if atom.is_delta => db.is_deleted(id),
                Some(id) => db.is_live(id),
                None => false,
            };
            if !ok {
                let args: Vec<String> = values.iter().map(Value::to_string).collect();
                let prefix = if atom.is_delta { "-" } else { "" };
                return Err(format!("{prefix}{}({}) is not present", atom.relation, args.join(", ")));
            }
            images.push(id.expect("checked"));
        }
        for c in &rule.comparisons {
            let (l, r) = (value(&c.left)?, value(&c.right)?);
            if !c.op.holds(&l, &r) {
                return Err(format!("comparison `{c}` fails"));
            }
        }
        let vars = rule.body_vars();
        let bindings = vars
            .iter()
            .map(|v| (v.to_string(), firing.bindings[*v].clone()))
            .collect();
        Ok(RuleAssignment {
            rule_id: rule.id,
            head: images[resolved.head_match],
            atom_images: images,
            bindings,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Recorded {
    pub rule_idx: usize,
    pub slots: Vec<Value>,
    pub images: Vec<TupleId>,
    pub round: u32,
}

/// Outcome of end-semantics derivation.
#[derive(Debug, Clone)]
pub(crate) struct EndTrace {
    /// Derived tuples in derivation order.
    pub derived: Vec<TupleId>,
    /// Round each tuple was first derived in (0 = never).
    pub layer: Vec<u32>,
    pub rounds: usize,
    /// Every assignment found, each exactly once, when recording.
    pub assignments: Vec<Recorded>,
}

impl Evaluator {
    pub(crate) fn recorded_assignment(&self, r: &Recorded) -> RuleAssignment {
        let rule = &self.rules[r.rule_idx];
        self.make_assignment(rule, &r.slots, &r.images)
    }
}

/// Every satisfying grounding of `rule` in `db`, ordered by image vectors.
pub fn find_assignments(rule: &DeltaRule, db: &Database) -> Result<Vec<RuleAssignment>, EvalError> {
    let resolved = validate_rule(rule, db.schema())?;
    let ev = Evaluator::from_rules(&[(rule, &resolved)], db);
    Ok(ev.assignments(0, db))
}

pub fn is_stable(db: &Database, program: &DeltaProgram) -> Result<bool, EvalError> {
    Ok(Evaluator::new(program, db)?.is_stable(db))
}

/// Whether deleting `s` from `db` leaves a stable instance.
pub fn verify_stabilizing(db: &Database, program: &DeltaProgram, s: &BTreeSet<TupleId>) -> Result<bool, EvalError> {
    let after = db.apply_deletion(s.iter().copied())?;
    is_stable(&after, program)
}

pub fn run_end(program: &DeltaProgram, db: &Database) -> Result<RepairResult, EvalError> {
    let start = Instant::now();
    let ev = Evaluator::new(program, db)?;
    let trace = ev.end_fixpoint(db, false);
    let deleted: BTreeSet<TupleId> = trace.derived.iter().copied().collect();
    let after = db.apply_deletion(deleted.iter().copied())?;
    let stable = ev.is_stable(&after);
    let elapsed = start.elapsed();
    Ok(RepairResult {
        semantics: Semantics::End,
        deleted,
        stable,
        optimal: true,
        rounds_or_steps: trace.rounds,
        wall_time: elapsed,
        phases: PhaseTimes {
            eval: elapsed,
            ..Default::default()
        },
        provenance: None,
        firing_sequence: None,
    })
}

pub fn run_stage(program: &DeltaProgram, db: &Database) -> Result<RepairResult, EvalError> {
    let start = Instant::now();
    let ev = Evaluator::new(program, db)?;
    let (after, stages) = ev.stage_fixpoint(db);
    let deleted = after.deleted_set().difference(db.deleted_set()).to_btree();
    let stable = ev.is_stable(&after);
    let elapsed = start.elapsed();
    Ok(RepairResult {
        semantics: Semantics::Stage,
        deleted,
        stable,
        optimal: true,
        rounds_or_steps: stages,
        wall_time: elapsed,
        phases: PhaseTimes {
            eval: elapsed,
            ..Default::default()
        },
        provenance: None,
        firing_sequence: None,
    })
}

/// Executes a fixed sequence of firings, one deletion per step.
pub fn replay_step_sequence(
    program: &DeltaProgram,
    db: &Database,
    firings: &[Firing],
) -> Result<RepairResult, EvalError> {
    let start = Instant::now();
    let ev = Evaluator::new(program, db)?;
    let mut state = db.clone();
    let mut deleted = BTreeSet::new();
    for (i, f) in firings.iter().enumerate() {
        let a = ev
            .ground(program, f, &state)
            .map_err(|reason| EvalError::InvalidFiring { step: i + 1, reason })?;
        state = state.apply_deletion([a.head])?;
        deleted.insert(a.head);
    }
    let stable = ev.is_stable(&state);
    let elapsed = start.elapsed();
    Ok(RepairResult {
        semantics: Semantics::Step,
        deleted,
        stable,
        optimal: false,
        rounds_or_steps: firings.len(),
        wall_time: elapsed,
        phases: PhaseTimes {
            eval: elapsed,
            ..Default::default()
        },
        provenance: None,
        firing_sequence: Some(firings.to_vec()),
    })
}
