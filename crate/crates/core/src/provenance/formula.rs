use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::eval::{EvalError, Evaluator};
use crate::lang::DeltaProgram;
use crate::model::{Database, TupleId, TupleSet};
use crate::solver::{CnfProblem, Lit};

/// A tuple variable; `negated` means the tuple is deleted (its delta image
/// exists).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub tuple: TupleId,
    pub negated: bool,
}

/// Disjunction of conjunctive clauses, one per potential rule assignment:
/// the instance is unstable exactly when some clause holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceFormula {
    /// Each clause sorted by literal; clauses sorted and distinct.
    pub clauses: Vec<Vec<Literal>>,
    /// The variable universe: live tuples, ascending.
    pub variables: Vec<TupleId>,
}

/// Grounds every rule with base atoms over the live tuples and delta atoms
/// over every loaded tuple, i.e. over all hypothetical deletions.
///
/// Delta atoms on tuples that are already deleted are true and drop out of
/// their clause; clauses containing both `t` and `¬t` can never hold and are
/// omitted.
pub fn build_formula(program: &DeltaProgram, db: &Database) -> Result<ProvenanceFormula, EvalError> {
    let ev = Evaluator::new(program, db)?;
    let live = db.live_set();
    let everything = TupleSet::full(db.loaded_len());
    let mut seen: BTreeSet<Vec<Literal>> = BTreeSet::new();
    for (i, rule) in program.rules().iter().enumerate() {
        let _ = ev.for_each(i, &live, &everything, &mut |_, images| {
            let mut clause: Vec<Literal> = Vec::with_capacity(images.len());
            for (atom, &t) in rule.body.iter().zip(images) {
                if atom.is_delta && db.is_deleted(t) {
                    continue;
                }
                clause.push(Literal {
                    tuple: t,
                    negated: atom.is_delta,
                });
            }
            clause.sort();
            clause.dedup();
            let contradictory = clause.windows(2).any(|w| w[0].tuple == w[1].tuple);
            if !contradictory {
                seen.insert(clause);
            }
            ControlFlow::Continue(())
        });
    }
    Ok(ProvenanceFormula {
        clauses: seen.into_iter().collect(),
        variables: db.base_ids().collect(),
    })
}

impl ProvenanceFormula {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// The negation as a min-ones problem: variable `i` stands for
    /// `variables[i]` (true = kept) and every variable is designated.
    pub fn negated_cnf(&self) -> CnfProblem {
        let index: HashMap<TupleId, usize> = self.variables.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let clauses = self
            .clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|l| Lit {
                        var: index[&l.tuple],
                        positive: l.negated,
                    })
                    .collect()
            })
            .collect();
        CnfProblem::new(self.variables.len(), clauses)
    }

    /// Drops clauses that the negation satisfies for free: a tuple that only
    /// ever appears deleted can be kept, which defeats every clause it is in.
    /// Repeats until nothing changes. Optimal repairs are unaffected.
    pub fn simplified(&self) -> ProvenanceFormula {
        let mut clauses = self.clauses.clone();
        loop {
            let as_base: BTreeSet<TupleId> = clauses
                .iter()
                .flatten()
                .filter(|l| !l.negated)
                .map(|l| l.tuple)
                .collect();
            let before = clauses.len();
            clauses.retain(|c| c.iter().all(|l| !l.negated || as_base.contains(&l.tuple)));
            if clauses.len() == before {
                break;
            }
        }
        ProvenanceFormula {
            clauses,
            variables: self.variables.clone(),
        }
    }

    /// Renders the negated formula as a conjunction of disjunctions, e.g.
    /// `¬g2 ∧ (¬a2 ∨ ¬ag2 ∨ g2)`, with clauses and literals ordered by their
    /// rendered text.
    pub fn render_negation(&self, label: impl Fn(TupleId) -> String) -> String {
        let mut rendered: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                let mut lits: Vec<String> = c
                    .iter()
                    .map(|l| {
                        let name = label(l.tuple);
                        if l.negated {
                            name
                        } else {
                            format!("¬{name}")
                        }
                    })
                    .collect();
                lits.sort();
                if lits.len() == 1 {
                    lits.remove(0)
                } else {
                    format!("({})", lits.join(" ∨ "))
                }
            })
            .collect();
        rendered.sort();
        rendered.join(" ∧ ")
    }
}
