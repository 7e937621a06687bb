use std::collections::{BTreeSet, HashMap};

use crate::eval::{EvalError, Evaluator};
use crate::lang::DeltaProgram;
use crate::model::{Database, TupleId};
use crate::oracles::OracleError;

pub const DEFAULT_SIZE_GUARD: usize = 18;
pub const DEFAULT_NODE_GUARD: usize = 200_000;

/// Smallest stabilizing set by exhaustive search: subsets in increasing size,
/// lexicographic within a size.
pub fn brute_force_independent(
    program: &DeltaProgram,
    db: &Database,
    size_guard: usize,
) -> Result<BTreeSet<TupleId>, OracleError> {
    let live: Vec<TupleId> = db.base_ids().collect();
    if live.len() > size_guard {
        return Err(OracleError::GuardExceeded {
            what: "live tuples",
            limit: size_guard,
            found: live.len(),
        });
    }
    let ev = Evaluator::new(program, db)?;
    let n = live.len();
    for k in 0..=n {
        // combinations of k indices in lexicographic order
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let after = db
                .apply_deletion(idx.iter().map(|&i| live[i]))
                .map_err(EvalError::from)?;
            if ev.is_stable(&after) {
                return Ok(idx.iter().map(|&i| live[i]).collect());
            }
            let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
                break;
            };
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    Err(OracleError::NoStabilizingSet)
}

/// Minimum final deleted set over every maximal step firing sequence; ties go
/// to the lexicographically smallest set.
pub fn brute_force_step(
    program: &DeltaProgram,
    db: &Database,
    node_guard: usize,
) -> Result<BTreeSet<TupleId>, OracleError> {
    let ev = Evaluator::new(program, db)?;
    let mut memo: HashMap<Vec<TupleId>, Vec<TupleId>> = HashMap::new();
    let initial: BTreeSet<TupleId> = db.deleted_set().iter().collect();
    let best = explore(&ev, db, &mut memo, node_guard)?;
    Ok(best.into_iter().filter(|t| !initial.contains(t)).collect())
}

fn explore(
    ev: &Evaluator,
    state: &Database,
    memo: &mut HashMap<Vec<TupleId>, Vec<TupleId>>,
    guard: usize,
) -> Result<Vec<TupleId>, OracleError> {
    let key: Vec<TupleId> = state.deleted_set().iter().collect();
    if let Some(best) = memo.get(&key) {
        return Ok(best.clone());
    }
    if memo.len() >= guard {
        return Err(OracleError::GuardExceeded {
            what: "search states",
            limit: guard,
            found: memo.len() + 1,
        });
    }
    let heads: BTreeSet<TupleId> = (0..ev.rule_count())
        .flat_map(|i| ev.assignments(i, state).into_iter().map(|a| a.head))
        .collect();
    let mut best: Option<Vec<TupleId>> = None;
    if heads.is_empty() {
        best = Some(key.clone());
    }
    for h in heads {
        let next = state.apply_deletion([h]).map_err(EvalError::from)?;
        let candidate = explore(ev, &next, memo, guard)?;
        let better = match &best {
            None => true,
            Some(b) => (candidate.len(), &candidate) < (b.len(), b),
        };
        if better {
            best = Some(candidate);
        }
    }
    let best = best.expect("at least one outcome");
    memo.insert(key, best.clone());
    Ok(best)
}
