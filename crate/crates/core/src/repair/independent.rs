use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::eval::Evaluator;
use crate::lang::DeltaProgram;
use crate::model::Database;
use crate::provenance::build_formula;
use crate::repair::{PhaseTimes, ProvenanceStats, RepairError, RepairResult, Semantics};
use crate::solver::{BranchAndBound, MinOnesSolver};

/// Minimum stabilizing set via the provenance formula and the built-in
/// min-ones solver.
pub fn run_independent(
    program: &DeltaProgram,
    db: &Database,
    budget: Option<Duration>,
) -> Result<RepairResult, RepairError> {
    run_independent_with(&BranchAndBound, program, db, budget)
}

pub fn run_independent_with(
    solver: &dyn MinOnesSolver,
    program: &DeltaProgram,
    db: &Database,
    budget: Option<Duration>,
) -> Result<RepairResult, RepairError> {
    let start = Instant::now();
    let formula = build_formula(program, db)?;
    let eval = start.elapsed();

    let t = Instant::now();
    let cnf = formula.negated_cnf();
    let process_provenance = t.elapsed();

    let t = Instant::now();
    let solution = solver.solve(&cnf, budget.map(|b| b.saturating_sub(start.elapsed())))?;
    let solve = t.elapsed();

    let deleted: BTreeSet<_> = solution
        .false_designated(&cnf)
        .into_iter()
        .map(|v| formula.variables[v])
        .collect();
    let after = db
        .apply_deletion(deleted.iter().copied())
        .map_err(crate::eval::EvalError::from)?;
    let stable = Evaluator::new(program, db)?.is_stable(&after);
    Ok(RepairResult {
        semantics: Semantics::Independent,
        deleted,
        stable,
        optimal: solution.optimal,
        rounds_or_steps: 0,
        wall_time: start.elapsed(),
        phases: PhaseTimes {
            eval,
            process_provenance,
            solve,
        },
        provenance: Some(ProvenanceStats {
            clauses: formula.len(),
            variables: formula.variables.len(),
            ..Default::default()
        }),
        firing_sequence: None,
    })
}
