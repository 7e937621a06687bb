//! Exact min-ones SAT.
//!
//! A [`CnfProblem`] asks for a satisfying assignment that sets as few
//! designated variables to `false` as possible. Among optimal assignments the
//! solvers return the one whose set of false designated variables is
//! lexicographically smallest (as a sorted index list).

mod bnb;
mod dimacs;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::BranchAndBound;
pub use dimacs::{parse_dimacs, DimacsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Lit {
        Lit { var, positive: true }
    }

    pub fn neg(var: usize) -> Lit {
        Lit { var, positive: false }
    }

    pub fn negate(self) -> Lit {
        Lit {
            var: self.var,
            positive: !self.positive,
        }
    }

    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CnfProblem {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    /// Variables that cost one unit when assigned `false`.
    pub designated: Vec<bool>,
}

impl CnfProblem {
    /// A problem whose variables are all designated.
    pub fn new(num_vars: usize, clauses: Vec<Vec<Lit>>) -> Self {
        CnfProblem {
            num_vars,
            clauses,
            designated: vec![true; num_vars],
        }
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.num_vars && self.clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    pub fn objective(&self, assignment: &[bool]) -> usize {
        (0..self.num_vars)
            .filter(|&v| self.designated[v] && !assignment[v])
            .count()
    }

    pub(crate) fn check(&self) -> Result<(), SolverError> {
        if self.designated.len() != self.num_vars {
            return Err(SolverError::Malformed(format!(
                "{} designation flags for {} variables",
                self.designated.len(),
                self.num_vars
            )));
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if let Some(l) = c.iter().find(|l| l.var >= self.num_vars) {
                return Err(SolverError::Malformed(format!("clause {i} uses variable {}", l.var)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverSolution {
    pub assignment: Vec<bool>,
    pub objective: usize,
    /// False when the budget ran out before optimality was proven.
    pub optimal: bool,
}

impl SolverSolution {
    /// Designated variables assigned `false`, ascending.
    pub fn false_designated(&self, problem: &CnfProblem) -> Vec<usize> {
        (0..problem.num_vars)
            .filter(|&v| problem.designated[v] && !self.assignment[v])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("formula is unsatisfiable")]
    Unsatisfiable,
    #[error("{vars} variables exceed the enumeration limit of {limit}")]
    TooLarge { vars: usize, limit: usize },
    #[error("no satisfying assignment found within the time budget")]
    NoSolutionWithinBudget,
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// Pluggable exact solver interface, so an external optimizer can stand in for
/// the built-in search.
pub trait MinOnesSolver {
    fn solve(&self, problem: &CnfProblem, budget: Option<Duration>) -> Result<SolverSolution, SolverError>;
}

pub fn solve_min_ones(problem: &CnfProblem, budget: Option<Duration>) -> Result<SolverSolution, SolverError> {
    BranchAndBound.solve(problem, budget)
}

pub const ENUMERATION_LIMIT: usize = 25;

/// Exhaustive reference solver for small problems.
pub fn solve_by_enumeration(problem: &CnfProblem) -> Result<SolverSolution, SolverError> {
    problem.check()?;
    let n = problem.num_vars;
    if n > ENUMERATION_LIMIT {
        return Err(SolverError::TooLarge {
            vars: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut best: Option<(usize, Vec<usize>, Vec<bool>)> = None;
    let mut assignment = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        for (v, a) in assignment.iter_mut().enumerate() {
            *a = mask & (1 << v) != 0;
        }
        if !problem.satisfied_by(&assignment) {
            continue;
        }
        let deleted: Vec<usize> = (0..n).filter(|&v| problem.designated[v] && !assignment[v]).collect();
        let better = match &best {
            None => true,
            Some((c, d, _)) => (deleted.len(), &deleted) < (*c, d),
        };
        if better {
            best = Some((deleted.len(), deleted, assignment.clone()));
        }
    }
    let (objective, _, assignment) = best.ok_or(SolverError::Unsatisfiable)?;
    Ok(SolverSolution {
        assignment,
        objective,
        optimal: true,
    })
}
