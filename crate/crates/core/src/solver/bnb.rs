//! DPLL-style branch and bound.
//!
//! The root is simplified by unit propagation and pure-literal elimination;
//! what remains is split into variable-disjoint components that are solved
//! separately. Each component search branches on the designated variable
//! with the most occurrences in unsatisfied clauses, trying `true` (no cost)
//! first, and prunes with `cost + |greedy disjoint set of costly clauses|`.
//! A clause is costly when only `false` designated variables can still
//! satisfy it.

use std::time::{Duration, Instant};

use crate::solver::{CnfProblem, Lit, MinOnesSolver, SolverError, SolverSolution};

const UNSET: i8 = -1;

/// The built-in exact solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl MinOnesSolver for BranchAndBound {
    fn solve(&self, problem: &CnfProblem, budget: Option<Duration>) -> Result<SolverSolution, SolverError> {
        problem.check()?;
        if problem.clauses.iter().any(Vec::is_empty) {
            return Err(SolverError::Unsatisfiable);
        }
        let deadline = budget.map(|b| Instant::now() + b);

        let mut root = Search::new(problem.num_vars, &problem.clauses, &problem.designated, deadline);
        if !root.simplify_root() {
            return Err(SolverError::Unsatisfiable);
        }
        let mut assignment: Vec<bool> = root.value.iter().map(|&v| v != 0).collect();
        let mut optimal = true;

        for comp in root.residual_components() {
            let mut sub = Search::new(comp.vars.len(), &comp.clauses, &comp.designated, deadline);
            let outcome = sub.solve_component();
            let local = match outcome {
                Outcome::Solved { assignment, proven } => {
                    optimal &= proven;
                    assignment
                }
                Outcome::Unsatisfiable => return Err(SolverError::Unsatisfiable),
                Outcome::TimedOut => {
                    optimal = false;
                    // every designated variable false satisfies the formulas
                    // produced from provenance; anything else has no fallback
                    let fallback: Vec<bool> = comp.designated.iter().map(|_| false).collect();
                    let satisfied = comp.clauses.iter().all(|c| c.iter().any(|l| l.holds(&fallback)));
                    if !satisfied {
                        return Err(SolverError::NoSolutionWithinBudget);
                    }
                    fallback
                }
            };
            for (i, &v) in comp.vars.iter().enumerate() {
                assignment[v] = local[i];
            }
        }
        debug_assert!(problem.satisfied_by(&assignment));
        Ok(SolverSolution {
            objective: problem.objective(&assignment),
            assignment,
            optimal,
        })
    }
}

enum Outcome {
    Solved { assignment: Vec<bool>, proven: bool },
    Unsatisfiable,
    TimedOut,
}

struct Component {
    /// Original variable indices, ascending; local index = position.
    vars: Vec<usize>,
    clauses: Vec<Vec<Lit>>,
    designated: Vec<bool>,
}

struct Search<'a> {
    clauses: &'a [Vec<Lit>],
    designated: &'a [bool],
    pos_occ: Vec<Vec<usize>>,
    neg_occ: Vec<Vec<usize>>,
    value: Vec<i8>,
    sat: Vec<u32>,
    free: Vec<u32>,
    /// Number of unsatisfied clauses containing the positive / negative
    /// literal of each variable.
    pos_live: Vec<u32>,
    neg_live: Vec<u32>,
    unsat: usize,
    cost: usize,
    trail: Vec<usize>,
    /// Variables whose live count dropped to zero since the last purity pass.
    pure_queue: Vec<usize>,
    stamp: Vec<u32>,
    stamp_gen: u32,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
    best: Option<(usize, Vec<bool>)>,
}

impl<'a> Search<'a> {
    fn new(n: usize, clauses: &'a [Vec<Lit>], designated: &'a [bool], deadline: Option<Instant>) -> Self {
        let mut pos_occ = vec![Vec::new(); n];
        let mut neg_occ = vec![Vec::new(); n];
        let mut pos_live = vec![0; n];
        let mut neg_live = vec![0; n];
        let mut free = Vec::with_capacity(clauses.len());
        for (ci, c) in clauses.iter().enumerate() {
            for l in c {
                if l.positive {
                    pos_occ[l.var].push(ci);
                    pos_live[l.var] += 1;
                } else {
                    neg_occ[l.var].push(ci);
                    neg_live[l.var] += 1;
                }
            }
            free.push(c.len() as u32);
        }
        Search {
            clauses,
            designated,
            pos_occ,
            neg_occ,
            value: vec![UNSET; n],
            sat: vec![0; clauses.len()],
            free,
            pos_live,
            neg_live,
            unsat: clauses.len(),
            cost: 0,
            trail: Vec::new(),
            pure_queue: Vec::new(),
            stamp: vec![0; n],
            stamp_gen: 0,
            deadline,
            nodes: 0,
            timed_out: false,
            best: None,
        }
    }

    fn set_live(&mut self, ci: usize, delta: i32) {
        let clauses = self.clauses;
        for l in &clauses[ci] {
            let slot = if l.positive {
                &mut self.pos_live[l.var]
            } else {
                &mut self.neg_live[l.var]
            };
            *slot = (*slot as i32 + delta) as u32;
            if *slot == 0 {
                self.pure_queue.push(l.var);
            }
        }
    }

    /// Assigns `var`, queueing clauses that became unit. Returns false on a
    /// conflict; counters stay consistent either way so the caller can undo.
    fn assign(&mut self, var: usize, val: bool, units: &mut Vec<usize>) -> bool {
        debug_assert_eq!(self.value[var], UNSET);
        self.value[var] = val as i8;
        self.trail.push(var);
        if self.designated[var] && !val {
            self.cost += 1;
        }
        let (true_occ, false_occ) = if val {
            (
                std::mem::take(&mut self.pos_occ[var]),
                std::mem::take(&mut self.neg_occ[var]),
            )
        } else {
            (
                std::mem::take(&mut self.neg_occ[var]),
                std::mem::take(&mut self.pos_occ[var]),
            )
        };
        for &ci in &true_occ {
            self.free[ci] -= 1;
            self.sat[ci] += 1;
            if self.sat[ci] == 1 {
                self.unsat -= 1;
                self.set_live(ci, -1);
            }
        }
        let mut ok = true;
        for &ci in &false_occ {
            self.free[ci] -= 1;
            if self.sat[ci] == 0 {
                match self.free[ci] {
                    0 => ok = false,
                    1 => units.push(ci),
                    _ => {}
                }
            }
        }
        if val {
            self.pos_occ[var] = true_occ;
            self.neg_occ[var] = false_occ;
        } else {
            self.neg_occ[var] = true_occ;
            self.pos_occ[var] = false_occ;
        }
        ok
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().expect("trail");
            let val = self.value[var] == 1;
            if self.designated[var] && !val {
                self.cost -= 1;
            }
            let (true_occ, false_occ) = if val {
                (
                    std::mem::take(&mut self.pos_occ[var]),
                    std::mem::take(&mut self.neg_occ[var]),
                )
            } else {
                (
                    std::mem::take(&mut self.neg_occ[var]),
                    std::mem::take(&mut self.pos_occ[var]),
                )
            };
            for &ci in &true_occ {
                self.free[ci] += 1;
                if self.sat[ci] == 1 {
                    self.unsat += 1;
                    self.set_live(ci, 1);
                }
                self.sat[ci] -= 1;
            }
            for &ci in &false_occ {
                self.free[ci] += 1;
            }
            if val {
                self.pos_occ[var] = true_occ;
                self.neg_occ[var] = false_occ;
            } else {
                self.neg_occ[var] = true_occ;
                self.pos_occ[var] = false_occ;
            }
            self.value[var] = UNSET;
        }
    }

    fn propagate(&mut self, units: &mut Vec<usize>) -> bool {
        while let Some(ci) = units.pop() {
            if self.sat[ci] > 0 {
                continue;
            }
            if self.free[ci] == 0 {
                units.clear();
                return false;
            }
            let lit = *self.clauses[ci]
                .iter()
                .find(|l| self.value[l.var] == UNSET)
                .expect("unit literal");
            if !self.assign(lit.var, lit.positive, units) {
                units.clear();
                return false;
            }
        }
        true
    }

    /// Fixes variables whose value cannot hurt: those with no negative
    /// occurrence left become true, non-designated ones with no positive
    /// occurrence left become false. Neither can conflict.
    fn eliminate_pure(&mut self, full_scan: bool) {
        let mut scratch = Vec::new();
        if full_scan {
            self.pure_queue = (0..self.value.len()).collect();
        }
        while let Some(v) = self.pure_queue.pop() {
            if self.value[v] != UNSET {
                continue;
            }
            if self.neg_live[v] == 0 {
                self.assign(v, true, &mut scratch);
            } else if self.pos_live[v] == 0 && !self.designated[v] {
                self.assign(v, false, &mut scratch);
            }
            scratch.clear();
        }
    }

    /// Assign, propagate, eliminate pure literals.
    fn decide(&mut self, var: usize, val: bool) -> bool {
        let mut units = Vec::new();
        if !self.assign(var, val, &mut units) || !self.propagate(&mut units) {
            self.pure_queue.clear();
            return false;
        }
        self.eliminate_pure(false);
        true
    }

    fn simplify_root(&mut self) -> bool {
        let mut units: Vec<usize> = (0..self.clauses.len())
            .filter(|&c| self.clauses[c].len() == 1)
            .collect();
        if !self.propagate(&mut units) {
            return false;
        }
        self.eliminate_pure(true);
        loop {
            match self.eliminate_dominated() {
                None => return false,
                Some(0) => return true,
                Some(_) => self.eliminate_pure(true),
            }
        }
    }

    /// Fixes `x` to true when some designated `y < x` occurs negatively in
    /// every open clause where `x` does, and neither occurs positively in an
    /// open clause: any solution falsifying `x` can falsify `y` instead at no
    /// extra cost and with a lexicographically smaller false set. Returns the
    /// number of variables fixed, or `None` on a conflict.
    fn eliminate_dominated(&mut self) -> Option<usize> {
        let clauses = self.clauses;
        let mut fixed = 0;
        let mut units = Vec::new();
        for x in 0..self.value.len() {
            if self.value[x] != UNSET || !self.designated[x] || self.pos_live[x] != 0 || self.neg_live[x] == 0 {
                continue;
            }
            let open: Vec<usize> = self.neg_occ[x].iter().copied().filter(|&c| self.sat[c] == 0).collect();
            let dominated = clauses[open[0]].iter().any(|cand| {
                let y = cand.var;
                y < x
                    && !cand.positive
                    && self.value[y] == UNSET
                    && self.designated[y]
                    && self.pos_live[y] == 0
                    && self.neg_live[y] >= self.neg_live[x]
                    && open
                        .iter()
                        .all(|&c| clauses[c].iter().any(|l| l.var == y && !l.positive))
            });
            if dominated {
                if !self.assign(x, true, &mut units) || !self.propagate(&mut units) {
                    return None;
                }
                fixed += 1;
            }
        }
        Some(fixed)
    }

    fn residual_components(&self) -> Vec<Component> {
        let n = self.value.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let open: Vec<usize> = (0..self.clauses.len()).filter(|&c| self.sat[c] == 0).collect();
        for &ci in &open {
            let mut first = None;
            for l in &self.clauses[ci] {
                if self.value[l.var] != UNSET {
                    continue;
                }
                match first {
                    None => first = Some(l.var),
                    Some(f) => {
                        let (a, b) = (find(&mut parent, f), find(&mut parent, l.var));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut comp_of = vec![usize::MAX; n];
        let mut comps: Vec<Component> = Vec::new();
        for v in 0..n {
            if self.value[v] != UNSET {
                continue;
            }
            let r = find(&mut parent, v);
            if comp_of[r] == usize::MAX {
                comp_of[r] = comps.len();
                comps.push(Component {
                    vars: Vec::new(),
                    clauses: Vec::new(),
                    designated: Vec::new(),
                });
            }
            let c = &mut comps[comp_of[r]];
            comp_of[v] = comp_of[r];
            c.vars.push(v);
            c.designated.push(self.designated[v]);
        }
        let mut local = vec![0usize; n];
        for c in &comps {
            for (i, &v) in c.vars.iter().enumerate() {
                local[v] = i;
            }
        }
        for &ci in &open {
            let lits: Vec<Lit> = self.clauses[ci]
                .iter()
                .filter(|l| self.value[l.var] == UNSET)
                .map(|l| Lit {
                    var: local[l.var],
                    positive: l.positive,
                })
                .collect();
            let owner = self.clauses[ci]
                .iter()
                .find(|l| self.value[l.var] == UNSET)
                .map(|l| comp_of[l.var])
                .expect("open clause has a free literal");
            comps[owner].clauses.push(lits);
        }
        comps
    }

    fn lower_bound(&mut self) -> usize {
        self.stamp_gen += 1;
        let gen = self.stamp_gen;
        let clauses = self.clauses;
        let mut bound = 0;
        'clause: for (ci, clause) in clauses.iter().enumerate() {
            if self.sat[ci] > 0 {
                continue;
            }
            for l in clause {
                if self.value[l.var] == UNSET && (l.positive || !self.designated[l.var] || self.stamp[l.var] == gen) {
                    continue 'clause;
                }
            }
            for l in clause {
                if self.value[l.var] == UNSET {
                    self.stamp[l.var] = gen;
                }
            }
            bound += 1;
        }
        bound
    }

    fn branch_var(&self) -> Option<usize> {
        let score = |v: usize| self.pos_live[v] + self.neg_live[v];
        let pick = |want_designated: bool| {
            (0..self.value.len())
                .filter(|&v| self.value[v] == UNSET && self.designated[v] == want_designated && score(v) > 0)
                .max_by_key(|&v| (score(v), std::cmp::Reverse(v)))
        };
        pick(true).or_else(|| pick(false))
    }

    fn out_of_time(&mut self) -> bool {
        self.nodes += 1;
        if !self.timed_out && self.nodes.is_multiple_of(256) {
            if let Some(d) = self.deadline {
                self.timed_out = Instant::now() >= d;
            }
        }
        self.timed_out
    }

    /// Depth-first search for assignments with cost below `ub`; stops once
    /// one with cost at most `stop_at` is found. Returns true to stop.
    fn dfs(&mut self, ub: &mut usize, stop_at: usize) -> bool {
        if self.out_of_time() {
            return true;
        }
        if self.unsat == 0 {
            if self.cost < *ub {
                *ub = self.cost;
                let assignment = self.value.iter().map(|&v| v != 0).collect();
                self.best = Some((self.cost, assignment));
            }
            return self.cost <= stop_at;
        }
        if self.cost + self.lower_bound() >= *ub {
            return false;
        }
        let Some(var) = self.branch_var() else {
            return false;
        };
        for val in [true, false] {
            let mark = self.trail.len();
            if self.decide(var, val) && self.dfs(ub, stop_at) {
                self.undo_to(mark);
                return true;
            }
            self.undo_to(mark);
            if self.timed_out {
                return true;
            }
        }
        false
    }

    /// Best assignment below `ub` from the current state, if any.
    fn search(&mut self, ub: usize, stop_at: usize) -> Option<(usize, Vec<bool>)> {
        self.best = None;
        let mut bound = ub;
        self.dfs(&mut bound, stop_at);
        self.best.take()
    }

    fn solve_component(&mut self) -> Outcome {
        if !self.simplify_root() {
            return Outcome::Unsatisfiable;
        }
        // keeping every free variable costs nothing extra, so it is optimal
        // whenever it satisfies the formula
        let keep_all: Vec<bool> = self.value.iter().map(|&v| v != 0).collect();
        if self.clauses.iter().all(|c| c.iter().any(|l| l.holds(&keep_all))) {
            return Outcome::Solved {
                assignment: keep_all,
                proven: true,
            };
        }
        let root_lb = self.cost + self.lower_bound();
        let Some((opt, first)) = self.search(usize::MAX, root_lb) else {
            return if self.timed_out {
                Outcome::TimedOut
            } else {
                Outcome::Unsatisfiable
            };
        };
        if self.timed_out {
            return Outcome::Solved {
                assignment: first,
                proven: false,
            };
        }
        // lexicographic refinement: include each designated variable in the
        // false set whenever an optimal assignment still allows it
        let mut current = first;
        for v in 0..self.value.len() {
            if self.value[v] != UNSET || !self.designated[v] {
                continue;
            }
            let mark = self.trail.len();
            if self.decide(v, false) {
                if let Some((_, a)) = self.search(opt + 1, opt) {
                    current = a;
                    continue;
                }
            }
            self.undo_to(mark);
            if self.timed_out {
                break;
            }
            let ok = self.decide(v, true);
            debug_assert!(ok, "an optimal assignment keeps this variable");
        }
        Outcome::Solved {
            assignment: current,
            proven: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_by_enumeration;

    #[test]
    fn chain_resolves_at_root() {
        // x0 must go; each (¬x_{i+1} ∨ x_i) then forces the next
        let mut clauses = vec![vec![Lit::neg(0)]];
        for i in 0..999 {
            clauses.push(vec![Lit::neg(i + 1), Lit::pos(i)]);
        }
        let p = CnfProblem::new(1000, clauses);
        let s = BranchAndBound.solve(&p, None).unwrap();
        assert_eq!(s.objective, 1000);
        assert!(s.optimal);
    }

    #[test]
    fn components_are_independent() {
        // two disjoint triangles of pairwise conflicts: 2 per triangle
        let tri = |o: usize| {
            vec![
                vec![Lit::neg(o), Lit::neg(o + 1)],
                vec![Lit::neg(o + 1), Lit::neg(o + 2)],
                vec![Lit::neg(o), Lit::neg(o + 2)],
            ]
        };
        let mut clauses = tri(0);
        clauses.extend(tri(3));
        let p = CnfProblem::new(6, clauses);
        let s = BranchAndBound.solve(&p, None).unwrap();
        assert_eq!(s, solve_by_enumeration(&p).unwrap());
        assert_eq!(s.false_designated(&p), vec![0, 1, 3, 4]);
    }

    #[test]
    fn zero_budget_falls_back() {
        let mut clauses = Vec::new();
        for i in 0..40 {
            for j in (i + 1)..40 {
                if (i * 7 + j * 3) % 5 == 0 {
                    clauses.push(vec![Lit::neg(i), Lit::neg(j)]);
                }
            }
        }
        let p = CnfProblem::new(40, clauses);
        let s = BranchAndBound.solve(&p, Some(Duration::ZERO)).unwrap();
        assert!(p.satisfied_by(&s.assignment));
    }
}
