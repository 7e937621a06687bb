//! Compiled join plans and assignment enumeration over hash indexes.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::lang::{CmpOp, DeltaRule, ResolvedRule, Term};
use crate::model::{Catalog, RelId, TupleId, TupleSet, Value};

#[derive(Debug, Clone)]
enum Src {
    Const(Value),
    Slot(usize),
}

impl Src {
    fn get<'a>(&'a self, slots: &'a [Value]) -> &'a Value {
        match self {
            Src::Const(v) => v,
            Src::Slot(s) => &slots[*s],
        }
    }
}

#[derive(Debug, Clone)]
struct CmpPlan {
    left: Src,
    op: CmpOp,
    right: Src,
}

#[derive(Debug, Clone)]
struct Step {
    atom: usize,
    rel: RelId,
    key_pos: Vec<usize>,
    key_src: Vec<Src>,
    index: usize,
    binds: Vec<(usize, usize)>,
    checks: Vec<(usize, usize)>,
    cmps: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Plan {
    steps: Vec<Step>,
    cmps: Vec<CmpPlan>,
}

/// A rule ready for evaluation: one full plan plus one plan per delta atom
/// that starts from that atom (used for frontier rounds).
#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    pub rule_id: usize,
    pub vars: Vec<String>,
    pub head_match: usize,
    pub atom_is_delta: Vec<bool>,
    pub delta_atoms: Vec<usize>,
    pub full: Plan,
    pub variants: Vec<Plan>,
}

type IndexKey = (RelId, Vec<usize>);

/// Hash indexes over every loaded tuple, keyed on value vectors at fixed
/// positions. Liveness is filtered at probe time so one index serves every
/// state derived from the same load.
#[derive(Debug, Default)]
pub(crate) struct Indexes {
    ids: HashMap<IndexKey, usize>,
    maps: Vec<HashMap<Vec<Value>, Vec<TupleId>>>,
}

impl Indexes {
    fn ensure(&mut self, catalog: &Catalog, key: IndexKey) -> usize {
        if let Some(&i) = self.ids.get(&key) {
            return i;
        }
        let mut map: HashMap<Vec<Value>, Vec<TupleId>> = HashMap::new();
        for &id in catalog.relation_tuples(key.0) {
            let t = catalog.tuple(id);
            let k: Vec<Value> = key.1.iter().map(|&p| t.values[p].clone()).collect();
            map.entry(k).or_default().push(id);
        }
        self.maps.push(map);
        self.ids.insert(key, self.maps.len() - 1);
        self.maps.len() - 1
    }
}

impl CompiledRule {
    pub fn compile(rule: &DeltaRule, resolved: &ResolvedRule) -> CompiledRule {
        let vars: Vec<String> = rule.body_vars().into_iter().map(String::from).collect();
        let delta_atoms: Vec<usize> = (0..rule.body.len()).filter(|&i| rule.body[i].is_delta).collect();
        let full = compile_plan(rule, resolved, &vars, None);
        let variants = delta_atoms
            .iter()
            .map(|&k| compile_plan(rule, resolved, &vars, Some(k)))
            .collect();
        CompiledRule {
            rule_id: rule.id,
            vars,
            head_match: resolved.head_match,
            atom_is_delta: rule.body.iter().map(|a| a.is_delta).collect(),
            delta_atoms,
            full,
            variants,
        }
    }

    /// Builds (or reuses) the index behind every keyed step.
    pub fn attach_indexes(&mut self, catalog: &Catalog, indexes: &mut Indexes) {
        for plan in std::iter::once(&mut self.full).chain(self.variants.iter_mut()) {
            for step in &mut plan.steps {
                if !step.key_pos.is_empty() {
                    step.index = indexes.ensure(catalog, (step.rel, step.key_pos.clone()));
                }
            }
        }
    }
}

/// Join order: the forced atom (if any), then all-constant atoms, then the
/// remaining atoms in body order.
fn compile_plan(rule: &DeltaRule, resolved: &ResolvedRule, vars: &[String], first: Option<usize>) -> Plan {
    let slot = |v: &str| vars.iter().position(|x| x == v).expect("body variable");
    let mut order: Vec<usize> = first.into_iter().collect();
    let all_const = |i: usize| rule.body[i].terms.iter().all(|t| matches!(t, Term::Const(_)));
    order.extend((0..rule.body.len()).filter(|&i| Some(i) != first && all_const(i)));
    order.extend((0..rule.body.len()).filter(|&i| Some(i) != first && !all_const(i)));

    let cmps: Vec<CmpPlan> = rule
        .comparisons
        .iter()
        .map(|c| {
            let src = |t: &Term| match t {
                Term::Const(v) => Src::Const(v.clone()),
                Term::Var(v) => Src::Slot(slot(v)),
            };
            CmpPlan {
                left: src(&c.left),
                op: c.op,
                right: src(&c.right),
            }
        })
        .collect();
    let mut cmp_done = vec![false; cmps.len()];

    let mut bound = vec![false; vars.len()];
    let mut steps = Vec::with_capacity(order.len());
    for &ai in &order {
        let atom = &rule.body[ai];
        let mut step = Step {
            atom: ai,
            rel: resolved.atom_rels[ai],
            key_pos: Vec::new(),
            key_src: Vec::new(),
            index: usize::MAX,
            binds: Vec::new(),
            checks: Vec::new(),
            cmps: Vec::new(),
        };
        for (pos, term) in atom.terms.iter().enumerate() {
            match term {
                Term::Const(v) => {
                    step.key_pos.push(pos);
                    step.key_src.push(Src::Const(v.clone()));
                }
                Term::Var(v) => {
                    let s = slot(v);
                    if bound[s] {
                        if step.binds.iter().any(|&(_, bs)| bs == s) {
                            step.checks.push((pos, s));
                        } else {
                            step.key_pos.push(pos);
                            step.key_src.push(Src::Slot(s));
                        }
                    } else {
                        bound[s] = true;
                        step.binds.push((pos, s));
                    }
                }
            }
        }
        for (ci, c) in cmps.iter().enumerate() {
            let ready = |src: &Src| match src {
                Src::Const(_) => true,
                Src::Slot(s) => bound[*s],
            };
            if !cmp_done[ci] && ready(&c.left) && ready(&c.right) {
                cmp_done[ci] = true;
                step.cmps.push(ci);
            }
        }
        steps.push(step);
    }
    Plan { steps, cmps }
}

pub(crate) struct Enumerator<'a> {
    pub catalog: &'a Catalog,
    pub indexes: &'a Indexes,
}

impl Enumerator<'_> {
    /// Calls `f(slots, images)` for every grounding of `plan` where body atom
    /// `i` maps to a tuple in `sets[i]`.
    pub fn run<F>(&self, plan: &Plan, nvars: usize, sets: &[&TupleSet], f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[Value], &[TupleId]) -> ControlFlow<()>,
    {
        let mut slots = vec![Value::Int(0); nvars];
        let mut images = vec![TupleId(0); sets.len()];
        self.go(plan, 0, sets, &mut slots, &mut images, f)
    }

    fn go<F>(
        &self,
        plan: &Plan,
        depth: usize,
        sets: &[&TupleSet],
        slots: &mut Vec<Value>,
        images: &mut Vec<TupleId>,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[Value], &[TupleId]) -> ControlFlow<()>,
    {
        let Some(step) = plan.steps.get(depth) else {
            return f(slots, images);
        };
        let candidates: &[TupleId] = if step.key_pos.is_empty() {
            self.catalog.relation_tuples(step.rel)
        } else {
            let key: Vec<Value> = step.key_src.iter().map(|s| s.get(slots).clone()).collect();
            match self.indexes.maps[step.index].get(&key) {
                Some(ids) => ids,
                None => return ControlFlow::Continue(()),
            }
        };
        let set = sets[step.atom];
        'cand: for &id in candidates {
            if !set.contains(id) {
                continue;
            }
            let values = &self.catalog.tuple(id).values;
            for &(pos, s) in &step.binds {
                slots[s] = values[pos].clone();
            }
            for &(pos, s) in &step.checks {
                if values[pos] != slots[s] {
                    continue 'cand;
                }
            }
            for &ci in &step.cmps {
                let c = &plan.cmps[ci];
                if !c.op.holds(c.left.get(slots), c.right.get(slots)) {
                    continue 'cand;
                }
            }
            images[step.atom] = id;
            self.go(plan, depth + 1, sets, slots, images, f)?;
        }
        ControlFlow::Continue(())
    }
}
