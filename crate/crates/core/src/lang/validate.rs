use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::lang::ast::{Atom, DeltaRule, Term};
use crate::lang::{ProgramError, ProgramErrorKind, ProgramErrors};
use crate::model::{AttrType, RelId, Schema};

/// Schema-level facts about a rule that passed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRule {
    pub head_rel: RelId,
    /// Relation of each body atom, in body order.
    pub atom_rels: Vec<RelId>,
    /// Body position of the first base atom identical to the head.
    pub head_match: usize,
    pub var_kinds: BTreeMap<String, AttrType>,
}

/// Checks a single rule against `schema`. Cycle detection needs the whole
/// program and happens in [`crate::lang::DeltaProgram`].
pub fn validate_rule(rule: &DeltaRule, schema: &Schema) -> Result<ResolvedRule, ProgramErrors> {
    check_rule(schema, rule).map_err(|kinds| {
        ProgramErrors(
            kinds
                .into_iter()
                .map(|kind| ProgramError {
                    line: 0,
                    rule: Some(rule.id),
                    kind,
                })
                .collect(),
        )
    })
}

fn resolve_atom(
    schema: &Schema,
    atom: &Atom,
    var_kinds: &mut BTreeMap<String, AttrType>,
    errors: &mut Vec<ProgramErrorKind>,
) -> Option<RelId> {
    let Some(rel) = schema.relation_id(&atom.relation) else {
        errors.push(ProgramErrorKind::UnknownRelation(atom.relation.clone()));
        return None;
    };
    let rs = schema.relation(rel);
    if rs.arity() != atom.terms.len() {
        errors.push(ProgramErrorKind::Arity {
            relation: atom.relation.clone(),
            expected: rs.arity(),
            found: atom.terms.len(),
        });
        return None;
    }
    for (term, (attr, kind)) in atom.terms.iter().zip(&rs.attributes) {
        match term {
            Term::Const(c) if c.kind() != *kind => errors.push(ProgramErrorKind::ConstantKind {
                relation: atom.relation.clone(),
                attribute: attr.clone(),
                value: c.to_string(),
                expected: *kind,
            }),
            Term::Const(_) => {}
            Term::Var(v) => match var_kinds.get(v) {
                Some(k) if k != kind => {
                    let e = ProgramErrorKind::VariableKind { var: v.clone() };
                    if !errors.contains(&e) {
                        errors.push(e);
                    }
                }
                Some(_) => {}
                None => {
                    var_kinds.insert(v.clone(), *kind);
                }
            },
        }
    }
    Some(rel)
}

pub(crate) fn check_rule(schema: &Schema, rule: &DeltaRule) -> Result<ResolvedRule, Vec<ProgramErrorKind>> {
    let mut errors = Vec::new();
    let mut var_kinds = BTreeMap::new();

    if !rule.head.is_delta {
        errors.push(ProgramErrorKind::HeadNotDelta(rule.head.to_string()));
    }
    let atom_rels: Vec<Option<RelId>> = rule
        .body
        .iter()
        .map(|a| resolve_atom(schema, a, &mut var_kinds, &mut errors))
        .collect();
    // head variables are bound by the body; resolving the head only checks
    // relation, arity and constants
    let mut head_kinds = var_kinds.clone();
    let head_rel = resolve_atom(schema, &rule.head, &mut head_kinds, &mut errors);

    let body_vars: BTreeSet<&str> = rule.body.iter().flat_map(Atom::vars).collect();
    for v in rule.head.vars() {
        if !body_vars.contains(v) {
            let e = ProgramErrorKind::UnsafeVariable(v.to_string());
            if !errors.contains(&e) {
                errors.push(e);
            }
        }
    }

    let head_match = rule
        .body
        .iter()
        .position(|a| !a.is_delta && a.relation == rule.head.relation && a.terms == rule.head.terms);
    if head_match.is_none() && rule.head.is_delta {
        errors.push(ProgramErrorKind::MissingHeadAtom(rule.head.to_string()));
    }

    for cmp in &rule.comparisons {
        if cmp.left.as_var().is_none() && cmp.right.as_var().is_none() {
            errors.push(ProgramErrorKind::ConstantComparison(cmp.to_string()));
            continue;
        }
        let mut unsafe_var = false;
        for v in cmp.vars() {
            if !body_vars.contains(v) {
                unsafe_var = true;
                let e = ProgramErrorKind::UnsafeVariable(v.to_string());
                if !errors.contains(&e) {
                    errors.push(e);
                }
            }
        }
        if unsafe_var {
            continue;
        }
        let kind_of = |t: &Term| match t {
            Term::Const(c) => Some(c.kind()),
            Term::Var(v) => var_kinds.get(v).copied(),
        };
        if let (Some(l), Some(r)) = (kind_of(&cmp.left), kind_of(&cmp.right)) {
            if l != r {
                errors.push(ProgramErrorKind::ComparisonKind(cmp.to_string()));
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ResolvedRule {
        head_rel: head_rel.expect("resolved"),
        atom_rels: atom_rels.into_iter().map(|r| r.expect("resolved")).collect(),
        head_match: head_match.expect("checked"),
        var_kinds,
    })
}

/// Looks for a cycle in the graph with an edge `R -> S` whenever a rule with
/// head over delta `S` has a delta atom over `R` in its body. Returns the
/// offending rules and relations, sorted.
pub(crate) fn find_cycle(
    schema: &Schema,
    rules: &[DeltaRule],
    resolved: &[ResolvedRule],
) -> Option<(Vec<usize>, Vec<String>)> {
    let mut graph: DiGraph<RelId, usize> = DiGraph::new();
    let nodes: Vec<NodeIndex> = schema.relations().map(|(id, _)| graph.add_node(id)).collect();
    for (rule, res) in rules.iter().zip(resolved) {
        for (atom, rel) in rule.body.iter().zip(&res.atom_rels) {
            if atom.is_delta {
                graph.add_edge(nodes[rel.index()], nodes[res.head_rel.index()], rule.id);
            }
        }
    }
    let mut found: Option<(Vec<usize>, Vec<String>)> = None;
    for scc in tarjan_scc(&graph) {
        let members: BTreeSet<NodeIndex> = scc.iter().copied().collect();
        let cyclic = members.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        if !cyclic {
            continue;
        }
        let mut cycle_rules = BTreeSet::new();
        for e in graph.edge_indices() {
            let (a, b) = graph.edge_endpoints(e).expect("edge");
            if members.contains(&a) && members.contains(&b) {
                cycle_rules.insert(graph[e]);
            }
        }
        let mut rels: Vec<RelId> = members.iter().map(|n| graph[*n]).collect();
        rels.sort();
        let candidate = (
            cycle_rules.into_iter().collect::<Vec<_>>(),
            rels.into_iter().map(|r| schema.relation(r).name.clone()).collect(),
        );
        // report the cycle through the earliest rule for stable messages
        if found.as_ref().is_none_or(|f| candidate.0 < f.0) {
            found = Some(candidate);
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::DeltaProgram;
    use crate::model::RelationSchema;

    fn schema() -> Schema {
        Schema::new(vec![
            RelationSchema::new("R", vec![("a".into(), AttrType::Int), ("b".into(), AttrType::Text)]),
            RelationSchema::new("S", vec![("a".into(), AttrType::Int)]),
            RelationSchema::new("T", vec![("a".into(), AttrType::Int)]),
        ])
        .unwrap()
    }

    fn first_kind(text: &str) -> ProgramErrorKind {
        DeltaProgram::parse(text, &schema()).unwrap_err().0.remove(0).kind
    }

    #[test]
    fn accepts_valid_program() {
        let p = DeltaProgram::parse(
            "-S(x) :- S(x), x > 3.\n-R(x, y) :- R(x, y), -S(x), y != \"k\".\n-T(z) :- T(z), -R(z, w), -S(z).",
            &schema(),
        )
        .unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.resolved(1).head_match, 0);
        assert_eq!(p.resolved(1).var_kinds["y"], AttrType::Text);
    }

    #[test]
    fn head_match_position() {
        let p = DeltaProgram::parse("-S(x) :- T(x), R(x, y), S(x).", &schema()).unwrap();
        assert_eq!(p.resolved(0).head_match, 2);
    }

    #[test]
    fn rejects_unknown_relation_and_arity() {
        assert_eq!(
            first_kind("-Q(x) :- Q(x)."),
            ProgramErrorKind::UnknownRelation("Q".into())
        );
        assert!(matches!(
            first_kind("-S(x) :- S(x, y)."),
            ProgramErrorKind::Arity { .. }
        ));
    }

    #[test]
    fn rejects_non_delta_head() {
        assert!(matches!(first_kind("S(x) :- S(x)."), ProgramErrorKind::HeadNotDelta(_)));
    }

    #[test]
    fn rejects_missing_head_atom() {
        assert!(matches!(
            first_kind("-S(x) :- T(x)."),
            ProgramErrorKind::MissingHeadAtom(_)
        ));
        // head atom must be the base atom, not the delta one
        assert!(matches!(
            first_kind("-S(x) :- T(x), -S(x)."),
            ProgramErrorKind::MissingHeadAtom(_)
        ));
    }

    #[test]
    fn rejects_unsafe_comparison() {
        assert_eq!(
            first_kind("-S(x) :- S(x), y < 3."),
            ProgramErrorKind::UnsafeVariable("y".into())
        );
    }

    #[test]
    fn rejects_kind_errors() {
        assert!(matches!(
            first_kind("-S(x) :- S(x), x = \"a\"."),
            ProgramErrorKind::ComparisonKind(_)
        ));
        assert!(matches!(
            first_kind("-S(x) :- S(x), R(y, x)."),
            ProgramErrorKind::VariableKind { .. }
        ));
        assert!(matches!(
            first_kind("-S(x) :- S(x), R(x, 3)."),
            ProgramErrorKind::ConstantKind { .. }
        ));
        assert!(matches!(
            first_kind("-S(x) :- S(x), 1 = 1."),
            ProgramErrorKind::ConstantComparison(_)
        ));
    }

    #[test]
    fn rejects_cycles_naming_rules() {
        let errs = DeltaProgram::parse(
            "-S(x) :- S(x).\n-T(x) :- T(x), -S(x).\n-S(x) :- S(x), -T(x).",
            &schema(),
        )
        .unwrap_err();
        assert_eq!(errs.0.len(), 1);
        match &errs.0[0].kind {
            ProgramErrorKind::Cycle { rules, relations } => {
                assert_eq!(rules, &vec![1, 2]);
                assert_eq!(relations, &vec!["S".to_string(), "T".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let self_loop = first_kind("-S(x) :- S(x), -S(y), T(y).");
        assert!(matches!(self_loop, ProgramErrorKind::Cycle { .. }));
    }

    #[test]
    fn errors_report_lines() {
        let errs = DeltaProgram::parse("-S(x) :- S(x).\n\n-Q(x) :- Q(x).", &schema()).unwrap_err();
        assert_eq!(errs.0[0].line, 3);
        assert_eq!(errs.0[0].rule, Some(1));
        assert!(errs.to_string().starts_with("line 3: rule 1:"));
    }
}
