use std::collections::BTreeSet;

use thiserror::Error;

use crate::lang::ast::{Atom, Comparison, DeltaRule, Term};
use crate::model::{Schema, Tuple};

/// `:- A1, ..., Am, comparisons`: no instance may satisfy the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenialConstraint {
    pub atoms: Vec<Atom>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcTarget {
    /// One rule deleting the first atom's tuple. Under independent semantics
    /// the solver may still choose any participating tuple.
    Independent,
    /// One rule per atom, so a step may delete any participant.
    Step,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("denial constraint has no atoms")]
    Empty,
    #[error("denial constraint atom `{0}` is a delta atom")]
    DeltaAtom(String),
    #[error("variable `{0}` of a comparison does not occur in an atom")]
    Unsafe(String),
}

/// Rewrites a denial constraint as delta rules for `target`.
pub fn translate_dc(dc: &DenialConstraint, target: DcTarget) -> Result<Vec<DeltaRule>, TranslateError> {
    if dc.atoms.is_empty() {
        return Err(TranslateError::Empty);
    }
    if let Some(a) = dc.atoms.iter().find(|a| a.is_delta) {
        return Err(TranslateError::DeltaAtom(a.to_string()));
    }
    let bound: BTreeSet<&str> = dc.atoms.iter().flat_map(Atom::vars).collect();
    if let Some(v) = dc
        .comparisons
        .iter()
        .flat_map(Comparison::vars)
        .find(|v| !bound.contains(v))
    {
        return Err(TranslateError::Unsafe(v.to_string()));
    }
    let heads: &[Atom] = match target {
        DcTarget::Independent => &dc.atoms[..1],
        DcTarget::Step => &dc.atoms,
    };
    Ok(heads
        .iter()
        .enumerate()
        .map(|(i, head)| {
            let mut r = DeltaRule::new(head.to_delta(), dc.atoms.clone(), dc.comparisons.clone());
            r.id = i;
            r
        })
        .collect())
}

/// `-R(c1..cn) :- R(c1..cn).` for a concrete tuple: seeds a deletion.
pub fn make_init_rule(schema: &Schema, tuple: &Tuple) -> DeltaRule {
    let name = &schema.relation(tuple.relation).name;
    let terms: Vec<Term> = tuple.values.iter().cloned().map(Term::Const).collect();
    DeltaRule::new(Atom::delta(name, terms.clone()), vec![Atom::base(name, terms)], vec![])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::CmpOp;
    use crate::lang::{parse_rules, DeltaProgram};
    use crate::model::{AttrType, DatabaseBuilder, RelationSchema, Value};

    fn author(suffix: &str) -> Atom {
        let v = |n: &str| Term::var(&format!("{n}{suffix}"));
        Atom::base("Author", vec![v("a"), v("n"), v("o"), v("on")])
    }

    fn dc1() -> DenialConstraint {
        DenialConstraint {
            atoms: vec![author("1"), author("2")],
            comparisons: vec![
                Comparison::new(Term::var("a1"), CmpOp::Eq, Term::var("a2")),
                Comparison::new(Term::var("o1"), CmpOp::Ne, Term::var("o2")),
            ],
        }
    }

    fn parsed(text: &str) -> Vec<DeltaRule> {
        parse_rules(text).unwrap().into_iter().map(|(r, _)| r).collect()
    }

    #[test]
    fn independent_translation_is_single_rule() {
        let got = translate_dc(&dc1(), DcTarget::Independent).unwrap();
        let want =
            parsed("-Author(a1, n1, o1, on1) :- Author(a1, n1, o1, on1), Author(a2, n2, o2, on2), a1 = a2, o1 != o2.");
        assert_eq!(got, want);
    }

    #[test]
    fn step_translation_has_rule_per_atom() {
        let got = translate_dc(&dc1(), DcTarget::Step).unwrap();
        let want = parsed(
            "-Author(a1, n1, o1, on1) :- Author(a1, n1, o1, on1), Author(a2, n2, o2, on2), a1 = a2, o1 != o2.\n\
             -Author(a2, n2, o2, on2) :- Author(a1, n1, o1, on1), Author(a2, n2, o2, on2), a1 = a2, o1 != o2.",
        );
        assert_eq!(got, want);
    }

    #[test]
    fn translated_rules_validate() {
        let schema = Schema::new(vec![RelationSchema::new(
            "Author",
            vec![
                ("aid".into(), AttrType::Int),
                ("name".into(), AttrType::Text),
                ("oid".into(), AttrType::Int),
                ("org".into(), AttrType::Text),
            ],
        )])
        .unwrap();
        let rules = translate_dc(&dc1(), DcTarget::Step).unwrap();
        assert_eq!(DeltaProgram::new(&schema, rules).unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_constraints() {
        let mut dc = dc1();
        dc.comparisons
            .push(Comparison::new(Term::var("zz"), CmpOp::Lt, Term::Const(Value::Int(1))));
        assert_eq!(
            translate_dc(&dc, DcTarget::Step),
            Err(TranslateError::Unsafe("zz".into()))
        );
        let empty = DenialConstraint {
            atoms: vec![],
            comparisons: vec![],
        };
        assert_eq!(translate_dc(&empty, DcTarget::Independent), Err(TranslateError::Empty));
        let delta = DenialConstraint {
            atoms: vec![author("1").to_delta()],
            comparisons: vec![],
        };
        assert!(matches!(
            translate_dc(&delta, DcTarget::Step),
            Err(TranslateError::DeltaAtom(_))
        ));
    }

    #[test]
    fn init_rule_for_tuple() {
        let schema = Schema::new(vec![RelationSchema::new(
            "Grant",
            vec![("gid".into(), AttrType::Int), ("name".into(), AttrType::Text)],
        )])
        .unwrap();
        let mut b = DatabaseBuilder::new(schema.clone());
        let id = b.insert("Grant", vec![Value::Int(2), Value::text("ERC")]).unwrap();
        let db = b.build();
        let rule = make_init_rule(&schema, db.tuple(id));
        assert_eq!(rule.to_string(), "-Grant(2, \"ERC\") :- Grant(2, \"ERC\").");
        assert!(DeltaProgram::new(&schema, vec![rule]).is_ok());
    }
}
