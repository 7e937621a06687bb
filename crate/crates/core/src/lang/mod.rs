//! Delta rules: syntax, validation, and rule construction helpers.

pub mod ast;
mod parser;
mod translate;
mod validate;

use std::fmt;

use thiserror::Error;

pub use ast::{Atom, CmpOp, Comparison, DeltaRule, Term};
pub use parser::parse_rules;
pub use translate::{make_init_rule, translate_dc, DcTarget, DenialConstraint, TranslateError};
pub use validate::{validate_rule, ResolvedRule};

use crate::model::{AttrType, Schema};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("atom `{relation}` has {found} terms, relation has arity {expected}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("rule head `{0}` must be a delta atom")]
    HeadNotDelta(String),
    #[error("constant {value} in `{relation}` attribute `{attribute}` is not of type {expected}")]
    ConstantKind {
        relation: String,
        attribute: String,
        value: String,
        expected: AttrType,
    },
    #[error("variable `{var}` is used as both int and text")]
    VariableKind { var: String },
    #[error("comparison `{0}` mixes int and text")]
    ComparisonKind(String),
    #[error("comparison `{0}` has no variable")]
    ConstantComparison(String),
    #[error("body has no base atom identical to head `{0}`")]
    MissingHeadAtom(String),
    #[error("variable `{0}` does not occur in a body atom")]
    UnsafeVariable(String),
    #[error("delta relations depend on themselves through rules {rules:?} (relations {relations:?})")]
    Cycle { rules: Vec<usize>, relations: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramError {
    /// 1-based source line; 0 when the rule did not come from text.
    pub line: usize,
    pub rule: Option<usize>,
    pub kind: ProgramErrorKind,
}

impl fmt::Display for ProgramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        if let Some(r) = self.rule {
            write!(f, "rule {r}: ")?;
        }
        write!(f, "{}", self.kind)
    }
}

impl std::error::Error for ProgramError {}

/// All problems found in a program, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ProgramErrors(pub Vec<ProgramError>);

impl fmt::Display for ProgramErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl ProgramErrors {
    pub fn iter(&self) -> impl Iterator<Item = &ProgramError> {
        self.0.iter()
    }
}

/// A validated, acyclic set of delta rules over a schema.
#[derive(Debug, Clone)]
pub struct DeltaProgram {
    schema: Schema,
    rules: Vec<DeltaRule>,
    resolved: Vec<ResolvedRule>,
}

impl DeltaProgram {
    pub fn parse(text: &str, schema: &Schema) -> Result<Self, ProgramErrors> {
        let parsed = parse_rules(text).map_err(ProgramErrors)?;
        let (rules, lines): (Vec<_>, Vec<_>) = parsed.into_iter().unzip();
        Self::build(schema, rules, &lines)
    }

    /// Validates rules built in code. Ids are reassigned to list positions.
    pub fn new(schema: &Schema, rules: Vec<DeltaRule>) -> Result<Self, ProgramErrors> {
        let lines = vec![0; rules.len()];
        Self::build(schema, rules, &lines)
    }

    /// This program followed by `extra`.
    pub fn with_rules(&self, extra: Vec<DeltaRule>) -> Result<Self, ProgramErrors> {
        let mut rules = self.rules.clone();
        rules.extend(extra);
        Self::new(&self.schema, rules)
    }

    fn build(schema: &Schema, mut rules: Vec<DeltaRule>, lines: &[usize]) -> Result<Self, ProgramErrors> {
        let mut errors = Vec::new();
        let mut resolved = Vec::with_capacity(rules.len());
        for (i, rule) in rules.iter_mut().enumerate() {
            rule.id = i;
            match validate::check_rule(schema, rule) {
                Ok(r) => resolved.push(r),
                Err(kinds) => errors.extend(kinds.into_iter().map(|kind| ProgramError {
                    line: lines[i],
                    rule: Some(i),
                    kind,
                })),
            }
        }
        if errors.is_empty() {
            if let Some((rules_in_cycle, relations)) = validate::find_cycle(schema, &rules, &resolved) {
                errors.push(ProgramError {
                    line: lines.get(rules_in_cycle[0]).copied().unwrap_or(0),
                    rule: None,
                    kind: ProgramErrorKind::Cycle {
                        rules: rules_in_cycle,
                        relations,
                    },
                });
            }
        }
        if errors.is_empty() {
            Ok(DeltaProgram {
                schema: schema.clone(),
                rules,
                resolved,
            })
        } else {
            Err(ProgramErrors(errors))
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rules(&self) -> &[DeltaRule] {
        &self.rules
    }

    pub fn rule(&self, id: usize) -> &DeltaRule {
        &self.rules[id]
    }

    pub fn resolved(&self, id: usize) -> &ResolvedRule {
        &self.resolved[id]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl PartialEq for DeltaProgram {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.rules == other.rules
    }
}

impl fmt::Display for DeltaProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
