use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

impl From<Value> for Term {
    fn from(v: Value) -> Self {
        Term::Const(v)
    }
}

/// `R(t1, ..., tn)` or, with `is_delta`, the delta atom `-R(t1, ..., tn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: String,
    pub is_delta: bool,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn base(relation: &str, terms: Vec<Term>) -> Atom {
        Atom {
            relation: relation.to_string(),
            is_delta: false,
            terms,
        }
    }

    pub fn delta(relation: &str, terms: Vec<Term>) -> Atom {
        Atom {
            relation: relation.to_string(),
            is_delta: true,
            terms,
        }
    }

    /// The same atom over the delta relation.
    pub fn to_delta(&self) -> Atom {
        Atom {
            is_delta: true,
            ..self.clone()
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_delta {
            f.write_str("-")?;
        }
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    /// Integers compare numerically, text lexicographically. Mixed kinds are
    /// rejected at validation time; here they are simply unequal.
    pub fn holds(self, left: &Value, right: &Value) -> bool {
        use std::cmp::Ordering::*;
        let ord = match (left, right) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.as_ref().cmp(b.as_ref()),
            _ => return self == CmpOp::Ne,
        };
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Gt => ord == Greater,
            CmpOp::Le => ord != Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub left: Term,
    pub op: CmpOp,
    pub right: Term,
}

impl Comparison {
    pub fn new(left: Term, op: CmpOp, right: Term) -> Self {
        Comparison { left, op, right }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.left, &self.right].into_iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op, self.right)
    }
}

/// `head :- body_atoms, comparisons.`
///
/// `id` is the rule's ordinal inside its program and is reassigned when a
/// program is assembled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeltaRule {
    pub id: usize,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub comparisons: Vec<Comparison>,
}

impl DeltaRule {
    pub fn new(head: Atom, body: Vec<Atom>, comparisons: Vec<Comparison>) -> Self {
        DeltaRule {
            id: 0,
            head,
            body,
            comparisons,
        }
    }

    /// Variables in first-occurrence order over the body atoms.
    pub fn body_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for v in self.body.iter().flat_map(Atom::vars) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

impl fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        let mut first = true;
        for a in &self.body {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for c in &self.comparisons {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{c}")?;
        }
        f.write_str(".")
    }
}
