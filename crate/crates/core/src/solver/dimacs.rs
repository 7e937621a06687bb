//! DIMACS CNF with a `c designated` comment header.
//!
//! ```text
//! c designated 1 2 3
//! c var 1 Grant:1
//! p cnf 3 2
//! -1 2 0
//! 3 0
//! ```
//!
//! Variables are 1-based in the text. Without a `c designated` line every
//! variable is designated.

use std::fmt::Write as _;

use thiserror::Error;

use crate::solver::{CnfProblem, Lit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct DimacsError {
    pub line: usize,
    pub msg: String,
}

fn lit_text(l: Lit) -> String {
    let v = l.var as i64 + 1;
    if l.positive {
        v.to_string()
    } else {
        (-v).to_string()
    }
}

impl CnfProblem {
    /// DIMACS text; `names` (one per variable) become `c var` comments.
    pub fn to_dimacs(&self, names: Option<&[String]>) -> String {
        let mut out = String::from("c designated");
        for v in (0..self.num_vars).filter(|&v| self.designated[v]) {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
        if let Some(names) = names {
            for (v, name) in names.iter().enumerate() {
                let _ = writeln!(out, "c var {} {}", v + 1, name);
            }
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&lit_text(*l));
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

pub fn parse_dimacs(text: &str) -> Result<CnfProblem, DimacsError> {
    let err = |line: usize, msg: String| DimacsError { line, msg };
    let mut header: Option<(usize, usize)> = None;
    let mut designated_vars: Option<Vec<usize>> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('c') {
            let mut words = rest.split_whitespace();
            if words.next() == Some("designated") {
                let vars = words
                    .map(|w| w.parse::<usize>().map_err(|_| err(line, format!("bad variable `{w}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                designated_vars = Some(vars);
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                ["cnf", v, c] => {
                    let v = v.parse().map_err(|_| err(line, "bad variable count".into()))?;
                    let c = c.parse().map_err(|_| err(line, "bad clause count".into()))?;
                    header = Some((v, c));
                }
                _ => return Err(err(line, "expected `p cnf <vars> <clauses>`".into())),
            }
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(err(line, "clause before `p cnf` header".into()));
        };
        for word in trimmed.split_whitespace() {
            let n: i64 = word.parse().map_err(|_| err(line, format!("bad literal `{word}`")))?;
            if n == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = n.unsigned_abs() as usize;
            if var > num_vars {
                return Err(err(line, format!("variable {var} exceeds declared {num_vars}")));
            }
            current.push(Lit {
                var: var - 1,
                positive: n > 0,
            });
        }
    }
    let Some((num_vars, num_clauses)) = header else {
        return Err(err(text.lines().count().max(1), "missing `p cnf` header".into()));
    };
    if !current.is_empty() {
        return Err(err(text.lines().count(), "last clause is not terminated by 0".into()));
    }
    if clauses.len() != num_clauses {
        return Err(err(
            text.lines().count(),
            format!("header declares {num_clauses} clauses, found {}", clauses.len()),
        ));
    }
    let designated = match designated_vars {
        None => vec![true; num_vars],
        Some(vars) => {
            let mut d = vec![false; num_vars];
            for v in vars {
                if v == 0 || v > num_vars {
                    return Err(err(1, format!("designated variable {v} out of range")));
                }
                d[v - 1] = true;
            }
            d
        }
    };
    Ok(CnfProblem {
        num_vars,
        clauses,
        designated,
    })
}
