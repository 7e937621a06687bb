//! Concrete syntax for delta programs.
//!
//! ```text
//! # comment
//! -Writes(a, p) :- Pub(p, t), Writes(a, p), -Author(a, n).
//! -Grant(g, n) :- Grant(g, n), n = "ERC".
//! ```
//!
//! Delta atoms carry a leading `-`; variables are identifiers starting with a
//! lower-case letter or `_`; integer constants are bare, text constants are
//! double-quoted. Comparisons are `=`, `!=`, `<`, `>`, `<=`, `>=`.

use crate::lang::ast::{Atom, CmpOp, Comparison, DeltaRule, Term};
use crate::lang::{ProgramError, ProgramErrorKind};
use crate::model::Value;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
    Minus,
    Op(CmpOp),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Implies => "`:-`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Op(op) => format!("`{op}`"),
        }
    }
}

struct Lexed {
    toks: Vec<(Tok, usize)>,
    errors: Vec<ProgramError>,
}

fn lex(text: &str) -> Lexed {
    let mut toks = Vec::new();
    let mut errors = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let syntax = |line: usize, msg: String| ProgramError {
        line,
        rule: None,
        kind: ProgramErrorKind::Syntax(msg),
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                toks.push((Tok::LParen, line));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, line));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, line));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, line));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, line));
                i += 1;
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                toks.push((Tok::Implies, line));
                i += 2;
            }
            '=' => {
                toks.push((Tok::Op(CmpOp::Eq), line));
                i += 1;
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                toks.push((Tok::Op(CmpOp::Ne), line));
                i += 2;
            }
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let op = match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                toks.push((Tok::Op(op), line));
                i += if eq { 2 } else { 1 };
            }
            '"' => {
                let start_line = line;
                let mut s = String::new();
                i += 1;
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        '\\' if i + 1 < chars.len() => {
                            s.push(match chars[i + 1] {
                                'n' => '\n',
                                other => other,
                            });
                            i += 2;
                        }
                        ch => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    errors.push(syntax(start_line, "unterminated string".into()));
                }
                toks.push((Tok::Str(s), start_line));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                match digits.parse() {
                    Ok(v) => toks.push((Tok::Int(v), line)),
                    Err(_) => errors.push(syntax(line, format!("integer `{digits}` out of range"))),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), line));
            }
            other => {
                errors.push(syntax(line, format!("unexpected character `{other}`")));
                i += 1;
            }
        }
    }
    Lexed { toks, errors }
}

pub(crate) fn is_variable_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_lowercase() || c == '_')
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, (usize, String)>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |(_, l)| *l)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        let line = self.line();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err((line, format!("expected {}, found {}", want.describe(), t.describe()))),
            None => Err((line, format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let is_delta = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let line = self.line();
        let relation = match self.next() {
            Some(Tok::Ident(name)) => name,
            Some(t) => return Err((line, format!("expected relation name, found {}", t.describe()))),
            None => return Err((line, "expected relation name, found end of input".into())),
        };
        self.expect(Tok::LParen)?;
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(Atom {
            relation,
            is_delta,
            terms,
        })
    }

    fn term(&mut self) -> PResult<Term> {
        let line = self.line();
        match self.next() {
            Some(Tok::Ident(name)) if is_variable_name(&name) => Ok(Term::Var(name)),
            Some(Tok::Ident(name)) => Err((
                line,
                format!("`{name}` is not a variable (variables start with a lower-case letter); quote text constants"),
            )),
            Some(Tok::Int(i)) => Ok(Term::Const(Value::Int(i))),
            Some(Tok::Minus) => match self.next() {
                Some(Tok::Int(i)) => Ok(Term::Const(Value::Int(-i))),
                _ => Err((line, "expected integer after `-`".into())),
            },
            Some(Tok::Str(s)) => Ok(Term::Const(Value::text(&s))),
            Some(t) => Err((line, format!("expected term, found {}", t.describe()))),
            None => Err((line, "expected term, found end of input".into())),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1)),
            (Some(Tok::Minus), Some(Tok::Ident(_))) | (Some(Tok::Ident(_)), Some(Tok::LParen))
        )
    }

    fn rule(&mut self) -> PResult<DeltaRule> {
        let head = self.atom()?;
        self.expect(Tok::Implies)?;
        let mut body = Vec::new();
        let mut comparisons = Vec::new();
        loop {
            if self.starts_atom() {
                body.push(self.atom()?);
            } else {
                let left = self.term()?;
                let line = self.line();
                let op = match self.next() {
                    Some(Tok::Op(op)) => op,
                    Some(t) => return Err((line, format!("expected comparison operator, found {}", t.describe()))),
                    None => return Err((line, "expected comparison operator".into())),
                };
                let right = self.term()?;
                comparisons.push(Comparison { left, op, right });
            }
            let line = self.line();
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::Dot) => break,
                Some(t) => return Err((line, format!("expected `,` or `.`, found {}", t.describe()))),
                None => return Err((line, "expected `.` at end of rule".into())),
            }
        }
        Ok(DeltaRule::new(head, body, comparisons))
    }

    fn skip_past_dot(&mut self) {
        while let Some(t) = self.next() {
            if t == Tok::Dot {
                break;
            }
        }
    }
}

/// Parses rule text without schema checks. Returns each rule with the line it
/// starts on.
pub fn parse_rules(text: &str) -> Result<Vec<(DeltaRule, usize)>, Vec<ProgramError>> {
    let Lexed { toks, mut errors } = lex(text);
    let mut p = Parser { toks, pos: 0 };
    let mut rules = Vec::new();
    while p.peek().is_some() {
        let start = p.line();
        match p.rule() {
            Ok(mut r) => {
                r.id = rules.len();
                rules.push((r, start));
            }
            Err((line, msg)) => {
                errors.push(ProgramError {
                    line,
                    rule: None,
                    kind: ProgramErrorKind::Syntax(msg),
                });
                p.skip_past_dot();
            }
        }
    }
    if errors.is_empty() {
        Ok(rules)
    } else {
        errors.sort_by_key(|e| e.line);
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cascade_rule() {
        let rules = parse_rules("-Writes(a,p) :- Pub(p,t), Writes(a,p), -Author(a,n).").unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0].0;
        assert!(r.head.is_delta);
        assert_eq!(r.head.relation, "Writes");
        let rels: Vec<_> = r.body.iter().map(|a| (a.relation.as_str(), a.is_delta)).collect();
        assert_eq!(rels, vec![("Pub", false), ("Writes", false), ("Author", true)]);
    }

    #[test]
    fn constants_and_comparisons() {
        let rules = parse_rules("# init\n-Grant(g, n) :- Grant(g, n), n = \"ERC\", g >= -3, g != 7.\n").unwrap();
        let (r, line) = &rules[0];
        assert_eq!(*line, 2);
        assert_eq!(r.comparisons.len(), 3);
        assert_eq!(r.comparisons[0].right, Term::Const(Value::text("ERC")));
        assert_eq!(r.comparisons[1].op, CmpOp::Ge);
        assert_eq!(r.comparisons[1].right, Term::Const(Value::Int(-3)));
    }

    #[test]
    fn empty_text_is_empty_program() {
        assert!(parse_rules("").unwrap().is_empty());
        assert!(parse_rules("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn syntax_errors_carry_lines_and_recover() {
        let errs = parse_rules("-R(x) :- R(x)\n-S(y) :- S(y) .\n-T(Z) :- T(Z).").unwrap_err();
        // first rule lacks a dot and swallows the second; third has an upper-case variable
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[0].line, 2);
        assert_eq!(errs[1].line, 3);
    }

    #[test]
    fn unterminated_string() {
        let errs = parse_rules("-R(x) :- R(x), x = \"abc").unwrap_err();
        assert!(errs.iter().any(|e| e.to_string().contains("unterminated")));
    }

    #[test]
    fn display_round_trips() {
        let text = "-R(x, \"a \\\"q\\\"\") :- R(x, \"a \\\"q\\\"\"), -S(x), x < 10.";
        let r = parse_rules(text).unwrap().remove(0).0;
        let again = parse_rules(&r.to_string()).unwrap().remove(0).0;
        assert_eq!(r, again);
    }
}
