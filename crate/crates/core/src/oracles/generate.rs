use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lang::{Atom, CmpOp, Comparison, DeltaProgram, DeltaRule, Term};
use crate::model::{AttrType, Database, DatabaseBuilder, Value};
use crate::oracles::fixtures::schema_of;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("unknown template `{0}` (expected cascade-1..5, join-1..5, twin-heads or mixed)")]
    UnknownTemplate(String),
    #[error("scale must be at least 1")]
    ZeroScale,
}

/// Program families over the academic schema
/// `Organization(oid, name)`, `Author(aid, name, oid)`, `Writes(aid, pid)`,
/// `Pub(pid, title)`, `Cite(citing, cited)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// First `k` rules of the chain Organization → Author → Writes → Pub →
    /// Cite, seeded by deleting organization 0.
    Cascade(u8),
    /// One rule deleting citations, joined with the first `k` atoms of
    /// Cite, Pub, Writes, Author, Organization.
    Join(u8),
    /// Two rules deleting author 0 and their writes, each needing both.
    TwinHeads,
    /// Twin heads plus two publication rules, one through each delta.
    Mixed,
}

impl Template {
    pub fn all() -> Vec<Template> {
        let mut out: Vec<Template> = (1..=5).map(Template::Cascade).collect();
        out.extend((1..=5).map(Template::Join));
        out.push(Template::TwinHeads);
        out.push(Template::Mixed);
        out
    }

    pub fn program_text(self) -> String {
        const CASCADE: [&str; 5] = [
            "-Organization(oid, n2) :- Organization(oid, n2), oid = 0.",
            "-Author(aid, n, oid) :- Author(aid, n, oid), -Organization(oid, n2).",
            "-Writes(aid, pid) :- Writes(aid, pid), -Author(aid, n, oid).",
            "-Pub(pid, t) :- Pub(pid, t), -Writes(aid, pid).",
            "-Cite(citing, pid) :- Cite(citing, pid), -Pub(pid, t).",
        ];
        const JOIN: [&str; 5] = [
            "Cite(pid, c2)",
            "Pub(pid, t)",
            "Writes(aid, pid)",
            "Author(aid, n, oid)",
            "Organization(oid, n2)",
        ];
        const TWIN: &str = "\
-Author(aid, n, oid) :- Writes(aid, pid), Author(aid, n, oid), aid = 0.
-Writes(aid, pid) :- Writes(aid, pid), Author(aid, n, oid), aid = 0.
";
        match self {
            Template::Cascade(k) => CASCADE[..k as usize].iter().map(|r| format!("{r}\n")).collect(),
            Template::Join(k) => format!("-Cite(pid, c2) :- {}.\n", JOIN[..k as usize].join(", ")),
            Template::TwinHeads => TWIN.to_string(),
            Template::Mixed => format!(
                "{TWIN}-Pub(pid, t) :- Pub(pid, t), -Writes(aid, pid), Author(aid, n, oid).
-Pub(pid, t) :- Pub(pid, t), Writes(aid, pid), -Author(aid, n, oid).
"
            ),
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Template::Cascade(k) => write!(f, "cascade-{k}"),
            Template::Join(k) => write!(f, "join-{k}"),
            Template::TwinHeads => f.write_str("twin-heads"),
            Template::Mixed => f.write_str("mixed"),
        }
    }
}

impl FromStr for Template {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || GenerateError::UnknownTemplate(s.to_string());
        let depth = |rest: &str| match rest.parse::<u8>() {
            Ok(k @ 1..=5) => Ok(k),
            _ => Err(unknown()),
        };
        match s {
            "twin-heads" => Ok(Template::TwinHeads),
            "mixed" => Ok(Template::Mixed),
            _ => {
                if let Some(rest) = s.strip_prefix("cascade-depth-").or_else(|| s.strip_prefix("cascade-")) {
                    depth(rest).map(Template::Cascade)
                } else if let Some(rest) = s.strip_prefix("join-chain-").or_else(|| s.strip_prefix("join-")) {
                    depth(rest).map(Template::Join)
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

/// Seeded synthetic instance for `template`. At scale `s` there are
/// `max(1, s / 10)` organizations, `s` authors and `s` publications; each
/// publication has 1 to 3 writers and cites up to 3 earlier publications,
/// giving roughly `5.6 * s` tuples. Author 0 belongs to organization 0 and
/// writes publication 0.
pub fn generate_instance(
    template: Template,
    scale: usize,
    seed: u64,
) -> Result<(DeltaProgram, Database), GenerateError> {
    if scale == 0 {
        return Err(GenerateError::ZeroScale);
    }
    use AttrType::{Int, Text};
    let schema = schema_of(&[
        ("Organization", &[("oid", Int), ("name", Text)]),
        ("Author", &[("aid", Int), ("name", Text), ("oid", Int)]),
        ("Writes", &[("aid", Int), ("pid", Int)]),
        ("Pub", &[("pid", Int), ("title", Text)]),
        ("Cite", &[("citing", Int), ("cited", Int)]),
    ]);
    let program = DeltaProgram::parse(&template.program_text(), &schema).expect("template program");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DatabaseBuilder::new(schema);
    let mut put = |rel: &str, values: Vec<Value>| {
        b.insert(rel, values).expect("generated tuple");
    };
    let orgs = (scale / 10).max(1) as i64;
    let n = scale as i64;
    for o in 0..orgs {
        put("Organization", vec![Value::Int(o), Value::text(&format!("org{o}"))]);
    }
    for a in 0..n {
        let oid = if a == 0 { 0 } else { rng.gen_range(0..orgs) };
        put(
            "Author",
            vec![Value::Int(a), Value::text(&format!("author{a}")), Value::Int(oid)],
        );
    }
    let authors: Vec<i64> = (0..n).collect();
    let pubs: Vec<i64> = (0..n).collect();
    for p in 0..n {
        put("Pub", vec![Value::Int(p), Value::text(&format!("title{p}"))]);
        if p == 0 {
            put("Writes", vec![Value::Int(0), Value::Int(0)]);
        }
        let writers = rng.gen_range(1..=3usize).min(authors.len());
        for &a in authors.choose_multiple(&mut rng, writers) {
            put("Writes", vec![Value::Int(a), Value::Int(p)]);
        }
        let cites = rng.gen_range(0..=3usize).min(p as usize);
        for &q in pubs[..p as usize].choose_multiple(&mut rng, cites) {
            put("Cite", vec![Value::Int(p), Value::Int(q)]);
        }
    }
    Ok((program, b.build()))
}

/// Small random instance for property tests: two or three integer relations
/// `R0..` of arity 1 or 2 over the domain {0, 1, 2}, at most 12 tuples and
/// 1 to 4 rules. Delta atoms only refer to relations with a smaller index
/// than the head, so the program is acyclic.
pub fn random_instance(seed: u64) -> (DeltaProgram, Database) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nrels = rng.gen_range(2..=3usize);
    let arities: Vec<usize> = (0..nrels).map(|_| rng.gen_range(1..=2)).collect();
    let names: Vec<String> = (0..nrels).map(|i| format!("R{i}")).collect();
    let attrs: Vec<Vec<(&str, AttrType)>> = arities
        .iter()
        .map(|&a| [("x", AttrType::Int), ("y", AttrType::Int)][..a].to_vec())
        .collect();
    let layout: Vec<(&str, &[(&str, AttrType)])> = names
        .iter()
        .zip(&attrs)
        .map(|(n, a)| (n.as_str(), a.as_slice()))
        .collect();
    let schema = schema_of(&layout);

    let mut b = DatabaseBuilder::new(schema.clone());
    let ntuples = rng.gen_range(1..=12usize);
    for _ in 0..ntuples {
        let r = rng.gen_range(0..nrels);
        let values = (0..arities[r]).map(|_| Value::Int(rng.gen_range(0..3))).collect();
        b.insert(&names[r], values).expect("random tuple");
    }

    const VARS: [&str; 3] = ["x", "y", "z"];
    let term = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.15) {
            Term::Const(Value::Int(rng.gen_range(0..3)))
        } else {
            Term::var(VARS[rng.gen_range(0..VARS.len())])
        }
    };
    let nrules = rng.gen_range(1..=4usize);
    let mut rules = Vec::new();
    for _ in 0..nrules {
        let h = rng.gen_range(0..nrels);
        let head_terms: Vec<Term> = (0..arities[h]).map(|_| term(&mut rng)).collect();
        let mut body = vec![Atom::base(&names[h], head_terms.clone())];
        for _ in 0..rng.gen_range(0..=2usize) {
            let delta = h > 0 && rng.gen_bool(0.5);
            let r = if delta {
                rng.gen_range(0..h)
            } else {
                rng.gen_range(0..nrels)
            };
            let terms = (0..arities[r]).map(|_| term(&mut rng)).collect();
            body.push(if delta {
                Atom::delta(&names[r], terms)
            } else {
                Atom::base(&names[r], terms)
            });
        }
        body.shuffle(&mut rng);
        let bound: Vec<String> = body.iter().flat_map(|a| a.vars()).map(str::to_string).collect();
        let mut comparisons = Vec::new();
        if !bound.is_empty() && rng.gen_bool(0.3) {
            let left = Term::var(&bound[rng.gen_range(0..bound.len())]);
            let right = if rng.gen_bool(0.5) {
                Term::Const(Value::Int(rng.gen_range(0..3)))
            } else {
                Term::var(&bound[rng.gen_range(0..bound.len())])
            };
            let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le][rng.gen_range(0..4)];
            comparisons.push(Comparison::new(left, op, right));
        }
        rules.push(DeltaRule::new(Atom::delta(&names[h], head_terms), body, comparisons));
    }
    let program = DeltaProgram::new(&schema, rules).expect("random program is valid by construction");
    (program, b.build())
}
