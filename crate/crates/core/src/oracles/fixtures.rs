use std::collections::{BTreeMap, BTreeSet};

use crate::lang::DeltaProgram;
use crate::model::{AttrType, Database, DatabaseBuilder, RelationSchema, Schema, TupleId, Value};

/// A small instance with human-readable names for its tuples.
#[derive(Debug, Clone)]
pub struct Example {
    pub db: Database,
    pub program: DeltaProgram,
    pub names: BTreeMap<String, TupleId>,
}

impl Example {
    /// Panics on an unknown name; fixtures are fixed.
    pub fn id(&self, name: &str) -> TupleId {
        *self
            .names
            .get(name)
            .unwrap_or_else(|| panic!("no tuple named `{name}`"))
    }

    pub fn ids(&self, names: &[&str]) -> BTreeSet<TupleId> {
        names.iter().map(|n| self.id(n)).collect()
    }

    pub fn name_of(&self, t: TupleId) -> Option<&str> {
        self.names.iter().find(|(_, &id)| id == t).map(|(n, _)| n.as_str())
    }

    pub fn names_of(&self, set: &BTreeSet<TupleId>) -> Vec<String> {
        set.iter()
            .map(|&t| self.name_of(t).map_or_else(|| self.db.label(t), str::to_string))
            .collect()
    }
}

pub(crate) fn schema_of(rels: &[(&str, &[(&str, AttrType)])]) -> Schema {
    Schema::new(
        rels.iter()
            .map(|(name, attrs)| RelationSchema::new(*name, attrs.iter().map(|(a, t)| (a.to_string(), *t)).collect()))
            .collect(),
    )
    .expect("fixture schema")
}

struct Build {
    builder: DatabaseBuilder,
    names: BTreeMap<String, TupleId>,
}

impl Build {
    fn new(schema: Schema) -> Self {
        Build {
            builder: DatabaseBuilder::new(schema),
            names: BTreeMap::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, rel: &str, values: Vec<Value>) {
        let id = self.builder.insert(rel, values).expect("fixture tuple");
        self.names.insert(name.into(), id);
    }

    fn finish(self, program: &str) -> Example {
        let program = DeltaProgram::parse(program, self.builder.schema()).expect("fixture program");
        Example {
            db: self.builder.build(),
            program,
            names: self.names,
        }
    }
}

fn int(i: i64) -> Value {
    Value::Int(i)
}

pub const RUNNING_EXAMPLE_PROGRAM: &str = "\
-Grant(g, n) :- Grant(g, n), n = \"ERC\".
-Author(a, n) :- Author(a, n), AuthGrant(a, g), -Grant(g, gn).
-Pub(p, t) :- Pub(p, t), Writes(a, p), -Author(a, n).
-Writes(a, p) :- Pub(p, t), Writes(a, p), -Author(a, n).
-Cite(c, p) :- Cite(c, p), -Pub(p, t), Writes(a1, c), Writes(a2, p).
";

/// The academic database with grants, authors, writes, publications and
/// citations, and the five-rule cascade program over it. Tuples are named
/// `g1`, `g2`, `ag1`..`ag3`, `a1`..`a3`, `c`, `w1`, `w2`, `p1`, `p2`.
pub fn running_example() -> Example {
    use AttrType::{Int, Text};
    let schema = schema_of(&[
        ("Grant", &[("gid", Int), ("name", Text)]),
        ("AuthGrant", &[("aid", Int), ("gid", Int)]),
        ("Author", &[("aid", Int), ("name", Text)]),
        ("Cite", &[("citing", Int), ("cited", Int)]),
        ("Writes", &[("aid", Int), ("pid", Int)]),
        ("Pub", &[("pid", Int), ("title", Text)]),
    ]);
    let mut b = Build::new(schema);
    b.add("g1", "Grant", vec![int(1), Value::text("NSF")]);
    b.add("g2", "Grant", vec![int(2), Value::text("ERC")]);
    b.add("ag1", "AuthGrant", vec![int(2), int(1)]);
    b.add("ag2", "AuthGrant", vec![int(4), int(2)]);
    b.add("ag3", "AuthGrant", vec![int(5), int(2)]);
    b.add("a1", "Author", vec![int(2), Value::text("Maggie")]);
    b.add("a2", "Author", vec![int(4), Value::text("Marge")]);
    b.add("a3", "Author", vec![int(5), Value::text("Homer")]);
    b.add("c", "Cite", vec![int(7), int(6)]);
    b.add("w1", "Writes", vec![int(4), int(6)]);
    b.add("w2", "Writes", vec![int(5), int(7)]);
    b.add("p1", "Pub", vec![int(6), Value::text("x")]);
    b.add("p2", "Pub", vec![int(7), Value::text("y")]);
    b.finish(RUNNING_EXAMPLE_PROGRAM)
}

fn unary_schema(rels: &[&str]) -> Schema {
    let attrs: &[(&str, AttrType)] = &[("x", AttrType::Int)];
    let layout: Vec<(&str, &[(&str, AttrType)])> = rels.iter().map(|r| (*r, attrs)).collect();
    schema_of(&layout)
}

/// `R1(1..=n)`, `R2(0)` and one rule deleting every `R1` tuple while some
/// `R2` tuple exists. Deleting `b` (the `R2` tuple) alone is stabilizing;
/// every derivation-based semantics deletes all of `a1..an`.
pub fn independent_gap(n: usize) -> Example {
    let mut b = Build::new(unary_schema(&["R1", "R2"]));
    for i in 1..=n {
        b.add(format!("a{i}"), "R1", vec![int(i as i64)]);
    }
    b.add("b", "R2", vec![int(0)]);
    b.finish("-R1(x) :- R1(x), R2(y).\n")
}

/// `R1(0)`, `R2(0)`, `R3(1..=n)`. Stage deletes only `a1` and `a2`; end
/// also derives every `R3` deletion because its base view is never updated.
pub fn stage_end_gap(n: usize) -> Example {
    let mut b = Build::new(unary_schema(&["R1", "R2", "R3"]));
    b.add("a1", "R1", vec![int(0)]);
    b.add("a2", "R2", vec![int(0)]);
    for i in 1..=n {
        b.add(format!("b{i}"), "R3", vec![int(i as i64)]);
    }
    b.finish(
        "-R1(x) :- R1(x).
-R2(x) :- R2(x), -R1(x).
-R3(y) :- R3(y), R1(x), -R2(x).
",
    )
}

const MUTUAL_RULES: &str = "-R1(x) :- R1(x), R2(y).\n-R2(y) :- R1(x), R2(y).\n";

/// `R1(0)`, `R2(1..=n)` with two rules that each need one tuple of both
/// relations. Deleting `a` first stops everything; stage deletes all tuples.
pub fn step_below_stage(n: usize) -> Example {
    let mut b = Build::new(unary_schema(&["R1", "R2"]));
    b.add("a", "R1", vec![int(0)]);
    for i in 1..=n {
        b.add(format!("b{i}"), "R2", vec![int(i as i64)]);
    }
    b.finish(MUTUAL_RULES)
}

/// `R1(0)`, `R2(0)`, `R3(1..=n)`. Stage deletes `a` and `b` together and
/// stops; any single firing leaves exactly one of them, which then deletes
/// every `R3` tuple.
pub fn stage_below_step(n: usize) -> Example {
    let mut b = Build::new(unary_schema(&["R1", "R2", "R3"]));
    b.add("a", "R1", vec![int(0)]);
    b.add("b", "R2", vec![int(0)]);
    for i in 1..=n {
        b.add(format!("c{i}"), "R3", vec![int(i as i64)]);
    }
    let program = format!(
        "{MUTUAL_RULES}-R3(z) :- R3(z), -R1(x), R2(y).
-R3(z) :- R3(z), R1(x), -R2(y).
"
    );
    b.finish(&program)
}

/// `R1(0)`, `R2(0)` with the two mutual rules: `{a}` and `{b}` are both
/// minimum results.
pub fn two_results() -> Example {
    let mut b = Build::new(unary_schema(&["R1", "R2"]));
    b.add("a", "R1", vec![int(0)]);
    b.add("b", "R2", vec![int(0)]);
    b.finish(MUTUAL_RULES)
}
