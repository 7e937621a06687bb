//! Relational schema, tuples, and database instances with delta relations.
//!
//! A [`Database`] is an immutable value over a shared [`Catalog`] of every
//! tuple that existed at load time. Each loaded tuple is either live (in its
//! base relation) or deleted (its delta image is in the delta relation), so
//! base and delta are disjoint by construction and every delta tuple is the
//! image of an originally-loaded tuple.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("duplicate attribute `{attribute}` in relation `{relation}`")]
    DuplicateAttribute { relation: String, attribute: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` expects {expected} values, got {found}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{relation}` attribute `{attribute}` expects {expected}, got {found}")]
    Kind {
        relation: String,
        attribute: String,
        expected: AttrType,
        found: AttrType,
    },
    #[error("tuple {0} is not present in the base relations")]
    UnknownTuple(String),
    #[error("instances are over different schemas")]
    SchemaMismatch,
}

/// Attribute domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Int,
    Text,
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Int => f.write_str("int"),
            AttrType::Text => f.write_str("text"),
        }
    }
}

/// A typed attribute value.
///
/// Values of different kinds are never compared by the engine (programs that
/// would do so are rejected), but the derived ordering puts integers first so
/// that values can live in ordered collections.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Text(Arc<str>),
}

impl Value {
    pub fn text(s: &str) -> Self {
        Value::Text(Arc::from(s))
    }

    pub fn kind(&self) -> AttrType {
        match self {
            Value::Int(_) => AttrType::Int,
            Value::Text(_) => AttrType::Text,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            Value::Int(_) => None,
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::text(s)
    }
}

/// Program-syntax rendering: integers bare, text double-quoted.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// Index of a relation within its [`Schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelId(pub u32);

impl RelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    pub attributes: Vec<(String, AttrType)>,
}

impl RelationSchema {
    pub fn new(name: impl Into<String>, attributes: Vec<(String, AttrType)>) -> Self {
        RelationSchema {
            name: name.into(),
            attributes,
        }
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }
}

impl fmt::Display for RelationSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, (name, kind)) in self.attributes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}:{kind}")?;
        }
        f.write_str(")")
    }
}

/// An ordered set of relation schemas with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    relations: Vec<RelationSchema>,
    by_name: HashMap<String, RelId>,
}

impl Schema {
    pub fn new(relations: Vec<RelationSchema>) -> Result<Self, ModelError> {
        let mut by_name = HashMap::new();
        for (i, rel) in relations.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for (attr, _) in &rel.attributes {
                if !seen.insert(attr.as_str()) {
                    return Err(ModelError::DuplicateAttribute {
                        relation: rel.name.clone(),
                        attribute: attr.clone(),
                    });
                }
            }
            if by_name.insert(rel.name.clone(), RelId(i as u32)).is_some() {
                return Err(ModelError::DuplicateRelation(rel.name.clone()));
            }
        }
        Ok(Schema { relations, by_name })
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn relation(&self, id: RelId) -> &RelationSchema {
        &self.relations[id.index()]
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelId, &RelationSchema)> {
        self.relations.iter().enumerate().map(|(i, r)| (RelId(i as u32), r))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// Instance-wide tuple identifier: the global load ordinal.
///
/// Ordering by id is the deterministic tie-break used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TupleId(pub u32);

impl TupleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tuple {
    pub id: TupleId,
    pub relation: RelId,
    /// Zero-based ordinal within the relation, in load order.
    pub ordinal: u32,
    pub values: Vec<Value>,
}

/// Everything that existed at load time. Shared by every instance derived
/// from the same load.
#[derive(Debug)]
pub struct Catalog {
    schema: Schema,
    tuples: Vec<Tuple>,
    by_relation: Vec<Vec<TupleId>>,
    lookup: HashMap<(RelId, Vec<Value>), TupleId>,
}

impl Catalog {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuple(&self, id: TupleId) -> &Tuple {
        &self.tuples[id.index()]
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn relation_tuples(&self, rel: RelId) -> &[TupleId] {
        &self.by_relation[rel.index()]
    }

    pub fn lookup(&self, rel: RelId, values: &[Value]) -> Option<TupleId> {
        // FIXME: allocates a key per probe; fine for CLI-sized lookups.
        self.lookup.get(&(rel, values.to_vec())).copied()
    }

    /// `Relation:ordinal`, e.g. `Grant:1`.
    pub fn label(&self, id: TupleId) -> String {
        let t = self.tuple(id);
        format!("{}:{}", self.schema.relation(t.relation).name, t.ordinal)
    }

    pub fn parse_label(&self, label: &str) -> Option<TupleId> {
        let (rel, ord) = label.rsplit_once(':')?;
        let rel = self.schema.relation_id(rel.trim())?;
        let ord: usize = ord.trim().parse().ok()?;
        self.by_relation[rel.index()].get(ord).copied()
    }
}

/// Accumulates tuples in load order.
pub struct DatabaseBuilder {
    schema: Schema,
    tuples: Vec<Tuple>,
    by_relation: Vec<Vec<TupleId>>,
    lookup: HashMap<(RelId, Vec<Value>), TupleId>,
}

impl DatabaseBuilder {
    pub fn new(schema: Schema) -> Self {
        let n = schema.len();
        DatabaseBuilder {
            schema,
            tuples: Vec::new(),
            by_relation: vec![Vec::new(); n],
            lookup: HashMap::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Adds a tuple, type-checking it against the schema. Re-inserting an
    /// existing value vector returns the existing id.
    pub fn insert(&mut self, relation: &str, values: Vec<Value>) -> Result<TupleId, ModelError> {
        let rel = self
            .schema
            .relation_id(relation)
            .ok_or_else(|| ModelError::UnknownRelation(relation.to_string()))?;
        let rs = self.schema.relation(rel);
        if rs.arity() != values.len() {
            return Err(ModelError::Arity {
                relation: rs.name.clone(),
                expected: rs.arity(),
                found: values.len(),
            });
        }
        for ((attr, kind), v) in rs.attributes.iter().zip(&values) {
            if *kind != v.kind() {
                return Err(ModelError::Kind {
                    relation: rs.name.clone(),
                    attribute: attr.clone(),
                    expected: *kind,
                    found: v.kind(),
                });
            }
        }
        let key = (rel, values);
        if let Some(&id) = self.lookup.get(&key) {
            return Ok(id);
        }
        let id = TupleId(self.tuples.len() as u32);
        let ordinal = self.by_relation[rel.index()].len() as u32;
        self.by_relation[rel.index()].push(id);
        self.tuples.push(Tuple {
            id,
            relation: rel,
            ordinal,
            values: key.1.clone(),
        });
        self.lookup.insert(key, id);
        Ok(id)
    }

    pub fn build(self) -> Database {
        let n = self.tuples.len();
        Database {
            catalog: Arc::new(Catalog {
                schema: self.schema,
                tuples: self.tuples,
                by_relation: self.by_relation,
                lookup: self.lookup,
            }),
            deleted: TupleSet::new(n),
        }
    }
}

/// Fixed-capacity bitset over tuple ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleSet {
    words: Vec<u64>,
    capacity: usize,
}

impl TupleSet {
    pub fn new(capacity: usize) -> Self {
        TupleSet {
            words: vec![0; capacity.div_ceil(64)],
            capacity,
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut s = TupleSet::new(capacity);
        for i in 0..capacity {
            s.insert(TupleId(i as u32));
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn contains(&self, id: TupleId) -> bool {
        let i = id.index();
        i < self.capacity && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    /// Returns true if the id was newly inserted.
    #[inline]
    pub fn insert(&mut self, id: TupleId) -> bool {
        let i = id.index();
        let mask = 1 << (i % 64);
        let had = self.words[i / 64] & mask != 0;
        self.words[i / 64] |= mask;
        !had
    }

    #[inline]
    pub fn remove(&mut self, id: TupleId) -> bool {
        let i = id.index();
        let mask = 1 << (i % 64);
        let had = self.words[i / 64] & mask != 0;
        self.words[i / 64] &= !mask;
        had
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = TupleId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(TupleId((wi * 64 + b) as u32))
            })
        })
    }

    pub fn complement(&self) -> TupleSet {
        let mut out = TupleSet::full(self.capacity);
        for (o, w) in out.words.iter_mut().zip(&self.words) {
            *o &= !w;
        }
        out
    }

    /// Elements of `self` not in `other`. Both sets must share a capacity.
    pub fn difference(&self, other: &TupleSet) -> TupleSet {
        TupleSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
            capacity: self.capacity,
        }
    }

    pub fn union_with(&mut self, other: &TupleSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn to_btree(&self) -> BTreeSet<TupleId> {
        self.iter().collect()
    }
}

/// A database instance: base relations plus their delta relations.
#[derive(Debug, Clone)]
pub struct Database {
    catalog: Arc<Catalog>,
    deleted: TupleSet,
}

impl PartialEq for Database {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.catalog, &other.catalog) && self.deleted == other.deleted
    }
}

impl Database {
    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn schema(&self) -> &Schema {
        self.catalog.schema()
    }

    pub fn tuple(&self, id: TupleId) -> &Tuple {
        self.catalog.tuple(id)
    }

    pub fn label(&self, id: TupleId) -> String {
        self.catalog.label(id)
    }

    /// Number of tuples loaded originally (live and deleted).
    pub fn loaded_len(&self) -> usize {
        self.catalog.len()
    }

    pub fn is_live(&self, id: TupleId) -> bool {
        id.index() < self.catalog.len() && !self.deleted.contains(id)
    }

    pub fn is_deleted(&self, id: TupleId) -> bool {
        self.deleted.contains(id)
    }

    pub fn deleted_set(&self) -> &TupleSet {
        &self.deleted
    }

    pub fn live_set(&self) -> TupleSet {
        self.deleted.complement()
    }

    pub fn base_len(&self) -> usize {
        self.catalog.len() - self.deleted.len()
    }

    pub fn delta_len(&self) -> usize {
        self.deleted.len()
    }

    /// Live tuple ids in id order.
    pub fn base_ids(&self) -> impl Iterator<Item = TupleId> + '_ {
        (0..self.catalog.len() as u32)
            .map(TupleId)
            .filter(|&id| !self.deleted.contains(id))
    }

    /// Ids whose delta image is present, in id order.
    pub fn delta_ids(&self) -> impl Iterator<Item = TupleId> + '_ {
        self.deleted.iter()
    }

    pub fn base(&self, rel: RelId) -> impl Iterator<Item = &Tuple> + '_ {
        self.catalog
            .relation_tuples(rel)
            .iter()
            .filter(|&&id| !self.deleted.contains(id))
            .map(|&id| self.catalog.tuple(id))
    }

    pub fn delta(&self, rel: RelId) -> impl Iterator<Item = &Tuple> + '_ {
        self.catalog
            .relation_tuples(rel)
            .iter()
            .filter(|&&id| self.deleted.contains(id))
            .map(|&id| self.catalog.tuple(id))
    }

    /// Looks up a live or deleted tuple by value vector.
    pub fn lookup(&self, relation: &str, values: &[Value]) -> Option<TupleId> {
        let rel = self.schema().relation_id(relation)?;
        self.catalog.lookup(rel, values)
    }

    pub fn find_label(&self, label: &str) -> Option<TupleId> {
        self.catalog.parse_label(label)
    }

    /// `(D \ S) ∪ Δ(S)`: moves `tuples` from their base relations into the
    /// delta relations. The receiver is left untouched.
    pub fn apply_deletion<I>(&self, tuples: I) -> Result<Database, ModelError>
    where
        I: IntoIterator<Item = TupleId>,
    {
        let mut deleted = self.deleted.clone();
        for id in tuples {
            if !self.is_live(id) {
                let label = if id.index() < self.catalog.len() {
                    self.label(id)
                } else {
                    format!("#{}", id.0)
                };
                return Err(ModelError::UnknownTuple(label));
            }
            deleted.insert(id);
        }
        Ok(Database {
            catalog: Arc::clone(&self.catalog),
            deleted,
        })
    }

    /// Shares the catalog but replaces the deleted set wholesale.
    pub(crate) fn with_deleted(&self, deleted: TupleSet) -> Database {
        Database {
            catalog: Arc::clone(&self.catalog),
            deleted,
        }
    }
}

/// Base tuples live in `before` and no longer live in `after`, as ids of
/// `before`.
pub fn snapshot_diff(before: &Database, after: &Database) -> Result<BTreeSet<TupleId>, ModelError> {
    if Arc::ptr_eq(before.catalog(), after.catalog()) {
        return Ok(before.base_ids().filter(|&id| !after.is_live(id)).collect());
    }
    if before.schema() != after.schema() {
        return Err(ModelError::SchemaMismatch);
    }
    Ok(before
        .base_ids()
        .filter(|&id| {
            let t = before.tuple(id);
            match after.catalog.lookup(t.relation, &t.values) {
                Some(other) => !after.is_live(other),
                None => true,
            }
        })
        .collect())
}
