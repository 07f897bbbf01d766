//! Records, databases and the attribute combinations that signatures are
//! built from.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::transform::Transform;

/// Lowercases, trims and collapses internal whitespace. An empty result is a
/// missing value.
pub fn normalize_value(raw: &str) -> Option<String> {
    let mut out = String::with_capacity(raw.len());
    for token in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(token.chars().flat_map(char::to_lowercase));
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    id: String,
    values: Vec<Option<String>>,
    entity_id: Option<String>,
}

impl Record {
    /// Builds a record, normalizing every present value.
    pub fn new<I, S>(id: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = Option<S>>,
        S: AsRef<str>,
    {
        Record {
            id: id.into(),
            values: values
                .into_iter()
                .map(|v| v.and_then(|s| normalize_value(s.as_ref())))
                .collect(),
            entity_id: None,
        }
    }

    pub fn with_entity(mut self, entity_id: impl Into<String>) -> Self {
        self.entity_id = Some(entity_id.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn value(&self, attribute: usize) -> Option<&str> {
        self.values.get(attribute).and_then(|v| v.as_deref())
    }

    pub fn values(&self) -> &[Option<String>] {
        &self.values
    }

    /// Ground-truth entity label. Only the evaluator reads this.
    pub fn entity_id(&self) -> Option<&str> {
        self.entity_id.as_deref()
    }

    pub(crate) fn set_value(&mut self, attribute: usize, value: Option<String>) {
        self.values[attribute] = value.and_then(|v| normalize_value(&v));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    name: String,
    schema: Vec<String>,
    records: Vec<Record>,
}

impl Database {
    pub fn new(name: impl Into<String>, schema: Vec<String>, records: Vec<Record>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (row, r) in records.iter().enumerate() {
            if r.values.len() != schema.len() {
                return Err(Error::SchemaLength {
                    id: r.id.clone(),
                    expected: schema.len(),
                    found: r.values.len(),
                });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: r.id.clone(),
                    row: row + 1,
                });
            }
        }
        Ok(Database {
            name: name.into(),
            schema,
            records,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Same schema and name, different rows.
    pub fn with_records(&self, records: Vec<Record>) -> Result<Database> {
        Database::new(self.name.clone(), self.schema.clone(), records)
    }

    pub(crate) fn into_records(self) -> Vec<Record> {
        self.records
    }
}

/// One lattice element: a schema attribute seen through a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub attribute: usize,
    pub transform: Transform,
}

impl Atom {
    pub fn new(attribute: usize, transform: Transform) -> Self {
        Atom {
            attribute,
            transform,
        }
    }

    pub fn identity(attribute: usize) -> Self {
        Atom::new(attribute, Transform::Identity)
    }

    pub fn value(&self, record: &Record) -> Option<String> {
        record
            .value(self.attribute)
            .and_then(|v| self.transform.apply(v))
    }

    pub fn label(&self, schema: &[String]) -> String {
        let name = schema
            .get(self.attribute)
            .map(String::as_str)
            .unwrap_or("?");
        AtomSpec {
            attribute: name.to_string(),
            transform: self.transform,
        }
        .to_string()
    }
}

/// An atom named by attribute rather than schema position, as written in
/// config files: `last_name`, `yearOf(birth_date)`, `prefix(3)(first_name)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomSpec {
    pub attribute: String,
    pub transform: Transform,
}

impl AtomSpec {
    pub fn resolve(&self, schema: &[String]) -> Result<Atom> {
        let index = schema
            .iter()
            .position(|a| a == &self.attribute)
            .ok_or_else(|| Error::UnknownAttribute(self.attribute.clone()))?;
        Ok(Atom::new(index, self.transform))
    }
}

impl fmt::Display for AtomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.transform {
            Transform::Identity => f.write_str(&self.attribute),
            t => write!(f, "{t}({})", self.attribute),
        }
    }
}

impl FromStr for AtomSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix(')') {
            let open = body
                .rfind('(')
                .ok_or_else(|| Error::Malformed(format!("atom `{s}`")))?;
            let attribute = body[open + 1..].trim();
            let transform: Transform = body[..open].parse()?;
            if attribute.is_empty() {
                return Err(Error::Malformed(format!("atom `{s}`")));
            }
            Ok(AtomSpec {
                attribute: attribute.to_string(),
                transform,
            })
        } else if s.is_empty() || s.contains(['(', ')']) {
            Err(Error::Malformed(format!("atom `{s}`")))
        } else {
            Ok(AtomSpec {
                attribute: s.to_string(),
                transform: Transform::Identity,
            })
        }
    }
}

/// Canonical, duplicate-free list of atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combination(Vec<Atom>);

impl Combination {
    pub fn new(mut members: Vec<Atom>) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCombination("duplicate member".to_string()));
        }
        if members.is_empty() {
            return Err(Error::InvalidCombination("no members".to_string()));
        }
        Ok(Combination(members))
    }

    pub(crate) fn from_sorted(members: Vec<Atom>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Combination(members)
    }

    pub fn members(&self) -> &[Atom] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_strict_subset_of(&self, other: &Combination) -> bool {
        self.len() < other.len() && self.0.iter().all(|a| other.0.binary_search(a).is_ok())
    }

    pub fn check_schema(&self, schema: &[String]) -> Result<()> {
        match self.0.iter().find(|a| a.attribute >= schema.len()) {
            Some(a) => Err(Error::UnknownAttribute(format!("#{}", a.attribute))),
            None => Ok(()),
        }
    }

    pub fn label(&self, schema: &[String]) -> String {
        self.0
            .iter()
            .map(|a| a.label(schema))
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Parses a `+`-separated list of atoms against a schema.
    pub fn parse(text: &str, schema: &[String]) -> Result<Self> {
        let atoms = text
            .split('+')
            .map(|part| part.parse::<AtomSpec>()?.resolve(schema))
            .collect::<Result<Vec<_>>>()?;
        Combination::new(atoms)
    }
}

/// A combination with the scores that got it selected.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeCombination {
    pub combination: Combination,
    pub score: f64,
    pub completeness: f64,
    pub gini: f64,
}

impl AttributeCombination {
    /// Convenience for hand-picked combinations that were never scored.
    pub fn unscored(combination: Combination) -> Self {
        AttributeCombination {
            combination,
            score: 0.0,
            completeness: 0.0,
            gini: 0.0,
        }
    }

    pub fn members(&self) -> &[Atom] {
        self.combination.members()
    }
}

/// Token list produced by one combination for one record. Two signatures
/// are equal when they come from the same combination and carry the same
/// tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeSignature {
    pub combination: u32,
    pub tokens: Box<[Box<str>]>,
}

impl AttributeSignature {
    /// Plain concatenation of the tokens.
    pub fn display(&self) -> String {
        self.tokens.concat()
    }
}
