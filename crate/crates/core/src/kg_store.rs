//! Triple ingestion and the entity index.
//!
//! Dumps are UTF-8, one `subject<TAB>relation<TAB>object` record per line.
//! [`TripleReader`] streams them; [`KnowledgeGraph`] indexes every subject and
//! object under its normalized name (see [`crate::matcher::normalize_key`]),
//! which is what makes every lookup case- and punctuation-insensitive.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::normalize_key;

/// Which end of a triple an entity sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subject,
    Object,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Subject => Role::Object,
            Role::Object => Role::Subject,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Subject => "subject",
            Role::Object => "object",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Subject,
    Relation,
    Object,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Subject => "subject",
            Field::Relation => "relation",
            Field::Object => "object",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TripleError {
    #[error("{0} is empty or whitespace-only")]
    Blank(Field),
    #[error("{0} contains a tab or line break")]
    ControlChar(Field),
}

/// One `(subject, relation, object)` fact.
///
/// Fields are never blank and never contain tabs or line breaks, so every
/// triple survives a TSV round-trip. Serialized in JSON as `[s, r, o]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(String, String, String)", into = "(String, String, String)")]
pub struct Triple {
    subject: String,
    relation: String,
    object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Result<Self, TripleError> {
        let triple = Triple {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        };
        for (field, value) in [
            (Field::Subject, &triple.subject),
            (Field::Relation, &triple.relation),
            (Field::Object, &triple.object),
        ] {
            if value.trim().is_empty() {
                return Err(TripleError::Blank(field));
            }
            if value.contains(['\t', '\n', '\r']) {
                return Err(TripleError::ControlChar(field));
            }
        }
        Ok(triple)
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn object(&self) -> &str {
        &self.object
    }

    pub fn entity(&self, role: Role) -> &str {
        match role {
            Role::Subject => &self.subject,
            Role::Object => &self.object,
        }
    }

    /// The TSV record for this triple, without the line terminator.
    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}", self.subject, self.relation, self.object)
    }
}

impl TryFrom<(String, String, String)> for Triple {
    type Error = TripleError;

    fn try_from((s, r, o): (String, String, String)) -> Result<Self, Self::Error> {
        Triple::new(s, r, o)
    }
}

impl From<Triple> for (String, String, String) {
    fn from(t: Triple) -> Self {
        (t.subject, t.relation, t.object)
    }
}

/// Why a single line was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("expected 3 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error(transparent)]
    Invalid(#[from] TripleError),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {source}")]
    Record { line: u64, source: RecordError },
    #[error("line {line}: input is not valid UTF-8")]
    InvalidUtf8 { line: u64 },
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Abort on the first malformed record instead of skipping it.
    pub strict: bool,
}

/// Counters for one pass over a dump.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseSummary {
    pub lines: u64,
    pub triples: u64,
    pub skipped: u64,
    /// The first few rejected lines, for diagnostics.
    pub first_errors: Vec<String>,
}

const KEPT_ERRORS: usize = 20;

/// Parses a single TSV record (no line terminator).
pub fn parse_line(line: &str) -> Result<Triple, RecordError> {
    let mut fields = line.split('\t');
    match (fields.next(), fields.next(), fields.next(), fields.next()) {
        (Some(s), Some(r), Some(o), None) => Ok(Triple::new(s, r, o)?),
        _ => Err(RecordError::FieldCount(line.split('\t').count())),
    }
}

/// Streaming reader over a triple dump.
///
/// Yields triples in input order. In lenient mode malformed lines are skipped
/// and counted in [`TripleReader::summary`]; in strict mode the first one is
/// returned as an error and iteration stops. Invalid UTF-8 always aborts.
/// Empty lines are not records and are ignored.
pub struct TripleReader<R> {
    reader: R,
    options: ParseOptions,
    buf: Vec<u8>,
    summary: ParseSummary,
    done: bool,
}

impl<R: BufRead> TripleReader<R> {
    pub fn new(reader: R, options: ParseOptions) -> Self {
        TripleReader {
            reader,
            options,
            buf: Vec::new(),
            summary: ParseSummary::default(),
            done: false,
        }
    }

    pub fn summary(&self) -> &ParseSummary {
        &self.summary
    }

    pub fn into_summary(self) -> ParseSummary {
        self.summary
    }
}

impl<R: BufRead> Iterator for TripleReader<R> {
    type Item = Result<Triple, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            self.summary.lines += 1;
            let line_no = self.summary.lines;
            let mut bytes = self.buf.as_slice();
            if let Some(rest) = bytes.strip_suffix(b"\n") {
                bytes = rest;
                if let Some(rest) = bytes.strip_suffix(b"\r") {
                    bytes = rest;
                }
            }
            let Ok(line) = std::str::from_utf8(bytes) else {
                self.done = true;
                return Some(Err(ParseError::InvalidUtf8 { line: line_no }));
            };
            if line.is_empty() {
                continue;
            }
            match parse_line(line) {
                Ok(t) => {
                    self.summary.triples += 1;
                    return Some(Ok(t));
                }
                Err(source) if self.options.strict => {
                    self.done = true;
                    return Some(Err(ParseError::Record { line: line_no, source }));
                }
                Err(source) => {
                    self.summary.skipped += 1;
                    if self.summary.first_errors.len() < KEPT_ERRORS {
                        self.summary.first_errors.push(format!("line {line_no}: {source}"));
                    }
                }
            }
        }
        None
    }
}

/// Reads a whole dump into memory.
pub fn parse_triples<R: BufRead>(
    reader: R,
    options: ParseOptions,
) -> Result<(Vec<Triple>, ParseSummary), ParseError> {
    let mut reader = TripleReader::new(reader, options);
    let triples = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((triples, reader.into_summary()))
}

pub fn write_tsv<'a, W: Write>(
    mut out: W,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> io::Result<()> {
    for t in triples {
        writeln!(out, "{}", t.to_tsv())?;
    }
    Ok(())
}

/// Drops repeated triples, keeping the first occurrence of each.
pub fn dedup_triples(triples: Vec<Triple>) -> (Vec<Triple>, usize) {
    let before = triples.len();
    let mut seen = HashSet::with_capacity(before);
    let kept: Vec<Triple> = triples.into_iter().filter(|t| seen.insert(t.clone())).collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// An occurrence of an entity name in the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexEntry {
    pub ordinal: usize,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub triple_count: u64,
    pub distinct_entities: u64,
    pub distinct_relations: u64,
}

/// Immutable triple store with a normalized-name entity index.
///
/// Index keys iterate in first-seen order and each key's entries are sorted
/// by `(ordinal, role)`, so two graphs built from the same input are
/// identical down to iteration order.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
    index: IndexMap<String, Vec<IndexEntry>>,
}

impl KnowledgeGraph {
    pub fn new(triples: Vec<Triple>) -> Self {
        let mut index: IndexMap<String, Vec<IndexEntry>> = IndexMap::new();
        for (ordinal, t) in triples.iter().enumerate() {
            for role in [Role::Subject, Role::Object] {
                index
                    .entry(normalize_key(t.entity(role)))
                    .or_default()
                    .push(IndexEntry { ordinal, role });
            }
        }
        KnowledgeGraph { triples, index }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triple(&self, ordinal: usize) -> Option<&Triple> {
        self.triples.get(ordinal)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// All `(normalized name, entries)` pairs in first-seen order.
    pub fn index(&self) -> impl Iterator<Item = (&str, &[IndexEntry])> {
        self.index.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Every place `name` occurs as a subject or object.
    pub fn lookup_entity(&self, name: &str) -> &[IndexEntry] {
        self.lookup_key(&normalize_key(name))
    }

    /// Like [`KnowledgeGraph::lookup_entity`] for an already-normalized key.
    pub fn lookup_key(&self, key: &str) -> &[IndexEntry] {
        self.index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Surface forms of the entities on the far side of every triple that
    /// mentions `entity`, optionally restricted to one relation (compared
    /// after normalization).
    pub fn neighbors(&self, entity: &str, relation: Option<&str>) -> BTreeSet<String> {
        let relation = relation.map(normalize_key);
        self.lookup_entity(entity)
            .iter()
            .map(|e| (&self.triples[e.ordinal], e.role))
            .filter(|(t, _)| {
                relation
                    .as_deref()
                    .is_none_or(|r| normalize_key(t.relation()) == r)
            })
            .map(|(t, role)| t.entity(role.other()).to_string())
            .collect()
    }

    pub fn stats(&self) -> CorpusStats {
        let relations: HashSet<String> =
            self.triples.iter().map(|t| normalize_key(t.relation())).collect();
        CorpusStats {
            triple_count: self.triples.len() as u64,
            distinct_entities: self.index.len() as u64,
            distinct_relations: relations.len() as u64,
        }
    }
}

impl From<Vec<Triple>> for KnowledgeGraph {
    fn from(triples: Vec<Triple>) -> Self {
        KnowledgeGraph::new(triples)
    }
}
