//! Knowledge-answerable QA subsets.
//!
//! An item is kept when some triple has a gold answer as its subject or
//! object and the triple's other entity is mentioned in the question. Names
//! are compared after normalization; a mention must start and end on token
//! boundaries of the normalized question.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::{KnowledgeGraph, Role, Triple};
use crate::matcher::{contains_tokens, normalize_key};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ItemError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("item has no gold answers")]
    NoAnswers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawItem {
    id: String,
    question: String,
    answers: Vec<String>,
}

/// A question with its gold answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawItem", into = "RawItem")]
pub struct QAItem {
    id: String,
    question: String,
    answers: Vec<String>,
}

impl QAItem {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        answers: Vec<String>,
    ) -> Result<Self, ItemError> {
        let question = question.into();
        if question.trim().is_empty() {
            return Err(ItemError::EmptyQuestion);
        }
        if answers.is_empty() {
            return Err(ItemError::NoAnswers);
        }
        Ok(QAItem { id: id.into(), question, answers })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn answers(&self) -> &[String] {
        &self.answers
    }
}

impl TryFrom<RawItem> for QAItem {
    type Error = ItemError;

    fn try_from(raw: RawItem) -> Result<Self, Self::Error> {
        QAItem::new(raw.id, raw.question, raw.answers)
    }
}

impl From<QAItem> for RawItem {
    fn from(item: QAItem) -> Self {
        RawItem { id: item.id, question: item.question, answers: item.answers }
    }
}

/// The triple that certifies an item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub triple: Triple,
    pub answer_role: Role,
    /// The triple's other entity, as written in the graph.
    pub question_entity: String,
}

impl Witness {
    /// Re-checks both conditions against the raw triple, without the index.
    pub fn certifies(&self, item: &QAItem) -> bool {
        let answer = normalize_key(self.triple.entity(self.answer_role));
        let other = self.triple.entity(self.answer_role.other());
        other == self.question_entity
            && item.answers().iter().any(|a| normalize_key(a) == answer)
            && contains_tokens(&normalize_key(item.question()), &normalize_key(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchVerdict {
    witness: Option<Witness>,
}

impl MatchVerdict {
    pub fn is_matched(&self) -> bool {
        self.witness.is_some()
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.witness.as_ref()
    }

    pub fn into_witness(self) -> Option<Witness> {
        self.witness
    }
}

/// Looks for a witness, trying answers in order and, per answer, triples by
/// ascending ordinal (subject before object).
pub fn is_matched(item: &QAItem, kg: &KnowledgeGraph) -> MatchVerdict {
    let question = normalize_key(item.question());
    for answer in item.answers() {
        for entry in kg.lookup_entity(answer) {
            let triple = &kg.triples()[entry.ordinal];
            let other = triple.entity(entry.role.other());
            if contains_tokens(&question, &normalize_key(other)) {
                return MatchVerdict {
                    witness: Some(Witness {
                        triple: triple.clone(),
                        answer_role: entry.role,
                        question_entity: other.to_string(),
                    }),
                };
            }
        }
    }
    MatchVerdict { witness: None }
}

/// A kept item with its witness attached; serializes as the item's fields
/// plus `witness`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedItem {
    #[serde(flatten)]
    pub item: QAItem,
    pub witness: Witness,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: u64,
    pub matched: u64,
}

/// Keeps the matched items, in input order.
pub fn filter_dataset(
    items: impl IntoIterator<Item = QAItem>,
    kg: &KnowledgeGraph,
) -> (Vec<MatchedItem>, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for item in items {
        report.total += 1;
        if let Some(witness) = is_matched(&item, kg).into_witness() {
            report.matched += 1;
            kept.push(MatchedItem { item, witness });
        }
    }
    (kept, report)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("split fraction must lie strictly between 0 and 1")]
    FractionRange,
}

/// Size of the tail split for `n` items: `⌈fraction × n⌉`.
pub fn tail_len<S: Scalar>(n: usize, fraction: &S) -> Result<usize, SplitError> {
    if !(*fraction > S::zero() && *fraction < S::one()) {
        return Err(SplitError::FractionRange);
    }
    let tail = (fraction.clone() * S::from_count(n as u64))
        .ceil_count()
        .expect("non-negative product") as usize;
    Ok(tail.min(n))
}

/// Splits off the last `⌈fraction × n⌉` items.
pub fn split_tail<T, S: Scalar>(
    mut items: Vec<T>,
    fraction: &S,
) -> Result<(Vec<T>, Vec<T>), SplitError> {
    let tail = tail_len(items.len(), fraction)?;
    let tail_items = items.split_off(items.len() - tail);
    Ok((items, tail_items))
}
