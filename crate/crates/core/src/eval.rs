//! Exact Match scoring and EM deltas between models.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::matcher::normalize_key;
use crate::qa_align::QAItem;
use crate::scalar::{format_decimal, mean, Scalar};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no gold answers to compare against")]
    NoGolds,
    #[error("duplicate prediction for id `{0}`")]
    DuplicatePrediction(String),
    #[error("duplicate item id `{0}`")]
    DuplicateItem(String),
    #[error("prediction for unknown id `{0}`")]
    UnknownId(String),
    #[error("nothing to score")]
    NoItems,
    #[error("no result for model `{model}` on {task}/{split}")]
    MissingResult { task: String, split: Split, model: String },
    #[error("more than one result for model `{model}` on {task}/{split}")]
    DuplicateResult { task: String, split: Split, model: String },
    #[error("no results for either model")]
    NoPairs,
    #[error("invalid EM value `{0}`")]
    BadEm(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How predictions are compared with gold answers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EmMode {
    /// Lowercase, no punctuation, no articles, collapsed whitespace.
    #[default]
    Normalized,
    /// Byte equality.
    Strict,
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

pub fn normalize_answer(text: &str) -> String {
    let key = normalize_key(text);
    let kept: Vec<&str> = key.split(' ').filter(|t| !t.is_empty() && !ARTICLES.contains(t)).collect();
    kept.join(" ")
}

pub fn exact_match(prediction: &str, golds: &[String]) -> Result<bool, EvalError> {
    exact_match_with(EmMode::Normalized, prediction, golds)
}

pub fn exact_match_with(mode: EmMode, prediction: &str, golds: &[String]) -> Result<bool, EvalError> {
    if golds.is_empty() {
        return Err(EvalError::NoGolds);
    }
    Ok(match mode {
        EmMode::Strict => golds.iter().any(|g| g == prediction),
        EmMode::Normalized => {
            let p = normalize_answer(prediction);
            golds.iter().any(|g| normalize_answer(g) == p)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected dev or test)")),
        }
    }
}

/// EM of one model on one task split, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct EmResult<S> {
    pub task: String,
    pub split: Split,
    pub model: String,
    pub em: S,
    pub n: u64,
    /// Correct predictions, when known. Lets `em` be recovered exactly.
    pub correct: Option<u64>,
}

impl<S: Scalar> EmResult<S> {
    pub fn new(task: impl Into<String>, split: Split, model: impl Into<String>, em: S) -> Self {
        EmResult { task: task.into(), split, model: model.into(), em, n: 0, correct: None }
    }
}

#[derive(Serialize, Deserialize)]
struct EmWire {
    task: String,
    split: Split,
    model: String,
    em: serde_json::Number,
    n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correct: Option<u64>,
}

impl<S: Scalar> Serialize for EmResult<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> Result<Z::Ok, Z::Error> {
        let em = serde_json::Number::from_f64(self.em.to_f64_lossy())
            .ok_or_else(|| serde::ser::Error::custom("EM is not finite"))?;
        EmWire {
            task: self.task.clone(),
            split: self.split,
            model: self.model.clone(),
            em,
            n: self.n,
            correct: self.correct,
        }
        .serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for EmResult<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = EmWire::deserialize(deserializer)?;
        let em = match wire.correct {
            Some(c) if wire.n > 0 => percent::<S>(c, wire.n),
            _ => S::parse_decimal(&wire.em.to_string())
                .ok_or_else(|| serde::de::Error::custom(format!("invalid EM {}", wire.em)))?,
        };
        Ok(EmResult { task: wire.task, split: wire.split, model: wire.model, em, n: wire.n, correct: wire.correct })
    }
}

fn percent<S: Scalar>(correct: u64, n: u64) -> S {
    S::from_count(100) * S::from_count(correct) / S::from_count(n)
}

/// A score plus the ids that had no prediction (counted as wrong).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome<S> {
    pub result: EmResult<S>,
    pub missing: Vec<String>,
}

/// Scores predictions against items. Items without a prediction are misses;
/// predictions for unknown ids or repeated ids are errors.
pub fn score<S: Scalar>(
    preds: impl IntoIterator<Item = PredictionRecord>,
    items: impl IntoIterator<Item = QAItem>,
    task: &str,
    split: Split,
    model: &str,
    mode: EmMode,
) -> Result<ScoreOutcome<S>, EvalError> {
    let items: Vec<QAItem> = items.into_iter().collect();
    let mut ids = HashSet::with_capacity(items.len());
    for item in &items {
        if !ids.insert(item.id()) {
            return Err(EvalError::DuplicateItem(item.id().to_string()));
        }
    }
    let mut by_id: HashMap<String, String> = HashMap::new();
    for p in preds {
        if !ids.contains(p.id.as_str()) {
            return Err(EvalError::UnknownId(p.id));
        }
        if by_id.contains_key(&p.id) {
            return Err(EvalError::DuplicatePrediction(p.id));
        }
        by_id.insert(p.id, p.prediction);
    }
    if items.is_empty() {
        return Err(EvalError::NoItems);
    }
    let mut correct = 0u64;
    let mut missing = Vec::new();
    for item in &items {
        match by_id.get(item.id()) {
            Some(p) => correct += u64::from(exact_match_with(mode, p, item.answers())?),
            None => missing.push(item.id().to_string()),
        }
    }
    let n = items.len() as u64;
    Ok(ScoreOutcome {
        result: EmResult {
            task: task.to_string(),
            split,
            model: model.to_string(),
            em: percent(correct, n),
            n,
            correct: Some(correct),
        },
        missing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow<S> {
    pub task: String,
    pub split: Split,
    pub delta_em: S,
}

/// Per task/split `treatment − baseline` EM, plus their unweighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport<S> {
    pub rows: Vec<DeltaRow<S>>,
    pub average: S,
}

pub const AVERAGE_ROW: &str = "__average__";

impl<S: Scalar> DeltaReport<S> {
    /// `task,split,delta_em` rows followed by the `__average__` row.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task", "split", "delta_em"])?;
        for row in &self.rows {
            w.write_record([row.task.as_str(), &row.split.to_string(), &format_decimal(&row.delta_em)])?;
        }
        w.write_record([AVERAGE_ROW, "all", &format_decimal(&self.average)])?;
        w.flush()?;
        Ok(())
    }
}

/// Rows come in the order task/split pairs first appear in `results`; other
/// models in the list are ignored.
pub fn delta_report<S: Scalar>(
    results: &[EmResult<S>],
    baseline: &str,
    treatment: &str,
) -> Result<DeltaReport<S>, EvalError> {
    let mut keys: Vec<(&str, Split)> = Vec::new();
    let mut table: HashMap<(&str, Split, &str), &S> = HashMap::new();
    for r in results.iter().filter(|r| r.model == baseline || r.model == treatment) {
        let key = (r.task.as_str(), r.split);
        if !keys.contains(&key) {
            keys.push(key);
        }
        if table.insert((key.0, key.1, r.model.as_str()), &r.em).is_some() {
            return Err(EvalError::DuplicateResult {
                task: r.task.clone(),
                split: r.split,
                model: r.model.clone(),
            });
        }
    }
    if keys.is_empty() {
        return Err(EvalError::NoPairs);
    }
    let mut rows = Vec::with_capacity(keys.len());
    for (task, split) in keys {
        let get = |model: &str| {
            table.get(&(task, split, model)).copied().ok_or_else(|| EvalError::MissingResult {
                task: task.to_string(),
                split,
                model: model.to_string(),
            })
        };
        let delta_em = get(treatment)?.clone() - get(baseline)?.clone();
        rows.push(DeltaRow { task: task.to_string(), split, delta_em });
    }
    let deltas: Vec<S> = rows.iter().map(|r| r.delta_em.clone()).collect();
    let average = mean(&deltas).expect("at least one row");
    Ok(DeltaReport { rows, average })
}
