//! Corpus construction and evaluation for knowledge-infused pre-training.
//!
//! The pipeline, module by module:
//!
//! - [`kg_store`]: stream TSV triple dumps and index entities by normalized
//!   name;
//! - [`matcher`]: find the spans of a sentence that mention a triple's
//!   subject or object (dates, exact names, names with a trailing
//!   parenthetical);
//! - [`masker`]: turn triples and matched sentences into `(input, target)`
//!   pairs with the entity replaced by a sentinel;
//! - [`mixer`]: block-exact interleaving with natural text, and epoch
//!   arithmetic;
//! - [`qa_align`]: keep the QA items a triple can answer;
//! - [`eval`]: Exact Match and EM deltas.
//!
//! Ratio arithmetic is generic over [`Scalar`]; the aliases below fix it to
//! the exact [`Rational`] type, with `*F64` variants for float work.

pub mod eval;
pub mod kg_store;
pub mod masker;
pub mod matcher;
pub mod mixer;
pub mod qa_align;
pub mod scalar;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use kg_store::{CorpusStats, KnowledgeGraph, Role, Triple};
pub use masker::{MaskPolicy, MaskedExample, RoleChoice, Source};
pub use matcher::{match_entity, match_record, preprocess, MatchedSentence, Span};
pub use qa_align::{MatchVerdict, QAItem, Witness};
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type MixSpec = mixer::MixSpec<Rational>;
pub type MixSource = mixer::MixSource<Rational>;
pub type TrainConfig = mixer::TrainConfig<Rational>;
pub type EmResult = eval::EmResult<Rational>;
pub type DeltaReport = eval::DeltaReport<Rational>;

pub type MixSpecF64 = mixer::MixSpec<f64>;
pub type TrainConfigF64 = mixer::TrainConfig<f64>;
pub type EmResultF64 = eval::EmResult<f64>;
pub type DeltaReportF64 = eval::DeltaReport<f64>;
