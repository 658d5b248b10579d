//! Salient span masking for triples and matched sentences.
//!
//! A triple is serialized as `subject, relation, object` and one entity is
//! replaced by the sentinel. A matched sentence has every span of one chosen
//! entity replaced. The relation is never masked.
//!
//! Randomness comes from [`record_rng`], a ChaCha stream keyed by
//! `(seed, record ordinal)`, so output does not depend on processing order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::{Role, Triple};
use crate::matcher::{MatchedSentence, Span};

pub const DEFAULT_SENTINEL: &str = "[MASK]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Kg,
    Kelm,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleChoice {
    /// Fair coin per record.
    #[default]
    Random,
    Subject,
    Object,
    /// Both roles for triples (subject first). Sentences behave as `Random`.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("sentinel must be non-empty")]
    EmptySentinel,
    #[error("sentinel must not contain tabs or line breaks")]
    ControlChar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPolicy {
    sentinel: String,
    pub role_choice: RoleChoice,
    pub seed: u64,
}

impl MaskPolicy {
    pub fn new(
        sentinel: impl Into<String>,
        role_choice: RoleChoice,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        let sentinel = sentinel.into();
        if sentinel.is_empty() {
            return Err(PolicyError::EmptySentinel);
        }
        if sentinel.contains(['\t', '\n', '\r']) {
            return Err(PolicyError::ControlChar);
        }
        Ok(MaskPolicy { sentinel, role_choice, seed })
    }

    pub fn sentinel(&self) -> &str {
        &self.sentinel
    }
}

impl Default for MaskPolicy {
    fn default() -> Self {
        MaskPolicy { sentinel: DEFAULT_SENTINEL.to_string(), role_choice: RoleChoice::Random, seed: 0 }
    }
}

/// Where a masked example came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub triple: Triple,
    pub role: Role,
    /// Sentence spans replaced by the sentinel; empty for triple inputs.
    pub spans: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedExample {
    pub input: String,
    pub target: String,
    pub source: Source,
    pub provenance: Option<Provenance>,
}

impl MaskedExample {
    /// Substitutes the target back for every sentinel in the input.
    pub fn reconstruct(&self, sentinel: &str) -> String {
        self.input.replace(sentinel, &self.target)
    }

    pub fn to_record(&self) -> MaskedRecord {
        MaskedRecord {
            input: self.input.clone(),
            target: self.target.clone(),
            source: self.source,
            triple: self.provenance.as_ref().map(|p| p.triple.clone()),
            masked_role: self.provenance.as_ref().map(|p| p.role),
        }
    }
}

/// One line of `masked.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedRecord {
    pub input: String,
    pub target: String,
    pub source: Source,
    pub triple: Option<Triple>,
    pub masked_role: Option<Role>,
}

/// The random stream for record `ordinal` under `seed`.
pub fn record_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

/// `subject, relation, object`.
pub fn serialize_triple(t: &Triple) -> String {
    format!("{}, {}, {}", t.subject(), t.relation(), t.object())
}

fn masked_triple(t: &Triple, role: Role, sentinel: &str) -> MaskedExample {
    let (subject, object) = match role {
        Role::Subject => (sentinel, t.object()),
        Role::Object => (t.subject(), sentinel),
    };
    MaskedExample {
        input: format!("{subject}, {}, {object}", t.relation()),
        target: t.entity(role).to_string(),
        source: Source::Kg,
        provenance: Some(Provenance { triple: t.clone(), role, spans: Vec::new() }),
    }
}

/// Masks the subject or object of `t` according to the policy: one example,
/// or two (subject then object) under [`RoleChoice::Both`].
///
/// A triple containing the sentinel text anywhere yields nothing, since its
/// input could not be unmasked unambiguously.
pub fn mask_triple<R: Rng>(t: &Triple, policy: &MaskPolicy, rng: &mut R) -> Vec<MaskedExample> {
    let s = policy.sentinel();
    if [t.subject(), t.relation(), t.object()].iter().any(|f| f.contains(s)) {
        return Vec::new();
    }
    let roles: &[Role] = match policy.role_choice {
        RoleChoice::Subject => &[Role::Subject],
        RoleChoice::Object => &[Role::Object],
        RoleChoice::Both => &[Role::Subject, Role::Object],
        RoleChoice::Random if rng.random_bool(0.5) => &[Role::Subject],
        RoleChoice::Random => &[Role::Object],
    };
    roles.iter().map(|&role| masked_triple(t, role, s)).collect()
}

/// Masks every span of one entity of a matched sentence.
///
/// The entity is picked uniformly among `(triple, role)` keys that have
/// spans; a fixed role choice restricts the pick to that role and falls back
/// to the other one when it has none. The target is the masked text itself:
/// the triple's entity name when the sentence spells it that way, otherwise
/// the leftmost span's surface. Only spans spelled like the target are
/// replaced, so substituting the target back restores the sentence.
///
/// Returns `None` when nothing matched or the sentence already contains the
/// sentinel.
pub fn mask_sentence<R: Rng>(
    m: &MatchedSentence,
    policy: &MaskPolicy,
    rng: &mut R,
) -> Option<MaskedExample> {
    let sentinel = policy.sentinel();
    if m.sentence.contains(sentinel) {
        return None;
    }
    let populated: Vec<(&(usize, Role), &Vec<Span>)> = m.populated().collect();
    let with_role = |role: Role| -> Vec<_> {
        populated.iter().copied().filter(|((_, r), _)| *r == role).collect()
    };
    let candidates = match policy.role_choice {
        RoleChoice::Random | RoleChoice::Both => populated.clone(),
        RoleChoice::Subject | RoleChoice::Object => {
            let wanted =
                if policy.role_choice == RoleChoice::Subject { Role::Subject } else { Role::Object };
            let first = with_role(wanted);
            if first.is_empty() {
                with_role(wanted.other())
            } else {
                first
            }
        }
    };
    if candidates.is_empty() {
        return None;
    }
    let &(&(ordinal, role), spans) = &candidates[rng.random_range(0..candidates.len())];
    let triple = &m.triples[ordinal];
    let entity = triple.entity(role);
    let target = if spans.iter().any(|s| s.surface == entity) {
        entity.to_string()
    } else {
        spans[0].surface.clone()
    };
    if target.contains(sentinel) {
        return None;
    }
    let masked: Vec<Span> = spans.iter().filter(|s| s.surface == target).cloned().collect();

    let mut input = String::with_capacity(m.sentence.len());
    let mut cursor = 0;
    for span in &masked {
        input.push_str(&m.sentence[cursor..span.start]);
        input.push_str(sentinel);
        cursor = span.end;
    }
    input.push_str(&m.sentence[cursor..]);

    Some(MaskedExample {
        input,
        target,
        source: Source::Kelm,
        provenance: Some(Provenance { triple: triple.clone(), role, spans: masked }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::match_record;
    use proptest::prelude::*;

    fn pulp() -> Triple {
        Triple::new("Pulp Fiction", "award received", "Palme d'Or").unwrap()
    }

    fn policy(role_choice: RoleChoice) -> MaskPolicy {
        MaskPolicy::new(DEFAULT_SENTINEL, role_choice, 7).unwrap()
    }

    #[test]
    fn serialization() {
        assert_eq!(serialize_triple(&pulp()), "Pulp Fiction, award received, Palme d'Or");
        assert_eq!(serialize_triple(&Triple::new("a", "b", "c").unwrap()), "a, b, c");
        let comma = Triple::new("Paris, Texas", "country", "United States").unwrap();
        assert_eq!(serialize_triple(&comma), "Paris, Texas, country, United States");
    }

    #[test]
    fn table_triple_masks() {
        let mut rng = record_rng(0, 0);
        let obj = mask_triple(&pulp(), &policy(RoleChoice::Object), &mut rng);
        assert_eq!(obj.len(), 1);
        assert_eq!(obj[0].input, "Pulp Fiction, award received, [MASK]");
        assert_eq!(obj[0].target, "Palme d'Or");

        let subj = mask_triple(&pulp(), &policy(RoleChoice::Subject), &mut rng);
        assert_eq!(subj[0].input, "[MASK], award received, Palme d'Or");
        assert_eq!(subj[0].target, "Pulp Fiction");

        let both = mask_triple(&pulp(), &policy(RoleChoice::Both), &mut rng);
        assert_eq!(both, vec![subj[0].clone(), obj[0].clone()]);
        for ex in &both {
            assert_eq!(ex.reconstruct("[MASK]"), serialize_triple(&pulp()));
        }
    }

    #[test]
    fn table_sentence_mask() {
        let m = match_record(
            "Quentin Tarantino won the Palme d'Or in 1994 for Pulp Fiction.",
            vec![pulp()],
        );
        let ex = mask_sentence(&m, &policy(RoleChoice::Object), &mut record_rng(1, 0)).unwrap();
        assert_eq!(ex.input, "Quentin Tarantino won the [MASK] in 1994 for Pulp Fiction.");
        assert_eq!(ex.target, "Palme d'Or");
        assert_eq!(ex.source, Source::Kelm);
        let record = serde_json::to_string(&ex.to_record()).unwrap();
        assert_eq!(
            record,
            r#"{"input":"Quentin Tarantino won the [MASK] in 1994 for Pulp Fiction.","target":"Palme d'Or","source":"kelm","triple":["Pulp Fiction","award received","Palme d'Or"],"masked_role":"object"}"#
        );
    }

    #[test]
    fn every_span_of_the_entity_is_masked() {
        let s = "Pulp Fiction is great. Pulp Fiction won.";
        let m = match_record(s, vec![pulp()]);
        let ex = mask_sentence(&m, &policy(RoleChoice::Subject), &mut record_rng(1, 0)).unwrap();
        assert_eq!(ex.input, "[MASK] is great. [MASK] won.");
        assert_eq!(ex.target, "Pulp Fiction");
        assert_eq!(ex.reconstruct("[MASK]"), s);
    }

    #[test]
    fn fixed_role_falls_back_then_drops() {
        let m = match_record("Tarantino won the Palme d'Or.", vec![pulp()]);
        let ex = mask_sentence(&m, &policy(RoleChoice::Subject), &mut record_rng(1, 0)).unwrap();
        assert_eq!(ex.provenance.unwrap().role, Role::Object);

        let none = match_record("Nothing here.", vec![pulp()]);
        assert_eq!(mask_sentence(&none, &policy(RoleChoice::Random), &mut record_rng(1, 0)), None);
        let empty = match_record("Nothing here.", vec![]);
        assert_eq!(mask_sentence(&empty, &policy(RoleChoice::Random), &mut record_rng(1, 0)), None);
    }

    #[test]
    fn target_follows_the_sentence_spelling() {
        let t = Triple::new("John Doe (born 1990)", "cast member of", "Pulp Fiction").unwrap();
        let s = "JOHN DOE was in pulp fiction and Pulp Fiction.";
        let m = match_record(s, vec![t]);
        let ex = mask_sentence(&m, &policy(RoleChoice::Subject), &mut record_rng(1, 0)).unwrap();
        assert_eq!((ex.input.as_str(), ex.target.as_str()), ("[MASK] was in pulp fiction and Pulp Fiction.", "JOHN DOE"));
        let ex = mask_sentence(&m, &policy(RoleChoice::Object), &mut record_rng(1, 0)).unwrap();
        assert_eq!(ex.input, "JOHN DOE was in pulp fiction and [MASK].");
        assert_eq!(ex.reconstruct("[MASK]"), s);
    }

    #[test]
    fn sentinel_collisions_are_skipped() {
        let p = policy(RoleChoice::Object);
        let t = Triple::new("[MASK] test", "r", "o").unwrap();
        assert!(mask_triple(&t, &p, &mut record_rng(0, 0)).is_empty());
        let m = match_record("The [MASK] won the Palme d'Or.", vec![pulp()]);
        assert_eq!(mask_sentence(&m, &p, &mut record_rng(0, 0)), None);
        assert_eq!(MaskPolicy::new("", RoleChoice::Random, 0), Err(PolicyError::EmptySentinel));
        assert_eq!(MaskPolicy::new("a\tb", RoleChoice::Random, 0), Err(PolicyError::ControlChar));
    }

    #[test]
    fn role_balance() {
        let n = 10_000u64;
        let p = policy(RoleChoice::Random);
        let subjects = (0..n)
            .filter(|&i| {
                let ex = mask_triple(&pulp(), &p, &mut record_rng(p.seed, i));
                ex[0].provenance.as_ref().unwrap().role == Role::Subject
            })
            .count() as f64;
        let frac = subjects / n as f64;
        let band = 3.0 / (n as f64).sqrt();
        assert!((frac - 0.5).abs() <= band, "subject fraction {frac}");
    }

    #[test]
    fn record_streams_are_independent_of_order() {
        let p = policy(RoleChoice::Random);
        let forward: Vec<_> = (0..50).map(|i| mask_triple(&pulp(), &p, &mut record_rng(9, i))).collect();
        let backward: Vec<_> =
            (0..50).rev().map(|i| mask_triple(&pulp(), &p, &mut record_rng(9, i))).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    const WORDS: &[&str] = &["Pulp", "Fiction", "Palme", "d'Or", "won", "the", "in", "1994", ",", "PULP", "fiction."];

    proptest! {
        #[test]
        fn reconstruction_and_purity(words in prop::collection::vec(prop::sample::select(WORDS), 0..14), seed: u64) {
            let sentence = words.join(" ");
            let m = match_record(&sentence, vec![pulp()]);
            let p = MaskPolicy::new(DEFAULT_SENTINEL, RoleChoice::Random, seed).unwrap();
            match mask_sentence(&m, &p, &mut record_rng(seed, 0)) {
                Some(ex) => {
                    prop_assert_eq!(ex.reconstruct(p.sentinel()), sentence);
                    prop_assert!(ex.input.contains(p.sentinel()));
                    prop_assert!(!ex.target.contains(p.sentinel()));
                }
                None => prop_assert!(!m.is_matched()),
            }
        }
    }
}
