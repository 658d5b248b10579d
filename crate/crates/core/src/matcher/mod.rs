//! Entity span matching between triples and sentences.
//!
//! Both sides are normalized with [`preprocess`] and matching happens on the
//! normalized text; every hit is mapped back to byte offsets in the original
//! sentence. [`match_entity`] tries, in order:
//!
//! 1. a date branch, when the whole entity parses as a date: every maximal
//!    window of up to three sentence tokens holding an equal date;
//! 2. an exact branch: every token-aligned occurrence of the entity;
//! 3. only if both found nothing, the exact branch again with a trailing
//!    `" (…)"` stripped from the raw entity (`John Doe (born 1990)`).
//!
//! Overlapping hits are resolved leftmost-first, longest on ties. A span is
//! then widened over punctuation that opens or closes the entity name when
//! the sentence has the same characters right beside it.

mod date;
mod multi;
mod normalize;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_categories::UnicodeCategories;

use crate::kg_store::{Role, Triple};

pub use date::{parse_date, CalendarDate};
pub use multi::EntityMatcher;
pub use normalize::{contains_tokens, normalize_key, preprocess, NormalizedText};

pub(crate) use normalize::token_occurrences;

/// Longest date shape is three tokens (`23 May 1994`, `May 23, 1994`).
const MAX_DATE_TOKENS: usize = 3;

/// A byte range of a sentence holding an entity mention.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl Span {
    pub fn from_range(sentence: &str, range: Range<usize>) -> Span {
        Span { surface: sentence[range.clone()].to_string(), start: range.start, end: range.end }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    /// Checks offsets and surface against `sentence`.
    pub fn is_valid_for(&self, sentence: &str) -> bool {
        self.start < self.end
            && self.end <= sentence.len()
            && sentence.is_char_boundary(self.start)
            && sentence.is_char_boundary(self.end)
            && sentence[self.start..self.end] == self.surface
    }
}

/// A sentence normalized once for repeated matching.
#[derive(Debug, Clone)]
pub struct PreparedSentence<'a> {
    source: &'a str,
    norm: NormalizedText,
    tokens: Vec<Range<usize>>,
}

impl<'a> PreparedSentence<'a> {
    pub fn new(source: &'a str) -> Self {
        let norm = preprocess(source);
        let tokens = norm.tokens();
        PreparedSentence { source, norm, tokens }
    }

    pub fn source(&self) -> &'a str {
        self.source
    }

    pub fn normalized(&self) -> &NormalizedText {
        &self.norm
    }

    fn to_spans(&self, ranges: Vec<Range<usize>>) -> Vec<Span> {
        ranges
            .into_iter()
            .map(|r| Span::from_range(self.source, self.norm.source_range(self.source, r)))
            .collect()
    }

    /// Normalized byte ranges of the date expressions agreeing with `date`.
    /// A date expression is a window of tokens that parses as a date and is
    /// not part of a longer such window, so the `1994` inside `24 May 1994`
    /// is not a separate mention.
    pub(crate) fn date_windows(&self, date: &CalendarDate) -> Vec<Range<usize>> {
        let mut found: Vec<(usize, usize, CalendarDate)> = Vec::new();
        for a in 0..self.tokens.len() {
            for b in a + 1..=(a + MAX_DATE_TOKENS).min(self.tokens.len()) {
                let norm_range = self.tokens[a].start..self.tokens[b - 1].end;
                let src = self.norm.source_range(self.source, norm_range);
                if let Some(d) = parse_date(&self.source[src]) {
                    found.push((a, b, d));
                }
            }
        }
        found
            .iter()
            .filter(|&&(a, b, _)| {
                !found.iter().any(|&(c, d, _)| c <= a && b <= d && (c, d) != (a, b))
            })
            .filter(|(_, _, d)| d.same_date(date))
            .map(|&(a, b, _)| self.tokens[a].start..self.tokens[b - 1].end)
            .collect()
    }

    pub(crate) fn exact_occurrences(&self, pattern: &str) -> Vec<Range<usize>> {
        token_occurrences(self.norm.as_str(), pattern).collect()
    }
}

/// Keeps the leftmost candidate (longest on ties), drops everything that
/// overlaps it, and repeats.
pub(crate) fn resolve_leftmost(mut candidates: Vec<Range<usize>>) -> Vec<Range<usize>> {
    candidates.sort_by(|x, y| x.start.cmp(&y.start).then(y.end.cmp(&x.end)));
    let mut out: Vec<Range<usize>> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if out.last().is_none_or(|last| c.start >= last.end) {
            out.push(c);
        }
    }
    out
}

/// Leading and trailing runs of punctuation on a trimmed entity name.
pub(crate) fn punctuation_affixes(entity: &str) -> (&str, &str) {
    let e = entity.trim();
    let head = e.find(|c: char| !c.is_punctuation()).unwrap_or(e.len());
    let tail = e.rfind(|c: char| !c.is_punctuation()).map_or(e.len(), |i| {
        i + e[i..].chars().next().map_or(0, char::len_utf8)
    });
    if head >= tail {
        return ("", "");
    }
    (&e[..head], &e[tail..])
}

/// Widens a span over the entity's own leading/trailing punctuation when the
/// sentence repeats it verbatim next to the span, so `John Doe (born 1990)`
/// keeps its closing bracket.
pub(crate) fn extend_affixes(span: Span, sentence: &str, entity: &str) -> Span {
    let (prefix, suffix) = punctuation_affixes(entity);
    let mut range = span.range();
    if !prefix.is_empty() && sentence[..range.start].ends_with(prefix) {
        range.start -= prefix.len();
    }
    if !suffix.is_empty() && sentence[range.end..].starts_with(suffix) {
        range.end += suffix.len();
    }
    Span::from_range(sentence, range)
}

/// The name left after removing one trailing `" (…)"`, if the raw entity has
/// that shape.
pub fn strip_parenthetical(entity: &str) -> Option<&str> {
    let trimmed = entity.trim_end();
    if !trimmed.ends_with(')') {
        return None;
    }
    let open = trimmed.rfind(" (")?;
    let name = trimmed[..open].trim_end();
    (!name.trim().is_empty()).then_some(name)
}

/// Spans of `sentence` that mention `entity`, in ascending order and
/// mutually non-overlapping.
pub fn match_entity(entity: &str, sentence: &str) -> Vec<Span> {
    match_entity_prepared(entity, &PreparedSentence::new(sentence))
}

pub fn match_entity_prepared(entity: &str, sentence: &PreparedSentence<'_>) -> Vec<Span> {
    let pattern = normalize_key(entity);
    if pattern.is_empty() {
        return Vec::new();
    }
    let mut candidates = match parse_date(entity) {
        Some(date) => sentence.date_windows(&date),
        None => Vec::new(),
    };
    candidates.extend(sentence.exact_occurrences(&pattern));
    let mut name = entity;
    if candidates.is_empty() {
        if let Some(stripped) = strip_parenthetical(entity) {
            candidates = sentence.exact_occurrences(&normalize_key(stripped));
            name = stripped;
        }
    }
    sentence
        .to_spans(resolve_leftmost(candidates))
        .into_iter()
        .map(|span| extend_affixes(span, sentence.source(), name))
        .collect()
}

/// A sentence together with its aligned triples and every entity mention
/// found for them, keyed by `(triple position, role)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedSentence {
    pub sentence: String,
    pub triples: Vec<Triple>,
    pub entity_spans: BTreeMap<(usize, Role), Vec<Span>>,
}

impl MatchedSentence {
    /// At least one entity of one triple was found.
    pub fn is_matched(&self) -> bool {
        self.entity_spans.values().any(|s| !s.is_empty())
    }

    /// Keys with a non-empty span set, in key order.
    pub fn populated(&self) -> impl Iterator<Item = (&(usize, Role), &Vec<Span>)> {
        self.entity_spans.iter().filter(|(_, s)| !s.is_empty())
    }
}

/// Matches the subject and object of every aligned triple. Relations are
/// never matched.
pub fn match_record(sentence: &str, triples: Vec<Triple>) -> MatchedSentence {
    let prepared = PreparedSentence::new(sentence);
    let mut entity_spans = BTreeMap::new();
    for (i, t) in triples.iter().enumerate() {
        for role in [Role::Subject, Role::Object] {
            entity_spans.insert((i, role), match_entity_prepared(t.entity(role), &prepared));
        }
    }
    MatchedSentence { sentence: sentence.to_string(), triples, entity_spans }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KELM: &str = "Quentin Tarantino won the Palme d'Or in 1994 for Pulp Fiction.";

    fn surfaces(spans: &[Span]) -> Vec<&str> {
        spans.iter().map(|s| s.surface.as_str()).collect()
    }

    #[test]
    fn table_sentence() {
        let spans = match_entity("Palme d'Or", KELM);
        assert_eq!(spans, vec![Span { start: 26, end: 36, surface: "Palme d'Or".into() }]);
        assert_eq!(surfaces(&match_entity("Pulp Fiction", KELM)), vec!["Pulp Fiction"]);
    }

    #[test]
    fn bracket_fallback() {
        let spans = match_entity("John Doe (born 1990)", "John Doe stars in the film.");
        assert_eq!(spans, vec![Span { start: 0, end: 8, surface: "John Doe".into() }]);
        // fallback is skipped when the full name is present
        let s = "John Doe (born 1990) and John Doe.";
        assert_eq!(surfaces(&match_entity("John Doe (born 1990)", s)), vec!["John Doe (born 1990)"]);
    }

    #[test]
    fn no_match() {
        assert!(match_entity("Berlin", "I was in Paris.").is_empty());
        assert!(match_entity("", "anything").is_empty());
        assert!(match_entity("?!", "anything ?!").is_empty());
        assert!(match_entity("art", "a party").is_empty());
    }

    #[test]
    fn date_branch() {
        let s = "It premiered on 23 May 1994 at Cannes.";
        assert_eq!(
            match_entity("1994-05-23", s),
            vec![Span { start: 16, end: 27, surface: "23 May 1994".into() }]
        );
        assert_eq!(surfaces(&match_entity("May 23, 1994", "Born 1994-05-23.")), vec!["1994-05-23"]);
        assert_eq!(
            surfaces(&match_entity("1994", "From May 23, 1994 until 1995, and in 1994.")),
            vec!["May 23, 1994", "1994"]
        );
        assert!(match_entity("1994-05-23", "On 24 May 1994.").is_empty());
        assert_eq!(surfaces(&match_entity("1994", "On 24 May 1994.")), vec!["24 May 1994"]);
    }

    #[test]
    fn overlapping_occurrences_resolve_leftmost() {
        let spans = match_entity("New York New", "New York New York New");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].range(), 0..12);
        assert_eq!(resolve_leftmost(vec![4..6, 0..2, 0..5, 5..7]), vec![0..5, 5..7]);
    }

    #[test]
    fn parenthetical_shapes() {
        assert_eq!(strip_parenthetical("John Doe (born 1990)"), Some("John Doe"));
        assert_eq!(strip_parenthetical("John Doe (a) (b)"), Some("John Doe (a)"));
        assert_eq!(strip_parenthetical("(born 1990)"), None);
        assert_eq!(strip_parenthetical("John Doe"), None);
        assert_eq!(strip_parenthetical("John Doe(born)"), None);
        assert_eq!(punctuation_affixes("«Über»"), ("«", "»"));
        assert_eq!(punctuation_affixes("Washington, D.C."), ("", "."));
        assert_eq!(punctuation_affixes("?!"), ("", ""));
    }

    #[test]
    fn record_matching() {
        let t = Triple::new("Pulp Fiction", "award received", "Palme d'Or").unwrap();
        let m = match_record(KELM, vec![t.clone()]);
        assert!(m.is_matched());
        assert_eq!(surfaces(&m.entity_spans[&(0, Role::Subject)]), vec!["Pulp Fiction"]);
        assert_eq!(surfaces(&m.entity_spans[&(0, Role::Object)]), vec!["Palme d'Or"]);

        let empty = match_record(KELM, vec![]);
        assert!(empty.entity_spans.is_empty());
        assert!(!empty.is_matched());

        let only_object = match_record("Tarantino won the Palme d'Or.", vec![t]);
        assert!(only_object.is_matched());
        assert_eq!(only_object.populated().count(), 1);
        assert!(only_object.entity_spans[&(0, Role::Subject)].is_empty());
    }

    #[test]
    fn spans_slice_back_to_the_entity() {
        let s = "«PALME D’OR» goes to… Pulp   Fiction!";
        for e in ["Palme d'Or", "pulp fiction"] {
            let spans = match_entity(e, s);
            assert_eq!(spans.len(), 1, "{e}");
            assert!(spans[0].is_valid_for(s));
            assert_eq!(normalize_key(&spans[0].surface), normalize_key(e));
        }
    }
}
