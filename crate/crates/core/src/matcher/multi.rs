use std::collections::HashMap;
use std::ops::Range;

use aho_corasick::{AhoCorasick, MatchKind};

use super::{
    extend_affixes, normalize_key, parse_date, resolve_leftmost, strip_parenthetical,
    CalendarDate, PreparedSentence, Span,
};

struct EntityPlan {
    entity: String,
    primary: Option<usize>,
    fallback: Option<usize>,
    date: Option<CalendarDate>,
}

/// Matches a fixed set of entities against many sentences with one
/// automaton pass per sentence.
///
/// Output is identical to calling [`super::match_entity`] once per entity.
pub struct EntityMatcher {
    automaton: AhoCorasick,
    patterns: Vec<String>,
    plans: Vec<EntityPlan>,
}

impl EntityMatcher {
    pub fn new<S: AsRef<str>>(entities: &[S]) -> Self {
        let mut patterns: Vec<String> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut intern = |p: String| -> Option<usize> {
            if p.is_empty() {
                return None;
            }
            let next = ids.len();
            let id = *ids.entry(p.clone()).or_insert(next);
            if id == patterns.len() {
                patterns.push(p);
            }
            Some(id)
        };
        let plans = entities
            .iter()
            .map(|e| {
                let e = e.as_ref();
                let primary = intern(normalize_key(e));
                EntityPlan {
                    entity: e.to_string(),
                    primary,
                    fallback: primary.and(strip_parenthetical(e)).and_then(|n| intern(normalize_key(n))),
                    date: primary.and(parse_date(e)),
                }
            })
            .collect();
        let automaton = AhoCorasick::builder()
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .expect("entity automaton");
        EntityMatcher { automaton, patterns, plans }
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// Spans for every entity, in the order the entities were given.
    pub fn find_all(&self, sentence: &str) -> Vec<Vec<Span>> {
        let prepared = PreparedSentence::new(sentence);
        let text = prepared.normalized().as_str();
        let bytes = text.as_bytes();
        let mut hits: Vec<Vec<Range<usize>>> = vec![Vec::new(); self.patterns.len()];
        for m in self.automaton.find_overlapping_iter(text) {
            let (start, end) = (m.start(), m.end());
            let left = start == 0 || bytes[start - 1] == b' ';
            let right = end == bytes.len() || bytes[end] == b' ';
            if left && right {
                hits[m.pattern().as_usize()].push(start..end);
            }
        }
        self.plans
            .iter()
            .map(|plan| {
                let Some(primary) = plan.primary else {
                    return Vec::new();
                };
                let mut candidates = match &plan.date {
                    Some(d) => prepared.date_windows(d),
                    None => Vec::new(),
                };
                candidates.extend(hits[primary].iter().cloned());
                let mut name = plan.entity.as_str();
                if candidates.is_empty() {
                    if let Some(fb) = plan.fallback {
                        candidates.extend(hits[fb].iter().cloned());
                        name = strip_parenthetical(name).expect("fallback implies a parenthetical");
                    }
                }
                prepared
                    .to_spans(resolve_leftmost(candidates))
                    .into_iter()
                    .map(|span| extend_affixes(span, sentence, name))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::match_entity;
    use super::*;
    use proptest::prelude::*;

    const WORDS: &[&str] = &[
        "pulp", "fiction", "palme", "d'or", "john", "doe", "(born", "1990)", "23", "may",
        "1994", "1994-05-23", "new", "york", "Won", "the", "in", ",", "a", "an", "«x»", "x", "!",
    ];

    fn phrase(max: usize) -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(WORDS), 1..max).prop_map(|w| w.join(" "))
    }

    #[test]
    fn shared_and_empty_patterns() {
        let m = EntityMatcher::new(&["Pulp Fiction", "pulp fiction!", "", "John Doe (born 1990)"]);
        let out = m.find_all("Pulp Fiction starred John Doe.");
        assert_eq!(out[0], out[1]);
        assert_eq!(out[0].len(), 1);
        assert!(out[2].is_empty());
        assert_eq!(out[3][0].surface, "John Doe");
    }

    proptest! {
        #[test]
        fn agrees_with_per_entity_matching(
            entities in prop::collection::vec(phrase(4), 1..8),
            sentence in phrase(16),
        ) {
            let m = EntityMatcher::new(&entities);
            let all = m.find_all(&sentence);
            for (e, spans) in entities.iter().zip(&all) {
                prop_assert_eq!(spans, &match_entity(e, &sentence));
            }
        }
    }
}
