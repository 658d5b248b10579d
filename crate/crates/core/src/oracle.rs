//! Brute-force reference implementations used by tests.
//!
//! These enumerate candidates exhaustively and share no matching code with
//! the production paths beyond normalization and date parsing.

use unicode_categories::UnicodeCategories;

use crate::kg_store::{Role, Triple};
use crate::matcher::{normalize_key, parse_date, preprocess, Span};
use crate::qa_align::{QAItem, Witness};

/// Every substring of the normalized sentence is a candidate; those that
/// start and end on token boundaries and either equal the normalized entity
/// or hold an equal date are kept. Falls back to the entity minus its last
/// `" (…)"` suffix when nothing is found.
pub fn match_entity(entity: &str, sentence: &str) -> Vec<Span> {
    let e = normalize_key(entity);
    if e.is_empty() {
        return Vec::new();
    }
    let norm = preprocess(sentence);
    let k = norm.as_str();
    let offsets = norm.offset_map();
    let bounds: Vec<usize> = k.char_indices().map(|(i, _)| i).chain([k.len()]).collect();
    let char_at = |byte: usize| bounds.iter().position(|&b| b == byte).unwrap();
    let to_source = |i: usize, j: usize| {
        let first = offsets[char_at(i)];
        let last = offsets[char_at(j) - 1];
        let width = sentence[last..].chars().next().unwrap().len_utf8();
        (first, last + width)
    };
    let starts_token = |i: usize| i == 0 || k.as_bytes()[i - 1] == b' ';
    let ends_token = |j: usize| j == k.len() || k.as_bytes()[j] == b' ';

    let substrings = || {
        bounds.iter().flat_map(|&i| bounds.iter().map(move |&j| (i, j))).filter(|&(i, j)| {
            i < j && starts_token(i) && ends_token(j) && k.as_bytes()[i] != b' '
        })
    };

    let mut hits: Vec<(usize, usize)> = Vec::new();
    if let Some(d) = parse_date(entity) {
        let dates: Vec<(usize, usize, _)> = substrings()
            .filter_map(|(i, j)| {
                let (a, b) = to_source(i, j);
                parse_date(&sentence[a..b]).map(|x| (i, j, x))
            })
            .collect();
        for (i, j, x) in &dates {
            let inside_longer = dates.iter().any(|(a, b, _)| a <= i && j <= b && (a, b) != (i, j));
            if !inside_longer && x.same_date(&d) {
                hits.push((*i, *j));
            }
        }
    }
    hits.extend(substrings().filter(|&(i, j)| k[i..j] == e));
    let mut name_used = entity.to_string();

    if hits.is_empty() {
        let trimmed = entity.trim_end();
        let mut name = None;
        if trimmed.ends_with(')') {
            for (p, _) in trimmed.char_indices() {
                if trimmed[p..].starts_with(" (") && !trimmed[..p].trim().is_empty() {
                    name = Some(&trimmed[..p]);
                }
            }
        }
        if let Some(name) = name {
            let n = normalize_key(name);
            hits.extend(substrings().filter(|&(i, j)| !n.is_empty() && k[i..j] == n));
            name_used = name.to_string();
        }
    }

    // leftmost first, longest on ties, skipping anything overlapping
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut floor = 0;
    loop {
        let next = hits
            .iter()
            .filter(|&&(i, _)| i >= floor)
            .min_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
        match next {
            Some(&(i, j)) => {
                chosen.push((i, j));
                floor = j;
            }
            None => break,
        }
    }
    // the name's own opening/closing punctuation, when repeated in place
    let chars: Vec<char> = name_used.trim().chars().collect();
    let lead = chars.iter().take_while(|c| c.is_punctuation()).count();
    let trail = chars.iter().rev().take_while(|c| c.is_punctuation()).count();
    let (prefix, suffix): (String, String) = if lead == chars.len() {
        (String::new(), String::new())
    } else {
        (chars[..lead].iter().collect(), chars[chars.len() - trail..].iter().collect())
    };
    chosen
        .into_iter()
        .map(|(i, j)| {
            let (mut a, mut b) = to_source(i, j);
            if !prefix.is_empty() && a >= prefix.len() && sentence.get(a - prefix.len()..a) == Some(prefix.as_str()) {
                a -= prefix.len();
            }
            if !suffix.is_empty() && sentence.get(b..b + suffix.len()) == Some(suffix.as_str()) {
                b += suffix.len();
            }
            Span { start: a, end: b, surface: sentence[a..b].to_string() }
        })
        .collect()
}

/// `needle` as whole tokens of `haystack`, checked by padding both with
/// spaces.
pub fn mentions(question: &str, entity: &str) -> bool {
    let e = normalize_key(entity);
    !e.is_empty() && format!(" {} ", normalize_key(question)).contains(&format!(" {e} "))
}

/// Scans every triple for a witness without using the entity index.
pub fn find_witness(item: &QAItem, triples: &[Triple]) -> Option<Witness> {
    for answer in item.answers() {
        let a = normalize_key(answer);
        for t in triples {
            for role in [Role::Subject, Role::Object] {
                if normalize_key(t.entity(role)) == a && mentions(item.question(), t.entity(role.other())) {
                    return Some(Witness {
                        triple: t.clone(),
                        answer_role: role,
                        question_entity: t.entity(role.other()).to_string(),
                    });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_on_fixed_cases() {
        let cases = [
            ("Palme d'Or", "Quentin Tarantino won the Palme d'Or in 1994 for Pulp Fiction."),
            ("John Doe (born 1990)", "John Doe stars in the film."),
            ("Berlin", "I was in Paris."),
            ("1994-05-23", "It premiered on 23 May 1994 at Cannes."),
            ("1994", "From May 23, 1994 until 1995, and in 1994."),
            ("New York New", "New York New York New"),
            ("John Doe (born 1990)", "John Doe (born 1990) and John Doe."),
            ("1994-05-23", "On 24 May 1994."),
            ("1994", "On 24 May 1994."),
            ("«Über»", "Das «Über» und Über."),
            ("Washington, D.C.", "Flights to Washington, D.C. and washington dc."),
        ];
        for (e, s) in cases {
            assert_eq!(match_entity(e, s), crate::matcher::match_entity(e, s), "{e} / {s}");
        }
    }
}
