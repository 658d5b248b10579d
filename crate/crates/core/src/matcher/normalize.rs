use std::ops::Range;

use unicode_categories::UnicodeCategories;

/// Text after lowercasing, punctuation removal and whitespace collapsing,
/// with a map back to the source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalizedText {
    text: String,
    /// Source byte offset of each normalized char.
    offset_map: Vec<usize>,
    /// Byte offset of each normalized char within `text`.
    char_starts: Vec<usize>,
}

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    /// Source byte offset of every normalized char, in order.
    pub fn offset_map(&self) -> &[usize] {
        &self.offset_map
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Byte ranges of the space-separated tokens of the normalized text.
    pub fn tokens(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, b) in self.text.bytes().enumerate() {
            if b == b' ' {
                out.push(start..i);
                start = i + 1;
            }
        }
        if !self.text.is_empty() {
            out.push(start..self.text.len());
        }
        out
    }

    /// Maps a non-empty byte range of the normalized text (on char
    /// boundaries) to the source byte range it came from. The source range
    /// runs from the first contributing char through the end of the last.
    pub fn source_range(&self, source: &str, range: Range<usize>) -> Range<usize> {
        debug_assert!(range.start < range.end && range.end <= self.text.len());
        let first = self.char_index(range.start);
        let last = self.char_index(range.end) - 1;
        let start = self.offset_map[first];
        let last_src = self.offset_map[last];
        let width = source[last_src..].chars().next().map_or(0, char::len_utf8);
        start..last_src + width
    }

    fn char_index(&self, byte: usize) -> usize {
        if byte == self.text.len() {
            return self.char_starts.len();
        }
        self.char_starts
            .binary_search(&byte)
            .expect("range must fall on normalized char boundaries")
    }
}

fn normalize_into(source: &str, mut emit: impl FnMut(char, usize)) {
    let mut pending_space: Option<usize> = None;
    let mut started = false;
    for (offset, ch) in source.char_indices() {
        if ch.is_punctuation() {
            continue;
        }
        if ch.is_whitespace() {
            if started && pending_space.is_none() {
                pending_space = Some(offset);
            }
            continue;
        }
        for lower in ch.to_lowercase() {
            if let Some(at) = pending_space.take() {
                emit(' ', at);
            }
            emit(lower, offset);
        }
        started = true;
    }
}

/// Lowercases, drops every Unicode punctuation character, collapses
/// whitespace runs to one space and trims, remembering where each surviving
/// char came from.
///
/// ```
/// use kgcorpus::matcher::preprocess;
/// let n = preprocess("  A,, B  ");
/// assert_eq!(n.as_str(), "a b");
/// assert_eq!(n.offset_map(), &[2, 5, 6]);
/// ```
pub fn preprocess(source: &str) -> NormalizedText {
    let mut out = NormalizedText {
        text: String::with_capacity(source.len()),
        offset_map: Vec::with_capacity(source.len()),
        char_starts: Vec::with_capacity(source.len()),
    };
    normalize_into(source, |ch, at| {
        out.char_starts.push(out.text.len());
        out.offset_map.push(at);
        out.text.push(ch);
    });
    out
}

/// Same text as [`preprocess`] without the offset bookkeeping. This is the
/// key under which entities are indexed and compared.
pub fn normalize_key(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    normalize_into(source, |ch, _| out.push(ch));
    out
}

/// True when `needle` (normalized, non-empty) occurs in `haystack`
/// (normalized) starting and ending on token boundaries.
pub fn contains_tokens(haystack: &str, needle: &str) -> bool {
    !needle.is_empty() && token_occurrences(haystack, needle).next().is_some()
}

/// Every token-aligned occurrence of `needle` in `haystack`, overlapping ones
/// included, as byte ranges in ascending order.
pub(crate) fn token_occurrences<'a>(
    haystack: &'a str,
    needle: &'a str,
) -> impl Iterator<Item = Range<usize>> + 'a {
    let bytes = haystack.as_bytes();
    let token_starts = std::iter::once(0)
        .chain(
            bytes
                .iter()
                .enumerate()
                .filter(|(_, b)| **b == b' ')
                .map(|(i, _)| i + 1),
        )
        .filter(move |_| !needle.is_empty() && !haystack.is_empty());
    token_starts.filter_map(move |start| {
        let end = start + needle.len();
        let aligned = haystack[start..].starts_with(needle)
            && (end == bytes.len() || bytes[end] == b' ');
        aligned.then_some(start..end)
    })
}
