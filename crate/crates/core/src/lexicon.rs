//! Word lists and phrase matching.
//!
//! File format: UTF-8, one lowercase token or multiword phrase per line,
//! blank lines ignored, lines starting with `#` are comments.
//!
//! Matching is case-insensitive, anchored on word boundaries (the characters
//! around a match are not alphanumeric), a space in an entry matches any run
//! of whitespace, and `'` matches both the ASCII and the typographic
//! apostrophe.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    entries: Vec<String>,
}

/// One match of a lexicon entry in a text. Offsets are byte offsets into the
/// searched string and always fall on `char` boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch {
    pub start: usize,
    pub end: usize,
    pub entry: usize,
}

const FIRST_PERSON_SINGULAR: &[&str] = &[
    "i", "me", "my", "mine", "myself", "i'm", "i've", "i'll", "i'd",
];

const SECOND_PERSON: &[&str] = &[
    "you", "your", "yours", "yourself", "yourselves", "you're", "you've", "you'll", "you'd",
];

impl Lexicon {
    pub fn parse(source: &str) -> Self {
        let mut entries: Vec<String> = Vec::new();
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = normalize_entry(line);
            if !entries.contains(&entry) {
                entries.push(entry);
            }
        }
        Self { entries }
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = Lexicon::default();
        for e in entries {
            let entry = normalize_entry(e.as_ref());
            if !entry.is_empty() && !lexicon.entries.contains(&entry) {
                lexicon.entries.push(entry);
            }
        }
        lexicon
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, entry: &str) -> bool {
        let entry = normalize_entry(entry);
        self.entries.contains(&entry)
    }

    /// Non-overlapping matches, scanned left to right, taking the longest
    /// entry that matches at each word start.
    pub fn find_matches(&self, text: &str) -> Vec<PhraseMatch> {
        find_longest_matches(text, self.entries.iter().map(String::as_str))
    }

    pub fn count_matches(&self, text: &str) -> usize {
        self.find_matches(text).len()
    }
}

pub(crate) fn normalize_entry(raw: &str) -> String {
    let mut out = String::new();
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            let c = if c == '\u{2019}' { '\'' } else { c };
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Shared scanner used by [`Lexicon::find_matches`] and the reframing
/// engine, which matches over several entry sets at once.
pub(crate) fn find_longest_matches<'a, I>(text: &str, entries: I) -> Vec<PhraseMatch>
where
    I: IntoIterator<Item = &'a str>,
{
    let entries: Vec<&str> = entries.into_iter().collect();
    let mut matches = Vec::new();
    let mut pos = 0;
    let mut prev: Option<char> = None;
    while pos < text.len() {
        let at_word_start = prev.map_or(true, |p| !p.is_alphanumeric());
        if at_word_start {
            let mut best: Option<PhraseMatch> = None;
            for (idx, entry) in entries.iter().enumerate() {
                if let Some(end) = match_at(text, pos, entry) {
                    if best.map_or(true, |b| end > b.end) {
                        best = Some(PhraseMatch {
                            start: pos,
                            end,
                            entry: idx,
                        });
                    }
                }
            }
            if let Some(m) = best {
                matches.push(m);
                prev = text[..m.end].chars().next_back();
                pos = m.end;
                continue;
            }
        }
        let c = text[pos..].chars().next().expect("pos is a char boundary");
        prev = Some(c);
        pos += c.len_utf8();
    }
    matches
}

/// Returns the end offset if `entry` matches `text` at byte offset `start`.
fn match_at(text: &str, start: usize, entry: &str) -> Option<usize> {
    if entry.is_empty() {
        return None;
    }
    let mut rest = text[start..].char_indices().peekable();
    let mut end = start;
    for ec in entry.chars() {
        if ec == ' ' {
            let mut saw_space = false;
            while let Some(&(i, c)) = rest.peek() {
                if c.is_whitespace() {
                    saw_space = true;
                    end = start + i + c.len_utf8();
                    rest.next();
                } else {
                    break;
                }
            }
            if !saw_space {
                return None;
            }
            continue;
        }
        let (i, c) = rest.next()?;
        if !chars_equal_folded(c, ec) {
            return None;
        }
        end = start + i + c.len_utf8();
    }
    match text[end..].chars().next() {
        Some(next) if next.is_alphanumeric() => None,
        _ => Some(end),
    }
}

fn chars_equal_folded(text_char: char, entry_char: char) -> bool {
    if entry_char == '\'' {
        return text_char == '\'' || text_char == '\u{2019}';
    }
    text_char == entry_char || text_char.to_lowercase().eq(entry_char.to_lowercase())
}

/// Word tokens: maximal runs of alphanumerics and apostrophes containing at
/// least one alphanumeric. Tokens are lowercased with apostrophes
/// normalized to `'`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut has_alnum = false;
    let flush = |current: &mut String, has_alnum: &mut bool, tokens: &mut Vec<String>| {
        let trimmed = current.trim_matches('\'');
        if *has_alnum && !trimmed.is_empty() {
            tokens.push(String::from(trimmed));
        }
        current.clear();
        *has_alnum = false;
    };
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
            has_alnum = true;
        } else if c == '\'' || c == '\u{2019}' {
            current.push('\'');
        } else {
            flush(&mut current, &mut has_alnum, &mut tokens);
        }
    }
    flush(&mut current, &mut has_alnum, &mut tokens);
    tokens
}

pub fn is_first_person_singular(token: &str) -> bool {
    FIRST_PERSON_SINGULAR.contains(&token)
}

pub fn is_second_person(token: &str) -> bool {
    SECOND_PERSON.contains(&token)
}
