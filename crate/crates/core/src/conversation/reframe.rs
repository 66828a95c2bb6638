//! Deterministic negative-self-talk reframing.
//!
//! Three layers, applied in priority order:
//!
//! 1. pinned sentence pairs, matched verbatim and replaced wholesale;
//! 2. frames, multiword patterns such as "never be good at" whose
//!    replacement only reads well as a unit;
//! 3. single absolute terms from the lexicon ("always" to "sometimes").
//!
//! Replacement texts must not themselves contain anything the engine would
//! rewrite. That is checked when a [`Reframer`] is built and is what makes
//! reframing idempotent.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ConversationError;
use crate::emotion::english_absolute_terms;
use crate::lexicon::{find_longest_matches, normalize_entry, Lexicon};

const SHIPPED_SUBSTITUTIONS: &str = include_str!("../../data/substitutions.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinnedPair {
    pub input: String,
    pub output: String,
}

/// File form: `{"terms": {term: replacement}, "frames": {pattern:
/// replacement}, "pinned": [{"input", "output"}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionTable {
    pub terms: BTreeMap<String, String>,
    #[serde(default)]
    pub frames: BTreeMap<String, String>,
    #[serde(default)]
    pub pinned: Vec<PinnedPair>,
}

impl SubstitutionTable {
    pub fn english() -> Self {
        Self::from_json(SHIPPED_SUBSTITUTIONS).expect("shipped substitution table is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, ConversationError> {
        serde_json::from_str(json)
            .map_err(|e| ConversationError::InvalidSubstitutionTable(format!("{e}")))
    }
}

/// An absolute term found in a text. Offsets are byte offsets on `char`
/// boundaries; `text[start..end]` equals `term` up to case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsoluteSpan {
    pub start: usize,
    pub end: usize,
    pub term: String,
    pub replacement: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteKind {
    Pinned,
    Frame,
    Term,
}

/// One planned edit: replace `text[start..end]` with `replacement`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
    pub kind: RewriteKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reframer {
    absolutes: Lexicon,
    table: SubstitutionTable,
    // Lowercased lexicon terms and frame patterns; frames first.
    patterns: Vec<String>,
    replacements: Vec<String>,
    frame_count: usize,
}

impl Reframer {
    /// Builds the engine, checking that every lexicon term has a
    /// replacement and that no replacement contains rewritable text.
    pub fn new(absolutes: Lexicon, table: SubstitutionTable) -> Result<Self, ConversationError> {
        let invalid = ConversationError::InvalidSubstitutionTable;

        let terms: BTreeMap<String, String> = table
            .terms
            .iter()
            .map(|(k, v)| (normalize_entry(k), v.clone()))
            .collect();
        for entry in absolutes.entries() {
            if !terms.contains_key(entry) {
                return Err(invalid(format!("no replacement for absolute term `{entry}`")));
            }
        }
        for key in terms.keys() {
            if !absolutes.contains(key) {
                return Err(invalid(format!("`{key}` is not in the absolute-term lexicon")));
            }
        }

        let mut patterns: Vec<String> = Vec::new();
        let mut replacements: Vec<String> = Vec::new();
        for (pattern, replacement) in &table.frames {
            let pattern = normalize_entry(pattern);
            if pattern.is_empty() || patterns.contains(&pattern) {
                return Err(invalid(format!("empty or duplicate frame `{pattern}`")));
            }
            patterns.push(pattern);
            replacements.push(replacement.clone());
        }
        let frame_count = patterns.len();
        for entry in absolutes.entries() {
            patterns.push(entry.clone());
            replacements.push(terms[entry].clone());
        }

        let reframer = Reframer {
            absolutes,
            table,
            patterns,
            replacements,
            frame_count,
        };

        let outputs = reframer
            .replacements
            .iter()
            .chain(reframer.table.pinned.iter().map(|p| &p.output));
        for output in outputs {
            if !reframer.plan(output).is_empty() {
                return Err(invalid(format!(
                    "replacement `{output}` contains text that would be rewritten again"
                )));
            }
        }
        Ok(reframer)
    }

    pub fn english() -> Self {
        Self::new(english_absolute_terms(), SubstitutionTable::english())
            .expect("shipped lexicon and substitutions are consistent")
    }

    pub fn absolutes(&self) -> &Lexicon {
        &self.absolutes
    }

    pub fn table(&self) -> &SubstitutionTable {
        &self.table
    }

    /// Absolute-term spans only (no frames, no pinned pairs), each with the
    /// case-adjusted replacement it would receive.
    pub fn detect(&self, text: &str) -> Vec<AbsoluteSpan> {
        self.absolutes
            .find_matches(text)
            .into_iter()
            .map(|m| {
                let term = self.absolutes.entries()[m.entry].clone();
                let replacement =
                    match_case(&text[m.start..m.end], &self.replacements[self.frame_count + m.entry]);
                AbsoluteSpan {
                    start: m.start,
                    end: m.end,
                    term,
                    replacement,
                }
            })
            .collect()
    }

    /// Every edit reframing would make, sorted and non-overlapping.
    pub fn plan(&self, text: &str) -> Vec<Rewrite> {
        let mut rewrites: Vec<Rewrite> = Vec::new();

        for pair in &self.table.pinned {
            for (start, _) in text.match_indices(pair.input.as_str()) {
                let end = start + pair.input.len();
                if rewrites.iter().all(|r| end <= r.start || start >= r.end) {
                    rewrites.push(Rewrite {
                        start,
                        end,
                        replacement: pair.output.clone(),
                        kind: RewriteKind::Pinned,
                    });
                }
            }
        }

        let matches = find_longest_matches(text, self.patterns.iter().map(String::as_str));
        for m in matches {
            if rewrites.iter().any(|r| m.start < r.end && r.start < m.end) {
                continue;
            }
            let kind = if m.entry < self.frame_count {
                RewriteKind::Frame
            } else {
                RewriteKind::Term
            };
            rewrites.push(Rewrite {
                start: m.start,
                end: m.end,
                replacement: match_case(&text[m.start..m.end], &self.replacements[m.entry]),
                kind,
            });
        }

        rewrites.sort_by_key(|r| r.start);
        rewrites
    }

    pub fn reframe(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut cursor = 0;
        for r in self.plan(text) {
            out.push_str(&text[cursor..r.start]);
            out.push_str(&r.replacement);
            cursor = r.end;
        }
        out.push_str(&text[cursor..]);
        out
    }
}

/// Convenience wrapper over [`Reframer::detect`].
pub fn detect_absolutes(text: &str, reframer: &Reframer) -> Vec<AbsoluteSpan> {
    reframer.detect(text)
}

/// Applies the letter-casing style of `source` to `replacement`: all-caps
/// stays all-caps, a leading capital stays a leading capital, anything else
/// takes the replacement as written.
fn match_case(source: &str, replacement: &str) -> String {
    let letters: Vec<char> = source.chars().filter(|c| c.is_alphabetic()).collect();
    let all_caps = letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase());
    if all_caps {
        return replacement.to_uppercase();
    }
    if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut chars = replacement.chars();
        if let Some(first) = chars.next() {
            let mut out: String = first.to_uppercase().collect();
            out.push_str(chars.as_str());
            return out;
        }
    }
    String::from(replacement)
}
