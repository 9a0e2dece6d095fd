//! The bidirectional leet-speak substitution table: every ASCII letter maps to
//! one visually similar non-ASCII scalar, and every replacement scalar maps
//! back to its canonical lowercase letter.
//!
//! The table ships as a tab-separated data file of
//! `(ASCII letter, U+XXXX, official Unicode name)` records so the character
//! names, not glyphs, remain the ground truth.

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

/// The bundled 52-row mapping, embedded verbatim from `assets/leet_map.tsv`.
pub const BUILTIN_TABLE: &str = include_str!("../assets/leet_map.tsv");

/// One parsed record of the mapping file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeetEntry {
    pub source: char,
    pub replacement: char,
    pub unicode_name: String,
}

#[derive(Debug, Error)]
pub enum LeetMapError {
    #[error("line {line}: expected 3 tab-separated fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: source {letter:?} is not an ASCII letter")]
    BadSource { line: usize, letter: String },
    #[error("line {line}: bad code point {text:?}")]
    BadCodePoint { line: usize, text: String },
    #[error("line {line}: replacement U+{cp:04X} is an ASCII letter")]
    ReplacementInDomain { line: usize, cp: u32 },
    #[error("line {line}: replacement equals its source {letter:?}")]
    FixedPoint { line: usize, letter: char },
    #[error("line {line}: duplicate source {letter:?}")]
    DuplicateSource { line: usize, letter: char },
    #[error("replacement U+{cp:04X} maps back to both {a:?} and {b:?}")]
    AmbiguousInverse { cp: u32, a: char, b: char },
    #[error("expected 52 records covering a-z and A-Z, got {got}")]
    IncompleteDomain { got: usize },
}

/// Forward map over the 52 ASCII letters plus the inverse map back to
/// canonical lowercase.
#[derive(Debug, Clone)]
pub struct LeetMap {
    entries: Vec<LeetEntry>,
    forward: HashMap<char, char>,
    inverse: HashMap<char, char>,
}

impl LeetMap {
    /// Parse and validate a mapping file.
    ///
    /// Rejects tables that do not cover exactly a-z and A-Z, map a letter to
    /// itself or to another ASCII letter, or whose collisions would make the
    /// inverse ambiguous.
    pub fn from_tsv(data: &str) -> Result<Self, LeetMapError> {
        let mut entries = Vec::with_capacity(52);
        let mut forward = HashMap::with_capacity(52);
        let mut inverse: HashMap<char, char> = HashMap::with_capacity(52);

        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 3 {
                return Err(LeetMapError::FieldCount {
                    line,
                    got: fields.len(),
                });
            }
            let mut source_chars = fields[0].chars();
            let source = match (source_chars.next(), source_chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => c,
                _ => {
                    return Err(LeetMapError::BadSource {
                        line,
                        letter: fields[0].to_string(),
                    })
                }
            };
            let replacement = parse_code_point(fields[1]).ok_or(LeetMapError::BadCodePoint {
                line,
                text: fields[1].to_string(),
            })?;
            if replacement.is_ascii_alphabetic() {
                return Err(LeetMapError::ReplacementInDomain {
                    line,
                    cp: replacement as u32,
                });
            }
            if replacement == source {
                return Err(LeetMapError::FixedPoint {
                    line,
                    letter: source,
                });
            }
            if forward.insert(source, replacement).is_some() {
                return Err(LeetMapError::DuplicateSource {
                    line,
                    letter: source,
                });
            }
            // Collisions in the forward map (e.g. 'k' and 'K' sharing one
            // scalar) resolve to the lowercase canonical.
            let canonical = source.to_ascii_lowercase();
            if let Some(&prev) = inverse.get(&replacement) {
                if prev != canonical {
                    return Err(LeetMapError::AmbiguousInverse {
                        cp: replacement as u32,
                        a: prev,
                        b: canonical,
                    });
                }
            } else {
                inverse.insert(replacement, canonical);
            }
            entries.push(LeetEntry {
                source,
                replacement,
                unicode_name: fields[2].to_string(),
            });
        }

        if forward.len() != 52
            || !('a'..='z').all(|c| forward.contains_key(&c))
            || !('A'..='Z').all(|c| forward.contains_key(&c))
        {
            return Err(LeetMapError::IncompleteDomain { got: forward.len() });
        }

        Ok(LeetMap {
            entries,
            forward,
            inverse,
        })
    }

    /// The bundled table. Panics only if the embedded data file is corrupt,
    /// which the test suite rules out.
    pub fn builtin() -> &'static LeetMap {
        static MAP: OnceLock<LeetMap> = OnceLock::new();
        MAP.get_or_init(|| LeetMap::from_tsv(BUILTIN_TABLE).expect("bundled leet_map.tsv is valid"))
    }

    /// All 52 records in file order.
    pub fn entries(&self) -> &[LeetEntry] {
        &self.entries
    }

    pub fn forward(&self, c: char) -> Option<char> {
        self.forward.get(&c).copied()
    }

    pub fn inverse(&self, c: char) -> Option<char> {
        self.inverse.get(&c).copied()
    }

    /// Replace every ASCII letter by its mapped scalar; everything else passes
    /// through. Output length in scalars equals input length.
    pub fn encode(&self, word: &str) -> String {
        word.chars()
            .map(|c| self.forward.get(&c).copied().unwrap_or(c))
            .collect()
    }

    /// Replace every known replacement scalar by its canonical lowercase
    /// letter; everything else passes through.
    pub fn decode(&self, text: &str) -> String {
        text.chars()
            .map(|c| self.inverse.get(&c).copied().unwrap_or(c))
            .collect()
    }
}

fn parse_code_point(field: &str) -> Option<char> {
    let hex = field.strip_prefix("U+")?;
    if hex.len() < 4 {
        return None;
    }
    let cp = u32::from_str_radix(hex, 16).ok()?;
    char::from_u32(cp)
}
