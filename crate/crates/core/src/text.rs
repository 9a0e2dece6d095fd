//! Whitespace tokenization with character-span tracking, token removal, and
//! Levenshtein edit distance.
//!
//! All spans and distances are measured in Unicode scalar values, never bytes:
//! a single homoglyph substitution costs exactly one edit regardless of how
//! many bytes the replacement occupies in UTF-8.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A whitespace-delimited token and its half-open character span `[start, end)`
/// into the source string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Inclusive start, in Unicode scalar values.
    pub start: usize,
    /// Exclusive end, in Unicode scalar values.
    pub end: usize,
}

impl Token {
    /// Length of the token in Unicode scalar values.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// A token whose span does not match the string it is applied to.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("token span [{start}, {end}) is out of bounds for a text of {len} characters")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("token text {expected:?} does not match text {found:?} at span [{start}, {end})")]
    TextMismatch {
        expected: String,
        found: String,
        start: usize,
        end: usize,
    },
}

/// Split `text` on maximal runs of Unicode whitespace.
///
/// Every non-whitespace character is covered by exactly one token span; the
/// spans are disjoint and strictly increasing. Empty input yields no tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    for (i, ch) in text.chars().enumerate() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token {
                    text: std::mem::take(&mut current),
                    start,
                    end: i,
                });
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        let end = start + current.chars().count();
        tokens.push(Token {
            text: current,
            start,
            end,
        });
    }
    tokens
}

/// Check that `token` actually denotes `chars[token.start..token.end]`.
pub(crate) fn validate_token(chars: &[char], token: &Token) -> Result<(), TokenError> {
    if token.start >= token.end || token.end > chars.len() {
        return Err(TokenError::SpanOutOfBounds {
            start: token.start,
            end: token.end,
            len: chars.len(),
        });
    }
    let found: String = chars[token.start..token.end].iter().collect();
    if found != token.text {
        return Err(TokenError::TextMismatch {
            expected: token.text.clone(),
            found,
            start: token.start,
            end: token.end,
        });
    }
    Ok(())
}

/// Delete `token` from `text`, collapsing one adjacent whitespace run so no
/// doubled gap remains.
///
/// The run following the token is removed when present, otherwise the run
/// preceding it; the result tokenizes to the original token list minus the
/// removed occurrence.
pub fn remove_token(text: &str, token: &Token) -> Result<String, TokenError> {
    let chars: Vec<char> = text.chars().collect();
    validate_token(&chars, token)?;

    let mut cut_start = token.start;
    let mut cut_end = token.end;
    if cut_end < chars.len() && chars[cut_end].is_whitespace() {
        while cut_end < chars.len() && chars[cut_end].is_whitespace() {
            cut_end += 1;
        }
    } else {
        while cut_start > 0 && chars[cut_start - 1].is_whitespace() {
            cut_start -= 1;
        }
    }

    let mut out = String::with_capacity(text.len());
    out.extend(&chars[..cut_start]);
    out.extend(&chars[cut_end..]);
    Ok(out)
}

/// Minimum number of single-character insertions, deletions, and substitutions
/// transforming `a` into `b`, over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }

    // Two-row DP, rolling over the shorter string.
    let (outer, inner) = if a.len() >= b.len() {
        (&a, &b)
    } else {
        (&b, &a)
    };
    let mut row: Vec<usize> = (0..=inner.len()).collect();
    for (i, &co) in outer.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &ci) in inner.iter().enumerate() {
            let sub = diag + usize::from(co != ci);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[inner.len()]
}
