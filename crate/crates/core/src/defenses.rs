//! Sanitization defenses: per-attack inverse transformations plus the
//! composable pipeline that restores perturbed text before scoring.

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

use crate::attacks::ZERO_WIDTH_SPACE;
use crate::leet::LeetMap;
use crate::text::{levenshtein, tokenize};

/// Word list for autocorrect and word-break, lowercased and whitespace-free.
#[derive(Debug, Clone)]
pub struct Dictionary {
    words: HashSet<String>,
    sorted: Vec<String>,
    max_len: usize,
}

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("failed to read dictionary: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: entry {entry:?} contains whitespace")]
    EntryHasWhitespace { line: usize, entry: String },
    #[error("dictionary has no entries")]
    Empty,
}

impl Dictionary {
    pub fn new(words: impl IntoIterator<Item = String>) -> Result<Self, DictionaryError> {
        let mut set = HashSet::new();
        for (idx, raw) in words.into_iter().enumerate() {
            let word = raw.trim().to_lowercase();
            if word.is_empty() {
                continue;
            }
            if word.chars().any(char::is_whitespace) {
                return Err(DictionaryError::EntryHasWhitespace {
                    line: idx + 1,
                    entry: raw,
                });
            }
            set.insert(word);
        }
        if set.is_empty() {
            return Err(DictionaryError::Empty);
        }
        let mut sorted: Vec<String> = set.iter().cloned().collect();
        sorted.sort();
        let max_len = sorted.iter().map(|w| w.chars().count()).max().unwrap_or(0);
        Ok(Dictionary {
            words: set,
            sorted,
            max_len,
        })
    }

    /// Load one word per line, lowercasing on load.
    pub fn load(path: &Path) -> Result<Self, DictionaryError> {
        let data = std::fs::read_to_string(path)?;
        Self::new(data.lines().map(str::to_string))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// Longest entry, in characters.
    pub fn max_word_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.sorted.iter().map(String::as_str)
    }
}

/// Undo leet substitutions via the inverse table. Letters that were mapped
/// come back lowercase.
pub fn sanitize_leet(map: &LeetMap, text: &str) -> String {
    map.decode(text)
}

/// Remove every zero-width space (U+200B); nothing else changes.
pub fn strip_zero_width(text: &str) -> String {
    text.chars().filter(|&c| c != ZERO_WIDTH_SPACE).collect()
}

/// Replace every underscore by a single space, undoing the underscore attack
/// at the cost of legitimate underscores.
pub fn sanitize_underscores(text: &str) -> String {
    text.chars()
        .map(|c| if c == '_' { ' ' } else { c })
        .collect()
}

/// Strip edge punctuation for dictionary lookup, keeping the affixes so they
/// survive replacement.
fn split_edge_punctuation(token: &str) -> (&str, &str, &str) {
    let core_start = token
        .find(|c: char| !c.is_ascii_punctuation())
        .unwrap_or(token.len());
    let (prefix, rest) = token.split_at(core_start);
    let core_end = rest
        .rfind(|c: char| !c.is_ascii_punctuation())
        .map_or(0, |i| {
            i + rest[i..].chars().next().map_or(0, char::len_utf8)
        });
    let (core, suffix) = rest.split_at(core_end);
    (prefix, core, suffix)
}

fn correct_word(word: &str, dictionary: &Dictionary) -> Option<String> {
    let lowered = word.to_lowercase();
    if dictionary.contains(&lowered) {
        return None;
    }
    let len = lowered.chars().count();
    let mut best_distance = usize::MAX;
    let mut best: Option<&str> = None;
    let mut tied = false;
    for candidate in dictionary.iter() {
        // |len(a) - len(b)| bounds the distance, so distant lengths can't win.
        if candidate.chars().count().abs_diff(len) > 2 {
            continue;
        }
        let d = levenshtein(&lowered, candidate);
        if d < best_distance {
            best_distance = d;
            best = Some(candidate);
            tied = false;
        } else if d == best_distance {
            tied = true;
        }
    }
    match best {
        Some(word) if best_distance <= 2 && !tied => Some(word.to_string()),
        _ => None,
    }
}

/// Replace each out-of-dictionary token by the unique nearest dictionary word
/// when that word is within Levenshtein distance 2; ambiguous or distant
/// tokens stay as they are. Replacements come back lowercase with the token's
/// edge punctuation preserved.
pub fn autocorrect(text: &str, dictionary: &Dictionary) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0usize;
    for token in tokenize(text) {
        out.extend(&chars[cursor..token.start]);
        let (prefix, core, suffix) = split_edge_punctuation(&token.text);
        match correct_word(core, dictionary) {
            Some(correction) if !core.is_empty() => {
                out.push_str(prefix);
                out.push_str(&correction);
                out.push_str(suffix);
            }
            _ => out.push_str(&token.text),
        }
        cursor = token.end;
    }
    out.extend(&chars[cursor..]);
    out
}

/// Segment a whitespace-free string into dictionary words.
///
/// Returns up to `max_results` segmentations, fewest words first, ties in
/// lexicographic order of the word lists; empty when no segmentation exists.
/// Matching is case-insensitive and the returned words are the dictionary
/// entries. Feasibility runs as a prefix-table dynamic program bounded by the
/// longest dictionary word.
pub fn word_break(text: &str, dictionary: &Dictionary, max_results: usize) -> Vec<Vec<String>> {
    if max_results == 0 || text.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let n = chars.len();
    let longest = dictionary.max_word_len().min(n);

    // min/max achievable word counts for every suffix; None = unsegmentable.
    let mut min_words: Vec<Option<usize>> = vec![None; n + 1];
    let mut max_words: Vec<Option<usize>> = vec![None; n + 1];
    min_words[n] = Some(0);
    max_words[n] = Some(0);
    for i in (0..n).rev() {
        for l in 1..=longest.min(n - i) {
            let piece: String = chars[i..i + l].iter().collect();
            if !dictionary.contains(&piece) {
                continue;
            }
            if let Some(rest_min) = min_words[i + l] {
                let candidate = rest_min + 1;
                if min_words[i].is_none_or(|cur| candidate < cur) {
                    min_words[i] = Some(candidate);
                }
            }
            if let Some(rest_max) = max_words[i + l] {
                let candidate = rest_max + 1;
                if max_words[i].is_none_or(|cur| candidate > cur) {
                    max_words[i] = Some(candidate);
                }
            }
        }
    }
    let (Some(fewest), Some(most)) = (min_words[0], max_words[0]) else {
        return Vec::new();
    };

    // Enumerate by exact word count; candidates at one position are prefixes
    // of each other, so increasing length is already lexicographic order.
    struct Search<'a> {
        chars: &'a [char],
        dictionary: &'a Dictionary,
        longest: usize,
        min_words: &'a [Option<usize>],
        max_words: &'a [Option<usize>],
        max_results: usize,
        acc: Vec<String>,
        results: Vec<Vec<String>>,
    }

    impl Search<'_> {
        fn dfs(&mut self, pos: usize, remaining: usize) {
            if self.results.len() == self.max_results {
                return;
            }
            if pos == self.chars.len() {
                if remaining == 0 {
                    self.results.push(self.acc.clone());
                }
                return;
            }
            if remaining == 0 {
                return;
            }
            for l in 1..=self.longest.min(self.chars.len() - pos) {
                let piece: String = self.chars[pos..pos + l].iter().collect();
                if !self.dictionary.contains(&piece) {
                    continue;
                }
                let feasible = match (self.min_words[pos + l], self.max_words[pos + l]) {
                    (Some(lo), Some(hi)) => (lo..=hi).contains(&(remaining - 1)),
                    _ => false,
                };
                if !feasible {
                    continue;
                }
                self.acc.push(piece);
                self.dfs(pos + l, remaining - 1);
                self.acc.pop();
            }
        }
    }

    let mut search = Search {
        chars: &chars,
        dictionary,
        longest,
        min_words: &min_words,
        max_words: &max_words,
        max_results,
        acc: Vec::new(),
        results: Vec::new(),
    };
    for count in fewest..=most {
        search.dfs(0, count);
        if search.results.len() == max_results {
            break;
        }
    }
    search.results
}

/// The combined defense: strip zero-width characters, undo leet, restore
/// underscores to spaces, autocorrect typos, and word-break a single
/// oversized token left by whitespace removal. Every stage is idempotent on
/// clean text.
pub fn sanitize_pipeline(map: &LeetMap, text: &str, dictionary: &Dictionary) -> String {
    let text = strip_zero_width(text);
    let text = sanitize_leet(map, &text);
    let text = sanitize_underscores(&text);
    let text = autocorrect(&text, dictionary);

    // Word-break only fires for one whitespace-free token too long to be a
    // dictionary word, so ordinary prose is never re-segmented.
    let is_single_token = !text.is_empty() && !text.chars().any(char::is_whitespace);
    if is_single_token && text.chars().count() > dictionary.max_word_len() {
        if let Some(best) = word_break(&text, dictionary, 1).into_iter().next() {
            return best.join(" ");
        }
    }
    text
}
