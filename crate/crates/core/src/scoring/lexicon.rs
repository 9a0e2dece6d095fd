//! Deterministic local scorers backed by word-weight lexicons, the offline
//! stand-ins for the remote black boxes.

use std::collections::HashMap;
use std::path::Path;

use super::{ScoreResult, Scorer, ScoringError};
use crate::text::tokenize;

/// Lowercase a token and strip leading/trailing ASCII punctuation, the
/// normalization applied before lexicon lookup.
pub(crate) fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase()
}

fn validate_weights(weights: &HashMap<String, f64>) -> Result<(), ScoringError> {
    for (word, w) in weights {
        if !(0.0..1.0).contains(w) {
            return Err(ScoringError::InvalidLexicon(format!(
                "weight {w} for {word:?} is outside [0, 1)"
            )));
        }
    }
    Ok(())
}

/// Parse a lexicon file: one `word<TAB>weight` per line, weights in `[0, 1)`.
/// Blank lines and `#` comments are skipped.
pub fn load_lexicon(path: &Path) -> Result<HashMap<String, f64>, ScoringError> {
    let data = std::fs::read_to_string(path)?;
    parse_lexicon(&data)
}

fn parse_lexicon(data: &str) -> Result<HashMap<String, f64>, ScoringError> {
    let mut weights = HashMap::new();
    for (idx, raw) in data.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, weight) = line.split_once('\t').ok_or_else(|| {
            ScoringError::InvalidLexicon(format!("line {}: expected word<TAB>weight", idx + 1))
        })?;
        let weight: f64 = weight.trim().parse().map_err(|e| {
            ScoringError::InvalidLexicon(format!("line {}: bad weight: {e}", idx + 1))
        })?;
        weights.insert(word.trim().to_lowercase(), weight);
    }
    validate_weights(&weights)?;
    Ok(weights)
}

/// Bag-of-words scorer with noisy-or aggregation:
/// `score = 1 - prod(1 - weight(token))` over normalized tokens, unknown tokens
/// weighing 0.
///
/// Permutation-invariant over tokens up to floating-point association and
/// strictly increasing in any token's weight.
pub struct LexiconScorer {
    id: String,
    weights: HashMap<String, f64>,
}

impl LexiconScorer {
    pub fn new(id: impl Into<String>, weights: HashMap<String, f64>) -> Result<Self, ScoringError> {
        validate_weights(&weights)?;
        Ok(LexiconScorer {
            id: id.into(),
            weights,
        })
    }

    pub fn from_path(id: impl Into<String>, path: &Path) -> Result<Self, ScoringError> {
        Ok(LexiconScorer {
            id: id.into(),
            weights: load_lexicon(path)?,
        })
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.weights
            .get(&normalize_token(word))
            .copied()
            .unwrap_or(0.0)
    }

    fn noisy_or(&self, text: &str) -> f64 {
        // Multiply in text order so scores are bit-reproducible across runs.
        let mut clean = 1.0f64;
        for token in tokenize(text) {
            clean *= 1.0 - self.weight(&token.text);
        }
        1.0 - clean
    }
}

impl Scorer for LexiconScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        Ok(ScoreResult::single(self.noisy_or(text)))
    }
}

/// Three-class stand-in scorer: noisy-or over a hate lexicon and an offensive
/// lexicon, with `neither` as the joint complement.
pub struct ThreeClassLexiconScorer {
    id: String,
    hate: LexiconScorer,
    offensive: LexiconScorer,
}

impl ThreeClassLexiconScorer {
    pub fn new(
        id: impl Into<String>,
        hate: HashMap<String, f64>,
        offensive: HashMap<String, f64>,
    ) -> Result<Self, ScoringError> {
        let id = id.into();
        Ok(ThreeClassLexiconScorer {
            hate: LexiconScorer::new(format!("{id}/hate"), hate)?,
            offensive: LexiconScorer::new(format!("{id}/offensive"), offensive)?,
            id,
        })
    }

    pub fn from_paths(
        id: impl Into<String>,
        hate_path: &Path,
        offensive_path: &Path,
    ) -> Result<Self, ScoringError> {
        Self::new(id, load_lexicon(hate_path)?, load_lexicon(offensive_path)?)
    }
}

impl Scorer for ThreeClassLexiconScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        let hate = self.hate.noisy_or(text);
        let offensive = self.offensive.noisy_or(text);
        Ok(ScoreResult::ThreeClass {
            hate,
            offensive,
            neither: (1.0 - hate) * (1.0 - offensive),
        })
    }
}
