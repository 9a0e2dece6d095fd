//! Leave-one-out word attribution: rank the words of a text by how much their
//! removal drops the scorer's toxicity.
//!
//! For a text of N tokens the ranking costs exactly 1 + N scorer queries: one
//! for the original, one per word-removed variant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{ScoreResult, Scorer, ScoringError};
use crate::text::{remove_token, tokenize, Token};

/// A token and the toxicity drop its removal caused.
///
/// `delta = score(original) - score(text without token)`; negative deltas
/// (removal raised toxicity) stay in the ranking tail. When the word-removed
/// query itself came back unscored, the entry is flagged and sinks to the
/// bottom with a `-inf` sentinel delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordToxicity {
    pub token: Token,
    pub delta: f64,
    pub removal_unscored: bool,
}

#[derive(Debug, Error)]
pub enum LocatorError {
    #[error("scorer returned no score for the original text: {reason}")]
    OriginalUnscored { reason: String },
    #[error("locating requires a single-score scorer, got a {actual} result")]
    OriginalNotSingleScore { actual: &'static str },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Score the original, then each word-removed variant, and rank tokens by
/// delta descending with ties broken by earlier span.
pub fn rank_word_toxicity(
    text: &str,
    scorer: &dyn Scorer,
) -> Result<Vec<WordToxicity>, LocatorError> {
    let original = match scorer.score(text)? {
        ScoreResult::SingleScore { value } => value,
        ScoreResult::Unscored { reason } => return Err(LocatorError::OriginalUnscored { reason }),
        ScoreResult::ThreeClass { .. } => {
            return Err(LocatorError::OriginalNotSingleScore {
                actual: "three-class",
            })
        }
    };

    let mut ranked = Vec::new();
    for token in tokenize(text) {
        let removed = remove_token(text, &token).expect("token from tokenize is valid");
        let entry = match scorer.score(&removed)? {
            ScoreResult::SingleScore { value } => WordToxicity {
                token,
                delta: original - value,
                removal_unscored: false,
            },
            // An unscorable removal is unattributable; sink it rather than
            // abort and waste the whole query budget.
            _ => WordToxicity {
                token,
                delta: f64::NEG_INFINITY,
                removal_unscored: true,
            },
        };
        ranked.push(entry);
    }

    ranked.sort_by(|a, b| {
        b.delta
            .total_cmp(&a.delta)
            .then(a.token.start.cmp(&b.token.start))
    });
    Ok(ranked)
}

/// The first `k` ranked tokens, excluding flagged unscorable ones.
pub fn top_k_toxic_words(
    text: &str,
    scorer: &dyn Scorer,
    k: usize,
) -> Result<Vec<Token>, LocatorError> {
    assert!(k >= 1, "k must be at least 1");
    Ok(rank_word_toxicity(text, scorer)?
        .into_iter()
        .filter(|w| !w.removal_unscored)
        .take(k)
        .map(|w| w.token)
        .collect())
}
