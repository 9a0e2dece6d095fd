//! The black-box scorer abstraction: score results, category thresholding,
//! the deterministic local lexicon scorers, a Perspective-compatible HTTP
//! client, rate limiting, and persistent caching.

mod cache;
mod clock;
mod lexicon;
mod rate_limit;
mod remote;

pub use cache::{CachedScorer, ScoreCache};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use lexicon::{load_lexicon, LexiconScorer, ThreeClassLexiconScorer};
pub use rate_limit::RateLimiter;
pub use remote::{
    HttpResponse, RemoteScorer, ReqwestTransport, ScorerConfig, Transport, TransportError,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A scorer's verdict on one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreResult {
    /// A single toxicity value in `[0, 1]`.
    SingleScore { value: f64 },
    /// Confidence triple of a three-class scorer, each in `[0, 1]`.
    ThreeClass {
        hate: f64,
        offensive: f64,
        neither: f64,
    },
    /// No usable score came back.
    Unscored { reason: String },
}

impl ScoreResult {
    pub fn single(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "score {value} out of range");
        ScoreResult::SingleScore { value }
    }

    pub fn unscored(reason: impl Into<String>) -> Self {
        ScoreResult::Unscored {
            reason: reason.into(),
        }
    }

    pub fn as_single(&self) -> Option<f64> {
        match self {
            ScoreResult::SingleScore { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_unscored(&self) -> bool {
        matches!(self, ScoreResult::Unscored { .. })
    }

    fn kind_name(&self) -> &'static str {
        match self {
            ScoreResult::SingleScore { .. } => "single-score",
            ScoreResult::ThreeClass { .. } => "three-class",
            ScoreResult::Unscored { .. } => "unscored",
        }
    }

    /// Total categorization: dispatches to the thresholding rule matching the
    /// result variant.
    pub fn category(&self) -> ToxicityCategory {
        match self {
            ScoreResult::SingleScore { .. } => categorize_single(self).expect("single-score input"),
            ScoreResult::ThreeClass { .. } => categorize_three(self).expect("three-class input"),
            ScoreResult::Unscored { .. } => ToxicityCategory::Unscored,
        }
    }
}

/// Thresholded toxicity bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToxicityCategory {
    NonToxic,
    MaybeToxic,
    Toxic,
    Unscored,
}

impl ToxicityCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToxicityCategory::NonToxic => "non-toxic",
            ToxicityCategory::MaybeToxic => "maybe-toxic",
            ToxicityCategory::Toxic => "toxic",
            ToxicityCategory::Unscored => "unscored",
        }
    }
}

impl std::fmt::Display for ToxicityCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("payload is {actual} bytes, over the {limit}-byte limit")]
    PayloadTooLarge { actual: usize, limit: usize },
    #[error("API key environment variable {var} is not set")]
    MissingApiKey { var: String },
    #[error("invalid scorer config: {0}")]
    InvalidConfig(String),
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("score cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("expected a {expected} result, got {actual}")]
    WrongResultKind {
        expected: &'static str,
        actual: &'static str,
    },
}

/// Bucket a single-score result.
///
/// `[0, 0.33)` is non-toxic, `[0.33, 0.66)` maybe-toxic, `[0.66, 1]` toxic;
/// the boundaries belong to the upper bucket so the mapping is total.
pub fn categorize_single(result: &ScoreResult) -> Result<ToxicityCategory, ScoringError> {
    match result {
        ScoreResult::SingleScore { value } => Ok(if *value < 0.33 {
            ToxicityCategory::NonToxic
        } else if *value < 0.66 {
            ToxicityCategory::MaybeToxic
        } else {
            ToxicityCategory::Toxic
        }),
        ScoreResult::Unscored { .. } => Ok(ToxicityCategory::Unscored),
        other => Err(ScoringError::WrongResultKind {
            expected: "single-score",
            actual: other.kind_name(),
        }),
    }
}

/// Bucket a three-class result: non-toxic only when `neither` is strictly the
/// highest confidence, toxic otherwise (ties count as toxic).
pub fn categorize_three(result: &ScoreResult) -> Result<ToxicityCategory, ScoringError> {
    match result {
        ScoreResult::ThreeClass {
            hate,
            offensive,
            neither,
        } => Ok(if *neither > *hate && *neither > *offensive {
            ToxicityCategory::NonToxic
        } else {
            ToxicityCategory::Toxic
        }),
        ScoreResult::Unscored { .. } => Ok(ToxicityCategory::Unscored),
        other => Err(ScoringError::WrongResultKind {
            expected: "three-class",
            actual: other.kind_name(),
        }),
    }
}

/// A black-box toxicity scorer.
///
/// Implementations must be safely callable from concurrent workers; `id`
/// identifies the scorer in cache keys and reports.
pub trait Scorer: Send + Sync {
    fn id(&self) -> &str;

    /// Score one text. `Ok(Unscored)` means the scorer answered but carried
    /// no usable score; `Err` is reserved for local contract violations such
    /// as an oversize payload.
    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError>;
}

impl Scorer for Box<dyn Scorer> {
    fn id(&self) -> &str {
        self.as_ref().id()
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        self.as_ref().score(text)
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        (**self).score(text)
    }
}

/// Wrapper that counts queries reaching the inner scorer; used to assert
/// query budgets and cache behavior.
pub struct CountingScorer<S> {
    inner: S,
    queries: std::sync::atomic::AtomicU64,
}

impl<S: Scorer> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        CountingScorer {
            inner,
            queries: std::sync::atomic::AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(std::sync::atomic::Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.queries.store(0, std::sync::atomic::Ordering::SeqCst);
    }
}

impl<S: Scorer> Scorer for CountingScorer<S> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        self.queries
            .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.inner.score(text)
    }
}
