//! garbler measures and attacks the robustness of black-box toxicity
//! scorers with character-level text perturbations, and ships the matching
//! sanitization defenses.
//!
//! The pieces, bottom up:
//!
//! - [`text`] -- whitespace tokenization with span tracking, token removal,
//!   and Levenshtein distance over Unicode scalars.
//! - [`leet`] -- the bidirectional letter-to-homoglyph substitution table.
//! - [`attacks`] -- the seven deterministic perturbations.
//! - [`locator`] -- leave-one-out word attribution against any single-score
//!   scorer.
//! - [`scoring`] -- the scorer abstraction: local lexicon scorers, a
//!   Perspective-compatible HTTP client, category thresholds, rate limiting,
//!   and a persistent score cache.
//! - [`defenses`] -- per-attack inverse transformations and the combined
//!   sanitization pipeline.
//! - [`metrics`] -- attack effectiveness and distortion metrics.
//! - [`harness`] -- corpus ingestion, experiment orchestration, and outputs.

pub mod attacks;
pub mod defenses;
pub mod harness;
pub mod leet;
pub mod locator;
pub mod metrics;
pub mod scoring;
pub mod text;

pub use attacks::{apply_attack, AttackKind, PerturbationResult};
pub use defenses::{sanitize_pipeline, Dictionary};
pub use harness::{Experiment, ExperimentConfig, TextSample};
pub use leet::LeetMap;
pub use locator::{rank_word_toxicity, top_k_toxic_words, WordToxicity};
pub use metrics::{DenominatorMode, EvaluationReport, EvaluationRow};
pub use scoring::{LexiconScorer, ScoreResult, Scorer, ToxicityCategory};
pub use text::{levenshtein, tokenize, Token};
