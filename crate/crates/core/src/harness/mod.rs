//! Experiment orchestration: corpus ingestion, configuration, the
//! score, locate, perturb, re-score pipeline, defense evaluation, and
//! persistent outputs.

mod experiment;
mod ingest;

pub use experiment::{
    defense_reports_csv, load_rows, rebuild_reports, reports_csv, run_attacks, run_defense,
    AttackRunOutput, DefenseReport, DefenseRow, DefenseRunOutput, Experiment, ExperimentOutcome,
    SampleError,
};
pub use ingest::{
    infer_format, ingest, write_csv, CorpusFormat, IngestError, IngestReport, SkippedRow,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::AttackKind;
use crate::defenses::DictionaryError;
use crate::metrics::DenominatorMode;
use crate::scoring::{ScorerConfig, ScoringError};

/// One corpus item: a unique id plus its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSample {
    pub id: String,
    pub text: String,
}

/// Which scorer implementation a config slot names.
///
/// Locating and evaluating scorers may differ; word-level attribution needs a
/// single-score scorer even when a three-class scorer does the evaluating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScorerSelection {
    Lexicon {
        lexicon: PathBuf,
    },
    ThreeClassLexicon {
        hate_lexicon: PathBuf,
        offensive_lexicon: PathBuf,
    },
    Perspective {
        #[serde(default)]
        span_annotations: bool,
    },
}

impl ScorerSelection {
    fn is_three_class(&self) -> bool {
        matches!(self, ScorerSelection::ThreeClassLexicon { .. })
    }

    fn resolve_paths(&mut self, base: &Path) {
        match self {
            ScorerSelection::Lexicon { lexicon } => resolve(base, lexicon),
            ScorerSelection::ThreeClassLexicon {
                hate_lexicon,
                offensive_lexicon,
            } => {
                resolve(base, hate_lexicon);
                resolve(base, offensive_lexicon);
            }
            ScorerSelection::Perspective { .. } => {}
        }
    }
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&path);
    }
}

fn default_locator_k() -> usize {
    1
}

fn default_denominator_mode() -> DenominatorMode {
    DenominatorMode::OriginallyToxic
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything one `evaluate` run needs, loadable from a TOML file.
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    /// Corpus format; inferred from the file extension when omitted.
    #[serde(default)]
    pub format: Option<CorpusFormat>,
    pub attacks: Vec<AttackKind>,
    /// How many top-ranked words the leet family perturbs.
    #[serde(default = "default_locator_k")]
    pub locator_k: usize,
    #[serde(default = "default_denominator_mode")]
    pub denominator_mode: DenominatorMode,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Score cache file; omit to run uncached.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    /// Defense dictionary; when present, `evaluate` also runs the
    /// sanitization pipeline and writes defense reports.
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    pub locating_scorer: ScorerSelection,
    pub evaluating_scorer: ScorerSelection,
    /// Remote endpoint settings, used by `perspective` scorer slots.
    #[serde(default)]
    pub remote: Option<ScorerConfig>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("rows file, line {line}: {reason}")]
    BadRow { line: usize, reason: String },
}

impl ExperimentConfig {
    /// Parse a TOML config file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let data = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = toml::from_str(&data)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        resolve(base, &mut config.corpus);
        resolve(base, &mut config.output_dir);
        if let Some(cache) = &mut config.cache {
            resolve(base, cache);
        }
        if let Some(dictionary) = &mut config.dictionary {
            resolve(base, dictionary);
        }
        config.locating_scorer.resolve_paths(base);
        config.evaluating_scorer.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.attacks.is_empty() {
            return Err(HarnessError::Config("attacks must not be empty".into()));
        }
        if self.locator_k == 0 {
            return Err(HarnessError::Config("locator_k must be at least 1".into()));
        }
        if self.locating_scorer.is_three_class() {
            return Err(HarnessError::Config(
                "a three-class scorer cannot locate words; use a single-score locating scorer"
                    .into(),
            ));
        }
        if let Some(remote) = &self.remote {
            remote.validate()?;
        }
        Ok(())
    }

    /// Declared format, or the one inferred from the corpus extension.
    pub fn corpus_format(&self) -> Result<CorpusFormat, HarnessError> {
        match self.format {
            Some(f) => Ok(f),
            None => infer_format(&self.corpus).ok_or_else(|| {
                HarnessError::Config(format!(
                    "cannot infer corpus format from {}; set format = \"jsonl\" or \"csv\"",
                    self.corpus.display()
                ))
            }),
        }
    }
}
