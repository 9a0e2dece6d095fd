//! The experiment pipeline: for each sample, score the original, rank its
//! words once, then perturb and re-score under every configured attack; the
//! defense variant sanitizes between perturbation and re-scoring.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, ScorerSelection, TextSample};
use crate::attacks::{apply_attack, AttackKind};
use crate::defenses::{sanitize_pipeline, Dictionary};
use crate::leet::LeetMap;
use crate::locator::rank_word_toxicity;
use crate::metrics::{build_report, DenominatorMode, EvaluationReport, EvaluationRow};
use crate::scoring::{
    CachedScorer, RemoteScorer, ReqwestTransport, ScoreCache, ScoreResult, Scorer, SystemClock,
    ToxicityCategory,
};
use crate::text::Token;

/// A sample (or sample-attack pair) the run had to give up on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleError {
    pub sample_id: String,
    /// Pipeline stage that failed: `score-original`, `locate`, `perturb`,
    /// `score-perturbed`, or `score-sanitized`.
    pub stage: String,
    pub attack: Option<AttackKind>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct AttackRunOutput {
    pub rows: Vec<EvaluationRow>,
    pub errors: Vec<SampleError>,
}

/// One sanitized (sample, attack) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseRow {
    pub sample_id: String,
    pub attack: AttackKind,
    pub original_text: String,
    pub perturbed_text: String,
    pub sanitized_text: String,
    pub original_result: ScoreResult,
    pub original_category: ToxicityCategory,
    pub sanitized_result: ScoreResult,
    pub sanitized_category: ToxicityCategory,
}

/// Recovery aggregate for one attack: how many originally-Toxic samples the
/// sanitization pipeline brought back to their original category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseReport {
    pub attack: AttackKind,
    pub sample_count: usize,
    pub originally_toxic: usize,
    pub recovered: usize,
    /// Percent of originally-Toxic samples recovered; absent when none were
    /// toxic to begin with.
    pub recovery_rate: Option<f64>,
    /// Sample ids of originally-Toxic samples the pipeline failed to recover.
    pub failures: Vec<String>,
    pub unscored_original: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DefenseRunOutput {
    pub rows: Vec<DefenseRow>,
    pub errors: Vec<SampleError>,
}

/// Everything an `evaluate` run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<EvaluationRow>,
    pub reports: Vec<EvaluationReport>,
    pub errors: Vec<SampleError>,
    pub defense_rows: Vec<DefenseRow>,
    pub defense_reports: Vec<DefenseReport>,
}

/// Rank a sample's words once and keep the usable tokens in rank order.
fn ranked_targets(
    sample: &TextSample,
    locating: &dyn Scorer,
    errors: &mut Vec<SampleError>,
) -> Option<Vec<Token>> {
    match rank_word_toxicity(&sample.text, locating) {
        Ok(ranking) => Some(
            ranking
                .into_iter()
                .filter(|w| !w.removal_unscored)
                .map(|w| w.token)
                .collect(),
        ),
        Err(e) => {
            errors.push(SampleError {
                sample_id: sample.id.clone(),
                stage: "locate".into(),
                attack: None,
                reason: e.to_string(),
            });
            None
        }
    }
}

/// Slice the shared ranking down to the arity the attack consumes.
fn targets_for(kind: AttackKind, ranking: &[Token], k: usize) -> &[Token] {
    let take = kind.target_arity().unwrap_or(k).min(ranking.len());
    &ranking[..take]
}

/// Run every attack over the corpus. The word ranking is computed once per
/// sample and shared across attacks; failures become error tags rather than
/// aborting the run.
pub fn run_attacks(
    samples: &[TextSample],
    attacks: &[AttackKind],
    k: usize,
    locating: &dyn Scorer,
    evaluating: &dyn Scorer,
    map: &LeetMap,
) -> AttackRunOutput {
    let mut output = AttackRunOutput::default();
    for sample in samples {
        let original_result = match evaluating.score(&sample.text) {
            Ok(r) => r,
            Err(e) => {
                output.errors.push(SampleError {
                    sample_id: sample.id.clone(),
                    stage: "score-original".into(),
                    attack: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let Some(ranking) = ranked_targets(sample, locating, &mut output.errors) else {
            continue;
        };

        for &attack in attacks {
            let targets = targets_for(attack, &ranking, k);
            let perturbation = match apply_attack(map, &sample.text, attack, targets) {
                Ok(p) => p,
                Err(e) => {
                    output.errors.push(SampleError {
                        sample_id: sample.id.clone(),
                        stage: "perturb".into(),
                        attack: Some(attack),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let perturbed_result = match evaluating.score(&perturbation.perturbed) {
                Ok(r) => r,
                Err(e) => {
                    output.errors.push(SampleError {
                        sample_id: sample.id.clone(),
                        stage: "score-perturbed".into(),
                        attack: Some(attack),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            output.rows.push(EvaluationRow::new(
                sample.id.clone(),
                attack,
                sample.text.clone(),
                perturbation.perturbed,
                original_result.clone(),
                perturbed_result,
                perturbation.edit_distance,
            ));
        }
    }
    sort_rows(&mut output.rows);
    output
}

/// Run every attack with the sanitization pipeline spliced between
/// perturbation and re-scoring.
pub fn run_defense(
    samples: &[TextSample],
    attacks: &[AttackKind],
    k: usize,
    locating: &dyn Scorer,
    evaluating: &dyn Scorer,
    map: &LeetMap,
    dictionary: &Dictionary,
) -> DefenseRunOutput {
    let mut output = DefenseRunOutput::default();
    for sample in samples {
        let original_result = match evaluating.score(&sample.text) {
            Ok(r) => r,
            Err(e) => {
                output.errors.push(SampleError {
                    sample_id: sample.id.clone(),
                    stage: "score-original".into(),
                    attack: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let Some(ranking) = ranked_targets(sample, locating, &mut output.errors) else {
            continue;
        };

        for &attack in attacks {
            let targets = targets_for(attack, &ranking, k);
            let perturbation = match apply_attack(map, &sample.text, attack, targets) {
                Ok(p) => p,
                Err(e) => {
                    output.errors.push(SampleError {
                        sample_id: sample.id.clone(),
                        stage: "perturb".into(),
                        attack: Some(attack),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let sanitized = sanitize_pipeline(map, &perturbation.perturbed, dictionary);
            let sanitized_result = match evaluating.score(&sanitized) {
                Ok(r) => r,
                Err(e) => {
                    output.errors.push(SampleError {
                        sample_id: sample.id.clone(),
                        stage: "score-sanitized".into(),
                        attack: Some(attack),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            output.rows.push(DefenseRow {
                sample_id: sample.id.clone(),
                attack,
                original_text: sample.text.clone(),
                perturbed_text: perturbation.perturbed,
                sanitized_text: sanitized,
                original_category: original_result.category(),
                original_result: original_result.clone(),
                sanitized_category: sanitized_result.category(),
                sanitized_result,
            });
        }
    }
    output
        .rows
        .sort_by(|a, b| (&a.sample_id, a.attack.as_str()).cmp(&(&b.sample_id, b.attack.as_str())));
    output
}

fn sort_rows(rows: &mut [EvaluationRow]) {
    rows.sort_by(|a, b| (&a.sample_id, a.attack.as_str()).cmp(&(&b.sample_id, b.attack.as_str())));
}

/// Deduplicate and order attacks by their serialized names, the canonical
/// report order (it matches the sorted row files).
fn unique_attacks(attacks: &[AttackKind]) -> Vec<AttackKind> {
    let mut seen = Vec::new();
    for &a in attacks {
        if !seen.contains(&a) {
            seen.push(a);
        }
    }
    seen.sort_by_key(|a| a.as_str());
    seen
}

/// Build one report per attack, in configured order.
pub(crate) fn reports_for(
    rows: &[EvaluationRow],
    attacks: &[AttackKind],
    mode: DenominatorMode,
) -> Vec<EvaluationReport> {
    unique_attacks(attacks)
        .into_iter()
        .map(|attack| {
            let subset: Vec<EvaluationRow> = rows
                .iter()
                .filter(|r| r.attack == attack)
                .cloned()
                .collect();
            build_report(&subset, attack, mode)
        })
        .collect()
}

fn defense_reports_for(rows: &[DefenseRow], attacks: &[AttackKind]) -> Vec<DefenseReport> {
    unique_attacks(attacks)
        .into_iter()
        .map(|attack| {
            let subset: Vec<&DefenseRow> = rows.iter().filter(|r| r.attack == attack).collect();
            let toxic: Vec<&&DefenseRow> = subset
                .iter()
                .filter(|r| r.original_category == ToxicityCategory::Toxic)
                .collect();
            let recovered = toxic
                .iter()
                .filter(|r| r.sanitized_category == r.original_category)
                .count();
            let failures: Vec<String> = toxic
                .iter()
                .filter(|r| r.sanitized_category != r.original_category)
                .map(|r| r.sample_id.clone())
                .collect();
            DefenseReport {
                attack,
                sample_count: subset.len(),
                originally_toxic: toxic.len(),
                recovered,
                recovery_rate: (!toxic.is_empty())
                    .then(|| 100.0 * recovered as f64 / toxic.len() as f64),
                failures,
                unscored_original: subset
                    .iter()
                    .filter(|r| r.original_result.is_unscored())
                    .count(),
            }
        })
        .collect()
}

/// A fully resolved experiment: corpus loaded, scorers built, cache wired.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub samples: Vec<TextSample>,
    pub skipped: Vec<super::SkippedRow>,
    locating: Box<dyn Scorer>,
    evaluating: Box<dyn Scorer>,
    dictionary: Option<Dictionary>,
}

fn build_scorer(
    selection: &ScorerSelection,
    remote: Option<&crate::scoring::ScorerConfig>,
    cache: Option<&Arc<ScoreCache>>,
) -> Result<Box<dyn Scorer>, HarnessError> {
    let scorer: Box<dyn Scorer> = match selection {
        ScorerSelection::Lexicon { lexicon } => {
            let id = format!("lexicon:{}", file_label(lexicon));
            Box::new(crate::scoring::LexiconScorer::from_path(id, lexicon)?)
        }
        ScorerSelection::ThreeClassLexicon {
            hate_lexicon,
            offensive_lexicon,
        } => {
            let id = format!(
                "three-class-lexicon:{}:{}",
                file_label(hate_lexicon),
                file_label(offensive_lexicon)
            );
            Box::new(crate::scoring::ThreeClassLexiconScorer::from_paths(
                id,
                hate_lexicon,
                offensive_lexicon,
            )?)
        }
        ScorerSelection::Perspective { span_annotations } => {
            let config = remote.cloned().unwrap_or_default();
            let scorer = RemoteScorer::new(
                config,
                Arc::new(ReqwestTransport::new()),
                Arc::new(SystemClock::new()),
            )?
            .with_span_annotations(*span_annotations);
            Box::new(scorer)
        }
    };
    Ok(match cache {
        Some(cache) => Box::new(CachedScorer::new(scorer, cache.clone())),
        None => scorer,
    })
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl Experiment {
    pub fn from_config(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let format = config.corpus_format()?;
        let ingested = super::ingest(&config.corpus, format)?;
        let cache = config
            .cache
            .as_deref()
            .map(ScoreCache::open)
            .transpose()?
            .map(Arc::new);
        let locating = build_scorer(
            &config.locating_scorer,
            config.remote.as_ref(),
            cache.as_ref(),
        )?;
        let evaluating = build_scorer(
            &config.evaluating_scorer,
            config.remote.as_ref(),
            cache.as_ref(),
        )?;
        let dictionary = config
            .dictionary
            .as_deref()
            .map(Dictionary::load)
            .transpose()?;
        Ok(Experiment {
            config,
            samples: ingested.samples,
            skipped: ingested.skipped,
            locating,
            evaluating,
            dictionary,
        })
    }

    /// Run attacks (and defenses when a dictionary is configured) over the
    /// loaded corpus.
    pub fn run(&self) -> ExperimentOutcome {
        let map = LeetMap::builtin();
        let attack_output = run_attacks(
            &self.samples,
            &self.config.attacks,
            self.config.locator_k,
            &self.locating,
            &self.evaluating,
            map,
        );
        let reports = reports_for(
            &attack_output.rows,
            &self.config.attacks,
            self.config.denominator_mode,
        );

        let mut errors = attack_output.errors;
        let (defense_rows, defense_reports) = match &self.dictionary {
            Some(dictionary) => {
                let defense_output = run_defense(
                    &self.samples,
                    &self.config.attacks,
                    self.config.locator_k,
                    &self.locating,
                    &self.evaluating,
                    map,
                    dictionary,
                );
                errors.extend(defense_output.errors);
                let reports = defense_reports_for(&defense_output.rows, &self.config.attacks);
                (defense_output.rows, reports)
            }
            None => (Vec::new(), Vec::new()),
        };

        ExperimentOutcome {
            rows: attack_output.rows,
            reports,
            errors,
            defense_rows,
            defense_reports,
        }
    }

    /// Write rows, reports, and errors under the configured output directory;
    /// returns the paths written.
    pub fn write_outputs(&self, outcome: &ExperimentOutcome) -> Result<Vec<PathBuf>, HarnessError> {
        let dir = &self.config.output_dir;
        std::fs::create_dir_all(dir)?;
        let mut written = vec![
            write_jsonl(&dir.join("rows.jsonl"), &outcome.rows)?,
            write_jsonl(&dir.join("reports.jsonl"), &outcome.reports)?,
            write_reports_csv(&dir.join("reports.csv"), &outcome.reports)?,
            write_jsonl(&dir.join("errors.jsonl"), &outcome.errors)?,
        ];
        if !outcome.defense_rows.is_empty() || !outcome.defense_reports.is_empty() {
            written.push(write_jsonl(
                &dir.join("defense_rows.jsonl"),
                &outcome.defense_rows,
            )?);
            written.push(write_jsonl(
                &dir.join("defense_reports.jsonl"),
                &outcome.defense_reports,
            )?);
            written.push(write_defense_reports_csv(
                &dir.join("defense_reports.csv"),
                &outcome.defense_reports,
            )?);
        }
        Ok(written)
    }
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<PathBuf, HarnessError> {
    let mut out = String::new();
    for record in records {
        out.push_str(
            &serde_json::to_string(record)
                .map_err(|e| HarnessError::Io(std::io::Error::other(e)))?,
        );
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(path.to_path_buf())
}

fn opt_cell<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// The flat report table: one CSV row per attack, column names matching the
/// metric names.
pub fn reports_csv(reports: &[EvaluationReport]) -> Result<Vec<u8>, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "attack",
            "sample_count",
            "denominator_mode",
            "mean_change_in_toxicity",
            "category_shift_score",
            "modified_category_shift_score",
            "unscored_original",
            "unscored_perturbed",
            "edit_distance_mean",
            "edit_distance_median",
            "edit_distance_max",
        ])
        .map_err(csv_io)?;
    for r in reports {
        writer
            .write_record([
                r.attack.as_str().to_string(),
                r.sample_count.to_string(),
                r.denominator_mode.to_string(),
                opt_cell(r.mean_change_in_toxicity),
                opt_cell(r.category_shift_score),
                opt_cell(r.modified_category_shift_score),
                r.unscored_original.to_string(),
                r.unscored_perturbed.to_string(),
                opt_cell(r.edit_distance.map(|e| e.mean)),
                opt_cell(r.edit_distance.map(|e| e.median)),
                opt_cell(r.edit_distance.map(|e| e.max)),
            ])
            .map_err(csv_io)?;
    }
    writer
        .into_inner()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e)))
}

fn write_reports_csv(path: &Path, reports: &[EvaluationReport]) -> Result<PathBuf, HarnessError> {
    std::fs::write(path, reports_csv(reports)?)?;
    Ok(path.to_path_buf())
}

pub fn defense_reports_csv(reports: &[DefenseReport]) -> Result<Vec<u8>, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "attack",
            "sample_count",
            "originally_toxic",
            "recovered",
            "recovery_rate",
            "unscored_original",
            "failures",
        ])
        .map_err(csv_io)?;
    for r in reports {
        writer
            .write_record([
                r.attack.as_str().to_string(),
                r.sample_count.to_string(),
                r.originally_toxic.to_string(),
                r.recovered.to_string(),
                opt_cell(r.recovery_rate),
                r.unscored_original.to_string(),
                r.failures.join("|"),
            ])
            .map_err(csv_io)?;
    }
    writer
        .into_inner()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e)))
}

fn write_defense_reports_csv(
    path: &Path,
    reports: &[DefenseReport],
) -> Result<PathBuf, HarnessError> {
    std::fs::write(path, defense_reports_csv(reports)?)?;
    Ok(path.to_path_buf())
}

fn csv_io(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

/// Read back a rows file, validating per line that stored categories match
/// the stored score results.
pub fn load_rows(path: &Path) -> Result<Vec<EvaluationRow>, HarnessError> {
    let data = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, raw) in data.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let row: EvaluationRow = serde_json::from_str(raw).map_err(|e| HarnessError::BadRow {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if !row.is_consistent() {
            return Err(HarnessError::BadRow {
                line: idx + 1,
                reason: format!(
                    "stored categories do not match stored results for sample {:?}",
                    row.sample_id
                ),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Rebuild per-attack reports from stored rows, attacks in first-appearance
/// order.
pub fn rebuild_reports(rows: &[EvaluationRow], mode: DenominatorMode) -> Vec<EvaluationReport> {
    let attacks: Vec<AttackKind> = rows.iter().map(|r| r.attack).collect();
    reports_for(rows, &attacks, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{CountingScorer, LexiconScorer};
    use std::collections::HashMap;

    fn lexicon(pairs: &[(&str, f64)]) -> LexiconScorer {
        LexiconScorer::new(
            "lexicon",
            pairs
                .iter()
                .map(|(w, v)| (w.to_string(), *v))
                .collect::<HashMap<_, _>>(),
        )
        .unwrap()
    }

    fn samples(texts: &[&str]) -> Vec<TextSample> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| TextSample {
                id: format!("s{:02}", i + 1),
                text: t.to_string(),
            })
            .collect()
    }

    #[test]
    fn underscore_attack_shifts_all_toxic_samples() {
        let corpus = samples(&["you are vile", "utterly vile stuff", "vile vile vile"]);
        let scorer = lexicon(&[("vile", 0.9)]);
        let output = run_attacks(
            &corpus,
            &[AttackKind::UnderscoreInsertion],
            1,
            &scorer,
            &scorer,
            LeetMap::builtin(),
        );
        assert_eq!(output.rows.len(), 3);
        assert!(output.errors.is_empty());
        let reports = reports_for(
            &output.rows,
            &[AttackKind::UnderscoreInsertion],
            DenominatorMode::OriginallyToxic,
        );
        assert_eq!(reports[0].category_shift_score, Some(100.0));
    }

    #[test]
    fn rows_are_ordered_by_sample_then_attack() {
        let corpus = samples(&["vile thing", "bad day"]);
        let scorer = lexicon(&[("vile", 0.9), ("bad", 0.8)]);
        let attacks = [AttackKind::UnderscoreInsertion, AttackKind::LeetSpeak];
        let output = run_attacks(&corpus, &attacks, 1, &scorer, &scorer, LeetMap::builtin());
        let keys: Vec<(String, &str)> = output
            .rows
            .iter()
            .map(|r| (r.sample_id.clone(), r.attack.as_str()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn query_budget_with_shared_scorer() {
        // 1 original + N removals + 1 perturbed; the evaluating original
        // query is distinct from the locator's because no cache fronts them.
        let corpus = samples(&["a vile day"]);
        let counting = CountingScorer::new(lexicon(&[("vile", 0.9)]));
        run_attacks(
            &corpus,
            &[AttackKind::UnderscoreInsertion],
            1,
            &counting,
            &counting,
            LeetMap::builtin(),
        );
        // score-original + (1 + 3 locator) + 1 perturbed = 6.
        assert_eq!(counting.queries(), 6);
    }

    #[test]
    fn cold_cache_query_budget_is_two_plus_tokens_per_attack() {
        // With a shared cache the evaluating original query collapses into
        // the locator's: 1 original + N removals + 1 perturbed per attack.
        let dir = tempfile::tempdir().unwrap();
        let cache = std::sync::Arc::new(
            crate::scoring::ScoreCache::open(&dir.path().join("cache.jsonl")).unwrap(),
        );
        let corpus = samples(&["a vile day"]);
        let counting = CountingScorer::new(lexicon(&[("vile", 0.9)]));
        let cached = crate::scoring::CachedScorer::new(&counting, cache);
        run_attacks(
            &corpus,
            &[AttackKind::UnderscoreInsertion],
            1,
            &cached,
            &cached,
            LeetMap::builtin(),
        );
        assert_eq!(counting.queries(), 2 + 3);
    }

    #[test]
    fn row_edit_distances_are_recomputable() {
        let corpus = samples(&["you are vile", "a wretched day"]);
        let scorer = lexicon(&[("vile", 0.9), ("wretched", 0.8)]);
        let output = run_attacks(
            &corpus,
            &[
                AttackKind::ZeroWidthInsertion,
                AttackKind::WhitespaceRemoval,
            ],
            1,
            &scorer,
            &scorer,
            LeetMap::builtin(),
        );
        for row in &output.rows {
            assert_eq!(
                row.edit_distance,
                crate::text::levenshtein(&row.original_text, &row.perturbed_text),
                "row {} {}",
                row.sample_id,
                row.attack
            );
        }
    }

    #[test]
    fn locator_failure_tags_sample_and_continues() {
        struct Refuse;
        impl Scorer for Refuse {
            fn id(&self) -> &str {
                "refuse"
            }
            fn score(&self, text: &str) -> Result<ScoreResult, crate::scoring::ScoringError> {
                if text == "second sample" {
                    Ok(ScoreResult::unscored("needs more training data"))
                } else {
                    Ok(ScoreResult::single(0.9))
                }
            }
        }
        let corpus = samples(&["first sample", "second sample"]);
        let output = run_attacks(
            &corpus,
            &[AttackKind::UnderscoreInsertion],
            1,
            &Refuse,
            &Refuse,
            LeetMap::builtin(),
        );
        assert_eq!(output.rows.len(), 1);
        assert_eq!(output.errors.len(), 1);
        assert_eq!(output.errors[0].sample_id, "s02");
        assert_eq!(output.errors[0].stage, "locate");
    }

    #[test]
    fn defense_recovers_leet_attack() {
        let corpus = samples(&["you are vile"]);
        let scorer = lexicon(&[("vile", 0.9)]);
        let dictionary = Dictionary::new(["you", "are", "vile"].map(String::from)).unwrap();
        let output = run_defense(
            &corpus,
            &[AttackKind::LeetSpeak, AttackKind::ZeroWidthInsertion],
            1,
            &scorer,
            &scorer,
            LeetMap::builtin(),
            &dictionary,
        );
        assert!(output.errors.is_empty());
        let reports = defense_reports_for(
            &output.rows,
            &[AttackKind::LeetSpeak, AttackKind::ZeroWidthInsertion],
        );
        for report in &reports {
            assert_eq!(report.recovery_rate, Some(100.0), "{}", report.attack);
            assert!(report.failures.is_empty());
        }
    }

    #[test]
    fn defense_failures_are_itemized() {
        // Dictionary missing "vile": leet-decoded text autocorrects to
        // nothing useful and the sample stays shifted.
        let corpus = samples(&["you are vile"]);
        let scorer = lexicon(&[("vile", 0.9)]);
        let dictionary = Dictionary::new(["you", "are", "cats"].map(String::from)).unwrap();
        let output = run_defense(
            &corpus,
            &[AttackKind::UnderscoreInsertion],
            1,
            &scorer,
            &scorer,
            LeetMap::builtin(),
            &dictionary,
        );
        let reports = defense_reports_for(&output.rows, &[AttackKind::UnderscoreInsertion]);
        // Underscore defense alone still recovers: "you_are_vile" becomes
        // "you are vile" before autocorrect, and "vile" has no neighbor
        // within distance 2 except... "cats" is distance 4, so it stays.
        assert_eq!(reports[0].recovery_rate, Some(100.0));

        // Now break recovery for real: leet with no usable dictionary and a
        // scorer keyed on the exact word.
        let output = run_defense(
            &corpus,
            &[AttackKind::CompositeZeroWidthLeet],
            1,
            &scorer,
            &scorer,
            LeetMap::builtin(),
            &Dictionary::new(["vole".to_string(), "vale".to_string()]).unwrap(),
        );
        let reports = defense_reports_for(&output.rows, &[AttackKind::CompositeZeroWidthLeet]);
        assert_eq!(reports[0].recovered, 1);
        // zero-width strip + leet decode restore "vile" exactly even though
        // the dictionary is useless, so recovery holds here too.
        assert!(reports[0].failures.is_empty());
    }

    #[test]
    fn rows_round_trip_through_jsonl() {
        let corpus = samples(&["you are vile"]);
        let scorer = lexicon(&[("vile", 0.9)]);
        let output = run_attacks(
            &corpus,
            &[AttackKind::LeetSpeak],
            1,
            &scorer,
            &scorer,
            LeetMap::builtin(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        write_jsonl(&path, &output.rows).unwrap();
        let loaded = load_rows(&path).unwrap();
        assert_eq!(loaded, output.rows);
    }

    #[test]
    fn load_rows_rejects_inconsistent_categories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        let mut row = EvaluationRow::new(
            "s01",
            AttackKind::LeetSpeak,
            "a",
            "b",
            ScoreResult::single(0.9),
            ScoreResult::single(0.1),
            1,
        );
        row.original_category = ToxicityCategory::NonToxic;
        write_jsonl(&path, &[row]).unwrap();
        assert!(matches!(
            load_rows(&path),
            Err(HarnessError::BadRow { line: 1, .. })
        ));
    }
}
