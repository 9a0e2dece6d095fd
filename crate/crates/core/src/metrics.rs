//! Attack-effectiveness and distortion metrics over a scored corpus: mean
//! toxicity change, category shift scores, and edit-distance summaries.

use serde::{Deserialize, Serialize};

use crate::attacks::AttackKind;
use crate::scoring::{ScoreResult, ToxicityCategory};

/// One scored (sample, attack) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub sample_id: String,
    pub attack: AttackKind,
    pub original_text: String,
    pub perturbed_text: String,
    pub original_result: ScoreResult,
    pub original_category: ToxicityCategory,
    pub perturbed_result: ScoreResult,
    pub perturbed_category: ToxicityCategory,
    pub edit_distance: usize,
}

impl EvaluationRow {
    /// Build a row, deriving both categories from the stored results.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sample_id: impl Into<String>,
        attack: AttackKind,
        original_text: impl Into<String>,
        perturbed_text: impl Into<String>,
        original_result: ScoreResult,
        perturbed_result: ScoreResult,
        edit_distance: usize,
    ) -> Self {
        EvaluationRow {
            sample_id: sample_id.into(),
            attack,
            original_text: original_text.into(),
            perturbed_text: perturbed_text.into(),
            original_category: original_result.category(),
            perturbed_category: perturbed_result.category(),
            original_result,
            perturbed_result,
            edit_distance,
        }
    }

    /// True when the stored categories match the stored results.
    pub fn is_consistent(&self) -> bool {
        self.original_category == self.original_result.category()
            && self.perturbed_category == self.perturbed_result.category()
    }

    fn originally_toxic(&self) -> bool {
        self.original_category == ToxicityCategory::Toxic
    }

    fn shifted(&self) -> bool {
        self.originally_toxic()
            && matches!(
                self.perturbed_category,
                ToxicityCategory::NonToxic | ToxicityCategory::MaybeToxic
            )
    }
}

/// Which rows count in a shift score's denominator.
///
/// `AllSamples` divides by every row whose original was scoreable;
/// `OriginallyToxic` divides by the rows that started in the toxic bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorMode {
    AllSamples,
    OriginallyToxic,
}

impl DenominatorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenominatorMode::AllSamples => "all-samples",
            DenominatorMode::OriginallyToxic => "originally-toxic",
        }
    }
}

impl std::fmt::Display for DenominatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DenominatorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-samples" => Ok(DenominatorMode::AllSamples),
            "originally-toxic" => Ok(DenominatorMode::OriginallyToxic),
            other => Err(format!(
                "unknown denominator mode {other:?}; expected all-samples or originally-toxic"
            )),
        }
    }
}

/// Rows Unscored on the original text never enter numerators or denominators.
fn denominator(rows: &[EvaluationRow], mode: DenominatorMode) -> usize {
    match mode {
        DenominatorMode::AllSamples => rows
            .iter()
            .filter(|r| r.original_category != ToxicityCategory::Unscored)
            .count(),
        DenominatorMode::OriginallyToxic => rows.iter().filter(|r| r.originally_toxic()).count(),
    }
}

/// Difference of mean original and mean perturbed toxicity over rows where
/// both results are single scores; `None` when no row qualifies.
pub fn mean_change_in_toxicity(rows: &[EvaluationRow]) -> Option<f64> {
    let scored: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            Some((
                r.original_result.as_single()?,
                r.perturbed_result.as_single()?,
            ))
        })
        .collect();
    if scored.is_empty() {
        return None;
    }
    let n = scored.len() as f64;
    let mean_original: f64 = scored.iter().map(|(o, _)| o).sum::<f64>() / n;
    let mean_perturbed: f64 = scored.iter().map(|(_, p)| p).sum::<f64>() / n;
    Some(mean_original - mean_perturbed)
}

/// Percentage of rows that left the Toxic bucket for another scored bucket.
pub fn category_shift_score(rows: &[EvaluationRow], mode: DenominatorMode) -> Option<f64> {
    let denom = denominator(rows, mode);
    if denom == 0 {
        return None;
    }
    let shifted = rows.iter().filter(|r| r.shifted()).count();
    Some(100.0 * shifted as f64 / denom as f64)
}

/// Category shift plus originally-Toxic rows the scorer could no longer score
/// at all.
pub fn modified_category_shift_score(rows: &[EvaluationRow], mode: DenominatorMode) -> Option<f64> {
    let denom = denominator(rows, mode);
    if denom == 0 {
        return None;
    }
    let shifted_or_lost = rows
        .iter()
        .filter(|r| r.shifted() || (r.originally_toxic() && r.perturbed_result.is_unscored()))
        .count();
    Some(100.0 * shifted_or_lost as f64 / denom as f64)
}

/// Mean, median, and max of per-row edit distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditDistanceSummary {
    pub mean: f64,
    pub median: f64,
    pub max: usize,
}

pub fn edit_distance_stats(rows: &[EvaluationRow]) -> Option<EditDistanceSummary> {
    if rows.is_empty() {
        return None;
    }
    let mut distances: Vec<usize> = rows.iter().map(|r| r.edit_distance).collect();
    distances.sort_unstable();
    let n = distances.len();
    let mean = distances.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 {
        distances[n / 2] as f64
    } else {
        (distances[n / 2 - 1] + distances[n / 2]) as f64 / 2.0
    };
    Some(EditDistanceSummary {
        mean,
        median,
        max: distances[n - 1],
    })
}

/// Per-attack aggregate of every metric above. Absent fields mean the metric
/// was undefined on the input (empty denominator or no scoreable pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub attack: AttackKind,
    pub sample_count: usize,
    pub denominator_mode: DenominatorMode,
    pub mean_change_in_toxicity: Option<f64>,
    pub category_shift_score: Option<f64>,
    pub modified_category_shift_score: Option<f64>,
    pub unscored_original: usize,
    pub unscored_perturbed: usize,
    pub edit_distance: Option<EditDistanceSummary>,
}

/// Assemble the report for one attack. Rows must all carry `attack`.
pub fn build_report(
    rows: &[EvaluationRow],
    attack: AttackKind,
    mode: DenominatorMode,
) -> EvaluationReport {
    debug_assert!(rows.iter().all(|r| r.attack == attack));
    EvaluationReport {
        attack,
        sample_count: rows.len(),
        denominator_mode: mode,
        mean_change_in_toxicity: mean_change_in_toxicity(rows),
        category_shift_score: category_shift_score(rows, mode),
        modified_category_shift_score: modified_category_shift_score(rows, mode),
        unscored_original: rows
            .iter()
            .filter(|r| r.original_result.is_unscored())
            .count(),
        unscored_perturbed: rows
            .iter()
            .filter(|r| r.perturbed_result.is_unscored())
            .count(),
        edit_distance: edit_distance_stats(rows),
    }
}
