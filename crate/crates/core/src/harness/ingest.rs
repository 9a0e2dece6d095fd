//! Corpus ingestion from JSONL and CSV files into `TextSample`s.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TextSample;

/// Supported corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!(
                "unknown corpus format {other:?}; expected jsonl or csv"
            )),
        }
    }
}

/// Guess the format from the file extension.
pub fn infer_format(path: &Path) -> Option<CorpusFormat> {
    match path.extension()?.to_str()? {
        "jsonl" | "ndjson" => Some(CorpusFormat::Jsonl),
        "csv" => Some(CorpusFormat::Csv),
        _ => None,
    }
}

/// A row that failed the sample invariants and was skipped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedRow {
    pub line: usize,
    pub reason: String,
}

/// The parsed corpus plus per-line diagnostics for skipped rows.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub samples: Vec<TextSample>,
    pub skipped: Vec<SkippedRow>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { id: String, line: usize },
    #[error("no valid rows in {path}")]
    NoValidRows { path: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Read a corpus file. Rows violating the sample invariants are skipped and
/// reported with their line numbers; duplicate ids abort the ingestion.
pub fn ingest(path: &Path, format: CorpusFormat) -> Result<IngestReport, IngestError> {
    let data = std::fs::read_to_string(path).map_err(|source| IngestError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let report = match format {
        CorpusFormat::Jsonl => ingest_jsonl(&data)?,
        CorpusFormat::Csv => ingest_csv(&data)?,
    };
    if report.samples.is_empty() {
        return Err(IngestError::NoValidRows {
            path: path.display().to_string(),
        });
    }
    Ok(report)
}

fn validate_sample(
    id: Option<String>,
    text: Option<String>,
    line: usize,
    seen: &mut std::collections::HashSet<String>,
) -> Result<Result<TextSample, SkippedRow>, IngestError> {
    let id = id.unwrap_or_default();
    if id.is_empty() {
        return Ok(Err(SkippedRow {
            line,
            reason: "missing or empty id".into(),
        }));
    }
    let text = text.unwrap_or_default();
    if text.trim().is_empty() {
        return Ok(Err(SkippedRow {
            line,
            reason: format!("id {id:?}: text is empty after trimming whitespace"),
        }));
    }
    if !seen.insert(id.clone()) {
        return Err(IngestError::DuplicateId { id, line });
    }
    Ok(Ok(TextSample { id, text }))
}

fn ingest_jsonl(data: &str) -> Result<IngestReport, IngestError> {
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in data.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(e) => {
                skipped.push(SkippedRow {
                    line,
                    reason: format!("invalid JSON: {e}"),
                });
                continue;
            }
        };
        // Tweet-style numeric ids are accepted and stringified.
        let id = match value.get("id") {
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            _ => None,
        };
        let text = value
            .get("text")
            .and_then(serde_json::Value::as_str)
            .map(str::to_string);
        match validate_sample(id, text, line, &mut seen)? {
            Ok(sample) => samples.push(sample),
            Err(skip) => skipped.push(skip),
        }
    }
    Ok(IngestReport { samples, skipped })
}

fn ingest_csv(data: &str) -> Result<IngestReport, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(data.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::MalformedHeader(e.to_string()))?
        .clone();
    let id_idx = headers.iter().position(|h| h == "id");
    let text_idx = headers.iter().position(|h| h == "text");
    let (id_idx, text_idx) = match (id_idx, text_idx) {
        (Some(i), Some(t)) => (i, t),
        _ => {
            return Err(IngestError::MalformedHeader(format!(
                "need columns id and text, found: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            )))
        }
    };

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map_or(0, |p| usize::try_from(p.line()).unwrap_or(0));
        let id = record.get(id_idx).map(str::to_string);
        let text = record.get(text_idx).map(str::to_string);
        match validate_sample(id, text, line, &mut seen)? {
            Ok(sample) => samples.push(sample),
            Err(skip) => skipped.push(skip),
        }
    }
    Ok(IngestReport { samples, skipped })
}

/// Write samples back out as CSV with an `id,text` header.
pub fn write_csv(path: &Path, samples: &[TextSample]) -> Result<(), std::io::Error> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["id", "text"])?;
    for s in samples {
        writer.write_record([&s.id, &s.text])?;
    }
    writer.flush()
}
