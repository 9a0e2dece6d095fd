//! garbler command line: score corpora, locate toxic words, perturb and
//! defend single texts, and run full evaluation experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 scorer unreachable.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use garbler::attacks::AttackKind;
use garbler::defenses::{sanitize_pipeline, Dictionary};
use garbler::harness::{
    self, infer_format, ingest, CorpusFormat, Experiment, ExperimentConfig, HarnessError,
};
use garbler::leet::LeetMap;
use garbler::locator::{rank_word_toxicity, top_k_toxic_words, LocatorError};
use garbler::metrics::DenominatorMode;
use garbler::scoring::{
    CachedScorer, LexiconScorer, RemoteScorer, ReqwestTransport, ScoreCache, ScoreResult, Scorer,
    ScorerConfig, ScoringError, SystemClock, ThreeClassLexiconScorer,
};

#[derive(Parser)]
#[command(
    name = "garbler",
    version,
    about = "Character-level perturbation attacks and sanitization defenses for black-box toxicity scorers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScorerArgs {
    /// Scorer to use: lexicon, three-class-lexicon, or perspective.
    #[arg(long)]
    scorer: String,
    /// Lexicon file for the lexicon scorer (word<TAB>weight per line).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Hate lexicon for the three-class scorer.
    #[arg(long)]
    hate_lexicon: Option<PathBuf>,
    /// Offensive lexicon for the three-class scorer.
    #[arg(long)]
    offensive_lexicon: Option<PathBuf>,
    /// TOML file with remote scorer settings (endpoint, api_key_env, qps...).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Score cache file to consult and populate.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score a corpus and print an id,score,category table.
    Score {
        /// Corpus file (JSONL with id/text fields, or CSV with id,text columns).
        #[arg(long)]
        input: PathBuf,
        /// Corpus format; inferred from the extension when omitted.
        #[arg(long)]
        format: Option<String>,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Print the leave-one-out word-toxicity ranking for one text.
    Locate {
        #[arg(long)]
        text: String,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Perturb one text and print the result and its edit distance.
    Perturb {
        /// One of: leet, typo, underscore, remove-whitespace, zero-width,
        /// underscore-leet, zero-width-leet.
        #[arg(long)]
        attack: String,
        #[arg(long)]
        text: String,
        /// How many top-ranked words the leet family perturbs.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Lexicon for locating target words; required by targeted attacks.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Sanitize one text through the defense pipeline and print it.
    Defend {
        #[arg(long)]
        text: String,
        /// Dictionary file, one word per line.
        #[arg(long)]
        dictionary: PathBuf,
    },
    /// Run the experiment described by a TOML config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rebuild per-attack reports from a stored rows.jsonl file.
    Report {
        #[arg(long)]
        rows: PathBuf,
        /// all-samples or originally-toxic.
        #[arg(long, default_value = "originally-toxic")]
        denominator: String,
        /// Also write reports.jsonl and reports.csv into this directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Data(String),
    Scorer(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Scorer(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Scorer(m) => m,
        }
    }
}

fn scoring_error(e: ScoringError) -> CliError {
    match e {
        ScoringError::MissingApiKey { .. } => CliError::Scorer(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Scoring(s) => scoring_error(s),
        other => CliError::Data(other.to_string()),
    }
}

fn locator_error(e: LocatorError) -> CliError {
    match e {
        LocatorError::Scoring(s) => scoring_error(s),
        other => CliError::Scorer(other.to_string()),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}

fn build_scorer(args: &ScorerArgs) -> Result<Box<dyn Scorer>, CliError> {
    let scorer: Box<dyn Scorer> = match args.scorer.as_str() {
        "lexicon" => {
            let path = args.lexicon.as_ref().ok_or_else(|| {
                CliError::Usage("--scorer lexicon requires --lexicon <path>".into())
            })?;
            let id = format!("lexicon:{}", file_label(path));
            Box::new(LexiconScorer::from_path(id, path).map_err(scoring_error)?)
        }
        "three-class-lexicon" => {
            let (hate, offensive) = match (&args.hate_lexicon, &args.offensive_lexicon) {
                (Some(h), Some(o)) => (h, o),
                _ => return Err(CliError::Usage(
                    "--scorer three-class-lexicon requires --hate-lexicon and --offensive-lexicon"
                        .into(),
                )),
            };
            let id = format!(
                "three-class-lexicon:{}:{}",
                file_label(hate),
                file_label(offensive)
            );
            Box::new(
                ThreeClassLexiconScorer::from_paths(id, hate, offensive).map_err(scoring_error)?,
            )
        }
        "perspective" => {
            let config = match &args.config {
                Some(path) => {
                    let data = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Data(format!("cannot read {}: {e}", path.display()))
                    })?;
                    toml::from_str::<ScorerConfig>(&data)
                        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
                }
                None => ScorerConfig::default(),
            };
            Box::new(
                RemoteScorer::new(
                    config,
                    Arc::new(ReqwestTransport::new()),
                    Arc::new(SystemClock::new()),
                )
                .map_err(scoring_error)?,
            )
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown scorer {other:?}; expected lexicon, three-class-lexicon, or perspective"
            )))
        }
    };
    Ok(match &args.cache {
        Some(path) => {
            let cache = Arc::new(ScoreCache::open(path).map_err(scoring_error)?);
            Box::new(CachedScorer::new(scorer, cache))
        }
        None => scorer,
    })
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn score_cell(result: &ScoreResult) -> String {
    match result {
        ScoreResult::SingleScore { value } => value.to_string(),
        ScoreResult::ThreeClass {
            hate,
            offensive,
            neither,
        } => format!("hate:{hate}|offensive:{offensive}|neither:{neither}"),
        ScoreResult::Unscored { .. } => String::new(),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Score {
            input,
            format,
            scorer,
        } => {
            let format = parse_format(&input, format.as_deref())?;
            let report = ingest(&input, format).map_err(|e| CliError::Data(e.to_string()))?;
            for skip in &report.skipped {
                eprintln!("skipped line {}: {}", skip.line, skip.reason);
            }
            let scorer = build_scorer(&scorer)?;
            let stdout = std::io::stdout();
            let mut writer = csv::Writer::from_writer(stdout.lock());
            writer
                .write_record(["id", "score", "category"])
                .map_err(|e| CliError::Data(e.to_string()))?;
            for sample in &report.samples {
                let result = scorer.score(&sample.text).map_err(scoring_error)?;
                writer
                    .write_record([
                        sample.id.clone(),
                        score_cell(&result),
                        result.category().to_string(),
                    ])
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
            writer.flush().map_err(|e| CliError::Data(e.to_string()))?;
        }
        Command::Locate { text, scorer } => {
            let scorer = build_scorer(&scorer)?;
            let ranking = rank_word_toxicity(&text, scorer.as_ref()).map_err(locator_error)?;
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "rank\tword\tspan\tdelta");
            for (rank, w) in ranking.iter().enumerate() {
                let delta = if w.removal_unscored {
                    "unscored".to_string()
                } else {
                    format!("{:.6}", w.delta)
                };
                let _ = writeln!(
                    out,
                    "{}\t{}\t[{},{})\t{}",
                    rank + 1,
                    w.token.text,
                    w.token.start,
                    w.token.end,
                    delta
                );
            }
        }
        Command::Perturb {
            attack,
            text,
            k,
            lexicon,
        } => {
            let attack: AttackKind = attack.parse().map_err(CliError::Usage)?;
            if k == 0 {
                return Err(CliError::Usage("--k must be at least 1".into()));
            }
            let targets = if attack.is_whole_text() {
                Vec::new()
            } else {
                let path = lexicon.as_ref().ok_or_else(|| {
                    CliError::Usage(format!(
                        "attack {attack} targets specific words; pass --lexicon <path> to locate them"
                    ))
                })?;
                let id = format!("lexicon:{}", file_label(path));
                let scorer = LexiconScorer::from_path(id, path).map_err(scoring_error)?;
                let take = attack.target_arity().unwrap_or(k).max(1);
                top_k_toxic_words(&text, &scorer, take).map_err(locator_error)?
            };
            let result =
                garbler::attacks::apply_attack(LeetMap::builtin(), &text, attack, &targets)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            println!("{}", result.perturbed);
            println!("edit distance: {}", result.edit_distance);
        }
        Command::Defend { text, dictionary } => {
            let dictionary =
                Dictionary::load(&dictionary).map_err(|e| CliError::Data(e.to_string()))?;
            println!(
                "{}",
                sanitize_pipeline(LeetMap::builtin(), &text, &dictionary)
            );
        }
        Command::Evaluate { config } => {
            let config = ExperimentConfig::load(&config).map_err(harness_error)?;
            let experiment = Experiment::from_config(config).map_err(harness_error)?;
            for skip in &experiment.skipped {
                eprintln!("skipped line {}: {}", skip.line, skip.reason);
            }
            let outcome = experiment.run();
            let written = experiment.write_outputs(&outcome).map_err(harness_error)?;
            for report in &outcome.reports {
                println!(
                    "{}: samples={} shift={} modified={} mean_change={} ({})",
                    report.attack,
                    report.sample_count,
                    fmt_opt_pct(report.category_shift_score),
                    fmt_opt_pct(report.modified_category_shift_score),
                    fmt_opt(report.mean_change_in_toxicity),
                    report.denominator_mode,
                );
            }
            for report in &outcome.defense_reports {
                println!(
                    "defense {}: recovered {}/{} ({})",
                    report.attack,
                    report.recovered,
                    report.originally_toxic,
                    fmt_opt_pct(report.recovery_rate),
                );
            }
            if !outcome.errors.is_empty() {
                eprintln!("{} sample error(s); see errors.jsonl", outcome.errors.len());
            }
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Report {
            rows,
            denominator,
            output,
        } => {
            let mode: DenominatorMode = denominator.parse().map_err(CliError::Usage)?;
            let rows = harness::load_rows(&rows).map_err(harness_error)?;
            let reports = harness::rebuild_reports(&rows, mode);
            let csv_bytes = harness::reports_csv(&reports).map_err(harness_error)?;
            std::io::stdout()
                .write_all(&csv_bytes)
                .map_err(|e| CliError::Data(e.to_string()))?;
            if let Some(dir) = output {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::Data(e.to_string()))?;
                let mut jsonl = String::new();
                for report in &reports {
                    jsonl.push_str(
                        &serde_json::to_string(report)
                            .map_err(|e| CliError::Data(e.to_string()))?,
                    );
                    jsonl.push('\n');
                }
                std::fs::write(dir.join("reports.jsonl"), jsonl)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                std::fs::write(dir.join("reports.csv"), csv_bytes)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn parse_format(input: &Path, format: Option<&str>) -> Result<CorpusFormat, CliError> {
    match format {
        Some(name) => name.parse().map_err(CliError::Usage),
        None => infer_format(input).ok_or_else(|| {
            CliError::Usage(format!(
                "cannot infer corpus format from {}; pass --format jsonl or --format csv",
                input.display()
            ))
        }),
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn fmt_opt_pct(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}%"))
}
