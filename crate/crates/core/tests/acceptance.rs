//! Acceptance gate: one test per criterion, each printing a PASS line with
//! the measured numbers after its assertions hold.
//!
//! Expected values are frozen from independent oracles that live in this
//! file: a full-matrix Levenshtein DP, exhaustive removal scoring, and
//! direct noisy-or arithmetic over the bundled lexicon.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use garbler::attacks::{
    perturb_remove_whitespace, perturb_typo, perturb_underscore, perturb_zero_width, AttackKind,
    ZERO_WIDTH_SPACE,
};
use garbler::defenses::{strip_zero_width, Dictionary};
use garbler::harness::{run_attacks, run_defense, Experiment, ExperimentConfig, TextSample};
use garbler::leet::LeetMap;
use garbler::locator::rank_word_toxicity;
use garbler::metrics::{
    build_report, category_shift_score, edit_distance_stats, modified_category_shift_score,
    DenominatorMode, EvaluationRow,
};
use garbler::scoring::{
    CachedScorer, CountingScorer, HttpResponse, LexiconScorer, RateLimiter, RemoteScorer,
    ScoreCache, ScoreResult, Scorer, ScorerConfig, ScoringError, ToxicityCategory, Transport,
    TransportError, VirtualClock,
};
use garbler::text::{levenshtein, tokenize};

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn bundled_lexicon() -> HashMap<String, f64> {
    garbler::scoring::load_lexicon(&assets().join("lexicon.tsv")).unwrap()
}

fn bundled_corpus() -> Vec<TextSample> {
    garbler::harness::ingest(
        &assets().join("corpus.jsonl"),
        garbler::harness::CorpusFormat::Jsonl,
    )
    .unwrap()
    .samples
}

fn bundled_scorer() -> LexiconScorer {
    LexiconScorer::new("lexicon:lexicon.tsv", bundled_lexicon()).unwrap()
}

fn bundled_dictionary() -> Dictionary {
    Dictionary::load(&assets().join("dictionary.txt")).unwrap()
}

/// Independent full-matrix Levenshtein, the oracle for the two-row
/// implementation under test.
fn lev_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = (table[i - 1][j] + 1)
                .min(table[i][j - 1] + 1)
                .min(table[i - 1][j - 1] + cost);
        }
    }
    table[a.len()][b.len()]
}

/// Test-side token normalization mirroring the lexicon contract.
fn core_of(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase()
}

/// Direct noisy-or over tokens, the scoring oracle.
fn noisy_or(tokens: &[&str], weights: &HashMap<String, f64>) -> f64 {
    let mut clean = 1.0;
    for t in tokens {
        clean *= 1.0 - weights.get(&core_of(t)).copied().unwrap_or(0.0);
    }
    1.0 - clean
}

fn random_word(rng: &mut StdRng, len: usize) -> String {
    (0..len)
        .map(|_| char::from(b'a' + rng.random_range(0..26u8)))
        .collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: perturbation fidelity on the worked examples
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_perturbation_fidelity() {
    let hate = tokenize("hate");
    assert_eq!(perturb_typo("hate", &hate).unwrap().perturbed, "htae");

    let walks = tokenize("walks");
    assert_eq!(perturb_typo("walks", &walks).unwrap().perturbed, "wklas");

    let fence = "The quick brown fox jumped over the fence.";
    assert_eq!(
        perturb_underscore(fence).perturbed,
        "The_quick_brown_fox_jumped_over_the_fence."
    );
    assert_eq!(
        perturb_remove_whitespace(fence).perturbed,
        "Thequickbrownfoxjumpedoverthefence."
    );

    println!("ACCEPTANCE 1 PASS: all four worked perturbation examples match byte-for-byte");
}

// ---------------------------------------------------------------------------
// Criterion 2: leet table integrity
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_leet_table_integrity() {
    let map = LeetMap::builtin();
    assert_eq!(map.entries().len(), 52, "table must have 52 rows");

    let mut sources = HashSet::new();
    for entry in map.entries() {
        // The official Unicode name in the data file must denote exactly the
        // scalar the row maps to.
        let named = unicode_names2::character(&entry.unicode_name).unwrap_or_else(|| {
            panic!(
                "row {:?}: unknown Unicode name {:?}",
                entry.source, entry.unicode_name
            )
        });
        assert_eq!(
            named, entry.replacement,
            "row {:?}: named scalar differs from mapped scalar",
            entry.source
        );
        assert!(!entry.replacement.is_ascii_alphabetic());
        assert_ne!(entry.replacement, entry.source);
        assert!(
            sources.insert(entry.source),
            "duplicate row {:?}",
            entry.source
        );
        assert_eq!(
            map.inverse(entry.replacement),
            Some(entry.source.to_ascii_lowercase())
        );
    }
    for c in ('a'..='z').chain('A'..='Z') {
        assert!(sources.contains(&c), "missing row for {c:?}");
    }

    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..10_000 {
        let len = rng.random_range(0..24);
        let s: String = (0..len)
            .map(|_| {
                let c = b'a' + rng.random_range(0..26u8);
                if rng.random_bool(0.5) {
                    char::from(c).to_ascii_uppercase()
                } else {
                    char::from(c)
                }
            })
            .collect();
        assert_eq!(map.decode(&map.encode(&s)).to_lowercase(), s.to_lowercase());
    }

    println!("ACCEPTANCE 2 PASS: 52 rows load, match their Unicode names, and round-trip 10000 random strings");
}

// ---------------------------------------------------------------------------
// Criterion 3: Levenshtein oracle equivalence and properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_levenshtein_oracle_equivalence() {
    let mut rng = StdRng::seed_from_u64(3);
    let alphabet = ['a', 'b', 'c', '\u{0430}'];
    let random_string = |rng: &mut StdRng| -> String {
        let len = rng.random_range(0..=12);
        (0..len)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
            .collect()
    };

    for _ in 0..1000 {
        let a = random_string(&mut rng);
        let b = random_string(&mut rng);
        let got = levenshtein(&a, &b);
        assert_eq!(got, lev_oracle(&a, &b), "oracle mismatch on {a:?} vs {b:?}");
        assert_eq!(
            got,
            levenshtein(&b, &a),
            "symmetry broken on {a:?} vs {b:?}"
        );
        assert_eq!(got == 0, a == b);
        let (la, lb) = (a.chars().count(), b.chars().count());
        assert!(got >= la.abs_diff(lb) && got <= la.max(lb));
    }
    for _ in 0..300 {
        let a = random_string(&mut rng);
        let b = random_string(&mut rng);
        let c = random_string(&mut rng);
        assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }
    assert_eq!(levenshtein("kitten", "sitting"), 3);
    assert_eq!(levenshtein("hate", "htae"), 2);

    println!(
        "ACCEPTANCE 3 PASS: 1000 random pairs match the exhaustive DP oracle; property suites hold"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: zero-width arithmetic
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_zero_width_arithmetic() {
    let mut rng = StdRng::seed_from_u64(4);
    for round in 0..200 {
        let n = rng.random_range(2..=20);
        let word = random_word(&mut rng, n);
        let text = format!("before {word} after");
        let target = tokenize(&text)
            .into_iter()
            .find(|t| t.text == word)
            .unwrap();
        let result = perturb_zero_width(&text, &target).unwrap();
        assert_eq!(result.edit_distance, 5 * (n - 1), "word {word:?}");
        assert_eq!(strip_zero_width(&result.perturbed), text);
        assert!(!text.contains(ZERO_WIDTH_SPACE));
        if round < 40 {
            // Cross-check the stored distance against the independent DP.
            assert_eq!(lev_oracle(&text, &result.perturbed), 5 * (n - 1));
        }
    }
    println!("ACCEPTANCE 4 PASS: zero-width edit distance is exactly 5(n-1) and stripping inverts exactly");
}

// ---------------------------------------------------------------------------
// Criterion 5: locator correctness against the brute-force removal oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_locator_correctness() {
    // Distinct weights per vocabulary word so the expected delta order is
    // strict; zero-weight fillers tie exactly and fall back to span order.
    let vocab: Vec<(String, f64)> = (0..10)
        .map(|i| (format!("word{i}"), 0.07 * f64::from(i)))
        .collect();
    let fillers = ["the", "and", "of"];
    let weights: HashMap<String, f64> = vocab.iter().cloned().collect();
    let scorer = CountingScorer::new(LexiconScorer::new("lexicon", weights.clone()).unwrap());

    let mut rng = StdRng::seed_from_u64(5);
    for round in 0..200 {
        // Sample 3..=8 distinct weighted words, then sprinkle fillers.
        let mut pool: Vec<usize> = (0..vocab.len()).collect();
        let count = rng.random_range(3..=8);
        let mut words: Vec<String> = (0..count)
            .map(|_| {
                let pick = rng.random_range(0..pool.len());
                vocab[pool.swap_remove(pick)].0.clone()
            })
            .collect();
        for filler in fillers {
            if rng.random_bool(0.4) {
                let at = rng.random_range(0..=words.len());
                words.insert(at, filler.to_string());
            }
        }
        let text = words.join(" ");
        let tokens = tokenize(&text);

        scorer.reset();
        let ranking = rank_word_toxicity(&text, &scorer).unwrap();
        assert_eq!(
            scorer.queries(),
            1 + tokens.len() as u64,
            "round {round}: query budget"
        );

        // Brute-force oracle: remove each occurrence, rescore directly.
        let token_texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        let original = noisy_or(&token_texts, &weights);
        let mut oracle: Vec<(usize, f64)> = tokens
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let mut rest = token_texts.clone();
                rest.remove(i);
                (i, original - noisy_or(&rest, &weights))
            })
            .collect();
        oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let got: Vec<(usize, f64)> = ranking
            .iter()
            .map(|w| {
                let idx = tokens.iter().position(|t| t == &w.token).unwrap();
                (idx, w.delta)
            })
            .collect();
        assert_eq!(
            got.iter().map(|(i, _)| *i).collect::<Vec<_>>(),
            oracle.iter().map(|(i, _)| *i).collect::<Vec<_>>(),
            "round {round}: ranking order vs oracle on {text:?}"
        );
        for ((gi, gd), (oi, od)) in got.iter().zip(&oracle) {
            assert_eq!(gi, oi);
            assert_eq!(gd, od, "round {round}: delta mismatch on token {gi}");
        }

        // And the ranking equals descending weight order, ties by span.
        let mut by_weight: Vec<usize> = (0..tokens.len()).collect();
        by_weight.sort_by(|&a, &b| {
            let wa = weights
                .get(&core_of(&tokens[a].text))
                .copied()
                .unwrap_or(0.0);
            let wb = weights
                .get(&core_of(&tokens[b].text))
                .copied()
                .unwrap_or(0.0);
            wb.total_cmp(&wa).then(a.cmp(&b))
        });
        assert_eq!(
            got.iter().map(|(i, _)| *i).collect::<Vec<_>>(),
            by_weight,
            "round {round}: weight order on {text:?}"
        );
    }

    // Permuting equal-weight duplicates never changes the selected top word's
    // text.
    let dup = LexiconScorer::new(
        "lexicon",
        HashMap::from([("vile".to_string(), 0.8), ("day".to_string(), 0.2)]),
    )
    .unwrap();
    for text in ["vile day vile", "day vile vile", "vile vile day"] {
        let top = garbler::locator::top_k_toxic_words(text, &dup, 1).unwrap();
        assert_eq!(top[0].text, "vile");
    }

    println!("ACCEPTANCE 5 PASS: 200 random rankings match the removal oracle and weight order; budget is 1+N");
}

// ---------------------------------------------------------------------------
// Criterion 6: metric fixtures
// ---------------------------------------------------------------------------

fn fixture_row(orig: Option<f64>, pert: Option<f64>, d: usize) -> EvaluationRow {
    let make = |v: Option<f64>| match v {
        Some(value) => ScoreResult::single(value),
        None => ScoreResult::unscored("needs more training data"),
    };
    EvaluationRow::new(
        "s",
        AttackKind::UnderscoreInsertion,
        "orig",
        "pert",
        make(orig),
        make(pert),
        d,
    )
}

#[test]
fn criterion_06_metric_fixtures() {
    // The worked 3-row example.
    let rows = vec![
        fixture_row(Some(0.9), Some(0.1), 2),
        fixture_row(Some(0.8), Some(0.7), 2),
        fixture_row(Some(0.7), None, 2),
    ];
    let mode = DenominatorMode::OriginallyToxic;
    let shift = category_shift_score(&rows, mode).unwrap();
    let modified = modified_category_shift_score(&rows, mode).unwrap();
    assert!((shift - 33.333).abs() < 5e-4, "shift {shift}");
    assert!((modified - 66.667).abs() < 5e-4, "modified {modified}");

    // Ten-row golden fixture, hand-enumerated.
    let golden = vec![
        fixture_row(Some(0.90), Some(0.10), 3),
        fixture_row(Some(0.70), Some(0.40), 4),
        fixture_row(Some(0.66), Some(0.66), 2),
        fixture_row(Some(0.80), None, 5),
        fixture_row(Some(0.50), Some(0.20), 1),
        fixture_row(Some(0.33), Some(0.33), 0),
        fixture_row(Some(0.10), Some(0.90), 6),
        fixture_row(Some(0.00), Some(0.00), 0),
        fixture_row(None, Some(0.50), 2),
        fixture_row(Some(0.95), Some(0.30), 7),
    ];
    let report = build_report(&golden, AttackKind::UnderscoreInsertion, mode);
    assert_eq!(report.sample_count, 10);
    assert_eq!(report.unscored_original, 1);
    assert_eq!(report.unscored_perturbed, 1);
    assert!((report.category_shift_score.unwrap() - 60.000).abs() < 5e-4);
    assert!((report.modified_category_shift_score.unwrap() - 80.000).abs() < 5e-4);
    assert!((report.mean_change_in_toxicity.unwrap() - 0.15625).abs() < 5e-4);
    let all = category_shift_score(&golden, DenominatorMode::AllSamples).unwrap();
    let all_modified = modified_category_shift_score(&golden, DenominatorMode::AllSamples).unwrap();
    assert!((all - 33.333).abs() < 5e-4, "all-samples shift {all}");
    assert!((all_modified - 44.444).abs() < 5e-4);
    let edits = edit_distance_stats(&golden).unwrap();
    assert!((edits.mean - 3.0).abs() < 5e-4);
    assert!((edits.median - 2.5).abs() < 5e-4);
    assert_eq!(edits.max, 7);

    // Dominance on 1000 random fixtures.
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..1000 {
        let rows: Vec<EvaluationRow> = (0..rng.random_range(1..=16))
            .map(|_| {
                let orig = rng.random_bool(0.85).then(|| rng.random_range(0.0..=1.0));
                let pert = rng.random_bool(0.85).then(|| rng.random_range(0.0..=1.0));
                fixture_row(orig, pert, rng.random_range(0..40))
            })
            .collect();
        for mode in [
            DenominatorMode::AllSamples,
            DenominatorMode::OriginallyToxic,
        ] {
            if let (Some(p), Some(m)) = (
                category_shift_score(&rows, mode),
                modified_category_shift_score(&rows, mode),
            ) {
                assert!(m >= p, "modified {m} < plain {p}");
            }
        }
    }

    println!("ACCEPTANCE 6 PASS: 3-row and 10-row fixtures reproduce to 3 decimals; dominance holds on 1000 random fixtures");
}

// ---------------------------------------------------------------------------
// Criterion 7: attack effectiveness on the bundled corpus
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_attack_effectiveness_at_desk_scale() {
    let started = Instant::now();
    let corpus = bundled_corpus();
    assert_eq!(corpus.len(), 50);
    let weights = bundled_lexicon();
    let scorer = bundled_scorer();

    // Every bundled sample starts in the Toxic bucket, by the oracle.
    for sample in &corpus {
        let tokens: Vec<&str> = sample.text.split_whitespace().collect();
        assert!(
            noisy_or(&tokens, &weights) >= 0.66,
            "sample {} is not toxic",
            sample.id
        );
    }

    let attacks = [
        AttackKind::UnderscoreInsertion,
        AttackKind::WhitespaceRemoval,
        AttackKind::LeetSpeak,
    ];
    let output = run_attacks(&corpus, &attacks, 1, &scorer, &scorer, LeetMap::builtin());
    assert!(output.errors.is_empty(), "{:?}", output.errors);

    for attack in [
        AttackKind::UnderscoreInsertion,
        AttackKind::WhitespaceRemoval,
    ] {
        let rows: Vec<EvaluationRow> = output
            .rows
            .iter()
            .filter(|r| r.attack == attack)
            .cloned()
            .collect();
        let report = build_report(&rows, attack, DenominatorMode::OriginallyToxic);
        assert_eq!(
            report.category_shift_score,
            Some(100.0),
            "{attack} must shift every sample"
        );
    }

    // Leet shifts exactly the samples whose toxicity is carried by the
    // top-1 word: the rest of the sentence scores below the Toxic cutoff.
    let mut carried = 0;
    for row in output
        .rows
        .iter()
        .filter(|r| r.attack == AttackKind::LeetSpeak)
    {
        let tokens: Vec<&str> = row.original_text.split_whitespace().collect();
        let top = (0..tokens.len())
            .max_by(|&a, &b| {
                let wa = weights.get(&core_of(tokens[a])).copied().unwrap_or(0.0);
                let wb = weights.get(&core_of(tokens[b])).copied().unwrap_or(0.0);
                wa.total_cmp(&wb).then(b.cmp(&a))
            })
            .unwrap();
        let mut rest = tokens.clone();
        rest.remove(top);
        let carried_by_top = noisy_or(&rest, &weights) < 0.66;
        let shifted = row.original_category == ToxicityCategory::Toxic
            && row.perturbed_category != ToxicityCategory::Toxic
            && row.perturbed_category != ToxicityCategory::Unscored;
        assert_eq!(
            shifted, carried_by_top,
            "sample {}: leet shift must match the carried-by-top-1 oracle",
            row.sample_id
        );
        carried += usize::from(carried_by_top);
    }
    assert!(carried > 0);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 7 PASS: underscore and whitespace removal shift 100%; leet shifts all {carried} top-1-carried samples ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: defense recovery on the bundled corpus
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_defense_recovery() {
    let corpus = bundled_corpus();
    let scorer = bundled_scorer();
    let dictionary = bundled_dictionary();
    let map = LeetMap::builtin();

    let exact_attacks = [
        AttackKind::LeetSpeak,
        AttackKind::UnderscoreInsertion,
        AttackKind::ZeroWidthInsertion,
        AttackKind::CompositeUnderscoreLeet,
        AttackKind::CompositeZeroWidthLeet,
    ];
    let output = run_defense(
        &corpus,
        &exact_attacks,
        1,
        &scorer,
        &scorer,
        map,
        &dictionary,
    );
    assert!(output.errors.is_empty());
    for attack in exact_attacks {
        let rows: Vec<_> = output.rows.iter().filter(|r| r.attack == attack).collect();
        assert_eq!(rows.len(), 50);
        let recovered = rows
            .iter()
            .filter(|r| r.sanitized_category == r.original_category)
            .count();
        assert_eq!(
            recovered, 50,
            "{attack}: sanitization must restore every category"
        );
    }

    // Typo: recovery must hold exactly where every typo'd word autocorrects
    // back uniquely; the rest must be itemized as failures.
    let typo = run_defense(
        &corpus,
        &[AttackKind::TypoInsertion],
        1,
        &scorer,
        &scorer,
        map,
        &dictionary,
    );
    let mut expected_failures = Vec::new();
    for row in &typo.rows {
        let originals: Vec<&str> = row.original_text.split_whitespace().collect();
        let perturbed: Vec<&str> = row.perturbed_text.split_whitespace().collect();
        assert_eq!(originals.len(), perturbed.len());
        let qualifies = originals.iter().zip(&perturbed).all(|(o, p)| {
            if o == p {
                return true;
            }
            unique_nearest(&core_of(p), &dictionary) == Some(core_of(o))
        });
        let recovered = row.sanitized_category == row.original_category;
        if qualifies {
            assert!(
                recovered,
                "sample {}: unique-nearest precondition holds but recovery failed",
                row.sample_id
            );
        }
        if !recovered && row.original_category == ToxicityCategory::Toxic {
            expected_failures.push(row.sample_id.clone());
        }
    }
    let reports = garbler::harness::run_defense(
        &corpus,
        &[AttackKind::TypoInsertion],
        1,
        &scorer,
        &scorer,
        map,
        &dictionary,
    );
    let report = defense_report_for(&reports.rows, AttackKind::TypoInsertion);
    assert_eq!(
        report.failures, expected_failures,
        "failures must be itemized"
    );

    println!(
        "ACCEPTANCE 8 PASS: exact-inverse defenses recover 100%; typo recovery holds wherever unique-nearest applies ({} itemized failures)",
        report.failures.len()
    );
}

fn unique_nearest(word: &str, dictionary: &Dictionary) -> Option<String> {
    if dictionary.contains(word) {
        return Some(word.to_string());
    }
    let mut best = usize::MAX;
    let mut winner = None;
    let mut tied = false;
    for entry in dictionary.iter() {
        let d = lev_oracle(word, entry);
        if d < best {
            best = d;
            winner = Some(entry.to_string());
            tied = false;
        } else if d == best {
            tied = true;
        }
    }
    (best <= 2 && !tied).then(|| winner.unwrap())
}

fn defense_report_for(
    rows: &[garbler::harness::DefenseRow],
    attack: AttackKind,
) -> garbler::harness::DefenseReport {
    let toxic: Vec<_> = rows
        .iter()
        .filter(|r| r.attack == attack && r.original_category == ToxicityCategory::Toxic)
        .collect();
    let failures: Vec<String> = toxic
        .iter()
        .filter(|r| r.sanitized_category != r.original_category)
        .map(|r| r.sample_id.clone())
        .collect();
    garbler::harness::DefenseReport {
        attack,
        sample_count: rows.iter().filter(|r| r.attack == attack).count(),
        originally_toxic: toxic.len(),
        recovered: toxic.len() - failures.len(),
        recovery_rate: (!toxic.is_empty())
            .then(|| 100.0 * (toxic.len() - failures.len()) as f64 / toxic.len() as f64),
        failures,
        unscored_original: 0,
    }
}

// ---------------------------------------------------------------------------
// Criterion 9: determinism and cache transparency
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_determinism_and_cache() {
    let dir = tempfile::tempdir().unwrap();

    // Zero inner queries on a warm cache, counted by the instrumented scorer.
    let counting = CountingScorer::new(bundled_scorer());
    let corpus = bundled_corpus();
    let attacks = [AttackKind::UnderscoreInsertion, AttackKind::LeetSpeak];
    let cache_path = dir.path().join("cache.jsonl");
    let first_rows = {
        let cache = Arc::new(ScoreCache::open(&cache_path).unwrap());
        let cached = CachedScorer::new(&counting, cache);
        run_attacks(&corpus, &attacks, 1, &cached, &cached, LeetMap::builtin()).rows
    };
    let cold_queries = counting.queries();
    assert!(cold_queries > 0);
    let second_rows = {
        let cache = Arc::new(ScoreCache::open(&cache_path).unwrap());
        let cached = CachedScorer::new(&counting, cache);
        run_attacks(&corpus, &attacks, 1, &cached, &cached, LeetMap::builtin()).rows
    };
    assert_eq!(
        counting.queries(),
        cold_queries,
        "warm run must issue zero scorer queries"
    );
    assert_eq!(first_rows, second_rows);

    // Full config-driven runs produce byte-identical outputs.
    let config_path = dir.path().join("experiment.toml");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &config_path,
        format!(
            r#"
corpus = "{assets}/corpus.jsonl"
attacks = ["underscore", "leet", "zero-width"]
output_dir = "{out}"
cache = "{cache}"
dictionary = "{assets}/dictionary.txt"

[locating_scorer]
kind = "lexicon"
lexicon = "{assets}/lexicon.tsv"

[evaluating_scorer]
kind = "lexicon"
lexicon = "{assets}/lexicon.tsv"
"#,
            assets = assets().display(),
            out = out_dir.display(),
            cache = dir.path().join("run-cache.jsonl").display(),
        ),
    )
    .unwrap();

    let run = || {
        let config = ExperimentConfig::load(&config_path).unwrap();
        let experiment = Experiment::from_config(config).unwrap();
        let outcome = experiment.run();
        experiment.write_outputs(&outcome).unwrap();
        [
            std::fs::read(out_dir.join("rows.jsonl")).unwrap(),
            std::fs::read(out_dir.join("reports.jsonl")).unwrap(),
            std::fs::read(out_dir.join("reports.csv")).unwrap(),
            std::fs::read(out_dir.join("defense_reports.jsonl")).unwrap(),
        ]
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "warm rerun must be byte-identical");

    println!(
        "ACCEPTANCE 9 PASS: warm-cache rerun is byte-identical and issues zero scorer queries"
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: rate limit and payload guard
// ---------------------------------------------------------------------------

struct RecordingTransport {
    clock: Arc<VirtualClock>,
    admissions: Mutex<Vec<Duration>>,
}

impl Transport for RecordingTransport {
    fn post_json(
        &self,
        _url: &str,
        _body: &serde_json::Value,
    ) -> Result<HttpResponse, TransportError> {
        use garbler::scoring::Clock;
        self.admissions.lock().unwrap().push(self.clock.now());
        Ok(HttpResponse {
            status: 200,
            body: r#"{"attributeScores":{"TOXICITY":{"summaryScore":{"value":0.5}}}}"#.to_string(),
        })
    }
}

#[test]
fn criterion_10_rate_limit_and_payload_guard() {
    let clock = Arc::new(VirtualClock::new());
    let transport = Arc::new(RecordingTransport {
        clock: clock.clone(),
        admissions: Mutex::new(Vec::new()),
    });
    let config = ScorerConfig {
        api_key_env: None,
        qps: 50.0,
        ..ScorerConfig::default()
    };
    let scorer = RemoteScorer::new(config, transport.clone(), clock.clone()).unwrap();

    for i in 0..100 {
        let result = scorer.score(&format!("query number {i}")).unwrap();
        assert_eq!(result, ScoreResult::single(0.5));
    }
    let admissions = transport.admissions.lock().unwrap().clone();
    assert_eq!(admissions.len(), 100);
    let window = Duration::from_secs(1);
    for &start in &admissions {
        let in_window = admissions
            .iter()
            .filter(|&&t| t >= start && t < start + window)
            .count();
        assert!(
            in_window <= 50,
            "{in_window} admissions within 1s of {start:?}"
        );
    }

    // The payload guard refuses oversize inputs locally, with no admission.
    let before = transport.admissions.lock().unwrap().len();
    let oversize = "x".repeat(3001);
    match scorer.score(&oversize) {
        Err(ScoringError::PayloadTooLarge { actual, limit }) => {
            assert_eq!((actual, limit), (3001, 3000));
        }
        other => panic!("expected a local payload error, got {other:?}"),
    }
    assert_eq!(transport.admissions.lock().unwrap().len(), before);

    // RateLimiter admits nothing faster than the configured rate even when
    // driven directly.
    let clock2 = Arc::new(VirtualClock::new());
    let limiter = RateLimiter::new(50.0, 1, clock2.clone());
    for _ in 0..10 {
        limiter.acquire();
    }
    {
        use garbler::scoring::Clock;
        assert!(clock2.now() >= Duration::from_millis(200));
    }

    println!("ACCEPTANCE 10 PASS: at most 50 admissions in any 1-second window; oversize payloads are refused locally");
}
