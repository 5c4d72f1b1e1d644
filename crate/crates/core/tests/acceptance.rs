//! Acceptance suite. Each test covers one numbered criterion and
//! prints a single pass line; a panic marks the criterion failed.
//!
//! The two `#[ignore]`d tests at the bottom regenerate committed
//! fixtures (the mini-corpus replay cache and the prompt golden
//! files). Run them only when the fixtures are meant to change:
//! `cargo test --test acceptance -- --ignored`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use armetric::corpus::{count_labels, load_corpus, CountTable, Faithfulness, LabelAxis, SchemaVersion};
use armetric::llmgw::{ScriptedBackend, TemplateSet};
use armetric::metrics::{
    agreement_rate, balanced_accuracy, bootstrap_pvalue, f1_macro, pct_important,
    pct_none_important, pct_none_wrong, pct_wrong, BootstrapConfig, ConfusionCounts, PointLabel,
};
use armetric::report::tree_digest;
use armetric::textproc::{word_edit_distance, TokenSeq};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mini_corpus_path() -> PathBuf {
    workspace_root().join("data/mini/corpus.json")
}

fn mini_cache_path() -> PathBuf {
    workspace_root().join("data/mini/cache")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Subjective claims in the mini corpus carry one of these markers, and
/// the scripted model keys its behavior off them.
const MINI_MARKERS: [&str; 4] = ["clearly", "felt", "beautiful", "obviously"];

const MINI_REWRITES: [(&str, &str); 4] = [
    (
        "The discovery clearly terrified her.",
        "Mara carried the key down the stairs.",
    ),
    (
        "The missed train felt like a betrayal.",
        "The 7:40 train did not come one Tuesday.",
    ),
    (
        "Her brother's sale was a beautiful gesture.",
        "Her brother sold three rows of trees without telling her.",
    ),
    (
        "Mara obviously hoped the box held treasure.",
        "A small iron box sat in the flooded cellar.",
    ),
];

fn is_marked(claim: &str) -> bool {
    let lower = claim.to_lowercase();
    MINI_MARKERS.iter().any(|m| lower.contains(m))
}

/// Deterministic model used to record the mini-corpus cache and to
/// drive end-to-end runs: echoes objective claims, rewrites marked
/// ones, answers the detection question from the marker, and flips
/// polarity for synthetic generation.
fn mini_backend() -> Arc<ScriptedBackend> {
    Arc::new(ScriptedBackend::new("mini", |req| {
        let user = req.user.as_str();
        if user.starts_with("Summarize the key reasons") {
            return Some(
                "<item>Interpretation stated as fact.</item>\n<item>Emotion not present in the story.</item>"
                    .to_string(),
            );
        }
        if user.contains("<sentence> tags") {
            let claim = user.rsplit("\nClaim: ").next().unwrap().trim();
            if let Some((_, mapped)) = MINI_REWRITES.iter().find(|(src, _)| *src == claim) {
                return Some(format!("<sentence>{mapped}</sentence>"));
            }
            return Some(format!("<sentence>Clearly, {claim}</sentence>"));
        }
        if user.contains("Is this claim objective to evaluate?") {
            let claim = user
                .split("Consider the following claim in the summary: ")
                .nth(1)
                .unwrap()
                .lines()
                .next()
                .unwrap()
                .trim();
            let answer = if is_marked(claim) { "No" } else { "Yes" };
            return Some(format!("<answer>{answer}</answer>"));
        }
        if user.contains("\nSentence: ") {
            let claim = user.rsplit("\nSentence: ").next().unwrap().trim();
            if let Some((_, mapped)) = MINI_REWRITES.iter().find(|(src, _)| *src == claim) {
                return Some(format!(
                    "The sentence treats an interpretation as a stated fact.\nIt adds an emotion the story never describes.\n<answer>{mapped}</answer>"
                ));
            }
            return Some(format!("<answer>{claim}</answer>"));
        }
        None
    }))
}

fn random_labels(rng: &mut ChaCha8Rng, len: usize) -> Vec<PointLabel> {
    (0..len)
        .map(|_| match rng.gen_range(0..3u8) {
            0 => PointLabel::Important,
            1 => PointLabel::Neutral,
            _ => PointLabel::Wrong,
        })
        .collect()
}

#[test]
fn criterion_01_explanation_metric_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let set_size = rng.gen_range(1..=50);
        let set: Vec<Vec<PointLabel>> = (0..set_size)
            .map(|_| {
                let len = rng.gen_range(1..=8);
                random_labels(&mut rng, len)
            })
            .collect();

        let mut sum_important = 0.0;
        let mut sum_wrong = 0.0;
        let mut none_important = 0usize;
        let mut none_wrong = 0usize;
        for explanation in &set {
            let important = explanation
                .iter()
                .filter(|l| matches!(l, PointLabel::Important))
                .count();
            let wrong = explanation
                .iter()
                .filter(|l| matches!(l, PointLabel::Wrong))
                .count();
            sum_important += important as f64 / explanation.len() as f64;
            sum_wrong += wrong as f64 / explanation.len() as f64;
            if important == 0 {
                none_important += 1;
            }
            if wrong == 0 {
                none_wrong += 1;
            }
        }
        let n = set.len() as f64;
        let cases = [
            (pct_important(&set).unwrap(), 100.0 * sum_important / n),
            (pct_none_important(&set).unwrap(), 100.0 * none_important as f64 / n),
            (pct_wrong(&set).unwrap(), 100.0 * sum_wrong / n),
            (pct_none_wrong(&set).unwrap(), 100.0 * none_wrong as f64 / n),
        ];
        for (got, want) in cases {
            assert!(
                (got - want).abs() <= 1e-9,
                "metric {got} differs from oracle {want}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!("criterion 1: pass - 1000 label sets match the double-loop oracle within 1e-9 in {elapsed:?}");
}

#[test]
fn criterion_02_worked_example() {
    use PointLabel::{Important, Neutral};
    let set = vec![vec![Important, Important, Important, Neutral]];
    assert_eq!(pct_important(&set).unwrap(), 75.0);
    assert_eq!(pct_none_important(&set).unwrap(), 0.0);
    println!("criterion 2: pass - [I,I,I,N] scores exactly 75.0 important and 0.0 none-important");
}

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize, alphabet: usize) -> TokenSeq {
    const WORDS: [&str; 5] = ["north", "river", "stone", "lamp", "gate"];
    let len = rng.gen_range(0..=max_len);
    TokenSeq::from_tokens(
        (0..len)
            .map(|_| WORDS[rng.gen_range(0..alphabet)].to_string())
            .collect(),
    )
}

fn lev_oracle(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]);
        let del = go(a, b, i - 1, j, memo) + 1;
        let ins = go(a, b, i, j - 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, a.len(), b.len(), &mut HashMap::new())
}

#[test]
fn criterion_03_edit_distance_properties() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..10_000 {
        let a = random_seq(&mut rng, 12, 4);
        let b = random_seq(&mut rng, 12, 4);
        let c = random_seq(&mut rng, 12, 4);
        let d_ab = word_edit_distance(&a, &b);
        assert_eq!(d_ab, word_edit_distance(&b, &a), "symmetry");
        assert_eq!(word_edit_distance(&a, &a), 0, "identity");
        assert_eq!(d_ab == 0, a == b, "indiscernibility");
        let d_ac = word_edit_distance(&a, &c);
        let d_bc = word_edit_distance(&b, &c);
        assert!(d_ac <= d_ab + d_bc, "triangle: {d_ac} > {d_ab} + {d_bc}");
    }
    for _ in 0..2_000 {
        let a = random_seq(&mut rng, 8, 3);
        let b = random_seq(&mut rng, 8, 3);
        assert_eq!(
            word_edit_distance(&a, &b),
            lev_oracle(a.tokens(), b.tokens()),
            "oracle mismatch for {a} / {b}"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("criterion 3: pass - metric properties and memoized oracle agree on random sequences in {elapsed:?}");
}

#[test]
fn criterion_04_classification_metric_oracle() {
    // Literal cases with exact decimal expectations.
    let literal: [(usize, usize, usize, usize, f64); 6] = [
        (3, 1, 1, 1, 62.5),
        (1, 0, 0, 1, 100.0),
        (0, 1, 1, 0, 0.0),
        (5, 5, 5, 5, 50.0),
        (2, 0, 2, 2, 75.0),
        (4, 4, 0, 0, 50.0),
    ];
    let mut matrices = Vec::new();
    for (tp, fp, fnn, tn, want) in literal {
        let counts = ConfusionCounts {
            true_positive: tp,
            false_positive: fp,
            false_negative: fnn,
            true_negative: tn,
        };
        assert_eq!(balanced_accuracy(&counts).unwrap(), want, "{counts:?}");
        matrices.push(counts);
    }
    // Power-of-two class sizes keep per-class recall exactly
    // representable, so equality with the oracle is exact.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sizes = [1usize, 2, 4, 8, 16, 32];
    while matrices.len() < 50 {
        let pos = sizes[rng.gen_range(0..sizes.len())];
        let neg = sizes[rng.gen_range(0..sizes.len())];
        let tp = rng.gen_range(0..=pos);
        let tn = rng.gen_range(0..=neg);
        matrices.push(ConfusionCounts {
            true_positive: tp,
            false_positive: neg - tn,
            false_negative: pos - tp,
            true_negative: tn,
        });
    }
    assert_eq!(matrices.len(), 50);
    for counts in &matrices {
        let pos = (counts.true_positive + counts.false_negative) as f64;
        let neg = (counts.true_negative + counts.false_positive) as f64;
        let oracle_bal =
            100.0 * (counts.true_positive as f64 / pos + counts.true_negative as f64 / neg) / 2.0;
        assert_eq!(balanced_accuracy(counts).unwrap(), oracle_bal, "{counts:?}");

        let f1_of = |tp: usize, fp: usize, fnn: usize| {
            let denom = 2 * tp + fp + fnn;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        };
        let oracle_f1 = (f1_of(counts.true_positive, counts.false_positive, counts.false_negative)
            + f1_of(counts.true_negative, counts.false_negative, counts.false_positive))
            / 2.0;
        let got = f1_macro(counts).unwrap();
        assert!((got - oracle_f1).abs() <= 1e-12, "{counts:?}: {got} vs {oracle_f1}");
        assert!((0.0..=1.0).contains(&got));
    }
    // A constant classifier on a two-class gold set scores exactly 50.
    let constant = ConfusionCounts {
        true_positive: 30,
        false_positive: 20,
        false_negative: 0,
        true_negative: 0,
    };
    assert_eq!(balanced_accuracy(&constant).unwrap(), 50.0);
    println!("criterion 4: pass - 50 confusion matrices match the oracle; constant classifier scores exactly 50.0");
}

#[test]
fn criterion_05_bootstrap_sanity() {
    let identical: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
    let config = BootstrapConfig {
        trials: 10_000,
        seed: 5,
        parallelism: 4,
    };
    let started = Instant::now();
    let result = bootstrap_pvalue(&identical, &identical.clone(), &config).unwrap();
    let identical_elapsed = started.elapsed();
    assert!(result.p_value > 0.5, "identical groups gave p {}", result.p_value);
    assert_eq!(result.p_value, 1.0);
    assert!(identical_elapsed < Duration::from_secs(2), "took {identical_elapsed:?}");

    let all_yes = vec![true; 200];
    let all_no = vec![false; 200];
    let started = Instant::now();
    let separated = bootstrap_pvalue(&all_yes, &all_no, &config).unwrap();
    let separated_elapsed = started.elapsed();
    assert!(
        separated.p_value <= 0.001,
        "separated groups gave p {}",
        separated.p_value
    );
    assert!(separated_elapsed < Duration::from_secs(2), "took {separated_elapsed:?}");

    // Exact reproducibility across runs and across parallelism.
    let mut group_a = vec![true; 120];
    group_a.extend(vec![false; 80]);
    let mut group_b = vec![true; 100];
    group_b.extend(vec![false; 100]);
    let with_parallelism = |parallelism: usize| {
        bootstrap_pvalue(
            &group_a,
            &group_b,
            &BootstrapConfig {
                trials: 3_000,
                seed: 9,
                parallelism,
            },
        )
        .unwrap()
        .p_value
    };
    let first = with_parallelism(1);
    assert_eq!(first, with_parallelism(1));
    assert_eq!(first, with_parallelism(4));
    assert!(first > 0.0 && first <= 1.0);
    println!(
        "criterion 5: pass - p = 1.0 identical, p = {} separated, seed-exact across parallelism ({identical_elapsed:?} / {separated_elapsed:?})",
        separated.p_value
    );
}

#[test]
fn criterion_06_agreement_fixture_values() {
    // Synthetic stand-in for the released annotation files: each item
    // carries three labels, with a fixed number of unanimous items.
    fn fixture(total: usize, unanimous: usize) -> Vec<(String, Vec<Faithfulness>)> {
        (0..total)
            .map(|i| {
                let labels = if i < unanimous {
                    vec![Faithfulness::Supported; 3]
                } else {
                    vec![
                        Faithfulness::Supported,
                        Faithfulness::Supported,
                        Faithfulness::Unsupported,
                    ]
                };
                (format!("c{i}"), labels)
            })
            .collect()
    }
    let cases = [
        ("human summaries", 108, 82, 75.93),
        ("model summaries", 554, 403, 72.74),
        ("synthetic objective", 54, 30, 55.56),
        ("synthetic subjective", 64, 17, 26.56),
    ];
    for (name, total, unanimous, want) in cases {
        let rate = agreement_rate(&fixture(total, unanimous), 3).unwrap();
        assert!(
            (rate - want).abs() <= 0.01,
            "{name}: {rate} differs from {want} by more than 0.01"
        );
    }
    println!("criterion 6: pass - fixture agreement rates hit 75.93 / 72.74 / 55.56 / 26.56 within 0.01");
}

#[test]
fn criterion_07_label_count_grid() {
    // Release-shaped corpus: 32 stories, 96 summaries, 568 claims with
    // the label distribution fixed up front.
    let mut entries = serde_json::Map::new();
    let mut claim_idx = 0usize;
    let mut subj_idx = 0usize;
    for s in 0..96usize {
        let story_i = s / 3;
        let claims = if s < 88 { 6 } else { 5 };
        let mut sentences = Vec::new();
        let mut labels = Vec::new();
        let mut subjectivity = Vec::new();
        let mut types: Vec<Option<u8>> = Vec::new();
        for _ in 0..claims {
            let g = claim_idx;
            claim_idx += 1;
            sentences.push(format!("Event number {g} took place."));
            let (label, subj) = if g < 444 {
                ("supported", Some("objective"))
            } else if g < 481 {
                ("supported", Some("subjective"))
            } else if g < 501 {
                ("unsupported", Some("objective"))
            } else if g < 567 {
                ("unsupported", Some("subjective"))
            } else {
                ("na", None)
            };
            labels.push(label);
            if subj == Some("subjective") {
                let k = subj_idx;
                subj_idx += 1;
                types.push(Some(if k < 37 {
                    1
                } else if k < 59 {
                    2
                } else if k < 76 {
                    3
                } else if k < 86 {
                    4
                } else {
                    5
                }));
            } else {
                types.push(None);
            }
            subjectivity.push(subj);
        }
        entries.insert(
            format!("s{s:03}"),
            serde_json::json!({
                "story": format!("Story number {story_i} begins quietly. Something happens in it. Then it ends."),
                "model": if s % 3 == 0 { "human-writer" } else { "model-writer" },
                "summary": sentences,
                "claim-labels": labels,
                "subjectivity": subjectivity,
                "ambiguity-types": types,
            }),
        );
    }
    assert_eq!(claim_idx, 568);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("release.json");
    std::fs::write(&path, serde_json::Value::Object(entries).to_string()).unwrap();
    let corpus = load_corpus(&path, SchemaVersion::StorySumm).unwrap();
    assert!(corpus.validate().is_empty());
    assert_eq!(corpus.stories.len(), 32);
    assert_eq!(corpus.summaries.len(), 96);
    assert_eq!(corpus.claim_count(), 568);

    match count_labels(&corpus, LabelAxis::FaithBySubjectivity).unwrap() {
        CountTable::FaithSubjectivity(counts) => {
            assert_eq!(counts.supported_objective, 444);
            assert_eq!(counts.supported_subjective, 37);
            assert_eq!(counts.unsupported_objective, 20);
            assert_eq!(counts.unsupported_subjective, 66);
            assert_eq!(counts.ambiguous, 0);
            assert_eq!(counts.not_applicable, 1);
        }
        other => panic!("unexpected table {other:?}"),
    }
    match count_labels(&corpus, LabelAxis::AmbiguityType).unwrap() {
        CountTable::AmbiguityType(counts) => {
            let want: std::collections::BTreeMap<u8, usize> =
                [(1, 37), (2, 22), (3, 17), (4, 10), (5, 17)].into_iter().collect();
            assert_eq!(counts, want);
        }
        other => panic!("unexpected table {other:?}"),
    }
    println!("criterion 7: pass - grid counts 444/37/20/66 (+1 n/a) and type counts 37/22/17/10 (+17 type-5) are exact");
}

#[test]
fn criterion_08_deterministic_replay() {
    let corpus = mini_corpus_path();
    let cache = mini_cache_path();
    assert!(
        cache.is_dir() && std::fs::read_dir(&cache).unwrap().next().is_some(),
        "committed cache missing; run `cargo test --test acceptance -- --ignored` once to regenerate"
    );
    let run = |out: &Path| {
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_armetric"))
            .args([
                "arm",
                "--corpus",
                corpus.to_str().unwrap(),
                "--model",
                "demo",
                "--mode",
                "replay",
                "--cache-dir",
                cache.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "replay run failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run(&out_a);
    run(&out_b);
    for file in ["manifest.json", "rewrite_stats.json", "rewrite_stats.csv", "detection.json"] {
        assert!(out_a.join(file).exists(), "{file} missing");
    }
    let digest_a = tree_digest(&out_a).unwrap();
    let digest_b = tree_digest(&out_b).unwrap();
    assert_eq!(digest_a, digest_b, "report trees differ between replay runs");
    println!("criterion 8: pass - two replay runs produced byte-identical report trees ({})", &digest_a[..12]);
}

#[test]
fn criterion_09_end_to_end_parse_rate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = mini_corpus_path();

    let arm_out = dir.path().join("arm");
    let code = armetric::cli::run_from(
        [
            "armetric",
            "arm",
            "--corpus",
            corpus.to_str().unwrap(),
            "--model",
            "demo",
            "--mode",
            "live",
            "--out",
            arm_out.to_str().unwrap(),
        ],
        Some(mini_backend()),
    );
    assert_eq!(code, 0);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(arm_out.join("rewrite_stats.json")).unwrap())
            .unwrap();
    let total = stats["stats"]["claims_total"].as_u64().unwrap();
    let failed = stats["stats"]["failed"].as_u64().unwrap();
    assert!(total >= 12);
    assert!(
        failed as f64 / total as f64 <= 0.05,
        "rewrite parse-failure rate {failed}/{total} above 5%"
    );

    let baseline_out = dir.path().join("baseline");
    let code = armetric::cli::run_from(
        [
            "armetric",
            "baseline",
            "--corpus",
            corpus.to_str().unwrap(),
            "--model",
            "demo",
            "--mode",
            "live",
            "--method",
            "zero-shot",
            "--out",
            baseline_out.to_str().unwrap(),
        ],
        Some(mini_backend()),
    );
    assert_eq!(code, 0);
    let stats: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(baseline_out.join("method_stats.json")).unwrap(),
    )
    .unwrap();
    let total = stats["stats"]["claims_total"].as_u64().unwrap();
    let failed = stats["stats"]["failed"].as_u64().unwrap();
    assert!(
        failed as f64 / total as f64 <= 0.05,
        "baseline parse-failure rate {failed}/{total} above 5%"
    );
    println!("criterion 9: pass - scripted end-to-end rewrite and baseline runs finished with 0% parse failures");
}

fn golden_bindings(slots: &[String]) -> Vec<(&'static str, &'static str)> {
    slots
        .iter()
        .map(|slot| match slot.as_str() {
            "story" => ("story", "Mara found a rusted key inside the lighthouse lamp room."),
            "summary" => ("summary", "Mara found a key. It scared her."),
            "claim" => ("claim", "It scared her."),
            "explanation" => ("explanation", "The key is found, not feared."),
            other => panic!("no golden binding for slot {other:?}"),
        })
        .collect()
}

fn render_golden(name: &str) -> String {
    let templates = TemplateSet::builtin();
    let template = templates.get(name).unwrap();
    let rendered = template.render(&golden_bindings(template.slots())).unwrap();
    format!("{}\n=== user ===\n{}\n", rendered.system, rendered.user)
}

#[test]
fn criterion_10_prompt_golden_files() {
    let templates = TemplateSet::builtin();
    let names = templates.names();
    assert_eq!(names.len(), 15);
    for name in names {
        let golden_path = golden_dir().join(format!("{name}.txt"));
        let want = std::fs::read_to_string(&golden_path).unwrap_or_else(|e| {
            panic!(
                "missing golden file {golden_path:?} ({e}); run `cargo test --test acceptance -- --ignored`"
            )
        });
        let got = render_golden(name);
        assert_eq!(got, want, "rendered prompt for {name} differs from its golden file");
    }
    println!("criterion 10: pass - all 15 rendered templates byte-match their golden files");
}

#[test]
#[ignore]
fn regenerate_mini_cache() {
    let cache = mini_cache_path();
    if cache.exists() {
        std::fs::remove_dir_all(&cache).unwrap();
    }
    std::fs::create_dir_all(&cache).unwrap();
    let corpus = mini_corpus_path();
    let scratch = tempfile::tempdir().unwrap();
    let record = |extra: &[&str]| {
        let mut args = vec![
            "armetric".to_string(),
            extra[0].to_string(),
            "--corpus".to_string(),
            corpus.to_str().unwrap().to_string(),
            "--model".to_string(),
            "demo".to_string(),
            "--mode".to_string(),
            "record".to_string(),
            "--cache-dir".to_string(),
            cache.to_str().unwrap().to_string(),
            "--out".to_string(),
            scratch
                .path()
                .join(extra[0])
                .to_str()
                .unwrap()
                .to_string(),
        ];
        args.extend(extra[1..].iter().map(|s| s.to_string()));
        let code = armetric::cli::run_from(args, Some(mini_backend()));
        assert_eq!(code, 0, "recording {} failed", extra[0]);
    };
    record(&["arm"]);
    record(&["baseline", "--method", "zero-shot"]);
    record(&["synth", "--seed", "0"]);
    let entries = std::fs::read_dir(&cache).unwrap().count();
    println!("recorded mini cache with {entries} entries");
}

#[test]
#[ignore]
fn regenerate_golden_prompts() {
    let dir = golden_dir();
    std::fs::create_dir_all(&dir).unwrap();
    let templates = TemplateSet::builtin();
    for name in templates.names() {
        std::fs::write(dir.join(format!("{name}.txt")), render_golden(name)).unwrap();
    }
    println!("wrote {} golden files to {dir:?}", templates.names().len());
}
