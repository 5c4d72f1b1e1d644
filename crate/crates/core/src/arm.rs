//! The rewrite metric. Each summary claim is sent to a rewrite model;
//! the returned sentence yields a binary rewritten flag, a word-level
//! edit distance, and a set of parsed explanation points.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::llmgw::{
    complete_and_extract, Arity, CompletionError, LlmError, LlmGateway, LlmRequest, TemplateError,
    TemplateSet,
};
use crate::textproc::{is_rewritten_with, normalize, normalized_edit_distance, word_edit_distance, CompareMode};

#[derive(Debug, thiserror::Error)]
pub enum ArmError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Which rewrite instruction the model receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteVariant {
    SubjectivityFocused,
    InconsistencyFocused,
    Both,
}

impl RewriteVariant {
    pub fn template_name(&self) -> &'static str {
        match self {
            RewriteVariant::SubjectivityFocused => "rewrite_subjectivity",
            RewriteVariant::InconsistencyFocused => "rewrite_inconsistency",
            RewriteVariant::Both => "rewrite_both",
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RewriteVariant::SubjectivityFocused => "subjectivity",
            RewriteVariant::InconsistencyFocused => "inconsistency",
            RewriteVariant::Both => "both",
        }
    }
}

impl std::fmt::Display for RewriteVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What text the explanation parser reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationSource {
    /// Everything the rewrite response said outside its answer tags.
    #[default]
    ResponseRemainder,
    /// The whole rewrite response, tags included.
    FullResponse,
    /// Do not parse explanations at all.
    Skip,
}

#[derive(Debug, Clone)]
pub struct ArmConfig {
    pub model: String,
    pub variant: RewriteVariant,
    pub compare: CompareMode,
    pub explanation: ExplanationSource,
    pub parallelism: usize,
}

impl Default for ArmConfig {
    fn default() -> Self {
        ArmConfig {
            model: String::new(),
            variant: RewriteVariant::Both,
            compare: CompareMode::Normalized,
            explanation: ExplanationSource::ResponseRemainder,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RewriteResult {
    pub claim_id: String,
    pub variant: RewriteVariant,
    pub original_text: String,
    pub rewrite_text: String,
    pub rewritten: bool,
    pub edit_distance: usize,
    pub normalized_edit_distance: f64,
    pub explanation_points: Vec<String>,
    pub explanation_failed: bool,
    pub in_scope: bool,
    pub raw_response: String,
    pub retried: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ClaimFailure {
    pub claim_id: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ArmStats {
    pub claims_total: usize,
    pub claims_in_scope: usize,
    pub rewritten_in_scope: usize,
    pub failed: usize,
    /// Mean over in-scope claims whose sentence was rewritten.
    pub mean_normalized_edit_distance: Option<f64>,
}

#[derive(Debug, serde::Serialize)]
pub struct ArmRun {
    pub model: String,
    pub variant: RewriteVariant,
    pub results: Vec<RewriteResult>,
    pub failures: Vec<ClaimFailure>,
    pub stats: ArmStats,
}

/// Drops complete `<answer>...</answer>` spans, keeping surrounding
/// prose.
fn strip_answer_spans(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    loop {
        match rest.find("<answer>") {
            Some(open) => match rest[open..].find("</answer>") {
                Some(close) => {
                    out.push_str(&rest[..open]);
                    rest = &rest[open + close + "</answer>".len()..];
                }
                None => {
                    out.push_str(rest);
                    break;
                }
            },
            None => {
                out.push_str(rest);
                break;
            }
        }
    }
    out.trim().to_string()
}

enum ClaimOutcome {
    Done(Box<RewriteResult>),
    Skipped(ClaimFailure),
    Fatal(ArmError),
}

fn rewrite_one(
    gateway: &LlmGateway,
    templates: &TemplateSet,
    config: &ArmConfig,
    story_text: &str,
    summary_text: &str,
    claim_id: &str,
    claim_text: &str,
    in_scope: bool,
) -> ClaimOutcome {
    let template = match templates.get(config.variant.template_name()) {
        Ok(t) => t,
        Err(e) => return ClaimOutcome::Fatal(e.into()),
    };
    let rendered = match template.render(&[
        ("story", story_text),
        ("summary", summary_text),
        ("claim", claim_text),
    ]) {
        Ok(r) => r,
        Err(e) => return ClaimOutcome::Fatal(e.into()),
    };
    let request = LlmRequest::new(&config.model, &rendered);
    let extraction = match complete_and_extract(gateway, &request, "answer", Arity::ExactlyOne) {
        Ok(x) => x,
        Err(CompletionError::Llm(e)) => return ClaimOutcome::Fatal(e.into()),
        Err(e @ CompletionError::ParseFailed { .. }) => {
            return ClaimOutcome::Skipped(ClaimFailure {
                claim_id: claim_id.to_string(),
                stage: "rewrite".to_string(),
                message: e.to_string(),
            })
        }
    };
    let rewrite_text = extraction.values[0].clone();
    let rewritten = is_rewritten_with(claim_text, &rewrite_text, config.compare);
    let original = normalize(claim_text);
    let rewrite = normalize(&rewrite_text);
    let edit_distance = word_edit_distance(&original, &rewrite);
    let normalized = normalized_edit_distance(&original, &rewrite);

    let mut explanation_points = Vec::new();
    let mut explanation_failed = false;
    if rewritten {
        let source_text = match config.explanation {
            ExplanationSource::ResponseRemainder => strip_answer_spans(&extraction.raw_text),
            ExplanationSource::FullResponse => extraction.raw_text.trim().to_string(),
            ExplanationSource::Skip => String::new(),
        };
        if !source_text.is_empty() {
            let outcome = templates
                .get("explanation_parse")
                .map_err(ArmError::from)
                .and_then(|t| {
                    t.render(&[("explanation", source_text.as_str())])
                        .map_err(ArmError::from)
                })
                .map(|rendered| LlmRequest::new(&config.model, &rendered));
            let request = match outcome {
                Ok(r) => r,
                Err(e) => return ClaimOutcome::Fatal(e),
            };
            match complete_and_extract(gateway, &request, "item", Arity::OneOrMore) {
                Ok(parsed) => explanation_points = parsed.values,
                Err(CompletionError::Llm(e)) => return ClaimOutcome::Fatal(e.into()),
                Err(CompletionError::ParseFailed { .. }) => explanation_failed = true,
            }
        }
    }

    ClaimOutcome::Done(Box::new(RewriteResult {
        claim_id: claim_id.to_string(),
        variant: config.variant,
        original_text: claim_text.to_string(),
        rewrite_text,
        rewritten,
        edit_distance,
        normalized_edit_distance: normalized,
        explanation_points,
        explanation_failed,
        in_scope,
        raw_response: extraction.raw_text,
        retried: extraction.retried,
    }))
}

/// Runs the rewrite metric over every claim in the corpus, commentary
/// claims included (they carry `in_scope: false`). Output order follows
/// corpus order regardless of parallelism.
pub fn run_arm(
    corpus: &Corpus,
    gateway: &LlmGateway,
    templates: &TemplateSet,
    config: &ArmConfig,
) -> Result<ArmRun, ArmError> {
    struct Job<'a> {
        story_text: &'a str,
        summary_text: String,
        claim_id: &'a str,
        claim_text: &'a str,
        in_scope: bool,
    }
    let jobs: Vec<Job> = corpus
        .iter_claims()
        .into_iter()
        .map(|r| Job {
            story_text: &r.story.text,
            summary_text: r.summary.text(),
            claim_id: &r.claim.id,
            claim_text: &r.claim.text,
            in_scope: r.claim.in_scope(),
        })
        .collect();

    let run_job = |job: &Job| {
        rewrite_one(
            gateway,
            templates,
            config,
            job.story_text,
            &job.summary_text,
            job.claim_id,
            job.claim_text,
            job.in_scope,
        )
    };

    let workers = config.parallelism.clamp(1, 64);
    let mut outcomes: Vec<(usize, ClaimOutcome)> = if workers == 1 || jobs.len() < 2 {
        jobs.iter().map(run_job).enumerate().collect()
    } else {
        let mut indexed: Vec<(usize, ClaimOutcome)> = std::thread::scope(|scope| {
            let chunk = jobs.len().div_ceil(workers);
            let mut handles = Vec::new();
            for (w, slice) in jobs.chunks(chunk).enumerate() {
                let run_job = &run_job;
                handles.push(scope.spawn(move || {
                    slice
                        .iter()
                        .enumerate()
                        .map(|(i, job)| (w * chunk + i, run_job(job)))
                        .collect::<Vec<_>>()
                }));
            }
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        indexed.sort_by_key(|(i, _)| *i);
        indexed
    };

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (_, outcome) in outcomes.drain(..) {
        match outcome {
            ClaimOutcome::Done(r) => results.push(*r),
            ClaimOutcome::Skipped(f) => failures.push(f),
            ClaimOutcome::Fatal(e) => return Err(e),
        }
    }

    let in_scope: Vec<&RewriteResult> = results.iter().filter(|r| r.in_scope).collect();
    let rewritten: Vec<&&RewriteResult> = in_scope.iter().filter(|r| r.rewritten).collect();
    let mean = if rewritten.is_empty() {
        None
    } else {
        Some(
            rewritten
                .iter()
                .map(|r| r.normalized_edit_distance)
                .sum::<f64>()
                / rewritten.len() as f64,
        )
    };
    let stats = ArmStats {
        claims_total: jobs.len(),
        claims_in_scope: in_scope.len(),
        rewritten_in_scope: rewritten.len(),
        failed: failures.len(),
        mean_normalized_edit_distance: mean,
    };
    Ok(ArmRun {
        model: config.model.clone(),
        variant: config.variant,
        results,
        failures,
        stats,
    })
}

/// Detection labels from a run: true where the sentence was rewritten.
/// Only in-scope claims that produced a rewrite are present.
pub fn arm_predictions(run: &ArmRun) -> BTreeMap<String, bool> {
    run.results
        .iter()
        .filter(|r| r.in_scope)
        .map(|r| (r.claim_id.clone(), r.rewritten))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Claim, Corpus, Faithfulness, Story, Subjectivity, SummaryRecord, Writer};
    use crate::llmgw::ScriptedBackend;
    use std::sync::Arc;

    fn claim(id: &str, text: &str) -> Claim {
        Claim {
            id: id.to_string(),
            text: text.to_string(),
            faithfulness_labels: Vec::new(),
            gold_faithfulness: Some(Faithfulness::Supported),
            subjectivity: Some(Subjectivity::Objective),
            ambiguity_type: None,
        }
    }

    fn corpus() -> Corpus {
        let mut na = claim("s1.2", "A commentary aside.");
        na.gold_faithfulness = Some(Faithfulness::NotApplicable);
        Corpus {
            schema_version: 1,
            name: Some("t".to_string()),
            stories: vec![Story {
                id: "st1".to_string(),
                title: None,
                text: "The dog barked at dawn. Nobody woke up.".to_string(),
            }],
            summaries: vec![SummaryRecord {
                id: "s1".to_string(),
                story_id: "st1".to_string(),
                writer: Writer::Llm {
                    name: "m".to_string(),
                },
                claims: vec![
                    claim("s1.0", "The dog barked at dawn."),
                    claim("s1.1", "Everyone was annoyed."),
                    na,
                    claim("s1.3", "No tags here."),
                ],
            }],
            provenance: Default::default(),
        }
    }

    fn backend() -> Arc<ScriptedBackend> {
        Arc::new(ScriptedBackend::new("t", |req| {
            let user = req.user.as_str();
            if user.contains("Explanation:") {
                return Some(
                    "<item>annoyance is not stated</item>\n<item>tone is subjective</item>"
                        .to_string(),
                );
            }
            if user.contains("Sentence: The dog barked at dawn.") {
                return Some("<answer>The dog barked at dawn.</answer>".to_string());
            }
            if user.contains("Sentence: Everyone was annoyed.") {
                return Some(
                    "The story never says anyone was annoyed.\n\
                     <answer>Nobody reacted to the barking.</answer>"
                        .to_string(),
                );
            }
            if user.contains("Sentence: A commentary aside.") {
                return Some("<answer>A commentary aside.</answer>".to_string());
            }
            Some("no tags in this response".to_string())
        }))
    }

    fn config() -> ArmConfig {
        ArmConfig {
            model: "test-model".to_string(),
            ..Default::default()
        }
    }

    #[test]
    fn runs_the_full_pipeline() {
        let gateway = LlmGateway::live(backend());
        let run = run_arm(&corpus(), &gateway, &TemplateSet::builtin(), &config()).unwrap();
        assert_eq!(run.results.len(), 3);
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].claim_id, "s1.3");
        assert_eq!(run.failures[0].stage, "rewrite");

        let kept = &run.results[0];
        assert!(!kept.rewritten);
        assert_eq!(kept.edit_distance, 0);
        assert!(kept.explanation_points.is_empty());

        let changed = &run.results[1];
        assert!(changed.rewritten);
        assert!(changed.edit_distance > 0);
        assert!(changed.normalized_edit_distance > 0.0);
        assert_eq!(changed.explanation_points.len(), 2);
        assert!(!changed.explanation_failed);

        let commentary = &run.results[2];
        assert!(!commentary.in_scope);

        assert_eq!(run.stats.claims_total, 4);
        assert_eq!(run.stats.claims_in_scope, 2);
        assert_eq!(run.stats.rewritten_in_scope, 1);
        assert_eq!(run.stats.failed, 1);
        assert!(run.stats.mean_normalized_edit_distance.unwrap() > 0.0);

        let predictions = arm_predictions(&run);
        assert_eq!(predictions.len(), 2);
        assert_eq!(predictions["s1.0"], false);
        assert_eq!(predictions["s1.1"], true);
        assert!(!predictions.contains_key("s1.2"));
    }

    #[test]
    fn parallel_run_matches_serial_order() {
        let templates = TemplateSet::builtin();
        let serial = run_arm(&corpus(), &LlmGateway::live(backend()), &templates, &config()).unwrap();
        let parallel = run_arm(
            &corpus(),
            &LlmGateway::live(backend()),
            &templates,
            &ArmConfig {
                parallelism: 3,
                ..config()
            },
        )
        .unwrap();
        let ids: Vec<&str> = serial.results.iter().map(|r| r.claim_id.as_str()).collect();
        let par_ids: Vec<&str> = parallel.results.iter().map(|r| r.claim_id.as_str()).collect();
        assert_eq!(ids, par_ids);
        assert_eq!(serial.results[1].rewrite_text, parallel.results[1].rewrite_text);
    }

    #[test]
    fn answer_spans_are_stripped_for_explanations() {
        assert_eq!(
            strip_answer_spans("before <answer>mid</answer> after"),
            "before  after".trim()
        );
        assert_eq!(strip_answer_spans("<answer>only</answer>"), "");
        assert_eq!(
            strip_answer_spans("keep <answer>unterminated"),
            "keep <answer>unterminated"
        );
    }

    #[test]
    fn raw_compare_mode_flags_surface_changes() {
        let gateway = LlmGateway::live(Arc::new(ScriptedBackend::new("t", |req| {
            if req.user.contains("Explanation:") {
                return Some("<item>wording</item>".to_string());
            }
            Some("<answer>The dogs barked at dawn!</answer>".to_string())
        })));
        let mini = Corpus {
            summaries: vec![SummaryRecord {
                id: "s1".to_string(),
                story_id: "st1".to_string(),
                writer: Writer::Llm {
                    name: "m".to_string(),
                },
                claims: vec![claim("s1.0", "The dog barked at dawn.")],
            }],
            ..corpus()
        };
        let templates = TemplateSet::builtin();
        let normalized = run_arm(&mini, &gateway, &templates, &config()).unwrap();
        assert!(!normalized.results[0].rewritten);
        let raw = run_arm(
            &mini,
            &gateway,
            &templates,
            &ArmConfig {
                compare: CompareMode::Raw,
                ..config()
            },
        )
        .unwrap();
        assert!(raw.results[0].rewritten);
    }
}
