//! Prompting baselines for claim-level detection. Each method asks the
//! model a yes/no question about a claim; "No" marks the claim as
//! detected, since the zero and few shot prompts ask whether the claim
//! is objective to evaluate and the self-consistency prompt asks
//! whether the claim is consistent with the story.

use std::collections::BTreeMap;

use crate::arm::ClaimFailure;
use crate::corpus::Corpus;
use crate::llmgw::{
    extract_tagged, parse_yes_no, Arity, LlmError, LlmGateway, LlmRequest, TemplateError,
    TemplateSet, RETRY_SAMPLE_OFFSET,
};

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    ZeroShot,
    FewShot,
    SelfConsistency,
}

impl BaselineMethod {
    pub fn template_name(&self) -> &'static str {
        match self {
            BaselineMethod::ZeroShot => "zero_shot",
            BaselineMethod::FewShot => "few_shot",
            BaselineMethod::SelfConsistency => "self_consistency",
        }
    }

    pub fn as_str(&self) -> &'static str {
        self.template_name()
    }

    pub fn samples(&self) -> u32 {
        match self {
            BaselineMethod::SelfConsistency => 3,
            _ => 1,
        }
    }

    pub fn temperature(&self) -> f64 {
        match self {
            BaselineMethod::SelfConsistency => 0.7,
            _ => 0.0,
        }
    }
}

impl std::fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub model: String,
    pub method: BaselineMethod,
    pub parallelism: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ClaimPrediction {
    pub claim_id: String,
    pub method: BaselineMethod,
    /// Parsed yes/no per sample; None where a sample never parsed.
    pub sample_answers: Vec<Option<bool>>,
    pub prediction: bool,
    pub retried: bool,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BaselineStats {
    pub claims_total: usize,
    pub predicted_positive: usize,
    pub failed: usize,
}

#[derive(Debug, serde::Serialize)]
pub struct BaselineRun {
    pub model: String,
    pub method: BaselineMethod,
    pub predictions: Vec<ClaimPrediction>,
    pub failures: Vec<ClaimFailure>,
    pub stats: BaselineStats,
}

/// One sample's yes/no answer, with a single re-ask at a shifted sample
/// index when the response does not parse.
fn ask_yes_no(
    gateway: &LlmGateway,
    base: &LlmRequest,
) -> Result<(Option<bool>, bool), LlmError> {
    for attempt in 0..2u32 {
        let request = base
            .clone()
            .with_sample_index(base.sample_index + attempt * RETRY_SAMPLE_OFFSET);
        let response = gateway.complete(&request)?;
        if let Ok(values) = extract_tagged(&response.raw_text, "answer", Arity::ExactlyOne) {
            if let Some(answer) = parse_yes_no(&values[0]) {
                return Ok((Some(answer), attempt > 0));
            }
        }
    }
    Ok((None, true))
}

enum ClaimOutcome {
    Done(ClaimPrediction),
    Skipped(ClaimFailure),
    Fatal(BaselineError),
}

fn classify_one(
    gateway: &LlmGateway,
    templates: &TemplateSet,
    config: &BaselineConfig,
    story_text: &str,
    summary_text: &str,
    claim_id: &str,
    claim_text: &str,
) -> ClaimOutcome {
    let rendered = match templates
        .get(config.method.template_name())
        .and_then(|t| {
            t.render(&[
                ("story", story_text),
                ("summary", summary_text),
                ("claim", claim_text),
            ])
        }) {
        Ok(r) => r,
        Err(e) => return ClaimOutcome::Fatal(e.into()),
    };
    let base = LlmRequest::new(&config.model, &rendered)
        .with_temperature(config.method.temperature());

    let mut sample_answers = Vec::new();
    let mut retried = false;
    for sample in 0..config.method.samples() {
        let request = base.clone().with_sample_index(sample);
        match ask_yes_no(gateway, &request) {
            Ok((answer, re_asked)) => {
                retried |= re_asked;
                sample_answers.push(answer);
            }
            Err(e) => return ClaimOutcome::Fatal(e.into()),
        }
    }

    let yes = sample_answers.iter().flatten().filter(|&&a| a).count();
    let no = sample_answers.iter().flatten().filter(|&&a| !a).count();
    let required = (config.method.samples() as usize).saturating_sub(1).max(1);
    if yes + no < required || yes == no {
        return ClaimOutcome::Skipped(ClaimFailure {
            claim_id: claim_id.to_string(),
            stage: "classify".to_string(),
            message: format!(
                "{} of {} samples parsed ({yes} yes, {no} no)",
                yes + no,
                config.method.samples()
            ),
        });
    }
    ClaimOutcome::Done(ClaimPrediction {
        claim_id: claim_id.to_string(),
        method: config.method,
        sample_answers,
        prediction: no > yes,
        retried,
    })
}

/// Classifies every in-scope claim. Output order follows corpus order
/// regardless of parallelism.
pub fn run_baseline(
    corpus: &Corpus,
    gateway: &LlmGateway,
    templates: &TemplateSet,
    config: &BaselineConfig,
) -> Result<BaselineRun, BaselineError> {
    struct Job<'a> {
        story_text: &'a str,
        summary_text: String,
        claim_id: &'a str,
        claim_text: &'a str,
    }
    let jobs: Vec<Job> = corpus
        .iter_claims()
        .into_iter()
        .filter(|r| r.claim.in_scope())
        .map(|r| Job {
            story_text: &r.story.text,
            summary_text: r.summary.text(),
            claim_id: &r.claim.id,
            claim_text: &r.claim.text,
        })
        .collect();

    let run_job = |job: &Job| {
        classify_one(
            gateway,
            templates,
            config,
            job.story_text,
            &job.summary_text,
            job.claim_id,
            job.claim_text,
        )
    };

    let workers = config.parallelism.clamp(1, 64);
    let outcomes: Vec<(usize, ClaimOutcome)> = if workers == 1 || jobs.len() < 2 {
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

    let mut predictions = Vec::new();
    let mut failures = Vec::new();
    for (_, outcome) in outcomes {
        match outcome {
            ClaimOutcome::Done(p) => predictions.push(p),
            ClaimOutcome::Skipped(f) => failures.push(f),
            ClaimOutcome::Fatal(e) => return Err(e),
        }
    }
    let stats = BaselineStats {
        claims_total: jobs.len(),
        predicted_positive: predictions.iter().filter(|p| p.prediction).count(),
        failed: failures.len(),
    };
    Ok(BaselineRun {
        model: config.model.clone(),
        method: config.method,
        predictions,
        failures,
        stats,
    })
}

pub fn baseline_predictions(run: &BaselineRun) -> BTreeMap<String, bool> {
    run.predictions
        .iter()
        .map(|p| (p.claim_id.clone(), p.prediction))
        .collect()
}
