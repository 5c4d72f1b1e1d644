//! Synthetic ambiguity data. Subjective claims are rewritten into
//! objective ones and vice versa, giving claim pairs with known labels
//! that can be spliced back into summaries or exported for tuning.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::arm::ClaimFailure;
use crate::corpus::{Claim, Corpus, Faithfulness, Subjectivity, SummaryRecord};
use crate::llmgw::{
    complete_and_extract, Arity, CompletionError, LlmError, LlmGateway, LlmRequest, TemplateError,
    TemplateSet, RETRY_SAMPLE_OFFSET,
};
use crate::metrics::derive_seed;
use crate::textproc::normalize;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("claim {claim_id} has the wrong polarity for {direction}")]
    WrongPolarity {
        claim_id: String,
        direction: Direction,
    },
    #[error("claim {claim_id} is type {}, not {want}", got.map_or("unknown".to_string(), |t| t.to_string()))]
    TypeMismatch {
        claim_id: String,
        want: u8,
        got: Option<u8>,
    },
    #[error("ambiguity type must be 1 through 4, got {0}")]
    BadType(u8),
    #[error("claim {claim_id}: {message}")]
    ParseFailed { claim_id: String, message: String },
    #[error("claim {claim_id} came back unchanged")]
    Unchanged { claim_id: String },
    #[error("summary {summary_id} position {position} ({claim_id}) has no variant to splice")]
    MissingVariant {
        summary_id: String,
        position: usize,
        claim_id: String,
    },
    #[error("more than one variant supplied for claim {claim_id}")]
    DuplicateVariant { claim_id: String },
    #[error("write {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToObjective,
    ToSubjective,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::ToObjective => "to_objective",
            Direction::ToSubjective => "to_subjective",
        }
    }

    /// Polarity of the produced claim, as a detection label.
    pub fn target_positive(&self) -> bool {
        matches!(self, Direction::ToSubjective)
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn template_name(direction: Direction, ambiguity_type: u8) -> Result<String, SynthError> {
    if !(1..=4).contains(&ambiguity_type) {
        return Err(SynthError::BadType(ambiguity_type));
    }
    Ok(format!("synth_{direction}_type{ambiguity_type}"))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SyntheticVariant {
    pub source_claim_id: String,
    pub direction: Direction,
    pub ambiguity_type: u8,
    pub text: String,
    pub template_name: String,
    pub retried: bool,
}

/// Rewrites one claim across the polarity boundary. To-objective needs
/// a subjective claim of the requested type; to-subjective needs an
/// objective claim. A to-subjective result that normalizes equal to the
/// source is re-asked once before giving up.
pub fn generate_variant(
    gateway: &LlmGateway,
    templates: &TemplateSet,
    model: &str,
    story_text: &str,
    claim: &Claim,
    direction: Direction,
    ambiguity_type: u8,
) -> Result<SyntheticVariant, SynthError> {
    match direction {
        Direction::ToObjective => {
            if claim.subjectivity != Some(Subjectivity::Subjective) {
                return Err(SynthError::WrongPolarity {
                    claim_id: claim.id.clone(),
                    direction,
                });
            }
            if claim.ambiguity_type != Some(ambiguity_type) {
                return Err(SynthError::TypeMismatch {
                    claim_id: claim.id.clone(),
                    want: ambiguity_type,
                    got: claim.ambiguity_type,
                });
            }
        }
        Direction::ToSubjective => {
            if claim.subjectivity != Some(Subjectivity::Objective) {
                return Err(SynthError::WrongPolarity {
                    claim_id: claim.id.clone(),
                    direction,
                });
            }
        }
    }
    let name = template_name(direction, ambiguity_type)?;
    let rendered = templates
        .get(&name)?
        .render(&[("story", story_text), ("claim", claim.text.as_str())])?;
    let base = LlmRequest::new(model, &rendered);
    let source_tokens = normalize(&claim.text);

    let mut retried = false;
    for attempt in 0..2u32 {
        let request = base
            .clone()
            .with_sample_index(attempt * 2 * RETRY_SAMPLE_OFFSET);
        let extraction =
            match complete_and_extract(gateway, &request, "sentence", Arity::ExactlyOne) {
                Ok(x) => x,
                Err(CompletionError::Llm(e)) => return Err(e.into()),
                Err(e @ CompletionError::ParseFailed { .. }) => {
                    return Err(SynthError::ParseFailed {
                        claim_id: claim.id.clone(),
                        message: e.to_string(),
                    })
                }
            };
        retried |= extraction.retried || attempt > 0;
        let text = extraction.values[0].clone();
        if direction == Direction::ToSubjective && normalize(&text) == source_tokens {
            continue;
        }
        return Ok(SyntheticVariant {
            source_claim_id: claim.id.clone(),
            direction,
            ambiguity_type,
            text,
            template_name: name,
            retried,
        });
    }
    Err(SynthError::Unchanged {
        claim_id: claim.id.clone(),
    })
}

/// How to-subjective variants pick their ambiguity type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeAssignment {
    /// One type per claim, drawn from a per-claim seeded stream.
    SingleSeeded,
    /// Every type, four variants per claim.
    AllFour,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub model: String,
    pub seed: u64,
    pub type_assignment: TypeAssignment,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SynthStats {
    pub claims_considered: usize,
    pub variants_generated: usize,
    pub failed: usize,
    pub skipped_no_label: usize,
    pub skipped_commentary: usize,
}

#[derive(Debug, serde::Serialize)]
pub struct SynthRun {
    pub model: String,
    pub variants: Vec<SyntheticVariant>,
    pub failures: Vec<ClaimFailure>,
    pub stats: SynthStats,
}

fn claim_rng(seed: u64, claim_id: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(claim_id.as_bytes());
    let mut eight = [0u8; 8];
    eight.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::from_le_bytes(eight)))
}

/// Claims that synthesis covers: labeled, in scope, and for subjective
/// claims carrying one of the four content ambiguity types.
pub fn synth_eligible(claim: &Claim) -> bool {
    claim.in_scope()
        && match claim.subjectivity {
            Some(Subjectivity::Subjective) => matches!(claim.ambiguity_type, Some(1..=4)),
            Some(Subjectivity::Objective) => true,
            None => false,
        }
}

/// Generates variants for every labeled in-scope claim: subjective
/// claims of types 1 through 4 go to objective, objective claims go to
/// subjective. Commentary claims and claims without a subjectivity
/// label are skipped.
pub fn run_synth(
    corpus: &Corpus,
    gateway: &LlmGateway,
    templates: &TemplateSet,
    config: &SynthConfig,
) -> Result<SynthRun, SynthError> {
    let mut variants = Vec::new();
    let mut failures = Vec::new();
    let mut stats = SynthStats {
        claims_considered: 0,
        variants_generated: 0,
        failed: 0,
        skipped_no_label: 0,
        skipped_commentary: 0,
    };
    for claim_ref in corpus.iter_claims() {
        let claim = claim_ref.claim;
        if !claim.in_scope() {
            continue;
        }
        stats.claims_considered += 1;
        let plan: Vec<(Direction, u8)> = match claim.subjectivity {
            Some(Subjectivity::Subjective) => match claim.ambiguity_type {
                Some(t @ 1..=4) => vec![(Direction::ToObjective, t)],
                Some(_) => {
                    stats.skipped_commentary += 1;
                    continue;
                }
                None => {
                    stats.skipped_no_label += 1;
                    continue;
                }
            },
            Some(Subjectivity::Objective) => match config.type_assignment {
                TypeAssignment::SingleSeeded => {
                    let t = claim_rng(config.seed, &claim.id).gen_range(1..=4);
                    vec![(Direction::ToSubjective, t)]
                }
                TypeAssignment::AllFour => {
                    (1..=4).map(|t| (Direction::ToSubjective, t)).collect()
                }
            },
            None => {
                stats.skipped_no_label += 1;
                continue;
            }
        };
        for (direction, ambiguity_type) in plan {
            match generate_variant(
                gateway,
                templates,
                &config.model,
                &claim_ref.story.text,
                claim,
                direction,
                ambiguity_type,
            ) {
                Ok(v) => {
                    stats.variants_generated += 1;
                    variants.push(v);
                }
                Err(e @ (SynthError::ParseFailed { .. } | SynthError::Unchanged { .. })) => {
                    stats.failed += 1;
                    failures.push(ClaimFailure {
                        claim_id: claim.id.clone(),
                        stage: "synth".to_string(),
                        message: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(SynthRun {
        model: config.model.clone(),
        variants,
        failures,
        stats,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SplicedPosition {
    pub claim_id: String,
    pub text: String,
    pub synthetic: bool,
    pub expected_positive: bool,
    pub ambiguity_type: Option<u8>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SplicedSummary {
    pub summary_id: String,
    pub story_id: String,
    pub positions: Vec<SplicedPosition>,
}

/// Rebuilds each summary with a fair coin per claim deciding whether
/// the synthetic variant replaces the original. Coins come from the
/// same per-claim streams as type assignment, so splices are stable
/// under reordering. Selecting a claim that has no variant is an error.
pub fn splice(
    corpus: &Corpus,
    variants: &[SyntheticVariant],
    seed: u64,
) -> Result<Vec<SplicedSummary>, SynthError> {
    let mut by_claim: BTreeMap<&str, &SyntheticVariant> = BTreeMap::new();
    for v in variants {
        if by_claim.insert(&v.source_claim_id, v).is_some() {
            return Err(SynthError::DuplicateVariant {
                claim_id: v.source_claim_id.clone(),
            });
        }
    }
    let mut out = Vec::new();
    for summary in &corpus.summaries {
        let mut positions = Vec::new();
        for (position, claim) in summary.claims.iter().enumerate() {
            let substitute = synth_eligible(claim) && claim_rng(seed, &claim.id).gen_bool(0.5);
            if substitute {
                let variant = by_claim.get(claim.id.as_str()).ok_or_else(|| {
                    SynthError::MissingVariant {
                        summary_id: summary.id.clone(),
                        position,
                        claim_id: claim.id.clone(),
                    }
                })?;
                positions.push(SplicedPosition {
                    claim_id: claim.id.clone(),
                    text: variant.text.clone(),
                    synthetic: true,
                    expected_positive: variant.direction.target_positive(),
                    ambiguity_type: variant
                        .direction
                        .target_positive()
                        .then_some(variant.ambiguity_type),
                });
            } else {
                let positive = claim.subjectivity == Some(Subjectivity::Subjective);
                positions.push(SplicedPosition {
                    claim_id: claim.id.clone(),
                    text: claim.text.clone(),
                    synthetic: false,
                    expected_positive: positive,
                    ambiguity_type: if positive { claim.ambiguity_type } else { None },
                });
            }
        }
        out.push(SplicedSummary {
            summary_id: summary.id.clone(),
            story_id: summary.story_id.clone(),
            positions,
        });
    }
    Ok(out)
}

/// Expresses spliced summaries in the corpus schema so detectors can
/// run on them directly. Expected labels become subjectivity labels and
/// every claim is marked supported.
pub fn spliced_corpus(base: &Corpus, spliced: &[SplicedSummary]) -> Corpus {
    let summaries = spliced
        .iter()
        .map(|s| SummaryRecord {
            id: s.summary_id.clone(),
            story_id: s.story_id.clone(),
            writer: crate::corpus::Writer::Llm {
                name: "synthetic-splice".to_string(),
            },
            claims: s
                .positions
                .iter()
                .map(|p| Claim {
                    id: p.claim_id.clone(),
                    text: p.text.clone(),
                    faithfulness_labels: Vec::new(),
                    gold_faithfulness: Some(Faithfulness::Supported),
                    subjectivity: Some(if p.expected_positive {
                        Subjectivity::Subjective
                    } else {
                        Subjectivity::Objective
                    }),
                    ambiguity_type: p.ambiguity_type,
                })
                .collect(),
        })
        .collect();
    Corpus {
        schema_version: base.schema_version,
        name: base.name.as_ref().map(|n| format!("{n}-spliced")),
        stories: base.stories.clone(),
        summaries,
        provenance: Default::default(),
    }
}

#[derive(serde::Serialize)]
struct FinetuneRow<'a> {
    story: &'a str,
    summary: &'a str,
    claim: &'a str,
    label: &'a str,
}

/// Writes one JSON line per variant, ordered by source claim, then
/// direction, then type. Output bytes are a pure function of the
/// inputs.
pub fn export_finetune_corpus(
    corpus: &Corpus,
    variants: &[SyntheticVariant],
    path: &Path,
) -> Result<usize, SynthError> {
    let mut context: BTreeMap<&str, (&str, String)> = BTreeMap::new();
    for claim_ref in corpus.iter_claims() {
        context.insert(
            &claim_ref.claim.id,
            (&claim_ref.story.text, claim_ref.summary.text()),
        );
    }
    let mut ordered: Vec<&SyntheticVariant> = variants.iter().collect();
    ordered.sort_by(|a, b| {
        (&a.source_claim_id, a.direction, a.ambiguity_type)
            .cmp(&(&b.source_claim_id, b.direction, b.ambiguity_type))
    });
    let io_err = |e: std::io::Error| SynthError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    let mut written = 0usize;
    for v in ordered {
        let (story, summary) = match context.get(v.source_claim_id.as_str()) {
            Some(c) => c,
            None => continue,
        };
        let row = FinetuneRow {
            story,
            summary,
            claim: &v.text,
            label: if v.direction.target_positive() {
                "subjective"
            } else {
                "objective"
            },
        };
        let line = serde_json::to_string(&row).expect("row serializes");
        writeln!(file, "{line}").map_err(io_err)?;
        written += 1;
    }
    Ok(written)
}
