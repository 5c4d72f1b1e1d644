//! Command line interface. Exit codes: 0 success, 1 usage or
//! configuration problem, 2 data problem, 3 backend problem.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::arm::{arm_predictions, run_arm, ArmConfig, ArmError, RewriteVariant};
use crate::baselines::{
    baseline_predictions, run_baseline, BaselineConfig, BaselineError, BaselineMethod,
};
use crate::corpus::{
    count_labels, load_corpus, Corpus, CorpusError, FaithLabel, Faithfulness, LabelAxis,
    SchemaVersion, Subjectivity, Writer,
};
use crate::llmgw::{ChatBackend, GatewayMode, LlmError, LlmGateway, ReplayCache, TemplateError, TemplateSet};
use crate::metrics::{
    agreement_rate, aggregate_explanation_labels, bootstrap_pvalue, pct_important,
    pct_none_important, pct_none_wrong, pct_wrong, recall_by_type, score_predictions,
    Aggregation, BootstrapConfig, ExplanationAnnotation, MetricsError, Scores,
};
use crate::report::{corpus_digest, fmt2, render_table, ReportError, ReportSet, RunManifest};
use crate::synth::{
    export_finetune_corpus, run_synth, splice, spliced_corpus, SynthConfig, SynthError,
    TypeAssignment,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Backend(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TemplateError> for CliError {
    fn from(e: TemplateError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<ArmError> for CliError {
    fn from(e: ArmError) -> Self {
        match e {
            ArmError::Template(t) => t.into(),
            ArmError::Llm(l) => l.into(),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::Template(t) => t.into(),
            BaselineError::Llm(l) => l.into(),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Template(t) => t.into(),
            SynthError::Llm(l) => l.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "armetric", version, about = "Rewrite-based evaluation of summary claims")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus, validate it, and report label counts.
    Validate(ValidateArgs),
    /// Run the rewrite metric over a corpus.
    Arm(ArmArgs),
    /// Run a prompting detection baseline over a corpus.
    Baseline(BaselineArgs),
    /// Generate synthetic cross-polarity claims.
    Synth(SynthArgs),
    /// Score annotation files: explanation quality and significance.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemaArg {
    V1,
    Storysumm,
}

impl SchemaArg {
    fn to_schema(self) -> SchemaVersion {
        match self {
            SchemaArg::V1 => SchemaVersion::V1,
            SchemaArg::Storysumm => SchemaVersion::StorySumm,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            SchemaArg::V1 => "v1",
            SchemaArg::Storysumm => "storysumm",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Live,
    Record,
    Replay,
}

impl ModeArg {
    fn to_mode(self) -> GatewayMode {
        match self {
            ModeArg::Live => GatewayMode::Live,
            ModeArg::Record => GatewayMode::Record,
            ModeArg::Replay => GatewayMode::Replay,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Subjectivity,
    Inconsistency,
    Both,
}

impl VariantArg {
    fn to_variant(self) -> RewriteVariant {
        match self {
            VariantArg::Subjectivity => RewriteVariant::SubjectivityFocused,
            VariantArg::Inconsistency => RewriteVariant::InconsistencyFocused,
            VariantArg::Both => RewriteVariant::Both,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    ZeroShot,
    FewShot,
    SelfConsistency,
}

impl MethodArg {
    fn to_method(self) -> BaselineMethod {
        match self {
            MethodArg::ZeroShot => BaselineMethod::ZeroShot,
            MethodArg::FewShot => BaselineMethod::FewShot,
            MethodArg::SelfConsistency => BaselineMethod::SelfConsistency,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GoldArg {
    /// Positive where the claim is subjective.
    Subjectivity,
    /// Positive where the adjudicated label is unsupported.
    Faithfulness,
    /// Positive where the claim is subjective or unsupported.
    SubjOrUnfaith,
}

impl GoldArg {
    fn as_str(self) -> &'static str {
        match self {
            GoldArg::Subjectivity => "subjectivity",
            GoldArg::Faithfulness => "faithfulness",
            GoldArg::SubjOrUnfaith => "subj-or-unfaith",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TypesArg {
    /// One seeded type per objective claim.
    Seeded,
    /// All four types per objective claim.
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutcomeArg {
    /// All annotators gave the same label.
    Agreement,
    /// At least two annotators judged the claim supported.
    Faithful,
    /// The claim row carries `preferred: true`.
    Preferred,
}

impl OutcomeArg {
    fn as_str(self) -> &'static str {
        match self {
            OutcomeArg::Agreement => "agreement",
            OutcomeArg::Faithful => "faithful",
            OutcomeArg::Preferred => "preferred",
        }
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file to load.
    #[arg(long)]
    corpus: PathBuf,
    /// On-disk layout of the corpus file.
    #[arg(long, value_enum, default_value = "v1")]
    schema_version: SchemaArg,
}

#[derive(Args)]
struct GatewayArgs {
    /// Model name sent to the backend and recorded in the cache.
    #[arg(long)]
    model: String,
    /// live calls the backend, record calls and caches, replay is
    /// cache-only and never touches the network.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Response cache directory (required for record and replay).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Directory of prompt files overriding the built-in set.
    #[arg(long)]
    prompts_dir: Option<PathBuf>,
    /// Worker threads for claim-level requests.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ArmArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    gateway: GatewayArgs,
    /// Rewrite instruction variant.
    #[arg(long, value_enum, default_value = "both")]
    variant: VariantArg,
    /// Gold axis the rewritten flag is scored against.
    #[arg(long, value_enum, default_value = "subjectivity")]
    gold: GoldArg,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    gateway: GatewayArgs,
    /// Prompting method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Gold axis predictions are scored against.
    #[arg(long, value_enum, default_value = "subjectivity")]
    gold: GoldArg,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    gateway: GatewayArgs,
    /// Seed for type assignment and splicing coins.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How to-subjective variants pick their ambiguity type.
    #[arg(long, value_enum, default_value = "seeded")]
    types: TypesArg,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Explanation annotation file for quality metrics.
    #[arg(long)]
    explanations: Option<PathBuf>,
    /// First outcome group, as an annotation file.
    #[arg(long, requires = "group_b", requires = "outcome")]
    group_a: Option<PathBuf>,
    /// Second outcome group, as an annotation file.
    #[arg(long, requires = "group_a")]
    group_b: Option<PathBuf>,
    /// Outcome compared between the groups.
    #[arg(long, value_enum)]
    outcome: Option<OutcomeArg>,
    /// Bootstrap trials.
    #[arg(long, default_value_t = 10_000)]
    trials: u32,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for bootstrap trials.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run() -> i32 {
    run_from(std::env::args_os(), None)
}

/// Entry point with an injectable backend, so tests can drive the full
/// command path without a network.
pub fn run_from<I, T>(args: I, backend: Option<Arc<dyn ChatBackend>>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Arm(args) => cmd_arm(args, backend),
        Command::Baseline(args) => cmd_baseline(args, backend),
        Command::Synth(args) => cmd_synth(args, backend),
        Command::Stats(args) => cmd_stats(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn load(args: &CorpusArgs) -> Result<Corpus, CliError> {
    Ok(load_corpus(&args.corpus, args.schema_version.to_schema())?)
}

fn load_templates(dir: Option<&Path>) -> Result<TemplateSet, CliError> {
    match dir {
        Some(dir) => Ok(TemplateSet::from_dir(dir)?),
        None => Ok(TemplateSet::builtin()),
    }
}

fn build_gateway(
    args: &GatewayArgs,
    backend: Option<Arc<dyn ChatBackend>>,
) -> Result<LlmGateway, CliError> {
    let resolve_backend = || -> Result<Arc<dyn ChatBackend>, CliError> {
        if let Some(b) = backend.clone() {
            return Ok(b);
        }
        #[cfg(feature = "http")]
        {
            let http = crate::llmgw::HttpBackend::from_env()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Arc::new(http))
        }
        #[cfg(not(feature = "http"))]
        Err(CliError::Usage(
            "this build has no http backend; use --mode replay".to_string(),
        ))
    };
    let open_cache = || -> Result<ReplayCache, CliError> {
        let dir = args.cache_dir.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "--cache-dir is required for --mode {}",
                args.mode.to_mode().as_str()
            ))
        })?;
        Ok(ReplayCache::open(dir)?)
    };
    match args.mode {
        ModeArg::Live => Ok(LlmGateway::live(resolve_backend()?)),
        ModeArg::Record => Ok(LlmGateway::record(resolve_backend()?, open_cache()?)),
        ModeArg::Replay => Ok(LlmGateway::replay(open_cache()?)),
    }
}

/// Claim-level detection gold over in-scope claims. Claims missing the
/// labels an axis needs are left out.
fn gold_labels(corpus: &Corpus, axis: GoldArg) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    for cref in corpus.iter_claims() {
        let claim = cref.claim;
        if !claim.in_scope() {
            continue;
        }
        let subjective = claim.subjectivity.map(|s| s == Subjectivity::Subjective);
        let unfaithful = match claim.resolved_faithfulness() {
            Some(Faithfulness::Supported) => Some(false),
            Some(Faithfulness::Unsupported) => Some(true),
            _ => None,
        };
        let label = match axis {
            GoldArg::Subjectivity => subjective,
            GoldArg::Faithfulness => unfaithful,
            GoldArg::SubjOrUnfaith => match (subjective, unfaithful) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
        };
        if let Some(label) = label {
            out.insert(claim.id.clone(), label);
        }
    }
    out
}

#[derive(serde::Serialize)]
struct TypeRecallRow {
    ambiguity_type: u8,
    total: usize,
    detected: usize,
    recall_pct: Option<f64>,
}

#[derive(serde::Serialize)]
struct DetectionReport {
    gold: String,
    scores: Scores,
    #[serde(skip_serializing_if = "Option::is_none")]
    recall_by_type: Option<Vec<TypeRecallRow>>,
}

/// Scores a prediction map against a gold axis, printing a summary.
/// Returns None (with a warning) when the gold side cannot support a
/// comparison.
fn detection_report(
    corpus: &Corpus,
    predictions: &BTreeMap<String, bool>,
    axis: GoldArg,
) -> Result<Option<DetectionReport>, CliError> {
    let gold = gold_labels(corpus, axis);
    let has_both = gold.values().any(|&v| v) && gold.values().any(|&v| !v);
    if gold.is_empty() || !has_both {
        eprintln!(
            "warning: gold axis {} has no two-class labels here; skipping detection scores",
            axis.as_str()
        );
        return Ok(None);
    }
    let scores = score_predictions(&gold, predictions)?;
    let type_items: Vec<(u8, bool)> = corpus
        .iter_claims()
        .into_iter()
        .filter_map(|cref| {
            let claim = cref.claim;
            if !claim.in_scope() || claim.subjectivity != Some(Subjectivity::Subjective) {
                return None;
            }
            let t = claim.ambiguity_type?;
            Some((t, predictions.get(&claim.id).copied().unwrap_or(false)))
        })
        .collect();
    let recalls = if type_items.is_empty() {
        None
    } else {
        Some(
            recall_by_type(&type_items)
                .into_iter()
                .map(|r| TypeRecallRow {
                    ambiguity_type: r.ambiguity_type,
                    total: r.total,
                    detected: r.detected,
                    recall_pct: r.recall(),
                })
                .collect(),
        )
    };
    println!(
        "detection vs {}: balanced accuracy {}, F1 macro {}, {} claims ({} unscored)",
        axis.as_str(),
        fmt2(scores.balanced_accuracy),
        fmt2(scores.f1_macro),
        scores.total,
        scores.missing_predictions
    );
    Ok(Some(DetectionReport {
        gold: axis.as_str().to_string(),
        scores,
        recall_by_type: recalls,
    }))
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let corpus = load(&args.corpus)?;
    let in_scope = corpus
        .iter_claims()
        .into_iter()
        .filter(|c| c.claim.in_scope())
        .count();
    println!(
        "{}: {} stories, {} summaries, {} claims ({} in scope)",
        corpus.name.as_deref().unwrap_or("corpus"),
        corpus.stories.len(),
        corpus.summaries.len(),
        corpus.claim_count(),
        in_scope
    );

    let mut faith_counts = None;
    match count_labels(&corpus, LabelAxis::FaithBySubjectivity) {
        Ok(crate::corpus::CountTable::FaithSubjectivity(counts)) => {
            let rows = vec![
                vec!["supported/objective".to_string(), counts.supported_objective.to_string()],
                vec!["supported/subjective".to_string(), counts.supported_subjective.to_string()],
                vec!["unsupported/objective".to_string(), counts.unsupported_objective.to_string()],
                vec![
                    "unsupported/subjective".to_string(),
                    counts.unsupported_subjective.to_string(),
                ],
                vec!["ambiguous".to_string(), counts.ambiguous.to_string()],
                vec!["not applicable".to_string(), counts.not_applicable.to_string()],
            ];
            print!("\n{}", render_table(&["label", "count"], &rows));
            faith_counts = Some(counts);
        }
        Ok(_) => unreachable!("axis determines the table variant"),
        Err(e @ CorpusError::MissingLabelLayer { .. }) => {
            eprintln!("warning: {e}");
        }
        Err(e) => return Err(e.into()),
    }

    let mut type_counts = None;
    match count_labels(&corpus, LabelAxis::AmbiguityType) {
        Ok(crate::corpus::CountTable::AmbiguityType(counts)) => {
            let rows: Vec<Vec<String>> = counts
                .iter()
                .map(|(t, n)| vec![t.to_string(), n.to_string()])
                .collect();
            print!("\n{}", render_table(&["ambiguity type", "count"], &rows));
            type_counts = Some(counts);
        }
        Ok(_) => unreachable!("axis determines the table variant"),
        Err(e @ CorpusError::MissingLabelLayer { .. }) => {
            eprintln!("warning: {e}");
        }
        Err(e) => return Err(e.into()),
    }

    #[derive(serde::Serialize)]
    struct AgreementEntry {
        claims: usize,
        agreement_pct: f64,
    }
    let mut buckets: BTreeMap<&str, Vec<(String, Vec<Faithfulness>)>> = BTreeMap::new();
    let mut excluded = 0usize;
    for summary in &corpus.summaries {
        let kind = match summary.writer {
            Writer::Human { .. } => "human",
            Writer::Llm { .. } => "llm",
        };
        for claim in &summary.claims {
            if claim.faithfulness_labels.len() == 3 {
                let values = claim.faithfulness_labels.iter().map(|l| l.value).collect();
                buckets
                    .entry(kind)
                    .or_default()
                    .push((claim.id.clone(), values));
            } else {
                excluded += 1;
            }
        }
    }
    let mut agreement: BTreeMap<&str, AgreementEntry> = BTreeMap::new();
    for (kind, items) in &buckets {
        let pct = agreement_rate(items, 3)?;
        agreement.insert(
            kind,
            AgreementEntry {
                claims: items.len(),
                agreement_pct: pct,
            },
        );
    }
    if !agreement.is_empty() {
        let rows: Vec<Vec<String>> = agreement
            .iter()
            .map(|(kind, e)| {
                vec![kind.to_string(), e.claims.to_string(), fmt2(e.agreement_pct)]
            })
            .collect();
        print!(
            "\n{}",
            render_table(&["writer", "claims x3 labels", "agreement pct"], &rows)
        );
    }

    if let Some(out) = args.out {
        let config = serde_json::json!({
            "command": "validate",
            "corpus": args.corpus.corpus.display().to_string(),
            "schema_version": args.corpus.schema_version.as_str(),
        });
        let manifest = RunManifest::new(
            config,
            corpus_digest(&corpus),
            TemplateSet::builtin().digest(),
            None,
        );
        let set = ReportSet::create(&out, &manifest)?;
        #[derive(serde::Serialize)]
        struct LabelCounts {
            claims_total: usize,
            claims_in_scope: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            faith_subjectivity: Option<crate::corpus::FaithSubjCounts>,
            #[serde(skip_serializing_if = "Option::is_none")]
            ambiguity_types: Option<BTreeMap<u8, usize>>,
        }
        set.write_json(
            "label_counts",
            &LabelCounts {
                claims_total: corpus.claim_count(),
                claims_in_scope: in_scope,
                faith_subjectivity: faith_counts,
                ambiguity_types: type_counts,
            },
        )?;
        #[derive(serde::Serialize)]
        struct AgreementReport<'a> {
            excluded_claims: usize,
            by_writer: &'a BTreeMap<&'a str, AgreementEntry>,
        }
        set.write_json(
            "agreement",
            &AgreementReport {
                excluded_claims: excluded,
                by_writer: &agreement,
            },
        )?;
        println!("reports written to {}", out.display());
    }
    Ok(())
}

fn cmd_arm(args: ArmArgs, backend: Option<Arc<dyn ChatBackend>>) -> Result<(), CliError> {
    let corpus = load(&args.corpus)?;
    let templates = load_templates(args.gateway.prompts_dir.as_deref())?;
    let gateway = build_gateway(&args.gateway, backend)?;
    let config = ArmConfig {
        model: args.gateway.model.clone(),
        variant: args.variant.to_variant(),
        parallelism: args.gateway.parallelism,
        ..Default::default()
    };
    let run = run_arm(&corpus, &gateway, &templates, &config)?;
    println!(
        "{} claims ({} in scope), {} rewritten, {} failed",
        run.stats.claims_total,
        run.stats.claims_in_scope,
        run.stats.rewritten_in_scope,
        run.stats.failed
    );
    if let Some(mean) = run.stats.mean_normalized_edit_distance {
        println!("mean normalized edit distance (rewritten): {}", fmt2(mean));
    }
    let predictions = arm_predictions(&run);
    let detection = detection_report(&corpus, &predictions, args.gold)?;

    if let Some(out) = args.out {
        let config_echo = serde_json::json!({
            "command": "arm",
            "corpus": args.corpus.corpus.display().to_string(),
            "schema_version": args.corpus.schema_version.as_str(),
            "model": args.gateway.model,
            "mode": args.gateway.mode.to_mode().as_str(),
            "variant": config.variant.as_str(),
            "gold": args.gold.as_str(),
        });
        let manifest = RunManifest::new(
            config_echo,
            corpus_digest(&corpus),
            templates.digest(),
            gateway.cache().map(|c| c.digest()),
        );
        let set = ReportSet::create(&out, &manifest)?;
        #[derive(serde::Serialize)]
        struct RewriteStats<'a> {
            model: &'a str,
            variant: &'a str,
            stats: crate::arm::ArmStats,
            failures: &'a [crate::arm::ClaimFailure],
        }
        set.write_json(
            "rewrite_stats",
            &RewriteStats {
                model: &run.model,
                variant: run.variant.as_str(),
                stats: run.stats,
                failures: &run.failures,
            },
        )?;
        let rows: Vec<Vec<String>> = run
            .results
            .iter()
            .map(|r| {
                vec![
                    r.claim_id.clone(),
                    r.in_scope.to_string(),
                    r.rewritten.to_string(),
                    r.edit_distance.to_string(),
                    format!("{:.6}", r.normalized_edit_distance),
                    r.explanation_points.len().to_string(),
                    r.explanation_failed.to_string(),
                    r.retried.to_string(),
                ]
            })
            .collect();
        set.write_csv(
            "rewrite_stats",
            &[
                "claim_id",
                "in_scope",
                "rewritten",
                "edit_distance",
                "normalized_edit_distance",
                "explanation_points",
                "explanation_failed",
                "retried",
            ],
            &rows,
        )?;
        if let Some(report) = &detection {
            set.write_json("detection", report)?;
        }
        println!("reports written to {} (run {})", out.display(), set.run_id());
    }
    Ok(())
}

fn cmd_baseline(args: BaselineArgs, backend: Option<Arc<dyn ChatBackend>>) -> Result<(), CliError> {
    let corpus = load(&args.corpus)?;
    let templates = load_templates(args.gateway.prompts_dir.as_deref())?;
    let gateway = build_gateway(&args.gateway, backend)?;
    let config = BaselineConfig {
        model: args.gateway.model.clone(),
        method: args.method.to_method(),
        parallelism: args.gateway.parallelism,
    };
    let run = run_baseline(&corpus, &gateway, &templates, &config)?;
    println!(
        "{}: {} claims, {} detected, {} failed",
        run.method,
        run.stats.claims_total,
        run.stats.predicted_positive,
        run.stats.failed
    );
    let predictions = baseline_predictions(&run);
    let detection = detection_report(&corpus, &predictions, args.gold)?;

    if let Some(out) = args.out {
        let config_echo = serde_json::json!({
            "command": "baseline",
            "corpus": args.corpus.corpus.display().to_string(),
            "schema_version": args.corpus.schema_version.as_str(),
            "model": args.gateway.model,
            "mode": args.gateway.mode.to_mode().as_str(),
            "method": run.method.as_str(),
            "gold": args.gold.as_str(),
        });
        let manifest = RunManifest::new(
            config_echo,
            corpus_digest(&corpus),
            templates.digest(),
            gateway.cache().map(|c| c.digest()),
        );
        let set = ReportSet::create(&out, &manifest)?;
        #[derive(serde::Serialize)]
        struct MethodStats<'a> {
            model: &'a str,
            method: &'a str,
            stats: crate::baselines::BaselineStats,
            failures: &'a [crate::arm::ClaimFailure],
        }
        set.write_json(
            "method_stats",
            &MethodStats {
                model: &run.model,
                method: run.method.as_str(),
                stats: run.stats,
                failures: &run.failures,
            },
        )?;
        let rows: Vec<Vec<String>> = run
            .predictions
            .iter()
            .map(|p| {
                let yes = p.sample_answers.iter().flatten().filter(|&&a| a).count();
                let no = p.sample_answers.iter().flatten().filter(|&&a| !a).count();
                let unparsed = p.sample_answers.iter().filter(|a| a.is_none()).count();
                vec![
                    p.claim_id.clone(),
                    p.prediction.to_string(),
                    yes.to_string(),
                    no.to_string(),
                    unparsed.to_string(),
                    p.retried.to_string(),
                ]
            })
            .collect();
        set.write_csv(
            "detection",
            &["claim_id", "detected", "yes_samples", "no_samples", "unparsed", "retried"],
            &rows,
        )?;
        if let Some(report) = &detection {
            set.write_json("detection", report)?;
        }
        println!("reports written to {} (run {})", out.display(), set.run_id());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, backend: Option<Arc<dyn ChatBackend>>) -> Result<(), CliError> {
    let corpus = load(&args.corpus)?;
    let templates = load_templates(args.gateway.prompts_dir.as_deref())?;
    let gateway = build_gateway(&args.gateway, backend)?;
    let type_assignment = match args.types {
        TypesArg::Seeded => TypeAssignment::SingleSeeded,
        TypesArg::All => TypeAssignment::AllFour,
    };
    let config = SynthConfig {
        model: args.gateway.model.clone(),
        seed: args.seed,
        type_assignment,
    };
    let run = run_synth(&corpus, &gateway, &templates, &config)?;
    println!(
        "{} claims considered, {} variants, {} failed, {} skipped",
        run.stats.claims_considered,
        run.stats.variants_generated,
        run.stats.failed,
        run.stats.skipped_no_label + run.stats.skipped_commentary
    );

    let spliced = if type_assignment == TypeAssignment::SingleSeeded {
        match splice(&corpus, &run.variants, args.seed) {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("warning: splice skipped: {e}");
                None
            }
        }
    } else {
        eprintln!("warning: splice skipped: --types all yields several variants per claim");
        None
    };

    if let Some(out) = args.out {
        let config_echo = serde_json::json!({
            "command": "synth",
            "corpus": args.corpus.corpus.display().to_string(),
            "schema_version": args.corpus.schema_version.as_str(),
            "model": args.gateway.model,
            "mode": args.gateway.mode.to_mode().as_str(),
            "seed": args.seed,
            "types": match args.types { TypesArg::Seeded => "seeded", TypesArg::All => "all" },
        });
        let manifest = RunManifest::new(
            config_echo,
            corpus_digest(&corpus),
            templates.digest(),
            gateway.cache().map(|c| c.digest()),
        );
        let set = ReportSet::create(&out, &manifest)?;
        #[derive(serde::Serialize)]
        struct SynthReport<'a> {
            model: &'a str,
            stats: crate::synth::SynthStats,
            failures: &'a [crate::arm::ClaimFailure],
        }
        set.write_json(
            "synth_stats",
            &SynthReport {
                model: &run.model,
                stats: run.stats,
                failures: &run.failures,
            },
        )?;
        let rows: Vec<Vec<String>> = run
            .variants
            .iter()
            .map(|v| {
                vec![
                    v.source_claim_id.clone(),
                    v.direction.to_string(),
                    v.ambiguity_type.to_string(),
                    v.template_name.clone(),
                    v.retried.to_string(),
                    v.text.clone(),
                ]
            })
            .collect();
        set.write_csv(
            "variants",
            &["source_claim_id", "direction", "ambiguity_type", "template", "retried", "text"],
            &rows,
        )?;
        if let Some(spliced) = &spliced {
            set.write_json("spliced", &spliced_corpus(&corpus, spliced))?;
        }
        let finetune_path = set.path("finetune.jsonl");
        let written = export_finetune_corpus(&corpus, &run.variants, &finetune_path)?;
        println!(
            "reports written to {} (run {}), {} tuning rows",
            out.display(),
            set.run_id(),
            written
        );
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct AnnotationFile {
    claims: Vec<AnnotationRow>,
}

#[derive(serde::Deserialize)]
struct AnnotationRow {
    id: String,
    #[serde(default)]
    faithfulness_labels: Vec<FaithLabel>,
    #[serde(default)]
    preferred: Option<bool>,
}

fn read_annotations(path: &Path) -> Result<AnnotationFile, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::Data(format!("parse {}: {e}", path.display())))
}

fn outcomes(file: &AnnotationFile, outcome: OutcomeArg, path: &Path) -> Result<Vec<bool>, CliError> {
    file.claims
        .iter()
        .map(|row| match outcome {
            OutcomeArg::Agreement => {
                if row.faithfulness_labels.is_empty() {
                    Err(CliError::Data(format!(
                        "{}: claim {} has no faithfulness labels",
                        path.display(),
                        row.id
                    )))
                } else {
                    let first = row.faithfulness_labels[0].value;
                    Ok(row.faithfulness_labels.iter().all(|l| l.value == first))
                }
            }
            OutcomeArg::Faithful => Ok(row
                .faithfulness_labels
                .iter()
                .filter(|l| l.value == Faithfulness::Supported)
                .count()
                >= 2),
            OutcomeArg::Preferred => row.preferred.ok_or_else(|| {
                CliError::Data(format!(
                    "{}: claim {} has no preferred field",
                    path.display(),
                    row.id
                ))
            }),
        })
        .collect()
}

#[derive(serde::Serialize)]
struct ExplanationQuality {
    explanations: usize,
    pct_important: f64,
    pct_none_important: f64,
    pct_wrong: f64,
    pct_none_wrong: f64,
}

fn explanation_quality(labels: &[Vec<crate::metrics::PointLabel>]) -> Result<ExplanationQuality, CliError> {
    Ok(ExplanationQuality {
        explanations: labels.len(),
        pct_important: pct_important(labels)?,
        pct_none_important: pct_none_important(labels)?,
        pct_wrong: pct_wrong(labels)?,
        pct_none_wrong: pct_none_wrong(labels)?,
    })
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    if args.explanations.is_none() && args.group_a.is_none() {
        return Err(CliError::Usage(
            "stats needs --explanations or --group-a/--group-b/--outcome".to_string(),
        ));
    }

    use sha2::Digest as _;
    let mut input_digests = Vec::new();
    let mut digest_input = |path: &Path| -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Data(format!("read {}: {e}", path.display())))?;
        input_digests.push(hex::encode(sha2::Sha256::digest(&bytes)));
        Ok(())
    };

    let mut quality = None;
    if let Some(path) = &args.explanations {
        digest_input(path)?;
        #[derive(serde::Deserialize)]
        struct ExplanationFile {
            annotations: Vec<ExplanationAnnotation>,
        }
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("read {}: {e}", path.display())))?;
        let file: ExplanationFile = serde_json::from_str(&raw)
            .map_err(|e| CliError::Data(format!("parse {}: {e}", path.display())))?;
        let individual =
            aggregate_explanation_labels(&file.annotations, Aggregation::Individual)?;
        let individual = explanation_quality(&individual)?;
        println!(
            "explanation quality (individual): {} important, {} none-important, {} wrong, {} none-wrong",
            fmt2(individual.pct_important),
            fmt2(individual.pct_none_important),
            fmt2(individual.pct_wrong),
            fmt2(individual.pct_none_wrong)
        );
        let majority = match aggregate_explanation_labels(&file.annotations, Aggregation::Majority)
        {
            Ok(labels) => {
                let q = explanation_quality(&labels)?;
                println!(
                    "explanation quality (majority):   {} important, {} none-important, {} wrong, {} none-wrong",
                    fmt2(q.pct_important),
                    fmt2(q.pct_none_important),
                    fmt2(q.pct_wrong),
                    fmt2(q.pct_none_wrong)
                );
                Some(q)
            }
            Err(e @ MetricsError::TooFewAnnotators { .. }) => {
                eprintln!("warning: majority aggregation skipped: {e}");
                None
            }
            Err(e) => return Err(e.into()),
        };
        #[derive(serde::Serialize)]
        struct QualityReport {
            individual: ExplanationQuality,
            #[serde(skip_serializing_if = "Option::is_none")]
            majority: Option<ExplanationQuality>,
        }
        quality = Some(QualityReport {
            individual,
            majority,
        });
    }

    let mut significance = None;
    if let (Some(a_path), Some(b_path), Some(outcome)) =
        (&args.group_a, &args.group_b, args.outcome)
    {
        digest_input(a_path)?;
        digest_input(b_path)?;
        let group_a = outcomes(&read_annotations(a_path)?, outcome, a_path)?;
        let group_b = outcomes(&read_annotations(b_path)?, outcome, b_path)?;
        let result = bootstrap_pvalue(
            &group_a,
            &group_b,
            &BootstrapConfig {
                trials: args.trials,
                seed: args.seed,
                parallelism: args.parallelism,
            },
        )?;
        let rate = |g: &[bool]| g.iter().filter(|&&x| x).count() as f64 / g.len() as f64;
        println!(
            "{}: group a {} ({} claims), group b {} ({} claims), difference {}, p = {}",
            outcome.as_str(),
            fmt2(100.0 * rate(&group_a)),
            group_a.len(),
            fmt2(100.0 * rate(&group_b)),
            group_b.len(),
            fmt2(100.0 * result.observed_difference),
            result.p_value
        );
        #[derive(serde::Serialize)]
        struct GroupSummary {
            claims: usize,
            rate_pct: f64,
        }
        #[derive(serde::Serialize)]
        struct Significance {
            outcome: String,
            group_a: GroupSummary,
            group_b: GroupSummary,
            result: crate::metrics::BootstrapResult,
        }
        significance = Some(Significance {
            outcome: outcome.as_str().to_string(),
            group_a: GroupSummary {
                claims: group_a.len(),
                rate_pct: 100.0 * rate(&group_a),
            },
            group_b: GroupSummary {
                claims: group_b.len(),
                rate_pct: 100.0 * rate(&group_b),
            },
            result,
        });
    } else if args.group_a.is_some() && args.outcome.is_none() {
        return Err(CliError::Usage(
            "--group-a/--group-b need --outcome".to_string(),
        ));
    }

    if let Some(out) = args.out {
        let config = serde_json::json!({
            "command": "stats",
            "trials": args.trials,
            "seed": args.seed,
            "outcome": args.outcome.map(|o| o.as_str()),
        });
        let mut hasher = sha2::Sha256::new();
        for d in &input_digests {
            sha2::Digest::update(&mut hasher, d.as_bytes());
        }
        let inputs_digest = hex::encode(sha2::Digest::finalize(hasher));
        let manifest = RunManifest::new(config, inputs_digest, TemplateSet::builtin().digest(), None);
        let set = ReportSet::create(&out, &manifest)?;
        if let Some(quality) = &quality {
            set.write_json("explanation_quality", quality)?;
        }
        if let Some(significance) = &significance {
            set.write_json("significance", significance)?;
        }
        println!("reports written to {}", out.display());
    }
    Ok(())
}
