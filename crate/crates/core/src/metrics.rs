//! Scoring: explanation-point quality, annotator agreement, detection
//! accuracy, per-type recall, and a paired bootstrap significance test.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("no rewrites to score")]
    EmptyRewriteSet,
    #[error("rewrite at index {index} has an empty explanation")]
    EmptyExplanation { index: usize },
    #[error("rewrite {rewrite_id}: annotators disagree on point count")]
    LabelLengthMismatch { rewrite_id: String },
    #[error("rewrite {rewrite_id}: majority aggregation needs at least 3 annotators, got {got}")]
    TooFewAnnotators { rewrite_id: String, got: usize },
    #[error("rewrite {rewrite_id}: duplicate annotation from {annotator_id}")]
    DuplicateAnnotation {
        rewrite_id: String,
        annotator_id: String,
    },
    #[error("items with wrong annotator count (want {want}): {}", problems.join(", "))]
    AnnotatorCount { want: usize, problems: Vec<String> },
    #[error("gold labels contain only one class")]
    GoldSingleClass,
    #[error("both groups must be non-empty")]
    EmptyGroup,
    #[error("trial count must be positive")]
    ZeroTrials,
}

/// Annotator judgment of one explanation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    Important,
    Neutral,
    Wrong,
}

fn check_explanations(explanations: &[Vec<PointLabel>]) -> Result<(), MetricsError> {
    if explanations.is_empty() {
        return Err(MetricsError::EmptyRewriteSet);
    }
    for (index, e) in explanations.iter().enumerate() {
        if e.is_empty() {
            return Err(MetricsError::EmptyExplanation { index });
        }
    }
    Ok(())
}

fn fraction(e: &[PointLabel], label: PointLabel) -> f64 {
    e.iter().filter(|&&l| l == label).count() as f64 / e.len() as f64
}

/// Mean per-rewrite fraction of points labeled important, as a percent.
pub fn pct_important(explanations: &[Vec<PointLabel>]) -> Result<f64, MetricsError> {
    check_explanations(explanations)?;
    let sum: f64 = explanations
        .iter()
        .map(|e| fraction(e, PointLabel::Important))
        .sum();
    Ok(100.0 * sum / explanations.len() as f64)
}

/// Percent of rewrites whose explanation has no important point.
pub fn pct_none_important(explanations: &[Vec<PointLabel>]) -> Result<f64, MetricsError> {
    check_explanations(explanations)?;
    let with = explanations
        .iter()
        .filter(|e| e.contains(&PointLabel::Important))
        .count();
    Ok(100.0 * (1.0 - with as f64 / explanations.len() as f64))
}

/// Mean per-rewrite fraction of points labeled wrong, as a percent.
pub fn pct_wrong(explanations: &[Vec<PointLabel>]) -> Result<f64, MetricsError> {
    check_explanations(explanations)?;
    let sum: f64 = explanations
        .iter()
        .map(|e| fraction(e, PointLabel::Wrong))
        .sum();
    Ok(100.0 * sum / explanations.len() as f64)
}

/// Percent of rewrites whose explanation has no wrong point.
pub fn pct_none_wrong(explanations: &[Vec<PointLabel>]) -> Result<f64, MetricsError> {
    check_explanations(explanations)?;
    let with = explanations
        .iter()
        .filter(|e| e.contains(&PointLabel::Wrong))
        .count();
    Ok(100.0 * (1.0 - with as f64 / explanations.len() as f64))
}

/// One annotator's point labels for one rewrite's explanation. Decoy
/// rows are attention checks and never enter the metrics.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExplanationAnnotation {
    pub rewrite_id: String,
    pub annotator_id: String,
    pub labels: Vec<PointLabel>,
    #[serde(default)]
    pub is_decoy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Every (rewrite, annotator) pair counts as its own explanation.
    Individual,
    /// One label vector per rewrite by per-point majority vote; a point
    /// with no single modal label becomes neutral.
    Majority,
}

/// Groups annotations into the explanation label sets the percent
/// metrics consume. Ordering is by rewrite id, then annotator id.
pub fn aggregate_explanation_labels(
    annotations: &[ExplanationAnnotation],
    mode: Aggregation,
) -> Result<Vec<Vec<PointLabel>>, MetricsError> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, &Vec<PointLabel>>> = BTreeMap::new();
    for a in annotations {
        if a.is_decoy {
            continue;
        }
        let group = groups.entry(&a.rewrite_id).or_default();
        if group.insert(&a.annotator_id, &a.labels).is_some() {
            return Err(MetricsError::DuplicateAnnotation {
                rewrite_id: a.rewrite_id.clone(),
                annotator_id: a.annotator_id.clone(),
            });
        }
    }
    let mut out = Vec::new();
    for (rewrite_id, group) in &groups {
        let len = group.values().next().map_or(0, |l| l.len());
        if group.values().any(|l| l.len() != len) {
            return Err(MetricsError::LabelLengthMismatch {
                rewrite_id: rewrite_id.to_string(),
            });
        }
        match mode {
            Aggregation::Individual => {
                for labels in group.values() {
                    out.push((*labels).clone());
                }
            }
            Aggregation::Majority => {
                if group.len() < 3 {
                    return Err(MetricsError::TooFewAnnotators {
                        rewrite_id: rewrite_id.to_string(),
                        got: group.len(),
                    });
                }
                let mut merged = Vec::with_capacity(len);
                for i in 0..len {
                    let mut counts: BTreeMap<PointLabel, usize> = BTreeMap::new();
                    for labels in group.values() {
                        *counts.entry(labels[i]).or_default() += 1;
                    }
                    let best = counts.values().copied().max().unwrap_or(0);
                    let modal: Vec<PointLabel> = counts
                        .iter()
                        .filter(|(_, &c)| c == best)
                        .map(|(&l, _)| l)
                        .collect();
                    merged.push(if modal.len() == 1 {
                        modal[0]
                    } else {
                        PointLabel::Neutral
                    });
                }
                out.push(merged);
            }
        }
    }
    Ok(out)
}

/// Percent of items on which all annotators gave the same label. Every
/// item must carry exactly `want` labels.
pub fn agreement_rate<L: PartialEq>(
    items: &[(String, Vec<L>)],
    want: usize,
) -> Result<f64, MetricsError> {
    let problems: Vec<String> = items
        .iter()
        .filter(|(_, labels)| labels.len() != want)
        .map(|(id, labels)| format!("{id} ({} labels)", labels.len()))
        .collect();
    if !problems.is_empty() {
        return Err(MetricsError::AnnotatorCount { want, problems });
    }
    if items.is_empty() {
        return Err(MetricsError::EmptyRewriteSet);
    }
    let unanimous = items
        .iter()
        .filter(|(_, labels)| labels.iter().all(|l| *l == labels[0]))
        .count();
    Ok(100.0 * unanimous as f64 / items.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, gold: bool, predicted: bool) {
        match (gold, predicted) {
            (true, true) => self.true_positive += 1,
            (false, true) => self.false_positive += 1,
            (true, false) => self.false_negative += 1,
            (false, false) => self.true_negative += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }

    fn positives(&self) -> usize {
        self.true_positive + self.false_negative
    }

    fn negatives(&self) -> usize {
        self.true_negative + self.false_positive
    }
}

/// Mean of per-class recall, as a percent.
pub fn balanced_accuracy(counts: &ConfusionCounts) -> Result<f64, MetricsError> {
    if counts.positives() == 0 || counts.negatives() == 0 {
        return Err(MetricsError::GoldSingleClass);
    }
    let recall_pos = counts.true_positive as f64 / counts.positives() as f64;
    let recall_neg = counts.true_negative as f64 / counts.negatives() as f64;
    Ok(100.0 * (recall_pos + recall_neg) / 2.0)
}

/// Unweighted mean of the two per-class F1 scores, in [0, 1]. A class
/// that is never gold nor predicted contributes 0.
pub fn f1_macro(counts: &ConfusionCounts) -> Result<f64, MetricsError> {
    if counts.positives() == 0 || counts.negatives() == 0 {
        return Err(MetricsError::GoldSingleClass);
    }
    let f1 = |tp: usize, fp: usize, fnn: usize| -> f64 {
        let denom = 2 * tp + fp + fnn;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let pos = f1(counts.true_positive, counts.false_positive, counts.false_negative);
    let neg = f1(counts.true_negative, counts.false_negative, counts.false_positive);
    Ok((pos + neg) / 2.0)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Scores {
    pub counts: ConfusionCounts,
    pub balanced_accuracy: f64,
    pub f1_macro: f64,
    pub total: usize,
    pub missing_predictions: usize,
}

/// Scores predictions against gold over the gold id set. A gold claim
/// without a prediction counts as misclassified.
pub fn score_predictions(
    gold: &BTreeMap<String, bool>,
    predictions: &BTreeMap<String, bool>,
) -> Result<Scores, MetricsError> {
    let mut counts = ConfusionCounts::default();
    let mut missing = 0usize;
    for (id, &label) in gold {
        match predictions.get(id) {
            Some(&p) => counts.record(label, p),
            None => {
                missing += 1;
                counts.record(label, !label);
            }
        }
    }
    Ok(Scores {
        counts,
        balanced_accuracy: balanced_accuracy(&counts)?,
        f1_macro: f1_macro(&counts)?,
        total: counts.total(),
        missing_predictions: missing,
    })
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TypeRecall {
    pub ambiguity_type: u8,
    pub total: usize,
    pub detected: usize,
}

impl TypeRecall {
    /// Percent detected, or None when the type has no claims.
    pub fn recall(&self) -> Option<f64> {
        if self.total == 0 {
            None
        } else {
            Some(100.0 * self.detected as f64 / self.total as f64)
        }
    }
}

/// Detection recall split by ambiguity type. Commentary claims (type 5)
/// are out of scope and dropped; types 1 through 4 always appear, even
/// when empty.
pub fn recall_by_type(items: &[(u8, bool)]) -> Vec<TypeRecall> {
    let mut out: Vec<TypeRecall> = (1..=4)
        .map(|t| TypeRecall {
            ambiguity_type: t,
            total: 0,
            detected: 0,
        })
        .collect();
    for &(ty, detected) in items {
        if !(1..=4).contains(&ty) {
            continue;
        }
        let slot = &mut out[ty as usize - 1];
        slot.total += 1;
        if detected {
            slot.detected += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    pub trials: u32,
    pub seed: u64,
    pub parallelism: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            trials: 10_000,
            seed: 0,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BootstrapResult {
    pub observed_difference: f64,
    pub p_value: f64,
    pub trials: u32,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-unit seed derivation, so trial outcomes do not depend on
/// how work is split across threads.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn mean(xs: &[bool]) -> f64 {
    xs.iter().filter(|&&x| x).count() as f64 / xs.len() as f64
}

fn resampled_mean(rng: &mut ChaCha8Rng, xs: &[bool]) -> f64 {
    let mut hits = 0usize;
    for _ in 0..xs.len() {
        if xs[rng.gen_range(0..xs.len())] {
            hits += 1;
        }
    }
    hits as f64 / xs.len() as f64
}

fn extreme_trials(
    group_a: &[bool],
    group_b: &[bool],
    observed: f64,
    seed: u64,
    trials: std::ops::Range<u32>,
) -> u64 {
    let threshold = observed.abs();
    let mut count = 0u64;
    for trial in trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, trial as u64));
        let diff = resampled_mean(&mut rng, group_a) - resampled_mean(&mut rng, group_b);
        if (diff - observed).abs() >= threshold {
            count += 1;
        }
    }
    count
}

/// Two-sided bootstrap test of the difference in success rates between
/// two outcome groups. Resamples each group with replacement and asks
/// how often the recentered difference is at least as extreme as the
/// observed one; the count is add-one smoothed.
pub fn bootstrap_pvalue(
    group_a: &[bool],
    group_b: &[bool],
    config: &BootstrapConfig,
) -> Result<BootstrapResult, MetricsError> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    if config.trials == 0 {
        return Err(MetricsError::ZeroTrials);
    }
    let observed = mean(group_a) - mean(group_b);
    let workers = config.parallelism.clamp(1, 64) as u32;
    let count: u64 = if workers == 1 {
        extreme_trials(group_a, group_b, observed, config.seed, 0..config.trials)
    } else {
        let chunk = config.trials.div_ceil(workers);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(config.trials);
                if lo >= hi {
                    break;
                }
                handles.push(scope.spawn(move || {
                    extreme_trials(group_a, group_b, observed, config.seed, lo..hi)
                }));
            }
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };
    Ok(BootstrapResult {
        observed_difference: observed,
        p_value: (1 + count) as f64 / (1 + config.trials as u64) as f64,
        trials: config.trials,
        seed: config.seed,
    })
}
