//! Corpus model: stories, summaries and sentence-level claims.
//!
//! The native on-disk format is a single JSON document with `stories` and
//! `summaries` arrays (see `docs/schema.md`). An adapter accepts the
//! keyed-object layout used by published story-summarization annotation
//! releases, where each entry carries the story text, summary sentences
//! and per-sentence label arrays.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("corpus validation failed:\n{}", problems.join("\n"))]
    Validation { problems: Vec<String> },
    #[error("claims are missing the {layer} layer: {}", claim_ids.join(", "))]
    MissingLabelLayer {
        layer: String,
        claim_ids: Vec<String>,
    },
}

/// Faithfulness judgement for a claim against its story.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Faithfulness {
    Supported,
    Unsupported,
    Ambiguous,
    NotApplicable,
}

impl fmt::Display for Faithfulness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Faithfulness::Supported => "supported",
            Faithfulness::Unsupported => "unsupported",
            Faithfulness::Ambiguous => "ambiguous",
            Faithfulness::NotApplicable => "not_applicable",
        };
        f.write_str(s)
    }
}

/// Whether a claim can be checked directly against story text or requires
/// interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subjectivity {
    Objective,
    Subjective,
}

impl fmt::Display for Subjectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subjectivity::Objective => "objective",
            Subjectivity::Subjective => "subjective",
        })
    }
}

/// One annotator's faithfulness judgement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaithLabel {
    pub annotator_id: String,
    pub value: Faithfulness,
}

/// A single summary sentence with its annotation layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faithfulness_labels: Vec<FaithLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_faithfulness: Option<Faithfulness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subjectivity: Option<Subjectivity>,
    /// Subjective-ambiguity category, 1-5. Present only for subjective
    /// claims.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity_type: Option<u8>,
}

impl Claim {
    /// Adjudicated faithfulness: the gold label when present, otherwise
    /// the strict majority of annotator labels. A tie resolves to
    /// `Ambiguous`; no labels at all resolves to `None`.
    pub fn resolved_faithfulness(&self) -> Option<Faithfulness> {
        if self.gold_faithfulness.is_some() {
            return self.gold_faithfulness;
        }
        if self.faithfulness_labels.is_empty() {
            return None;
        }
        let mut counts: BTreeMap<Faithfulness, usize> = BTreeMap::new();
        for label in &self.faithfulness_labels {
            *counts.entry(label.value).or_default() += 1;
        }
        let best = counts.values().copied().max().unwrap_or(0);
        let leaders: Vec<Faithfulness> = counts
            .iter()
            .filter(|(_, n)| **n == best)
            .map(|(v, _)| *v)
            .collect();
        match leaders.as_slice() {
            [single] => Some(*single),
            _ => Some(Faithfulness::Ambiguous),
        }
    }

    /// Claims adjudicated not-applicable are excluded from scoring.
    pub fn in_scope(&self) -> bool {
        self.resolved_faithfulness() != Some(Faithfulness::NotApplicable)
    }
}

/// Who produced a summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Writer {
    Llm { name: String },
    Human { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub story_id: String,
    pub writer: Writer,
    pub claims: Vec<Claim>,
}

impl SummaryRecord {
    /// Full summary text, reconstructed from the claim sentences.
    pub fn text(&self) -> String {
        let parts: Vec<&str> = self.claims.iter().map(|c| c.text.as_str()).collect();
        parts.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

/// Where a loaded corpus came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub source: String,
    pub format: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub stories: Vec<Story>,
    pub summaries: Vec<SummaryRecord>,
    #[serde(skip)]
    pub provenance: Provenance,
}

fn default_schema_version() -> u32 {
    1
}

/// A claim joined with its summary and story context.
#[derive(Debug, Clone, Copy)]
pub struct ClaimRef<'a> {
    pub story: &'a Story,
    pub summary: &'a SummaryRecord,
    pub claim: &'a Claim,
}

impl Corpus {
    pub fn story(&self, id: &str) -> Option<&Story> {
        self.stories.iter().find(|s| s.id == id)
    }

    pub fn summary(&self, id: &str) -> Option<&SummaryRecord> {
        self.summaries.iter().find(|s| s.id == id)
    }

    pub fn claim_count(&self) -> usize {
        self.summaries.iter().map(|s| s.claims.len()).sum()
    }

    /// All claims in corpus order, each with its context.
    pub fn iter_claims(&self) -> Vec<ClaimRef<'_>> {
        let mut out = Vec::with_capacity(self.claim_count());
        for summary in &self.summaries {
            let story = self
                .story(&summary.story_id)
                .expect("validated corpus has resolvable story ids");
            for claim in &summary.claims {
                out.push(ClaimRef {
                    story,
                    summary,
                    claim,
                });
            }
        }
        out
    }

    /// Structural checks; returns every problem found.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut story_ids = BTreeSet::new();
        for story in &self.stories {
            if story.id.is_empty() {
                problems.push("story with empty id".to_string());
            }
            if !story_ids.insert(story.id.clone()) {
                problems.push(format!("duplicate story id {:?}", story.id));
            }
            if story.text.trim().is_empty() {
                problems.push(format!("story {:?} has empty text", story.id));
            }
        }
        let mut summary_ids = BTreeSet::new();
        let mut claim_ids = BTreeSet::new();
        for summary in &self.summaries {
            if !summary_ids.insert(summary.id.clone()) {
                problems.push(format!("duplicate summary id {:?}", summary.id));
            }
            if !story_ids.contains(&summary.story_id) {
                problems.push(format!(
                    "summary {:?} references unknown story {:?}",
                    summary.id, summary.story_id
                ));
            }
            if summary.claims.is_empty() {
                problems.push(format!("summary {:?} has no claims", summary.id));
            }
            for claim in &summary.claims {
                if !claim_ids.insert(claim.id.clone()) {
                    problems.push(format!("duplicate claim id {:?}", claim.id));
                }
                if claim.text.trim().is_empty() {
                    problems.push(format!("claim {:?} has empty text", claim.id));
                } else if segment_sentences(&claim.text).len() != 1 {
                    problems.push(format!(
                        "claim {:?} is not a single sentence",
                        claim.id
                    ));
                }
                match (claim.subjectivity, claim.ambiguity_type) {
                    (_, Some(t)) if !(1..=5).contains(&t) => {
                        problems.push(format!(
                            "claim {:?} has ambiguity type {} outside 1-5",
                            claim.id, t
                        ));
                    }
                    (Some(Subjectivity::Objective), Some(_)) | (None, Some(_)) => {
                        problems.push(format!(
                            "claim {:?} has an ambiguity type but is not subjective",
                            claim.id
                        ));
                    }
                    _ => {}
                }
                let mut seen = BTreeSet::new();
                for label in &claim.faithfulness_labels {
                    if !seen.insert(label.annotator_id.clone()) {
                        problems.push(format!(
                            "claim {:?} labelled twice by annotator {:?}",
                            claim.id, label.annotator_id
                        ));
                    }
                }
            }
        }
        problems
    }
}

/// On-disk layouts the loader understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemaVersion {
    /// Native schema, `schema_version: 1`.
    #[default]
    V1,
    /// Keyed-object annotation release layout.
    StorySumm,
}

/// Loads and validates a corpus file.
pub fn load_corpus(path: &Path, schema: SchemaVersion) -> Result<Corpus, CorpusError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let mut corpus = match schema {
        SchemaVersion::V1 => {
            serde_json::from_str::<Corpus>(&raw).map_err(|source| CorpusError::Parse {
                path: display.clone(),
                source,
            })?
        }
        SchemaVersion::StorySumm => parse_storysumm(&raw, &display)?,
    };
    corpus.provenance = Provenance {
        source: display,
        format: match schema {
            SchemaVersion::V1 => "v1".to_string(),
            SchemaVersion::StorySumm => "storysumm".to_string(),
        },
    };
    let problems = corpus.validate();
    if !problems.is_empty() {
        return Err(CorpusError::Validation { problems });
    }
    Ok(corpus)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SsSummary {
    Sentences(Vec<String>),
    Text(String),
}

#[derive(Deserialize)]
struct SsEntry {
    story: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    story_id: Option<String>,
    #[serde(default)]
    model: Option<String>,
    summary: SsSummary,
    #[serde(default, rename = "claim-labels")]
    claim_labels: Option<Vec<String>>,
    #[serde(default)]
    annotations: Option<Vec<Vec<String>>>,
    #[serde(default)]
    subjectivity: Option<Vec<Option<String>>>,
    #[serde(default, rename = "ambiguity-types")]
    ambiguity_types: Option<Vec<Option<u8>>>,
}

fn parse_faith_value(raw: &str, context: &str) -> Result<Faithfulness, CorpusError> {
    match raw.to_ascii_lowercase().as_str() {
        "faithful" | "supported" | "yes" => Ok(Faithfulness::Supported),
        "unfaithful" | "unsupported" | "no" => Ok(Faithfulness::Unsupported),
        "ambiguous" => Ok(Faithfulness::Ambiguous),
        "na" | "n/a" | "not_applicable" | "not-applicable" => Ok(Faithfulness::NotApplicable),
        other => Err(CorpusError::Validation {
            problems: vec![format!(
                "{context}: unknown faithfulness label {other:?}"
            )],
        }),
    }
}

fn parse_subjectivity_value(raw: &str, context: &str) -> Result<Subjectivity, CorpusError> {
    match raw.to_ascii_lowercase().as_str() {
        "objective" => Ok(Subjectivity::Objective),
        "subjective" => Ok(Subjectivity::Subjective),
        other => Err(CorpusError::Validation {
            problems: vec![format!(
                "{context}: unknown subjectivity label {other:?}"
            )],
        }),
    }
}

/// Converts the keyed-object release layout into the native model.
/// Entries are processed in key order, so the result is deterministic.
fn parse_storysumm(raw: &str, path: &str) -> Result<Corpus, CorpusError> {
    let entries: BTreeMap<String, SsEntry> =
        serde_json::from_str(raw).map_err(|source| CorpusError::Parse {
            path: path.to_string(),
            source,
        })?;
    let mut stories: Vec<Story> = Vec::new();
    let mut story_ids: BTreeMap<String, String> = BTreeMap::new();
    let mut summaries = Vec::new();
    for (key, entry) in &entries {
        let story_id = match &entry.story_id {
            Some(explicit) => explicit.clone(),
            None => match story_ids.get(&entry.story) {
                Some(known) => known.clone(),
                None => format!("story-{:03}", story_ids.len() + 1),
            },
        };
        if !story_ids.contains_key(&entry.story) {
            story_ids.insert(entry.story.clone(), story_id.clone());
            stories.push(Story {
                id: story_id.clone(),
                title: entry.title.clone(),
                text: entry.story.clone(),
            });
        }
        let sentences = match &entry.summary {
            SsSummary::Sentences(sents) => sents.clone(),
            SsSummary::Text(text) => segment_sentences(text),
        };
        let context = format!("summary {key:?}");
        let expect_len = |name: &str, len: usize| -> Result<(), CorpusError> {
            if len != sentences.len() {
                Err(CorpusError::Validation {
                    problems: vec![format!(
                        "{context}: {name} has {len} entries for {} sentences",
                        sentences.len()
                    )],
                })
            } else {
                Ok(())
            }
        };
        if let Some(labels) = &entry.claim_labels {
            expect_len("claim-labels", labels.len())?;
        }
        if let Some(rows) = &entry.annotations {
            for row in rows {
                expect_len("annotations row", row.len())?;
            }
        }
        if let Some(subj) = &entry.subjectivity {
            expect_len("subjectivity", subj.len())?;
        }
        if let Some(types) = &entry.ambiguity_types {
            expect_len("ambiguity-types", types.len())?;
        }
        let mut claims = Vec::with_capacity(sentences.len());
        for (i, sentence) in sentences.iter().enumerate() {
            let gold = match entry.claim_labels.as_ref() {
                Some(labels) => Some(parse_faith_value(&labels[i], &context)?),
                None => None,
            };
            let mut faith_labels = Vec::new();
            if let Some(rows) = &entry.annotations {
                for (a, row) in rows.iter().enumerate() {
                    faith_labels.push(FaithLabel {
                        annotator_id: format!("a{}", a + 1),
                        value: parse_faith_value(&row[i], &context)?,
                    });
                }
            }
            let subjectivity = match entry.subjectivity.as_ref().and_then(|s| s[i].as_ref()) {
                Some(raw) => Some(parse_subjectivity_value(raw, &context)?),
                None => None,
            };
            claims.push(Claim {
                id: format!("{key}.{i}"),
                text: sentence.clone(),
                faithfulness_labels: faith_labels,
                gold_faithfulness: gold,
                subjectivity,
                ambiguity_type: entry.ambiguity_types.as_ref().and_then(|t| t[i]),
            });
        }
        let writer = match &entry.model {
            Some(model) if model.to_ascii_lowercase().starts_with("human") => Writer::Human {
                name: model.clone(),
            },
            Some(model) => Writer::Llm {
                name: model.clone(),
            },
            None => Writer::Human {
                name: "unspecified".to_string(),
            },
        };
        summaries.push(SummaryRecord {
            id: key.clone(),
            story_id,
            writer,
            claims,
        });
    }
    Ok(Corpus {
        schema_version: 1,
        name: None,
        stories,
        summaries,
        provenance: Provenance::default(),
    })
}

/// Counting axes for corpus reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelAxis {
    /// Adjudicated faithfulness crossed with subjectivity.
    FaithBySubjectivity,
    /// Subjective-ambiguity categories.
    AmbiguityType,
}

/// Faithfulness-by-subjectivity table. Not-applicable claims are counted
/// separately and excluded from the grid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FaithSubjCounts {
    pub supported_objective: usize,
    pub supported_subjective: usize,
    pub unsupported_objective: usize,
    pub unsupported_subjective: usize,
    pub ambiguous: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CountTable {
    FaithSubjectivity(FaithSubjCounts),
    AmbiguityType(BTreeMap<u8, usize>),
}

/// Tallies claims along the requested axis. Errors when a required label
/// layer is missing, naming the claims involved.
pub fn count_labels(corpus: &Corpus, axis: LabelAxis) -> Result<CountTable, CorpusError> {
    match axis {
        LabelAxis::FaithBySubjectivity => {
            let mut counts = FaithSubjCounts::default();
            let mut missing = Vec::new();
            for cref in corpus.iter_claims() {
                let claim = cref.claim;
                match claim.resolved_faithfulness() {
                    Some(Faithfulness::NotApplicable) => counts.not_applicable += 1,
                    Some(Faithfulness::Ambiguous) => counts.ambiguous += 1,
                    Some(value) => match claim.subjectivity {
                        None => missing.push(claim.id.clone()),
                        Some(Subjectivity::Objective) => {
                            if value == Faithfulness::Supported {
                                counts.supported_objective += 1;
                            } else {
                                counts.unsupported_objective += 1;
                            }
                        }
                        Some(Subjectivity::Subjective) => {
                            if value == Faithfulness::Supported {
                                counts.supported_subjective += 1;
                            } else {
                                counts.unsupported_subjective += 1;
                            }
                        }
                    },
                    None => missing.push(claim.id.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(CorpusError::MissingLabelLayer {
                    layer: "faithfulness/subjectivity".to_string(),
                    claim_ids: missing,
                });
            }
            Ok(CountTable::FaithSubjectivity(counts))
        }
        LabelAxis::AmbiguityType => {
            let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
            let mut missing = Vec::new();
            for cref in corpus.iter_claims() {
                let claim = cref.claim;
                if !claim.in_scope() || claim.subjectivity != Some(Subjectivity::Subjective) {
                    continue;
                }
                match claim.ambiguity_type {
                    Some(t) => *counts.entry(t).or_default() += 1,
                    None => missing.push(claim.id.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(CorpusError::MissingLabelLayer {
                    layer: "ambiguity type".to_string(),
                    claim_ids: missing,
                });
            }
            Ok(CountTable::AmbiguityType(counts))
        }
    }
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "rev", "hon", "capt", "col", "gen",
    "lt", "sgt", "maj", "gov", "pres", "sen", "rep", "fr", "vs", "etc", "inc", "ltd", "co",
    "corp", "dept", "univ", "est", "approx",
];

fn is_abbreviation(prefix: &[char]) -> bool {
    let tail: Vec<char> = prefix
        .iter()
        .rev()
        .take_while(|c| c.is_alphabetic())
        .copied()
        .collect();
    if tail.is_empty() {
        return false;
    }
    let word: String = tail.iter().rev().collect();
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Rule-based sentence splitter over `.`, `!`, `?` (and ellipsis), with a
/// short abbreviation list. A boundary requires trailing whitespace and a
/// following capital, digit or opening quote/bracket, so decimals and
/// mid-sentence periods survive. Single-letter initials do split, matching
/// the contract that `"A. B."` yields two segments.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut segments = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !matches!(chars[i], '.' | '!' | '?' | '…') {
            i += 1;
            continue;
        }
        let is_period = chars[i] == '.';
        let mut end = i + 1;
        while end < chars.len() && matches!(chars[end], '.' | '!' | '?' | '…') {
            end += 1;
        }
        while end < chars.len() && matches!(chars[end], '"' | '\'' | '”' | '’' | ')' | ']') {
            end += 1;
        }
        let mut next = end;
        while next < chars.len() && chars[next].is_whitespace() {
            next += 1;
        }
        let has_gap = next > end;
        let next_opens = next < chars.len()
            && (chars[next].is_uppercase()
                || chars[next].is_numeric()
                || matches!(chars[next], '"' | '\'' | '“' | '‘' | '(' | '['));
        let abbrev = is_period && end == i + 1 && is_abbreviation(&chars[..i]);
        if has_gap && next_opens && !abbrev {
            let seg: String = chars[start..end].iter().collect();
            let seg = seg.trim();
            if !seg.is_empty() {
                segments.push(seg.to_string());
            }
            start = next;
            i = next;
        } else {
            i = end;
        }
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim();
    if !tail.is_empty() {
        segments.push(tail.to_string());
    }
    segments
}
