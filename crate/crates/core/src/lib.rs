//! Toolkit for scoring narrative summary claims with an LLM rewrite metric.
//!
//! The pipeline asks a model to rewrite each summary claim so that it is
//! precise and consistent with the source story. Whether the model changed
//! the claim, how far the rewrite moved, and the reasons it gives are the
//! measurement signals. Supporting modules provide corpus loading, text
//! normalization, prompt/backend plumbing with record-replay caching,
//! question-answering baselines, synthetic claim generation, and the
//! statistics used to score runs.

pub mod arm;
pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod llmgw;
pub mod metrics;
pub mod report;
pub mod synth;
pub mod textproc;
