//! De-identification of speech recordings from their transcripts.
//!
//! The pipeline reads word-level alignments ([`formats`]), finds named entities in the
//! transcript ([`tagging`]), maps entity token spans to time intervals ([`timealign`]) and
//! silences those intervals in the audio ([`redaction`]). [`metrics`] scores each stage and
//! [`corpus_prep`] builds BIO training/evaluation folds from annotated text.

pub mod corpus_prep;
pub mod formats;
pub mod metrics;
pub mod redaction;
pub mod rng;
pub mod tagging;
pub mod timealign;
pub mod types;

pub use types::{
    interval_overlap, ConfusionCounts, EntitySpan, EntityType, Label, LabelDistribution,
    TimeInterval, TimedEntity, Utterance, WordAlignment,
};
