//! Evaluation: forced-alignment accuracy under the std and outer δ tests, exact-span NER
//! precision/recall/F1, and the time-domain NTE counts used for the whole pipeline.

mod fa;
mod ner;
mod nte;
mod report;

pub use fa::{delta_outer, delta_std, fa_accuracy, AlignedCorpus, DeltaMode};
pub use ner::{match_text_spans, match_text_spans_by_type};
pub use nte::{counts_for_pairing, nte_time_counts, pair_entities, typed_time_counts, Pairing};
pub use report::{build_report, f1, precision, recall, EvalReport, MetricRow};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::types::{ConfusionCounts, EntitySpan, EntityType, TimedEntity};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("utterance ids differ: missing from predictions {missing_pred:?}, missing from gold {missing_gold:?}")]
    IdMismatch {
        missing_pred: Vec<String>,
        missing_gold: Vec<String>,
    },
    #[error("utterance {id:?}: {pred} predicted words vs {gold} gold words")]
    WordCount { id: String, pred: usize, gold: usize },
    #[error("overlapping {0} spans")]
    OverlappingSpans(&'static str),
    #[error("{pred} predicted sentences vs {gold} gold sentences")]
    SentenceCount { pred: usize, gold: usize },
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
}


/// Pipeline scoring over utterances keyed by id: typed rows pair within each type, the NTE
/// row pairs across types.
pub fn evaluate_timed(
    pred: &BTreeMap<String, Vec<TimedEntity>>,
    gold: &BTreeMap<String, Vec<TimedEntity>>,
    tolerance: f64,
) -> Result<EvalReport, MetricsError> {
    if !(tolerance >= 0.0) {
        return Err(MetricsError::NegativeTolerance(tolerance));
    }
    fa::check_ids(pred, gold)?;
    let mut per_type: BTreeMap<EntityType, ConfusionCounts> = BTreeMap::new();
    let mut nte = ConfusionCounts::default();
    for (id, g) in gold {
        let p = &pred[id];
        for (t, c) in typed_time_counts(p, g, tolerance) {
            *per_type.entry(t).or_default() += c;
        }
        nte += nte_time_counts(p, g, tolerance);
    }
    Ok(build_report(&per_type, nte))
}

/// Text NER scoring over aligned sentence lists: typed per-type rows plus the untyped NTE row.
pub fn evaluate_spans(
    pred: &[Vec<EntitySpan>],
    gold: &[Vec<EntitySpan>],
) -> Result<EvalReport, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::SentenceCount {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let mut per_type: BTreeMap<EntityType, ConfusionCounts> = BTreeMap::new();
    let mut nte = ConfusionCounts::default();
    for (p, g) in pred.iter().zip(gold) {
        for (t, c) in match_text_spans_by_type(p, g)? {
            *per_type.entry(t).or_default() += c;
        }
        nte += match_text_spans(p, g, false)?;
    }
    Ok(build_report(&per_type, nte))
}
