use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{TimeInterval, WordAlignment};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// Both boundary differences within the tolerance.
    Std,
    /// Prediction covers the gold interval up to the tolerance inside each edge.
    Outer,
}

impl DeltaMode {
    pub fn apply(self, pred: &TimeInterval, gold: &TimeInterval, tolerance: f64) -> bool {
        match self {
            DeltaMode::Std => delta_std(pred, gold, tolerance),
            DeltaMode::Outer => delta_outer(pred, gold, tolerance),
        }
    }
}

pub fn delta_std(pred: &TimeInterval, gold: &TimeInterval, tolerance: f64) -> bool {
    (pred.start() - gold.start()).abs() <= tolerance && (pred.end() - gold.end()).abs() <= tolerance
}

/// `pred.start <= gold.start + t` and `gold.end - t <= pred.end`. An absent prediction `(0, 0)`
/// fails for every gold interval ending after `t`.
pub fn delta_outer(pred: &TimeInterval, gold: &TimeInterval, tolerance: f64) -> bool {
    pred.start() <= gold.start() + tolerance && gold.end() - tolerance <= pred.end()
}

/// Word alignments per utterance id.
pub type AlignedCorpus = BTreeMap<String, Vec<WordAlignment>>;

/// Fraction of words whose predicted boundaries pass the δ test, over all words of the corpus.
/// An empty corpus scores 0.
pub fn fa_accuracy(
    pred: &AlignedCorpus,
    gold: &AlignedCorpus,
    tolerance: f64,
    mode: DeltaMode,
) -> Result<f64, MetricsError> {
    if !(tolerance >= 0.0) {
        return Err(MetricsError::NegativeTolerance(tolerance));
    }
    check_ids(pred, gold)?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (id, g) in gold {
        let p = &pred[id];
        if p.len() != g.len() {
            return Err(MetricsError::WordCount {
                id: id.clone(),
                pred: p.len(),
                gold: g.len(),
            });
        }
        total += g.len();
        hits += p
            .iter()
            .zip(g)
            .filter(|(pw, gw)| mode.apply(&pw.interval, &gw.interval, tolerance))
            .count();
    }
    Ok(if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    })
}

pub(crate) fn check_ids<A, B>(
    pred: &BTreeMap<String, A>,
    gold: &BTreeMap<String, B>,
) -> Result<(), MetricsError> {
    let missing_pred: Vec<String> = gold.keys().filter(|k| !pred.contains_key(*k)).cloned().collect();
    let missing_gold: Vec<String> = pred.keys().filter(|k| !gold.contains_key(*k)).cloned().collect();
    if missing_pred.is_empty() && missing_gold.is_empty() {
        Ok(())
    } else {
        Err(MetricsError::IdMismatch {
            missing_pred,
            missing_gold,
        })
    }
}
