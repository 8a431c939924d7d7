use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::types::{ConfusionCounts, EntityType};

/// TP / (TP + FP), or 0 when there are no predictions.
pub fn precision(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp)
}

/// TP / (TP + FN), or 0 when there is no gold entity.
pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fn_)
}

/// Harmonic mean, or 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    let denom = precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / denom
    }
}

fn ratio(num: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

impl MetricRow {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let p = precision(&counts);
        let r = recall(&counts);
        Self {
            precision: p,
            recall: r,
            f1: f1(p, r),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Keyed by short type code (PER, LOC, ...).
    pub per_type: BTreeMap<String, MetricRow>,
    pub total: MetricRow,
    pub nte: MetricRow,
}

/// Per-type rows, a micro-averaged total (counts summed before the ratios) and the NTE row.
pub fn build_report(per_type: &BTreeMap<EntityType, ConfusionCounts>, nte: ConfusionCounts) -> EvalReport {
    let total: ConfusionCounts = per_type.values().copied().sum();
    EvalReport {
        per_type: per_type
            .iter()
            .map(|(t, c)| (t.code().to_string(), MetricRow::from_counts(*c)))
            .collect(),
        total: MetricRow::from_counts(total),
        nte: MetricRow::from_counts(nte),
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}",
            "Entity Type", "Precision", "Recall", "F1 Score", "TP", "FP", "FN"
        )?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, r: &MetricRow| {
            writeln!(
                f,
                "{:<14} {:>9.3} {:>9.3} {:>9.3} {:>6} {:>6} {:>6}",
                name, r.precision, r.recall, r.f1, r.counts.tp, r.counts.fp, r.counts.fn_
            )
        };
        for t in EntityType::ALL {
            if let Some(r) = self.per_type.get(t.code()) {
                row(f, t.display_name(), r)?;
            }
        }
        row(f, "Total", &self.total)?;
        row(f, "NTE", &self.nte)
    }
}
