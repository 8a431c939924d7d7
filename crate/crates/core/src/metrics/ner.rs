//! Exact-boundary span matching for text NER.

use std::collections::BTreeMap;

use crate::types::{ConfusionCounts, EntitySpan, EntityType};

use super::MetricsError;

fn check_disjoint(spans: &[EntitySpan], side: &'static str) -> Result<(), MetricsError> {
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.token_start, s.token_end));
    if sorted.windows(2).any(|w| w[0].overlaps(w[1])) {
        return Err(MetricsError::OverlappingSpans(side));
    }
    Ok(())
}

/// Typed: a prediction is a TP when a gold span has the same boundaries and type; other
/// predictions are FP and unmatched gold spans FN, so a wrong-type prediction counts once as
/// each. Untyped: type is ignored and boundaries alone decide.
pub fn match_text_spans(
    pred: &[EntitySpan],
    gold: &[EntitySpan],
    typed: bool,
) -> Result<ConfusionCounts, MetricsError> {
    check_disjoint(pred, "prediction")?;
    check_disjoint(gold, "gold")?;
    // disjoint spans on each side: a boundary pair identifies at most one span
    let tp = pred
        .iter()
        .filter(|p| {
            gold.iter().any(|g| {
                p.same_boundaries(g) && (!typed || p.entity_type == g.entity_type)
            })
        })
        .count() as u64;
    Ok(ConfusionCounts::new(
        tp,
        pred.len() as u64 - tp,
        gold.len() as u64 - tp,
    ))
}

/// Typed counts split by entity type: FP goes to the predicted type, FN to the gold type.
pub fn match_text_spans_by_type(
    pred: &[EntitySpan],
    gold: &[EntitySpan],
) -> Result<BTreeMap<EntityType, ConfusionCounts>, MetricsError> {
    check_disjoint(pred, "prediction")?;
    check_disjoint(gold, "gold")?;
    let mut out: BTreeMap<EntityType, ConfusionCounts> = BTreeMap::new();
    for p in pred {
        let hit = gold.iter().any(|g| g == p);
        let c = out.entry(p.entity_type).or_default();
        if hit {
            c.tp += 1;
        } else {
            c.fp += 1;
        }
    }
    for g in gold {
        if !pred.contains(g) {
            out.entry(g.entity_type).or_default().fn_ += 1;
        }
    }
    Ok(out)
}
