//! Time-domain NTE counts.
//!
//! Predictions are paired with gold entities before counting. Candidate pairs are those with
//! positive temporal overlap; they are taken greedily in descending overlap order (ties: earlier
//! gold start, then earlier prediction start), each entity used at most once.
//!
//! Given the pairing: TP = pairs passing the outer δ test; FN = pairs failing it plus gold
//! entities left unpaired; FP = predictions left unpaired. Entity types are ignored.

use std::collections::BTreeMap;

use crate::types::{interval_overlap, ConfusionCounts, EntityType, TimedEntity};

use super::fa::delta_outer;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pairing {
    /// `(prediction index, gold index)`, in the order they were chosen.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

pub fn pair_entities(pred: &[TimedEntity], gold: &[TimedEntity]) -> Pairing {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        for (gi, g) in gold.iter().enumerate() {
            let ov = interval_overlap(&p.interval, &g.interval);
            if ov > 0.0 {
                candidates.push((ov, pi, gi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| gold[a.2].interval.start().total_cmp(&gold[b.2].interval.start()))
            .then_with(|| pred[a.1].interval.start().total_cmp(&pred[b.1].interval.start()))
            .then_with(|| (a.2, a.1).cmp(&(b.2, b.1)))
    });
    let mut pred_used = vec![false; pred.len()];
    let mut gold_used = vec![false; gold.len()];
    let mut pairs = Vec::new();
    for (_, pi, gi) in candidates {
        if !pred_used[pi] && !gold_used[gi] {
            pred_used[pi] = true;
            gold_used[gi] = true;
            pairs.push((pi, gi));
        }
    }
    let unused = |used: &[bool]| -> Vec<usize> {
        used.iter()
            .enumerate()
            .filter(|(_, u)| !**u)
            .map(|(i, _)| i)
            .collect()
    };
    Pairing {
        unmatched_pred: unused(&pred_used),
        unmatched_gold: unused(&gold_used),
        pairs,
    }
}

pub fn counts_for_pairing(
    pairing: &Pairing,
    pred: &[TimedEntity],
    gold: &[TimedEntity],
    tolerance: f64,
) -> ConfusionCounts {
    let aligned = pairing
        .pairs
        .iter()
        .filter(|(pi, gi)| delta_outer(&pred[*pi].interval, &gold[*gi].interval, tolerance))
        .count() as u64;
    let misaligned = pairing.pairs.len() as u64 - aligned;
    ConfusionCounts::new(
        aligned,
        pairing.unmatched_pred.len() as u64,
        misaligned + pairing.unmatched_gold.len() as u64,
    )
}

/// Untyped counts for one utterance.
pub fn nte_time_counts(pred: &[TimedEntity], gold: &[TimedEntity], tolerance: f64) -> ConfusionCounts {
    counts_for_pairing(&pair_entities(pred, gold), pred, gold, tolerance)
}

/// Typed variant: pairing and counting run separately within each entity type.
pub fn typed_time_counts(
    pred: &[TimedEntity],
    gold: &[TimedEntity],
    tolerance: f64,
) -> BTreeMap<EntityType, ConfusionCounts> {
    let mut out = BTreeMap::new();
    for t in EntityType::ALL {
        let p: Vec<TimedEntity> = pred.iter().filter(|e| e.entity_type == t).copied().collect();
        let g: Vec<TimedEntity> = gold.iter().filter(|e| e.entity_type == t).copied().collect();
        if p.is_empty() && g.is_empty() {
            continue;
        }
        out.insert(t, nte_time_counts(&p, &g, tolerance));
    }
    out
}
