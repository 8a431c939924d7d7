//! Domain types shared by every stage of the pipeline. No I/O lives here.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the sum of a [`LabelDistribution`].
pub const DISTRIBUTION_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("invalid interval ({start}, {end}): need 0 <= start <= end")]
    InvalidInterval { start: f64, end: f64 },
    #[error("empty word")]
    EmptyWord,
    #[error("unknown entity type {0:?}")]
    UnknownEntityType(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("invalid span [{start}, {end}) for {len} tokens")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("probability {value} for {label} outside [0, 1]")]
    ProbabilityOutOfRange { label: Label, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    BadSum(f64),
}

/// A closed span `[start, end]` in seconds.
///
/// `(0, 0)` is a legal value: it is the sentinel for "absent".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TimeInterval {
    start: f64,
    end: f64,
}

impl TimeInterval {
    pub const ZERO: TimeInterval = TimeInterval {
        start: 0.0,
        end: 0.0,
    };

    pub fn new(start: f64, end: f64) -> Result<Self, TypeError> {
        if start.is_finite() && end.is_finite() && 0.0 <= start && start <= end {
            Ok(Self { start, end })
        } else {
            Err(TypeError::InvalidInterval { start, end })
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_sentinel(&self) -> bool {
        self.start == 0.0 && self.end == 0.0
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn contains(&self, other: &TimeInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// Length in seconds of the intersection of `a` and `b`, or 0 when disjoint.
pub fn interval_overlap(a: &TimeInterval, b: &TimeInterval) -> f64 {
    (a.end.min(b.end) - a.start.max(b.start)).max(0.0)
}

/// One transcript token bound to its time span.
#[derive(Debug, Clone, PartialEq)]
pub struct WordAlignment {
    pub word: String,
    pub interval: TimeInterval,
}

impl WordAlignment {
    pub fn new(word: impl Into<String>, interval: TimeInterval) -> Result<Self, TypeError> {
        let word = word.into();
        if word.trim().is_empty() {
            return Err(TypeError::EmptyWord);
        }
        Ok(Self { word, interval })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    Person,
    Location,
    Organization,
    Currency,
    MoneyAmount,
}

impl EntityType {
    /// Fixed order used for label indices and tie breaking.
    pub const ALL: [EntityType; 5] = [
        EntityType::Person,
        EntityType::Location,
        EntityType::Organization,
        EntityType::Currency,
        EntityType::MoneyAmount,
    ];

    /// Short code used in BIO tags and entity JSON.
    pub fn code(self) -> &'static str {
        match self {
            EntityType::Person => "PER",
            EntityType::Location => "LOC",
            EntityType::Organization => "ORG",
            EntityType::Currency => "CUR",
            EntityType::MoneyAmount => "MONEY",
        }
    }

    pub fn from_code(code: &str) -> Option<EntityType> {
        EntityType::ALL.into_iter().find(|t| t.code() == code)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            EntityType::Person => "Person",
            EntityType::Location => "Location",
            EntityType::Organization => "Organization",
            EntityType::Currency => "Currency",
            EntityType::MoneyAmount => "Money Amount",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for EntityType {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::from_code(s).ok_or_else(|| TypeError::UnknownEntityType(s.to_string()))
    }
}

/// A typed entity over token indices `[token_start, token_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntitySpan {
    pub entity_type: EntityType,
    pub token_start: usize,
    pub token_end: usize,
}

impl EntitySpan {
    pub fn new(
        entity_type: EntityType,
        token_start: usize,
        token_end: usize,
        token_count: usize,
    ) -> Result<Self, TypeError> {
        if token_start < token_end && token_end <= token_count {
            Ok(Self {
                entity_type,
                token_start,
                token_end,
            })
        } else {
            Err(TypeError::InvalidSpan {
                start: token_start,
                end: token_end,
                len: token_count,
            })
        }
    }

    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end <= self.token_start
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.token_start < other.token_end && other.token_start < self.token_end
    }

    pub fn same_boundaries(&self, other: &EntitySpan) -> bool {
        self.token_start == other.token_start && self.token_end == other.token_end
    }
}

/// A typed entity over a time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedEntity {
    pub entity_type: EntityType,
    pub interval: TimeInterval,
}

impl TimedEntity {
    pub fn new(entity_type: EntityType, interval: TimeInterval) -> Self {
        Self {
            entity_type,
            interval,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub tokens: Vec<String>,
    pub alignments: Option<Vec<WordAlignment>>,
}

/// A BIO label over the five entity types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Outside,
    Begin(EntityType),
    Inside(EntityType),
}

impl Label {
    pub const COUNT: usize = 1 + 2 * EntityType::ALL.len();

    /// Tie-break order: O, B-PER, I-PER, B-LOC, I-LOC, B-ORG, I-ORG, B-CUR, I-CUR, B-MONEY, I-MONEY.
    pub fn all() -> [Label; Label::COUNT] {
        let mut out = [Label::Outside; Label::COUNT];
        for t in EntityType::ALL {
            out[1 + 2 * t.index()] = Label::Begin(t);
            out[2 + 2 * t.index()] = Label::Inside(t);
        }
        out
    }

    pub fn index(self) -> usize {
        match self {
            Label::Outside => 0,
            Label::Begin(t) => 1 + 2 * t.index(),
            Label::Inside(t) => 2 + 2 * t.index(),
        }
    }

    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            Label::Outside => None,
            Label::Begin(t) | Label::Inside(t) => Some(t),
        }
    }

    pub fn is_outside(self) -> bool {
        self == Label::Outside
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Outside => f.write_str("O"),
            Label::Begin(t) => write!(f, "B-{}", t.code()),
            Label::Inside(t) => write!(f, "I-{}", t.code()),
        }
    }
}

impl FromStr for Label {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Label::Outside);
        }
        let unknown = || TypeError::UnknownLabel(s.to_string());
        let (prefix, code) = s.split_once('-').ok_or_else(unknown)?;
        let t = EntityType::from_code(code).ok_or_else(unknown)?;
        match prefix {
            "B" => Ok(Label::Begin(t)),
            "I" => Ok(Label::Inside(t)),
            _ => Err(unknown()),
        }
    }
}

/// Per-token probabilities over the eleven BIO labels, indexed in [`Label::all`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution {
    probs: [f64; Label::COUNT],
}

impl LabelDistribution {
    pub fn from_array(probs: [f64; Label::COUNT]) -> Result<Self, TypeError> {
        let labels = Label::all();
        for (label, &value) in labels.iter().zip(probs.iter()) {
            if !(0.0..=1.0).contains(&value) {
                return Err(TypeError::ProbabilityOutOfRange {
                    label: *label,
                    value,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
            return Err(TypeError::BadSum(sum));
        }
        Ok(Self { probs })
    }

    /// Builds a distribution from `(label, probability)` pairs; absent labels get 0.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, TypeError>
    where
        I: IntoIterator<Item = (Label, f64)>,
    {
        let mut probs = [0.0; Label::COUNT];
        for (label, p) in pairs {
            probs[label.index()] += p;
        }
        Self::from_array(probs)
    }

    pub fn one_hot(label: Label) -> Self {
        let mut probs = [0.0; Label::COUNT];
        probs[label.index()] = 1.0;
        Self { probs }
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.probs[label.index()]
    }

    pub fn as_array(&self) -> &[f64; Label::COUNT] {
        &self.probs
    }

    /// Most likely label; ties go to the earlier label in [`Label::all`] order.
    pub fn argmax(&self) -> Label {
        let labels = Label::all();
        let mut best = 0;
        for i in 1..Label::COUNT {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        labels[best]
    }

    /// Non-zero entries keyed by tag string, as used on the wire.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        Label::all()
            .iter()
            .zip(self.probs.iter())
            .filter(|(_, &p)| p > 0.0)
            .map(|(l, &p)| (l.to_string(), p))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, fp, fn_ }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(mut self, rhs: Self) -> Self::Output {
        self += rhs;
        self
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(s: f64, e: f64) -> TimeInterval {
        TimeInterval::new(s, e).unwrap()
    }

    #[test]
    fn overlap_examples() {
        assert!((interval_overlap(&iv(1.0, 2.0), &iv(1.5, 3.0)) - 0.5).abs() < 1e-12);
        assert_eq!(interval_overlap(&iv(1.0, 2.0), &iv(1.0, 2.0)), 1.0);
        assert_eq!(interval_overlap(&iv(1.0, 2.0), &iv(3.0, 4.0)), 0.0);
    }

    #[test]
    fn interval_rejects_reversed_and_negative() {
        assert!(TimeInterval::new(2.0, 1.0).is_err());
        assert!(TimeInterval::new(-0.1, 1.0).is_err());
        assert!(TimeInterval::new(0.0, f64::NAN).is_err());
        assert!(TimeInterval::new(0.0, 0.0).unwrap().is_sentinel());
    }

    #[test]
    fn label_order_and_parse() {
        let all = Label::all();
        let names: Vec<String> = all.iter().map(|l| l.to_string()).collect();
        assert_eq!(
            names,
            [
                "O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-CUR", "I-CUR",
                "B-MONEY", "I-MONEY"
            ]
        );
        for (i, l) in all.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(l.to_string().parse::<Label>().unwrap(), *l);
        }
        assert!("B-XYZ".parse::<Label>().is_err());
        assert!("E-PER".parse::<Label>().is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(LabelDistribution::from_pairs([(Label::Outside, 0.5)]).is_err());
        assert!(LabelDistribution::from_pairs([
            (Label::Outside, 1.2),
            (Label::Begin(EntityType::Person), -0.2)
        ])
        .is_err());
        let d = LabelDistribution::from_pairs([
            (Label::Outside, 0.5),
            (Label::Begin(EntityType::Person), 0.5),
        ])
        .unwrap();
        // tie goes to O
        assert_eq!(d.argmax(), Label::Outside);
    }

    fn arb_interval() -> impl Strategy<Value = TimeInterval> {
        (0.0f64..100.0, 0.0f64..10.0).prop_map(|(s, d)| iv(s, s + d))
    }

    proptest! {
        #[test]
        fn overlap_symmetric_and_bounded(a in arb_interval(), b in arb_interval()) {
            let ab = interval_overlap(&a, &b);
            prop_assert_eq!(ab, interval_overlap(&b, &a));
            prop_assert!(ab <= a.duration().min(b.duration()) + 1e-12);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn overlap_with_self_is_length(a in arb_interval()) {
            prop_assert_eq!(interval_overlap(&a, &a), a.duration());
        }
    }
}
