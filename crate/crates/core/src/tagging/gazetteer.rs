//! Lexicon tagger. Emits one-hot distributions so thresholding and decoding run end to end
//! without a model.
//!
//! Lexicon file: one entry per line, `CODE<TAB>surface form`, `#` comments. CODE is one of
//! PER, LOC, ORG, CUR, MONEY. Entries are matched case-insensitively as token sequences,
//! longest match first. `CUR` entries double as currency words for the money pattern
//! `number [multiplier] [de|d'] currency-word`, e.g. `12 euros`, `3 millions de dollars`.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus_prep::tokenize;
use crate::types::{EntityType, Label, LabelDistribution};

use super::{TagError, Tagger};

const MULTIPLIERS: &[&str] = &["mille", "million", "millions", "milliard", "milliards", "k", "m", "md"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    lexicons: BTreeMap<EntityType, BTreeSet<Vec<String>>>,
    longest: usize,
}

fn is_number(token: &str) -> bool {
    let mut digits = 0;
    for c in token.chars() {
        if c.is_ascii_digit() {
            digits += 1;
        } else if !matches!(c, '.' | ',' | '\u{202F}') {
            return false;
        }
    }
    digits > 0 && token.starts_with(|c: char| c.is_ascii_digit())
}

impl Gazetteer {
    pub fn parse(text: &str) -> Result<Self, TagError> {
        let mut g = Gazetteer::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| TagError::Lexicon {
                line: i + 1,
                message,
            };
            let (code, entry) = line
                .split_once('\t')
                .ok_or_else(|| err("expected CODE<TAB>entry".into()))?;
            let t = EntityType::from_code(code.trim())
                .ok_or_else(|| err(format!("unknown entity type {code:?}")))?;
            g.insert(t, entry);
        }
        Ok(g)
    }

    pub fn insert(&mut self, entity_type: EntityType, entry: &str) {
        let key: Vec<String> = tokenize(entry)
            .into_iter()
            .map(|(t, _)| t.to_lowercase())
            .collect();
        if key.is_empty() {
            return;
        }
        self.longest = self.longest.max(key.len());
        self.lexicons.entry(entity_type).or_default().insert(key);
    }

    pub fn entries(&self, entity_type: EntityType) -> impl Iterator<Item = &Vec<String>> {
        self.lexicons.get(&entity_type).into_iter().flatten()
    }

    fn longest_match(&self, tokens: &[String], at: usize, only: Option<EntityType>) -> Option<(EntityType, usize)> {
        let max = self.longest.min(tokens.len() - at);
        for len in (1..=max).rev() {
            let window = &tokens[at..at + len];
            for t in EntityType::ALL {
                if only.is_some_and(|o| o != t) {
                    continue;
                }
                if self.lexicons.get(&t).is_some_and(|set| set.contains(window)) {
                    return Some((t, len));
                }
            }
        }
        None
    }

    fn money_match(&self, lower: &[String], at: usize) -> Option<usize> {
        if !is_number(&lower[at]) {
            return None;
        }
        let mut j = at + 1;
        if lower.get(j).is_some_and(|t| MULTIPLIERS.contains(&t.as_str())) {
            j += 1;
        }
        if lower.get(j).is_some_and(|t| t == "de" || t == "d'" || t == "d’") {
            j += 1;
        }
        if j >= lower.len() {
            return None;
        }
        let (_, len) = self.longest_match(lower, j, Some(EntityType::Currency))?;
        Some(j + len - at)
    }

    /// Per-token labels for one sentence.
    pub fn labels(&self, tokens: &[String]) -> Vec<Label> {
        let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut labels = vec![Label::Outside; tokens.len()];
        let mut i = 0;
        while i < tokens.len() {
            let hit = self
                .money_match(&lower, i)
                .map(|len| (EntityType::MoneyAmount, len))
                .or_else(|| self.longest_match(&lower, i, None));
            match hit {
                Some((t, len)) => {
                    labels[i] = Label::Begin(t);
                    for l in &mut labels[i + 1..i + len] {
                        *l = Label::Inside(t);
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
        labels
    }
}

impl Tagger for Gazetteer {
    fn distributions(
        &self,
        sentences: &[Vec<String>],
    ) -> Result<Vec<Vec<LabelDistribution>>, TagError> {
        Ok(sentences
            .iter()
            .map(|s| self.labels(s).into_iter().map(LabelDistribution::one_hot).collect())
            .collect())
    }
}
