//! Maps token-level entity spans onto word timings.
//!
//! Tokens and aligned words are compared after lowercasing (curly apostrophes read as
//! straight ones). Tokens made only of punctuation are skipped on both sides because forced
//! aligners do not emit them.

use thiserror::Error;

use crate::types::{EntitySpan, TimedEntity, WordAlignment};

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("nothing to reconcile: {tokens} tokens, {words} aligned words")]
    Empty { tokens: usize, words: usize },
    #[error("token/word mismatch at position {position}: token {token:?} vs aligned word {word:?}")]
    Mismatch {
        position: usize,
        token: String,
        word: String,
    },
    #[error("length mismatch: {tokens} tokens vs {words} aligned words after normalization (first missing at position {position})")]
    Length {
        tokens: usize,
        words: usize,
        position: usize,
    },
    #[error("span [{start}, {end}) outside the {len} mapped tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("span [{start}, {end}) covers only punctuation")]
    NoAlignedWord { start: usize, end: usize },
}

fn normalize(token: &str) -> Option<String> {
    let t = token.trim();
    if t.chars().all(|c| !c.is_alphanumeric()) {
        return None;
    }
    Some(t.to_lowercase().replace('’', "'"))
}

/// Token index to alignment index; `None` for skipped punctuation tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMapping(Vec<Option<usize>>);

impl TokenMapping {
    pub fn get(&self, token: usize) -> Option<usize> {
        self.0.get(token).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn identity(len: usize) -> Self {
        TokenMapping((0..len).map(Some).collect())
    }
}

pub fn reconcile(tokens: &[String], alignments: &[WordAlignment]) -> Result<TokenMapping, AlignError> {
    if tokens.is_empty() || alignments.is_empty() {
        return Err(AlignError::Empty {
            tokens: tokens.len(),
            words: alignments.len(),
        });
    }
    let toks: Vec<(usize, String)> = tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| normalize(t).map(|n| (i, n)))
        .collect();
    let words: Vec<(usize, String)> = alignments
        .iter()
        .enumerate()
        .filter_map(|(i, w)| normalize(&w.word).map(|n| (i, n)))
        .collect();
    for ((ti, t), (wi, w)) in toks.iter().zip(&words) {
        if t != w {
            return Err(AlignError::Mismatch {
                position: *ti,
                token: tokens[*ti].clone(),
                word: alignments[*wi].word.clone(),
            });
        }
    }
    if toks.len() != words.len() {
        let position = toks
            .get(words.len())
            .map(|(i, _)| *i)
            .unwrap_or(tokens.len());
        return Err(AlignError::Length {
            tokens: toks.len(),
            words: words.len(),
            position,
        });
    }
    let mut map = vec![None; tokens.len()];
    for ((ti, _), (wi, _)) in toks.iter().zip(&words) {
        map[*ti] = Some(*wi);
    }
    Ok(TokenMapping(map))
}

/// The interval from the start of the first covered word to the end of the last.
pub fn span_to_interval(
    span: &EntitySpan,
    alignments: &[WordAlignment],
    mapping: &TokenMapping,
) -> Result<TimedEntity, AlignError> {
    if span.token_end > mapping.len() || span.token_start >= span.token_end {
        return Err(AlignError::SpanOutOfRange {
            start: span.token_start,
            end: span.token_end,
            len: mapping.len(),
        });
    }
    let mut covered = (span.token_start..span.token_end).filter_map(|i| mapping.get(i));
    let first = covered.next().ok_or(AlignError::NoAlignedWord {
        start: span.token_start,
        end: span.token_end,
    })?;
    let interval = covered.fold(alignments[first].interval, |acc, w| {
        acc.hull(&alignments[w].interval)
    });
    Ok(TimedEntity::new(span.entity_type, interval))
}

/// Reconciles once and maps every span of an utterance.
pub fn align_entities(
    tokens: &[String],
    spans: &[EntitySpan],
    alignments: &[WordAlignment],
) -> Result<Vec<TimedEntity>, AlignError> {
    if spans.is_empty() {
        return Ok(Vec::new());
    }
    let mapping = reconcile(tokens, alignments)?;
    spans
        .iter()
        .map(|s| span_to_interval(s, alignments, &mapping))
        .collect()
}
