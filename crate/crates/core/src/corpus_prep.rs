//! Text-NER corpus preparation: character normalization, entity-type remapping, sentence
//! splitting, tokenization to BIO sentences and seeded k-fold partitioning.
//!
//! All offsets in this module are character (Unicode scalar) offsets, which is what standoff
//! annotation files use.

use std::collections::BTreeMap;
use std::ops::Range;

use thiserror::Error;

use crate::formats::ConllSentence;
use crate::rng::SeededRng;
use crate::types::{EntityType, Label};

#[derive(Debug, Error, PartialEq)]
pub enum PrepError {
    #[error("remap table line {line}: {message}")]
    RemapSyntax { line: usize, message: String },
    #[error("no remap rule for label(s): {}", .0.join(", "))]
    UnmappedLabels(Vec<String>),
    #[error("annotation line {line}: {message}")]
    Annotation { line: usize, message: String },
    #[error("k must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("cannot split {count} sentences into {k} folds")]
    TooManyFolds { count: usize, k: usize },
}

/// An annotated entity before remapping. `start..end` are character offsets into the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEntity {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// An entity after remapping, still over character offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharEntity {
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemapAction {
    MapTo(EntityType),
    Delete,
}

impl RemapAction {
    fn parse(s: &str) -> Option<RemapAction> {
        if s == "DELETE" {
            Some(RemapAction::Delete)
        } else {
            EntityType::from_code(s).map(RemapAction::MapTo)
        }
    }
}

/// Rules from source labels to entity types.
///
/// File format, one rule per line, `#` starts a comment:
///
/// ```text
/// cities = LOC
/// geopolitical entities = DELETE
/// geopolitical entities[Union européenne] = ORG
/// ```
///
/// The bracketed form overrides the label rule for one entity text. Labels are matched
/// case-insensitively with `_` and `-` read as spaces; override texts are matched
/// case-insensitively after whitespace normalization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RemapTable {
    rules: BTreeMap<String, RemapAction>,
    overrides: BTreeMap<(String, String), RemapAction>,
}

fn normalize_label(label: &str) -> String {
    label
        .to_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn normalize_entity_text(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

const DEFAULT_RULES: &[(&str, &str)] = &[
    ("persons", "PER"),
    ("person", "PER"),
    ("per", "PER"),
    ("locations", "LOC"),
    ("location", "LOC"),
    ("loc", "LOC"),
    ("world regions", "LOC"),
    ("countries", "LOC"),
    ("local regions", "LOC"),
    ("cities", "LOC"),
    ("organizations", "ORG"),
    ("organization", "ORG"),
    ("org", "ORG"),
    ("agents", "ORG"),
    ("associations", "ORG"),
    ("medias", "ORG"),
    ("companies", "ORG"),
    ("currencies", "CUR"),
    ("currency", "CUR"),
    ("cur", "CUR"),
    ("money amounts", "MONEY"),
    ("money amount", "MONEY"),
    ("money", "MONEY"),
    ("shareholderships", "MONEY"),
    ("financing", "MONEY"),
    ("geopolitical entities", "DELETE"),
];

impl RemapTable {
    /// The wholesale rules: regions, countries and cities become locations; agents,
    /// associations, medias and companies become organizations; shareholderships and financing
    /// become money amounts; geopolitical entities are deleted.
    pub fn default_rules() -> Self {
        let mut table = RemapTable::default();
        for (label, action) in DEFAULT_RULES {
            table
                .rules
                .insert(label.to_string(), RemapAction::parse(action).unwrap());
        }
        table
    }

    pub fn parse(text: &str) -> Result<Self, PrepError> {
        let mut table = RemapTable::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| PrepError::RemapSyntax {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `label = ACTION`".into()))?;
            let action = RemapAction::parse(value.trim()).ok_or_else(|| {
                err(format!(
                    "unknown action {:?}, expected PER|LOC|ORG|CUR|MONEY|DELETE",
                    value.trim()
                ))
            })?;
            let key = key.trim();
            let inserted = match key.split_once('[') {
                Some((label, rest)) => {
                    let text = rest
                        .strip_suffix(']')
                        .ok_or_else(|| err("unterminated `[` in override".into()))?;
                    let k = (normalize_label(label), normalize_entity_text(text));
                    table.overrides.insert(k, action).is_none()
                }
                None => table.rules.insert(normalize_label(key), action).is_none(),
            };
            if !inserted {
                return Err(err(format!("duplicate rule for {key:?}")));
            }
        }
        Ok(table)
    }

    /// Adds the rules of `other`, replacing rules for the same label.
    pub fn extend(&mut self, other: RemapTable) {
        self.rules.extend(other.rules);
        self.overrides.extend(other.overrides);
    }

    pub fn lookup(&self, label: &str, entity_text: Option<&str>) -> Option<RemapAction> {
        let label = normalize_label(label);
        if let Some(text) = entity_text {
            let k = (label.clone(), normalize_entity_text(text));
            if let Some(a) = self.overrides.get(&k) {
                return Some(*a);
            }
        }
        self.rules.get(&label).copied()
    }
}

/// Applies the table. Every label must have a rule; the error lists all that do not.
pub fn remap_entities(
    entities: &[RawEntity],
    table: &RemapTable,
) -> Result<Vec<CharEntity>, PrepError> {
    let mut unknown: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for e in entities {
        match table.lookup(&e.label, Some(&e.text)) {
            Some(RemapAction::MapTo(t)) => out.push(CharEntity {
                entity_type: t,
                start: e.start,
                end: e.end,
                text: e.text.clone(),
            }),
            Some(RemapAction::Delete) => {}
            None => {
                if !unknown.contains(&e.label) {
                    unknown.push(e.label.clone());
                }
            }
        }
    }
    if unknown.is_empty() {
        Ok(out)
    } else {
        unknown.sort();
        Err(PrepError::UnmappedLabels(unknown))
    }
}

fn is_space_like(c: char) -> bool {
    matches!(c, '\t' | '\u{2009}' | '\u{00A0}')
}

// longest first so "de la" wins over shorter prefixes
const DETERMINERS: &[&str] = &["de la ", "les ", "une ", "des ", "le ", "la ", "un ", "du ", "l'", "l’"];

fn strip_determiner(chars: &[char], start: usize, end: usize) -> usize {
    let mut start = start;
    loop {
        let rest: String = chars[start..end].iter().collect::<String>().to_lowercase();
        let Some(det) = DETERMINERS.iter().find(|d| rest.starts_with(*d)) else {
            return start;
        };
        let mut next = start + det.chars().count();
        while next < end && chars[next] == ' ' {
            next += 1;
        }
        if next >= end {
            return start;
        }
        start = next;
    }
}

/// Normalizes whitespace in `text` and re-computes entity offsets into the result.
///
/// Tabs, thin spaces and no-break spaces become spaces and runs of spaces collapse to one.
/// Each entity is trimmed and loses leading determiners (le, la, les, l', un, une, des, du,
/// de la); the text itself keeps them.
pub fn normalize_with_entities(text: &str, entities: &[RawEntity]) -> (String, Vec<RawEntity>) {
    let mut out: Vec<char> = Vec::with_capacity(text.len());
    let mut map: Vec<usize> = Vec::with_capacity(text.len() + 1);
    for c in text.chars() {
        map.push(out.len());
        let c = if is_space_like(c) { ' ' } else { c };
        if c == ' ' && out.last() == Some(&' ') {
            continue;
        }
        out.push(c);
    }
    map.push(out.len());

    let remapped = entities
        .iter()
        .map(|e| {
            let mut start = map[e.start.min(map.len() - 1)];
            let mut end = map[e.end.min(map.len() - 1)];
            while start < end && out[start].is_whitespace() {
                start += 1;
            }
            while end > start && out[end - 1].is_whitespace() {
                end -= 1;
            }
            start = strip_determiner(&out, start, end);
            RawEntity {
                label: e.label.clone(),
                start,
                end,
                text: out[start..end].iter().collect(),
            }
        })
        .collect();
    (out.into_iter().collect(), remapped)
}

pub fn normalize_text(text: &str) -> String {
    normalize_with_entities(text, &[]).0
}

const ELISIONS: &[&str] = &[
    "l", "d", "j", "m", "n", "s", "t", "c", "qu", "jusqu", "lorsqu", "puisqu", "quoiqu",
];

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || "«»“”‘’…–—".contains(c)
}

/// Whitespace tokenization that also splits off leading/trailing punctuation and French
/// elisions (`l'Italie` -> `l'`, `Italie`). Returns tokens with their character ranges.
pub fn tokenize(text: &str) -> Vec<(String, Range<usize>)> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_chunk(&chars, start, i, &mut tokens);
    }
    tokens
}

fn split_chunk(chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<(String, Range<usize>)>) {
    let push = |out: &mut Vec<(String, Range<usize>)>, r: Range<usize>| {
        out.push((chars[r.clone()].iter().collect(), r));
    };
    while start < end && is_punct(chars[start]) {
        push(out, start..start + 1);
        start += 1;
    }
    let mut trailing = Vec::new();
    while end > start && is_punct(chars[end - 1]) {
        trailing.push(end - 1..end);
        end -= 1;
    }
    // elision: split after the apostrophe
    while start < end {
        let Some(apos) = (start..end).find(|&j| chars[j] == '\'' || chars[j] == '’') else {
            break;
        };
        let prefix: String = chars[start..apos].iter().collect::<String>().to_lowercase();
        if apos + 1 < end && ELISIONS.contains(&prefix.as_str()) {
            push(out, start..apos + 1);
            start = apos + 1;
        } else {
            break;
        }
    }
    if start < end {
        push(out, start..end);
    }
    for r in trailing.into_iter().rev() {
        push(out, r);
    }
}

const ABBREVIATIONS: &[&str] = &["M", "MM", "Mme", "Mmes", "Mlle", "Mlles", "Dr", "Pr", "etc", "cf", "St", "Ste", "p", "av", "env", "vol", "n°"];

fn preceding_word(chars: &[char], dot: usize) -> String {
    let mut s = dot;
    while s > 0 && !chars[s - 1].is_whitespace() {
        s -= 1;
    }
    chars[s..dot].iter().collect()
}

/// Sentence ranges (character offsets, trimmed) for `text`.
///
/// A sentence ends after `.`, `!` or `?` (plus any closing quotes or brackets) when followed by
/// whitespace and then an uppercase letter or a digit. No split happens inside a `protected`
/// range or after a known abbreviation or a single-letter initial.
pub fn sentence_bounds(text: &str, protected: &[Range<usize>]) -> Vec<Range<usize>> {
    let chars: Vec<char> = text.chars().collect();
    let mut bounds = Vec::new();
    let mut sentence_start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !matches!(chars[i], '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let term = i;
        let mut j = i + 1;
        while j < chars.len() && matches!(chars[j], '.' | '!' | '?' | '»' | '"' | '”' | ')' | '\'') {
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && chars[k].is_whitespace() {
            k += 1;
        }
        i = j;
        if k == j || k >= chars.len() {
            continue;
        }
        if !(chars[k].is_uppercase() || chars[k].is_ascii_digit()) {
            continue;
        }
        if chars[term] == '.' {
            let word = preceding_word(&chars, term);
            let word = word.trim_start_matches(|c: char| is_punct(c));
            let initial = word.chars().count() == 1 && word.chars().all(char::is_uppercase);
            if initial || ABBREVIATIONS.contains(&word) {
                continue;
            }
        }
        if protected.iter().any(|r| r.start < j && j < r.end) {
            continue;
        }
        push_trimmed(&chars, sentence_start..j, &mut bounds);
        sentence_start = k;
    }
    push_trimmed(&chars, sentence_start..chars.len(), &mut bounds);
    bounds
}

fn push_trimmed(chars: &[char], r: Range<usize>, out: &mut Vec<Range<usize>>) {
    let (mut s, mut e) = (r.start, r.end);
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    if s < e {
        out.push(s..e);
    }
}

pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    sentence_bounds(text, &[])
        .into_iter()
        .map(|r| chars[r].iter().collect())
        .collect()
}

/// Partitions `0..count` into `k` folds.
///
/// The indices are shuffled with [`SeededRng::shuffle`] and dealt round-robin, so fold sizes
/// differ by at most one. Each fold is returned sorted.
pub fn make_folds(count: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, PrepError> {
    if k < 2 {
        return Err(PrepError::TooFewFolds(k));
    }
    if k > count {
        return Err(PrepError::TooManyFolds { count, k });
    }
    let mut order: Vec<usize> = (0..count).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let mut folds = vec![Vec::with_capacity(count / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Reads the `T` lines of a brat standoff file: `T1<TAB>label start end<TAB>text`.
/// Discontinuous fragments (`start end;start end`) are joined into one covering range.
pub fn parse_standoff(ann: &str) -> Result<Vec<RawEntity>, PrepError> {
    let mut out = Vec::new();
    for (i, line) in ann.lines().enumerate() {
        if !line.starts_with('T') {
            continue;
        }
        let err = |message: &str| PrepError::Annotation {
            line: i + 1,
            message: message.to_string(),
        };
        let mut fields = line.splitn(3, '\t');
        let _id = fields.next();
        let spec = fields.next().ok_or_else(|| err("missing type and offsets"))?;
        let text = fields.next().unwrap_or_default().to_string();
        let (label, offsets) = spec
            .split_once(' ')
            .ok_or_else(|| err("missing offsets"))?;
        let mut start = usize::MAX;
        let mut end = 0;
        for frag in offsets.split(';') {
            let (s, e) = frag
                .trim()
                .split_once(' ')
                .ok_or_else(|| err("bad offset pair"))?;
            let s: usize = s.parse().map_err(|_| err("bad start offset"))?;
            let e: usize = e.parse().map_err(|_| err("bad end offset"))?;
            if s > e {
                return Err(err("start offset after end offset"));
            }
            start = start.min(s);
            end = end.max(e);
        }
        out.push(RawEntity {
            label: label.to_string(),
            start,
            end,
            text,
        });
    }
    Ok(out)
}

/// Turns one annotated article into BIO sentences.
///
/// Overlapping entities are resolved in favor of the one that starts first (longer on ties);
/// the others are dropped with a warning.
pub fn prepare_article(
    text: &str,
    entities: &[RawEntity],
    table: &RemapTable,
) -> Result<Vec<ConllSentence>, PrepError> {
    let (text, entities) = normalize_with_entities(text, entities);
    let mut typed = remap_entities(&entities, table)?;
    typed.retain(|e| e.start < e.end);
    typed.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut kept: Vec<CharEntity> = Vec::with_capacity(typed.len());
    for e in typed {
        if let Some(prev) = kept.last() {
            if e.start < prev.end {
                log::warn!("dropping entity {:?} overlapping {:?}", e.text, prev.text);
                continue;
            }
        }
        kept.push(e);
    }
    let protected: Vec<Range<usize>> = kept.iter().map(|e| e.start..e.end).collect();
    let tokens = tokenize(&text);
    let mut sentences = Vec::new();
    for bound in sentence_bounds(&text, &protected) {
        let toks: Vec<&(String, Range<usize>)> = tokens
            .iter()
            .filter(|(_, r)| r.start >= bound.start && r.end <= bound.end)
            .collect();
        if toks.is_empty() {
            continue;
        }
        let mut labels = vec![Label::Outside; toks.len()];
        for e in &kept {
            let mut first = true;
            for (i, (_, r)) in toks.iter().enumerate() {
                if r.start < e.end && e.start < r.end {
                    labels[i] = if first {
                        Label::Begin(e.entity_type)
                    } else {
                        Label::Inside(e.entity_type)
                    };
                    first = false;
                }
            }
        }
        sentences.push(ConllSentence {
            tokens: toks.iter().map(|(t, _)| t.clone()).collect(),
            labels,
        });
    }
    Ok(sentences)
}
