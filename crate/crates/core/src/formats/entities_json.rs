//! Entity interchange JSON between the tagging and redaction steps.
//!
//! ```json
//! [{"id": "u1", "tokens": ["..."], "entities": [
//!     {"type": "PER", "start_s": 1.0, "end_s": 1.5},
//!     {"type": "LOC", "token_start": 3, "token_end": 4}]}]
//! ```
//!
//! `tokens` is optional; when present it is the tokenization the token offsets refer to.

use serde::{Deserialize, Serialize};

use crate::types::{EntitySpan, EntityType, TimeInterval, TimedEntity};

use super::FormatError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntityRecord {
    Timed(TimedEntity),
    Tokens(EntitySpan),
}

impl EntityRecord {
    pub fn entity_type(&self) -> EntityType {
        match self {
            EntityRecord::Timed(t) => t.entity_type,
            EntityRecord::Tokens(s) => s.entity_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceEntities {
    pub id: String,
    pub tokens: Option<Vec<String>>,
    pub entities: Vec<EntityRecord>,
}

#[derive(Serialize, Deserialize)]
struct WireUtterance {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<String>>,
    entities: Vec<WireEntity>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireEntity {
    Timed {
        #[serde(rename = "type")]
        kind: String,
        start_s: f64,
        end_s: f64,
    },
    Tokens {
        #[serde(rename = "type")]
        kind: String,
        token_start: usize,
        token_end: usize,
    },
}

pub fn parse_entities_json(bytes: &[u8]) -> Result<Vec<UtteranceEntities>, FormatError> {
    let wire: Vec<WireUtterance> = serde_json::from_slice(bytes)?;
    wire.into_iter()
        .map(|u| {
            let token_count = u.tokens.as_ref().map(Vec::len);
            let entities = u
                .entities
                .into_iter()
                .map(|e| convert(e, &u.id, token_count))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(UtteranceEntities {
                id: u.id,
                tokens: u.tokens,
                entities,
            })
        })
        .collect()
}

fn convert(
    e: WireEntity,
    id: &str,
    token_count: Option<usize>,
) -> Result<EntityRecord, FormatError> {
    let kind_of = |kind: &str| {
        EntityType::from_code(kind).ok_or_else(|| {
            FormatError::invalid(format!("utterance {id:?}: unknown entity type {kind:?}"))
        })
    };
    match e {
        WireEntity::Timed {
            kind,
            start_s,
            end_s,
        } => {
            let t = kind_of(&kind)?;
            let interval = TimeInterval::new(start_s, end_s)
                .map_err(|err| FormatError::invalid(format!("utterance {id:?}: {err}")))?;
            Ok(EntityRecord::Timed(TimedEntity::new(t, interval)))
        }
        WireEntity::Tokens {
            kind,
            token_start,
            token_end,
        } => {
            let t = kind_of(&kind)?;
            let span = EntitySpan::new(t, token_start, token_end, token_count.unwrap_or(usize::MAX))
                .map_err(|err| FormatError::invalid(format!("utterance {id:?}: {err}")))?;
            Ok(EntityRecord::Tokens(span))
        }
    }
}

pub fn write_entities_json(utterances: &[UtteranceEntities]) -> Vec<u8> {
    let wire: Vec<WireUtterance> = utterances
        .iter()
        .map(|u| WireUtterance {
            id: u.id.clone(),
            tokens: u.tokens.clone(),
            entities: u
                .entities
                .iter()
                .map(|e| match e {
                    EntityRecord::Timed(t) => WireEntity::Timed {
                        kind: t.entity_type.code().to_string(),
                        start_s: t.interval.start(),
                        end_s: t.interval.end(),
                    },
                    EntityRecord::Tokens(s) => WireEntity::Tokens {
                        kind: s.entity_type.code().to_string(),
                        token_start: s.token_start,
                        token_end: s.token_end,
                    },
                })
                .collect(),
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&wire).expect("entity JSON serializes");
    out.push(b'\n');
    out
}
