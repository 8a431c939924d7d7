use crate::corpus_prep::{RemapAction, RemapTable};
use crate::types::{EntityType, Label};

use super::FormatError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<Label>,
}

#[derive(Debug, Clone, Default)]
pub struct ConllOptions<'a> {
    /// Resolves tag types that are not one of the five short codes.
    pub remap: Option<&'a RemapTable>,
    /// Reject an `I-X` that does not continue a `B-X`/`I-X` run.
    pub strict: bool,
}

fn resolve_tag(tag: &str, opts: &ConllOptions<'_>) -> Option<Label> {
    if let Ok(label) = tag.parse::<Label>() {
        return Some(label);
    }
    let (prefix, kind) = tag.split_once('-')?;
    if prefix != "B" && prefix != "I" {
        return None;
    }
    let action = match EntityType::from_code(kind) {
        Some(t) => RemapAction::MapTo(t),
        None => opts.remap?.lookup(kind, None)?,
    };
    Some(match (prefix, action) {
        (_, RemapAction::Delete) => Label::Outside,
        ("B", RemapAction::MapTo(t)) => Label::Begin(t),
        (_, RemapAction::MapTo(t)) => Label::Inside(t),
    })
}

/// Parses `token<TAB>tag` lines; blank lines separate sentences.
pub fn parse_conll(bytes: &[u8], opts: &ConllOptions<'_>) -> Result<Vec<ConllSentence>, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Encoding(e.to_string()))?;
    let mut sentences = Vec::new();
    let mut current = ConllSentence {
        tokens: Vec::new(),
        labels: Vec::new(),
    };
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.tokens.is_empty() {
                sentences.push(std::mem::replace(
                    &mut current,
                    ConllSentence {
                        tokens: Vec::new(),
                        labels: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default();
        let tag = fields
            .next()
            .ok_or_else(|| FormatError::parse(line_no, "missing tab between token and tag"))?;
        if fields.next().is_some() {
            return Err(FormatError::parse(line_no, "token contains a tab"));
        }
        if token.is_empty() {
            return Err(FormatError::parse(line_no, "empty token"));
        }
        let label = resolve_tag(tag.trim(), opts)
            .ok_or_else(|| FormatError::parse(line_no, format!("unknown tag {tag:?}")))?;
        if opts.strict {
            if let Label::Inside(t) = label {
                let continues = matches!(
                    current.labels.last(),
                    Some(Label::Begin(p)) | Some(Label::Inside(p)) if *p == t
                );
                if !continues {
                    return Err(FormatError::parse(
                        line_no,
                        format!("{label} does not continue a {} entity", t.code()),
                    ));
                }
            }
        }
        current.tokens.push(token.to_string());
        current.labels.push(label);
    }
    if !current.tokens.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

pub fn write_conll(sentences: &[ConllSentence]) -> Vec<u8> {
    let mut out = String::new();
    for s in sentences {
        for (tok, label) in s.tokens.iter().zip(&s.labels) {
            out.push_str(tok);
            out.push('\t');
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out.push('\n');
    }
    out.into_bytes()
}
