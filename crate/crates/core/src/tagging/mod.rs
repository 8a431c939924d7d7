//! Token-level entity tagging: backends producing label distributions, the confidence
//! threshold on the "not an entity" label, and BIO span decoding.

mod external;
mod gazetteer;

pub use external::{
    validate_distributions, ExternalTagger, HealthStatus, HttpTagger, SubprocessTagger,
    TagRequest, TagResponse, WIRE_SUM_TOLERANCE,
};
pub use gazetteer::Gazetteer;

use thiserror::Error;

use crate::types::{EntitySpan, Label, LabelDistribution, TypeError};

#[derive(Debug, Error)]
pub enum TagError {
    #[error("empty sentence")]
    EmptySentence,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("degenerate distribution: p(O) below threshold but every entity label has probability 0")]
    Degenerate,
    #[error("tagger unreachable: {0}")]
    Unreachable(String),
    #[error("tagger protocol violation: {0}")]
    Protocol(String),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("{label} at token {index} does not continue an entity")]
    OrphanInside { index: usize, label: Label },
    #[error("invalid distribution: {0}")]
    Distribution(#[from] TypeError),
    #[error("bad backend spec {0:?}: expected gazetteer:<file>, http:<url> or subprocess:<command>")]
    BackendSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the remaining label mass is recomputed once p(O) is zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// Divide each entity probability by the total entity mass. Ratios between entity labels
    /// are preserved; this equals re-running a softmax with the O logit at minus infinity.
    #[default]
    Renormalize,
    /// Softmax taken directly over the entity-label probabilities.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub theta: f64,
    pub mode: ThresholdMode,
}

impl Threshold {
    pub fn new(theta: f64, mode: ThresholdMode) -> Result<Self, TagError> {
        if (0.0..=1.0).contains(&theta) {
            Ok(Self { theta, mode })
        } else {
            Err(TagError::InvalidThreshold(theta))
        }
    }
}

/// Leaves `dist` unchanged when p(O) >= theta; otherwise sets p(O) to 0 and redistributes the
/// mass over the entity labels.
pub fn apply_threshold(
    dist: &LabelDistribution,
    theta: f64,
    mode: ThresholdMode,
) -> Result<LabelDistribution, TagError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(TagError::InvalidThreshold(theta));
    }
    let p = dist.as_array();
    if p[0] >= theta {
        return Ok(*dist);
    }
    let entity_mass: f64 = p[1..].iter().sum();
    if entity_mass <= 0.0 {
        return Err(TagError::Degenerate);
    }
    let mut out = [0.0; Label::COUNT];
    match mode {
        ThresholdMode::Renormalize => {
            for i in 1..Label::COUNT {
                out[i] = p[i] / entity_mass;
            }
        }
        ThresholdMode::Softmax => {
            let z: f64 = p[1..].iter().map(|v| v.exp()).sum();
            for i in 1..Label::COUNT {
                out[i] = p[i].exp() / z;
            }
        }
    }
    Ok(LabelDistribution::from_array(out)?)
}

/// Lenient BIO decoding: maximal runs become spans, a type change closes the open span, and an
/// `I-X` that does not continue an `X` run opens a new span.
pub fn decode_bio(labels: &[Label]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, label) in labels.iter().enumerate() {
        let continues = matches!((label, &open), (Label::Inside(t), Some(s)) if s.entity_type == *t);
        if continues {
            if let Some(s) = open.as_mut() {
                s.token_end = i + 1;
            }
            continue;
        }
        spans.extend(open.take());
        if let Some(t) = label.entity_type() {
            open = Some(EntitySpan {
                entity_type: t,
                token_start: i,
                token_end: i + 1,
            });
        }
    }
    spans.extend(open);
    spans
}

/// Like [`decode_bio`] but rejects an `I-X` that does not continue an `X` run.
pub fn decode_bio_strict(labels: &[Label]) -> Result<Vec<EntitySpan>, TagError> {
    for (i, label) in labels.iter().enumerate() {
        if let Label::Inside(t) = label {
            let prev = i.checked_sub(1).map(|j| labels[j]);
            if prev.and_then(Label::entity_type) != Some(*t) {
                return Err(TagError::OrphanInside {
                    index: i,
                    label: *label,
                });
            }
        }
    }
    Ok(decode_bio(labels))
}

/// Canonical encoding: `B-X` on the first token of each span, `I-X` on the rest.
/// Spans must be non-overlapping and within `len`.
pub fn encode_bio(spans: &[EntitySpan], len: usize) -> Vec<Label> {
    let mut labels = vec![Label::Outside; len];
    for s in spans {
        labels[s.token_start] = Label::Begin(s.entity_type);
        for l in &mut labels[s.token_start + 1..s.token_end] {
            *l = Label::Inside(s.entity_type);
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub distributions: Vec<LabelDistribution>,
    pub spans: Vec<EntitySpan>,
}

impl TaggedSentence {
    /// Applies the optional threshold, then decodes the argmax labels.
    pub fn from_distributions(
        tokens: Vec<String>,
        distributions: Vec<LabelDistribution>,
        threshold: Option<Threshold>,
    ) -> Result<Self, TagError> {
        if distributions.len() != tokens.len() {
            return Err(TagError::Protocol(format!(
                "{} distributions for {} tokens",
                distributions.len(),
                tokens.len()
            )));
        }
        let distributions = match threshold {
            Some(th) => distributions
                .iter()
                .map(|d| apply_threshold(d, th.theta, th.mode))
                .collect::<Result<Vec<_>, _>>()?,
            None => distributions,
        };
        let labels: Vec<Label> = distributions.iter().map(LabelDistribution::argmax).collect();
        Ok(Self {
            spans: decode_bio(&labels),
            tokens,
            distributions,
        })
    }

    pub fn labels(&self) -> Vec<Label> {
        self.distributions.iter().map(LabelDistribution::argmax).collect()
    }
}

/// Anything that can produce per-token label distributions for a batch of sentences.
pub trait Tagger: Send + Sync {
    fn distributions(
        &self,
        sentences: &[Vec<String>],
    ) -> Result<Vec<Vec<LabelDistribution>>, TagError>;
}

pub enum TaggerBackend {
    Gazetteer(Gazetteer),
    External(ExternalTagger),
}

impl TaggerBackend {
    /// Parses `gazetteer:<lexicon-file>`, `http:<url>` or `subprocess:<command>`; a bare
    /// `http://` or `https://` URL is taken as the http backend. An empty http URL falls back
    /// to `default_url`.
    pub fn from_spec(spec: &str, default_url: Option<&str>) -> Result<Self, TagError> {
        let (kind, arg) = if spec.starts_with("http://") || spec.starts_with("https://") {
            ("http", spec)
        } else {
            spec.split_once(':').unwrap_or((spec, ""))
        };
        match kind {
            "gazetteer" if !arg.is_empty() => {
                let text = std::fs::read_to_string(arg)?;
                Ok(TaggerBackend::Gazetteer(Gazetteer::parse(&text)?))
            }
            "http" => {
                let url = if arg.is_empty() { default_url.unwrap_or("") } else { arg };
                if url.is_empty() {
                    return Err(TagError::BackendSpec(spec.to_string()));
                }
                Ok(TaggerBackend::External(ExternalTagger::Http(HttpTagger::new(url))))
            }
            "subprocess" if !arg.is_empty() => Ok(TaggerBackend::External(
                ExternalTagger::Subprocess(SubprocessTagger::spawn(arg)?),
            )),
            _ => Err(TagError::BackendSpec(spec.to_string())),
        }
    }
}

impl Tagger for TaggerBackend {
    fn distributions(
        &self,
        sentences: &[Vec<String>],
    ) -> Result<Vec<Vec<LabelDistribution>>, TagError> {
        match self {
            TaggerBackend::Gazetteer(g) => g.distributions(sentences),
            TaggerBackend::External(e) => e.distributions(sentences),
        }
    }
}

/// Tags one sentence. Gazetteer output is one-hot; external output is passed through after
/// protocol validation.
pub fn tag(tokens: &[String], backend: &dyn Tagger) -> Result<TaggedSentence, TagError> {
    let mut out = tag_batch(&[tokens.to_vec()], backend, None)?;
    Ok(out.remove(0))
}

pub fn tag_batch(
    sentences: &[Vec<String>],
    backend: &dyn Tagger,
    threshold: Option<Threshold>,
) -> Result<Vec<TaggedSentence>, TagError> {
    if sentences.iter().any(Vec::is_empty) {
        return Err(TagError::EmptySentence);
    }
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let dists = backend.distributions(sentences)?;
    if dists.len() != sentences.len() {
        return Err(TagError::Protocol(format!(
            "{} results for {} sentences",
            dists.len(),
            sentences.len()
        )));
    }
    sentences
        .iter()
        .zip(dists)
        .map(|(s, d)| TaggedSentence::from_distributions(s.clone(), d, threshold))
        .collect()
}
