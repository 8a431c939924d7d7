use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use deid::corpus_prep::{normalize_text, tokenize};
use deid::formats::{
    parse_conll, write_conll, write_entities_json, ConllOptions, ConllSentence, EntityRecord,
    UtteranceEntities,
};
use deid::tagging::{decode_bio_strict, encode_bio, tag_batch, TaggerBackend, Threshold, ThresholdMode};

use crate::prep::{read_text, write_file};

pub const TAGGER_URL_ENV: &str = "DEID_TAGGER_URL";

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TagArgs {
    /// CoNLL file, or plain text with one utterance per line (`id<TAB>text` or just text).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    format: InputFormat,
    /// `gazetteer:<lexicon-file>`, `http:<url>` or `subprocess:<command>`. Defaults to the
    /// http backend at $DEID_TAGGER_URL when that is set.
    #[arg(long)]
    backend: Option<String>,
    /// p(O) below theta is zeroed and the entity labels renormalized; 0 disables.
    #[arg(long, default_value_t = 0.9, value_parser = parse_theta)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Renormalize)]
    threshold_mode: ModeArg,
    /// Fail on an I- label that does not continue an entity instead of opening one.
    #[arg(long)]
    strict_bio: bool,
    /// Sentences per backend request.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    /// Entity JSON output; standard output when omitted.
    #[arg(long)]
    entities_out: Option<PathBuf>,
    /// Tagged CoNLL output.
    #[arg(long)]
    conll_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputFormat {
    /// `.conll` extension means CoNLL, anything else plain text.
    Auto,
    Conll,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Renormalize,
    Softmax,
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Utterances to tag: `(id, tokens)`.
fn read_input(path: &Path, format: InputFormat) -> Result<Vec<(String, Vec<String>)>> {
    let is_conll = match format {
        InputFormat::Conll => true,
        InputFormat::Text => false,
        InputFormat::Auto => path.extension().is_some_and(|e| e == "conll"),
    };
    let text = read_text(path)?;
    if is_conll {
        let sentences = parse_conll(text.as_bytes(), &ConllOptions::default())
            .with_context(|| path.display().to_string())?;
        return Ok(sentences
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("s{:04}", i + 1), s.tokens))
            .collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = match line.split_once('\t') {
            Some((id, body)) if !id.trim().is_empty() => (id.trim().to_string(), body),
            _ => (format!("line{:04}", i + 1), line),
        };
        let tokens: Vec<String> = tokenize(&normalize_text(body))
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        if tokens.is_empty() {
            log::warn!("{}:{}: utterance {id:?} has no tokens, skipped", path.display(), i + 1);
            continue;
        }
        out.push((id, tokens));
    }
    Ok(out)
}

fn backend_spec(arg: Option<&str>, env_url: Option<&str>) -> Result<String> {
    match (arg, env_url) {
        (Some(spec), _) => Ok(spec.to_string()),
        (None, Some(_)) => Ok("http:".to_string()),
        (None, None) => bail!("no tagger backend: pass --backend or set {TAGGER_URL_ENV}"),
    }
}

pub fn run(args: TagArgs) -> Result<()> {
    let env_url = std::env::var(TAGGER_URL_ENV).ok().filter(|u| !u.is_empty());
    let spec = backend_spec(args.backend.as_deref(), env_url.as_deref())?;
    let backend = TaggerBackend::from_spec(&spec, env_url.as_deref())?;
    let mode = match args.threshold_mode {
        ModeArg::Renormalize => ThresholdMode::Renormalize,
        ModeArg::Softmax => ThresholdMode::Softmax,
    };
    let threshold = Threshold::new(args.theta, mode)?;

    let utterances = read_input(&args.input, args.format)?;
    let mut entities_out = Vec::with_capacity(utterances.len());
    let mut conll_out = Vec::with_capacity(utterances.len());
    for chunk in utterances.chunks(args.batch_size as usize) {
        let sentences: Vec<Vec<String>> = chunk.iter().map(|(_, t)| t.clone()).collect();
        let tagged = tag_batch(&sentences, &backend, Some(threshold))?;
        for ((id, _), t) in chunk.iter().zip(tagged) {
            if args.strict_bio {
                decode_bio_strict(&t.labels()).with_context(|| format!("utterance {id:?}"))?;
            }
            conll_out.push(ConllSentence {
                labels: encode_bio(&t.spans, t.tokens.len()),
                tokens: t.tokens.clone(),
            });
            entities_out.push(UtteranceEntities {
                id: id.clone(),
                entities: t.spans.iter().copied().map(EntityRecord::Tokens).collect(),
                tokens: Some(t.tokens),
            });
        }
    }

    let count: usize = entities_out.iter().map(|u| u.entities.len()).sum();
    log::info!("{count} entities in {} utterances", entities_out.len());
    let json = write_entities_json(&entities_out);
    match &args.entities_out {
        Some(path) => write_file(path, &json)?,
        None => std::io::stdout().lock().write_all(&json)?,
    }
    if let Some(path) = &args.conll_out {
        write_file(path, &write_conll(&conll_out))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_range() {
        assert_eq!(parse_theta("0.9"), Ok(0.9));
        assert!(parse_theta("1.5").is_err());
        assert!(parse_theta("-0.1").is_err());
        assert!(parse_theta("x").is_err());
    }

    #[test]
    fn env_url_is_the_fallback_backend() {
        assert_eq!(backend_spec(Some("gazetteer:x"), Some("u")).unwrap(), "gazetteer:x");
        assert_eq!(backend_spec(None, Some("http://h")).unwrap(), "http:");
        assert!(backend_spec(None, None).is_err());
    }
}
