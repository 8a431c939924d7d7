//! Client side of the tagger wire protocol.
//!
//! HTTP: `POST /tag` with `{"sentences": [["tok", ...], ...]}` answered by
//! `{"distributions": [[{"O": 0.9, "B-PER": 0.1}, ...], ...]}`, and `GET /health` answered by
//! `{"status": "ok", "labels": [...]}`. Subprocess mode exchanges the same request and response
//! bodies as single JSON lines over stdin/stdout.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::types::{Label, LabelDistribution};

use super::{TagError, Tagger};

/// Allowed deviation of a token's probabilities from 1 on the wire.
pub const WIRE_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRequest {
    pub sentences: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagResponse {
    pub distributions: Vec<Vec<BTreeMap<String, f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub labels: Vec<String>,
}

/// Checks a response against the request it answers and converts it.
///
/// Sentence and token counts must match, labels must be in the BIO vocabulary, values must lie
/// in [0, 1] and sum to 1 within [`WIRE_SUM_TOLERANCE`]. Accepted values are divided by their
/// sum so the result meets the tighter in-memory invariant.
pub fn validate_distributions(
    request: &[Vec<String>],
    response: &TagResponse,
) -> Result<Vec<Vec<LabelDistribution>>, TagError> {
    let proto = |m: String| TagError::Protocol(m);
    if response.distributions.len() != request.len() {
        return Err(proto(format!(
            "{} sentences in response, {} requested",
            response.distributions.len(),
            request.len()
        )));
    }
    let mut out = Vec::with_capacity(request.len());
    for (si, (tokens, dists)) in request.iter().zip(&response.distributions).enumerate() {
        if dists.len() != tokens.len() {
            return Err(proto(format!(
                "sentence {si}: {} distributions for {} tokens",
                dists.len(),
                tokens.len()
            )));
        }
        let mut sentence = Vec::with_capacity(dists.len());
        for (ti, map) in dists.iter().enumerate() {
            let mut probs = [0.0; Label::COUNT];
            for (name, &p) in map {
                let label: Label = name.parse().map_err(|_| {
                    proto(format!("sentence {si} token {ti}: unknown label {name:?}"))
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(proto(format!(
                        "sentence {si} token {ti}: p({name}) = {p} outside [0, 1]"
                    )));
                }
                probs[label.index()] = p;
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > WIRE_SUM_TOLERANCE {
                return Err(proto(format!(
                    "sentence {si} token {ti}: probabilities sum to {sum}"
                )));
            }
            for p in &mut probs {
                *p /= sum;
            }
            sentence.push(LabelDistribution::from_array(probs)?);
        }
        out.push(sentence);
    }
    Ok(out)
}

pub struct HttpTagger {
    base: String,
    agent: ureq::Agent,
}

impl HttpTagger {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(300))
            .build();
        Self {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn map_err(e: ureq::Error) -> TagError {
        match e {
            ureq::Error::Status(code, resp) => {
                let body = resp.into_string().unwrap_or_default();
                TagError::Protocol(format!("HTTP {code}: {body}"))
            }
            ureq::Error::Transport(t) => TagError::Unreachable(t.to_string()),
        }
    }

    pub fn health(&self) -> Result<HealthStatus, TagError> {
        let resp = self
            .agent
            .get(&format!("{}/health", self.base))
            .call()
            .map_err(Self::map_err)?;
        let health: HealthStatus = resp
            .into_json()
            .map_err(|e| TagError::Protocol(format!("bad /health body: {e}")))?;
        if health.status != "ok" {
            return Err(TagError::Protocol(format!("status {:?}", health.status)));
        }
        if let Some(bad) = health.labels.iter().find(|l| l.parse::<Label>().is_err()) {
            return Err(TagError::Protocol(format!("unknown label {bad:?} in /health")));
        }
        Ok(health)
    }
}

impl Tagger for HttpTagger {
    fn distributions(
        &self,
        sentences: &[Vec<String>],
    ) -> Result<Vec<Vec<LabelDistribution>>, TagError> {
        let req = TagRequest {
            sentences: sentences.to_vec(),
        };
        let resp = self
            .agent
            .post(&format!("{}/tag", self.base))
            .send_json(&req)
            .map_err(Self::map_err)?;
        let body: TagResponse = resp
            .into_json()
            .map_err(|e| TagError::Protocol(format!("bad /tag body: {e}")))?;
        validate_distributions(sentences, &body)
    }
}

struct Pipe {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Line-delimited JSON over a child process. Requests are serialized through a lock.
pub struct SubprocessTagger {
    child: Child,
    pipe: Mutex<Pipe>,
}

impl SubprocessTagger {
    /// Runs `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, TagError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| TagError::Unreachable(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            pipe: Mutex::new(Pipe { stdin, stdout }),
        })
    }
}

impl Tagger for SubprocessTagger {
    fn distributions(
        &self,
        sentences: &[Vec<String>],
    ) -> Result<Vec<Vec<LabelDistribution>>, TagError> {
        let req = TagRequest {
            sentences: sentences.to_vec(),
        };
        let mut line = serde_json::to_string(&req).expect("request serializes");
        line.push('\n');
        let mut pipe = self.pipe.lock().unwrap_or_else(|p| p.into_inner());
        pipe.stdin
            .write_all(line.as_bytes())
            .and_then(|_| pipe.stdin.flush())
            .map_err(|e| TagError::Unreachable(format!("writing to tagger: {e}")))?;
        let mut reply = String::new();
        let n = pipe
            .stdout
            .read_line(&mut reply)
            .map_err(|e| TagError::Unreachable(format!("reading from tagger: {e}")))?;
        if n == 0 {
            return Err(TagError::Unreachable("tagger process closed its output".into()));
        }
        let body: TagResponse = serde_json::from_str(reply.trim_end())
            .map_err(|e| TagError::Protocol(format!("bad response line: {e}")))?;
        validate_distributions(sentences, &body)
    }
}

impl Drop for SubprocessTagger {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub enum ExternalTagger {
    Http(HttpTagger),
    Subprocess(SubprocessTagger),
}

impl Tagger for ExternalTagger {
    fn distributions(
        &self,
        sentences: &[Vec<String>],
    ) -> Result<Vec<Vec<LabelDistribution>>, TagError> {
        match self {
            ExternalTagger::Http(h) => h.distributions(sentences),
            ExternalTagger::Subprocess(s) => s.distributions(sentences),
        }
    }
}
