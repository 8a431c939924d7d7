//! On-disk formats: Praat TextGrid, CoNLL BIO, entity JSON and 16-bit PCM WAV.

mod conll;
mod entities_json;
mod textgrid;
mod wav;

pub use conll::{parse_conll, write_conll, ConllOptions, ConllSentence};
pub use entities_json::{
    parse_entities_json, write_entities_json, EntityRecord, UtteranceEntities,
};
pub use textgrid::{parse_textgrid, write_textgrid, TextGridDocument, Tier};
pub use wav::{read_wav, write_wav, AudioBuffer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("text encoding: {0}")]
    Encoding(String),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("malformed WAV: {0}")]
    Wav(String),
    #[error("entity JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl FormatError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        FormatError::Invalid(message.into())
    }
}
