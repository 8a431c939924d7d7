//! RIFF/WAVE reading and writing, 16-bit PCM only.

use super::FormatError;

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;
// first two bytes of the KSDATAFORMAT_SUBTYPE_PCM GUID, the rest is the fixed base GUID
const PCM_SUBFORMAT_TAIL: [u8; 14] = [
    0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71,
];

/// Interleaved signed 16-bit samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<i16>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, channels: u16, samples: Vec<i16>) -> Result<Self, FormatError> {
        if sample_rate == 0 {
            return Err(FormatError::Wav("sample rate must be positive".into()));
        }
        if !(1..=2).contains(&channels) {
            return Err(FormatError::UnsupportedEncoding(format!(
                "{channels} channels (1 or 2 supported)"
            )));
        }
        if samples.len() % channels as usize != 0 {
            return Err(FormatError::Wav(format!(
                "{} samples is not a multiple of {channels} channels",
                samples.len()
            )));
        }
        Ok(Self {
            sample_rate,
            channels,
            samples,
        })
    }

    /// Number of sample frames (samples per channel).
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn read_wav(bytes: &[u8]) -> Result<AudioBuffer, FormatError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(FormatError::Wav("not a RIFF/WAVE file".into()));
    }
    let mut fmt: Option<(u16, u32, u16)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + size > bytes.len() {
                    return Err(FormatError::Wav("truncated fmt chunk".into()));
                }
                let mut code = u16_at(bytes, body);
                let channels = u16_at(bytes, body + 2);
                let rate = u32_at(bytes, body + 4);
                let bits = u16_at(bytes, body + 14);
                if code == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(FormatError::Wav("truncated extensible fmt chunk".into()));
                    }
                    let sub = &bytes[body + 24..body + 40];
                    if sub[2..] == PCM_SUBFORMAT_TAIL {
                        code = u16::from_le_bytes([sub[0], sub[1]]);
                    }
                }
                if code != FORMAT_PCM {
                    return Err(FormatError::UnsupportedEncoding(format!(
                        "format code {code} (only PCM is supported)"
                    )));
                }
                if bits != 16 {
                    return Err(FormatError::UnsupportedEncoding(format!(
                        "{bits}-bit samples (only 16-bit is supported)"
                    )));
                }
                fmt = Some((channels, rate, bits));
            }
            b"data" => {
                let (channels, rate, _) =
                    fmt.ok_or_else(|| FormatError::Wav("data chunk before fmt chunk".into()))?;
                if body + size > bytes.len() {
                    return Err(FormatError::Wav(format!(
                        "truncated data chunk: header declares {size} bytes, {} present",
                        bytes.len() - body
                    )));
                }
                if size % 2 != 0 {
                    return Err(FormatError::Wav("odd data chunk size".into()));
                }
                let samples = bytes[body..body + size]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]))
                    .collect();
                return AudioBuffer::new(rate, channels, samples);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body + size + (size & 1);
    }
    Err(FormatError::Wav("no data chunk".into()))
}

/// Writes a canonical 44-byte header followed by the samples.
pub fn write_wav(buf: &AudioBuffer) -> Vec<u8> {
    let block_align = buf.channels as u32 * 2;
    let data_len = (buf.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&buf.channels.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate * block_align).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &buf.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
