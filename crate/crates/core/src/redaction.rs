//! Replaces the audio under entity intervals with a fill signal.

use std::f64::consts::PI;

use thiserror::Error;

use crate::formats::AudioBuffer;
use crate::rng::SeededRng;
use crate::types::{TimeInterval, TimedEntity};

#[derive(Debug, Error, PartialEq)]
pub enum RedactError {
    #[error("interval ({start:.3}, {end:.3}) starts at or after the end of the audio ({duration:.3} s)")]
    PastEnd { start: f64, end: f64, duration: f64 },
    #[error("invalid fill: {0}")]
    InvalidFill(String),
    #[error("pad must be non-negative, got {0}")]
    NegativePad(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fill {
    Silence,
    /// Sine tone; amplitude is a fraction of full scale in (0, 1].
    Tone { freq: f64, amplitude: f64 },
    /// Uniform white noise from the seeded generator.
    WhiteNoise { amplitude: f64, seed: u64 },
}

impl Fill {
    pub const DEFAULT_TONE: Fill = Fill::Tone {
        freq: 440.0,
        amplitude: 0.3,
    };

    fn validate(&self) -> Result<(), RedactError> {
        let amp = match *self {
            Fill::Silence => return Ok(()),
            Fill::Tone { freq, amplitude } => {
                if !(freq.is_finite() && freq > 0.0) {
                    return Err(RedactError::InvalidFill(format!("tone frequency {freq}")));
                }
                amplitude
            }
            Fill::WhiteNoise { amplitude, .. } => amplitude,
        };
        if amp > 0.0 && amp <= 1.0 {
            Ok(())
        } else {
            Err(RedactError::InvalidFill(format!("amplitude {amp} outside (0, 1]")))
        }
    }
}

/// Merged, sorted intervals to redact.
#[derive(Debug, Clone, PartialEq)]
pub struct RedactionPlan {
    intervals: Vec<TimeInterval>,
    fill: Fill,
    pad: f64,
}

impl RedactionPlan {
    pub fn intervals(&self) -> &[TimeInterval] {
        &self.intervals
    }

    pub fn fill(&self) -> Fill {
        self.fill
    }

    pub fn pad(&self) -> f64 {
        self.pad
    }

    pub fn total_seconds(&self) -> f64 {
        self.intervals.iter().map(TimeInterval::duration).sum()
    }
}

/// Widens each entity by `pad` on both sides (clamped at 0), then merges intervals that
/// overlap or touch.
pub fn build_plan(entities: &[TimedEntity], pad: f64, fill: Fill) -> Result<RedactionPlan, RedactError> {
    if !(pad >= 0.0) {
        return Err(RedactError::NegativePad(pad));
    }
    fill.validate()?;
    let mut widened: Vec<TimeInterval> = entities
        .iter()
        .map(|e| {
            TimeInterval::new((e.interval.start() - pad).max(0.0), e.interval.end() + pad)
                .expect("padding keeps start <= end")
        })
        .collect();
    widened.sort_by(|a, b| a.start().total_cmp(&b.start()));
    let mut intervals: Vec<TimeInterval> = Vec::with_capacity(widened.len());
    for iv in widened {
        match intervals.last_mut() {
            Some(last) if iv.start() <= last.end() => *last = last.hull(&iv),
            _ => intervals.push(iv),
        }
    }
    Ok(RedactionPlan {
        intervals,
        fill,
        pad,
    })
}

/// Frame range `[floor(start * rate), min(ceil(end * rate), frames))`.
pub fn frame_range(interval: &TimeInterval, sample_rate: u32, frames: usize) -> (usize, usize) {
    let rate = sample_rate as f64;
    let lo = (interval.start() * rate).floor() as usize;
    let hi = ((interval.end() * rate).ceil() as usize).min(frames);
    (lo.min(frames), hi)
}

/// Applies the plan. Samples outside the plan's intervals are copied unchanged.
pub fn redact(audio: &AudioBuffer, plan: &RedactionPlan) -> Result<AudioBuffer, RedactError> {
    let frames = audio.frames();
    let duration = audio.duration();
    let channels = audio.channels as usize;
    let mut out = audio.clone();
    let mut noise = match plan.fill {
        Fill::WhiteNoise { seed, .. } => Some(SeededRng::new(seed)),
        _ => None,
    };
    for iv in &plan.intervals {
        let (lo, hi) = frame_range(iv, audio.sample_rate, frames);
        if lo >= frames {
            return Err(RedactError::PastEnd {
                start: iv.start(),
                end: iv.end(),
                duration,
            });
        }
        if iv.end() > duration {
            log::warn!(
                "interval ({:.3}, {:.3}) extends past the end of the audio ({duration:.3} s); clamped",
                iv.start(),
                iv.end()
            );
        }
        for frame in lo..hi {
            let value = match plan.fill {
                Fill::Silence => 0,
                Fill::Tone { freq, amplitude } => {
                    let t = frame as f64 / audio.sample_rate as f64;
                    (amplitude * i16::MAX as f64 * (2.0 * PI * freq * t).sin()).round() as i16
                }
                Fill::WhiteNoise { amplitude, .. } => {
                    let u = noise.as_mut().expect("noise rng").next_f64();
                    (amplitude * i16::MAX as f64 * (2.0 * u - 1.0)).round() as i16
                }
            };
            for c in 0..channels {
                out.samples[frame * channels + c] = value;
            }
        }
    }
    Ok(out)
}
