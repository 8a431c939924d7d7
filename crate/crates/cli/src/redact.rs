use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use deid::formats::{
    parse_entities_json, parse_textgrid, read_wav, write_entities_json, write_wav, EntityRecord,
    UtteranceEntities,
};
use deid::redaction::{build_plan, frame_range, redact, Fill};
use deid::timealign::align_entities;
use deid::{EntitySpan, TimedEntity};
use rayon::prelude::*;

use crate::prep::write_file;

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct RedactArgs {
    /// Input WAV, or a directory of `<id>.wav` files for batch mode.
    #[arg(long)]
    wav: PathBuf,
    /// TextGrid with the word alignment, or a directory of `<id>.TextGrid` files.
    #[arg(long)]
    textgrid: PathBuf,
    /// Entity JSON from `deid tag` (token offsets) or with timed entities.
    #[arg(long)]
    entities: PathBuf,
    /// Name of the word tier.
    #[arg(long, default_value = "words")]
    tier: String,
    #[arg(long, value_enum, default_value_t = FillKind::Silence)]
    fill: FillKind,
    /// Tone frequency in Hz.
    #[arg(long, default_value_t = 440.0)]
    tone_freq: f64,
    /// Tone or noise amplitude as a fraction of full scale.
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    /// Seed for the noise fill.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds added on both sides of every entity.
    #[arg(long, default_value_t = 0.0)]
    pad: f64,
    /// Utterance id of the recording in the entity JSON; defaults to the WAV file stem.
    #[arg(long)]
    id: Option<String>,
    /// Skip utterances whose tokens do not match the word tier instead of failing.
    #[arg(long)]
    skip_mismatched: bool,
    /// Output WAV, or output directory in batch mode.
    #[arg(long)]
    out: PathBuf,
    /// Writes the entity intervals actually used as timed entity JSON.
    #[arg(long)]
    timed_out: Option<PathBuf>,
    /// Worker threads for batch mode; defaults to the CPU count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FillKind {
    Silence,
    Tone,
    Noise,
}

struct Job {
    id: String,
    wav: PathBuf,
    textgrid: PathBuf,
    out: PathBuf,
}

struct Outcome {
    id: String,
    entities: Option<Vec<TimedEntity>>,
    seconds: f64,
}

pub fn run(args: RedactArgs) -> Result<()> {
    let fill = match args.fill {
        FillKind::Silence => Fill::Silence,
        FillKind::Tone => Fill::Tone {
            freq: args.tone_freq,
            amplitude: args.amplitude,
        },
        FillKind::Noise => Fill::WhiteNoise {
            amplitude: args.amplitude,
            seed: args.seed,
        },
    };
    // validates pad and fill before any file is touched
    build_plan(&[], args.pad, fill)?;

    let bytes = fs::read(&args.entities)
        .with_context(|| format!("reading {}", args.entities.display()))?;
    let utterances = parse_entities_json(&bytes)
        .with_context(|| args.entities.display().to_string())?;
    let mut by_id: BTreeMap<String, UtteranceEntities> = BTreeMap::new();
    for u in utterances {
        if by_id.contains_key(&u.id) {
            bail!("{}: duplicate utterance id {:?}", args.entities.display(), u.id);
        }
        by_id.insert(u.id.clone(), u);
    }

    let jobs = if args.wav.is_dir() {
        batch_jobs(&args)?
    } else {
        let id = match &args.id {
            Some(id) => id.clone(),
            None => stem(&args.wav),
        };
        vec![Job {
            id,
            wav: args.wav.clone(),
            textgrid: args.textgrid.clone(),
            out: args.out.clone(),
        }]
    };

    let work = |job: &Job| {
        redact_one(job, &by_id, &args, fill).with_context(|| format!("utterance {:?}", job.id))
    };
    let outcomes: Vec<Result<Outcome>> = if jobs.len() > 1 {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = args.jobs {
            pool = pool.num_threads(n as usize);
        }
        pool.build()?.install(|| jobs.par_iter().map(work).collect())
    } else {
        jobs.iter().map(work).collect()
    };

    let mut timed = Vec::new();
    let (mut seconds, mut entity_count, mut files, mut skipped) = (0.0, 0, 0, 0);
    for outcome in outcomes {
        let o = outcome?;
        match o.entities {
            Some(entities) => {
                seconds += o.seconds;
                entity_count += entities.len();
                files += 1;
                timed.push(UtteranceEntities {
                    id: o.id,
                    tokens: None,
                    entities: entities.into_iter().map(EntityRecord::Timed).collect(),
                });
            }
            None => skipped += 1,
        }
    }
    if let Some(path) = &args.timed_out {
        write_file(path, &write_entities_json(&timed))?;
    }
    let mut summary = format!(
        "redacted {seconds:.3} s covering {entity_count} entities in {files} file(s)"
    );
    if skipped > 0 {
        summary.push_str(&format!(", {skipped} skipped"));
    }
    println!("{summary}");
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn batch_jobs(args: &RedactArgs) -> Result<Vec<Job>> {
    if args.id.is_some() {
        bail!("--id applies to a single recording, not a directory");
    }
    if !args.textgrid.is_dir() {
        bail!("--wav is a directory, so --textgrid must be one too");
    }
    let mut jobs = Vec::new();
    for entry in fs::read_dir(&args.wav).with_context(|| format!("reading {}", args.wav.display()))? {
        let path = entry?.path();
        if !path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            continue;
        }
        let id = stem(&path);
        let textgrid = ["TextGrid", "textgrid"]
            .iter()
            .map(|ext| args.textgrid.join(format!("{id}.{ext}")))
            .find(|p| p.is_file())
            .ok_or_else(|| anyhow!("no TextGrid for {} in {}", path.display(), args.textgrid.display()))?;
        jobs.push(Job {
            out: args.out.join(format!("{id}.wav")),
            id,
            wav: path,
            textgrid,
        });
    }
    jobs.sort_by(|a, b| a.id.cmp(&b.id));
    if jobs.is_empty() {
        bail!("no .wav files in {}", args.wav.display());
    }
    Ok(jobs)
}

fn redact_one(
    job: &Job,
    by_id: &BTreeMap<String, UtteranceEntities>,
    args: &RedactArgs,
    fill: Fill,
) -> Result<Outcome> {
    let tg_bytes = fs::read(&job.textgrid)
        .with_context(|| format!("reading {}", job.textgrid.display()))?;
    let doc = parse_textgrid(&tg_bytes).with_context(|| job.textgrid.display().to_string())?;
    let tier = doc.tier(&args.tier).ok_or_else(|| {
        anyhow!(
            "{}: no tier {:?}; available tiers: {}",
            job.textgrid.display(),
            args.tier,
            doc.tier_names().join(", ")
        )
    })?;

    let utterance = match by_id.get(&job.id) {
        Some(u) => Some(u),
        None if by_id.is_empty() => None,
        None => bail!("{} has no entry for this utterance", args.entities.display()),
    };

    let mut entities: Vec<TimedEntity> = Vec::new();
    if let Some(u) = utterance {
        let spans: Vec<EntitySpan> = u
            .entities
            .iter()
            .filter_map(|e| match e {
                EntityRecord::Tokens(s) => Some(*s),
                EntityRecord::Timed(_) => None,
            })
            .collect();
        let tokens: Vec<String> = match &u.tokens {
            Some(t) => t.clone(),
            None => tier.entries.iter().map(|w| w.word.clone()).collect(),
        };
        match align_entities(&tokens, &spans, &tier.entries) {
            Ok(aligned) => entities.extend(aligned),
            Err(e) if args.skip_mismatched => {
                log::warn!("utterance {:?} skipped: {e}", job.id);
                return Ok(Outcome {
                    id: job.id.clone(),
                    entities: None,
                    seconds: 0.0,
                });
            }
            Err(e) => return Err(e.into()),
        }
        entities.extend(u.entities.iter().filter_map(|e| match e {
            EntityRecord::Timed(t) => Some(*t),
            EntityRecord::Tokens(_) => None,
        }));
    }
    entities.sort_by(|a, b| {
        a.interval
            .start()
            .total_cmp(&b.interval.start())
            .then(a.interval.end().total_cmp(&b.interval.end()))
    });

    let wav_bytes = fs::read(&job.wav).with_context(|| format!("reading {}", job.wav.display()))?;
    let audio = read_wav(&wav_bytes).with_context(|| job.wav.display().to_string())?;
    let plan = build_plan(&entities, args.pad, fill)?;
    let frames = audio.frames();
    let redacted_frames: usize = plan
        .intervals()
        .iter()
        .map(|iv| {
            let (lo, hi) = frame_range(iv, audio.sample_rate, frames);
            hi.saturating_sub(lo)
        })
        .sum();
    if plan.intervals().is_empty() {
        // nothing to redact: keep the input byte for byte, header included
        write_file(&job.out, &wav_bytes)?;
    } else {
        let out = redact(&audio, &plan)?;
        write_file(&job.out, &write_wav(&out))?;
    }
    log::info!("{}: {} entities, {redacted_frames} frames", job.id, entities.len());
    Ok(Outcome {
        id: job.id.clone(),
        seconds: redacted_frames as f64 / audio.sample_rate as f64,
        entities: Some(entities),
    })
}
