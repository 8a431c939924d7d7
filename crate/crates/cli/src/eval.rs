use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use deid::formats::{parse_conll, parse_entities_json, parse_textgrid, ConllOptions, EntityRecord};
use deid::metrics::{evaluate_spans, evaluate_timed, fa_accuracy, AlignedCorpus, DeltaMode, EvalReport};
use deid::tagging::decode_bio;
use deid::TimedEntity;
use serde::Serialize;

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Forced-alignment accuracy of predicted word boundaries against gold TextGrids.
    Fa(FaArgs),
    /// Exact-span text NER scores between two CoNLL files.
    Ner(NerArgs),
    /// Time-domain scores of timed entity JSON against gold timed entity JSON.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct FaArgs {
    /// Predicted TextGrid, or a directory of them (paired with gold by file stem).
    #[arg(long)]
    pred: PathBuf,
    /// Gold TextGrid or directory.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "words")]
    tier: String,
    /// Tolerance in seconds.
    #[arg(short = 't', long, default_value_t = 0.25)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Outer)]
    mode: ModeArg,
    /// Comma-separated tolerances; reports both modes at each.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct NerArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct PipelineArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(short = 't', long, default_value_t = 0.25)]
    tolerance: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Std,
    Outer,
}

impl From<ModeArg> for DeltaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Std => DeltaMode::Std,
            ModeArg::Outer => DeltaMode::Outer,
        }
    }
}

pub fn run(command: EvalCommand) -> Result<()> {
    match command {
        EvalCommand::Fa(a) => run_fa(a),
        EvalCommand::Ner(a) => run_ner(a),
        EvalCommand::Pipeline(a) => run_pipeline(a),
    }
}

#[derive(Serialize)]
struct FaRow {
    tolerance: f64,
    std: f64,
    outer: f64,
}

#[derive(Serialize)]
struct FaReport {
    mode: DeltaMode,
    /// Accuracy in `mode` at the first tolerance.
    accuracy: f64,
    words: usize,
    rows: Vec<FaRow>,
}

fn run_fa(args: FaArgs) -> Result<()> {
    let pred = load_alignments(&args.pred, &args.tier)?;
    let gold = load_alignments(&args.gold, &args.tier)?;
    let tolerances = args.sweep.clone().unwrap_or_else(|| vec![args.tolerance]);
    if tolerances.is_empty() {
        bail!("--sweep needs at least one tolerance");
    }
    let mut rows = Vec::with_capacity(tolerances.len());
    for &t in &tolerances {
        rows.push(FaRow {
            tolerance: t,
            std: fa_accuracy(&pred, &gold, t, DeltaMode::Std)?,
            outer: fa_accuracy(&pred, &gold, t, DeltaMode::Outer)?,
        });
    }
    let mode: DeltaMode = args.mode.into();
    let pick = |r: &FaRow| match mode {
        DeltaMode::Std => r.std,
        DeltaMode::Outer => r.outer,
    };
    let report = FaReport {
        mode,
        accuracy: pick(&rows[0]),
        words: gold.values().map(Vec::len).sum(),
        rows,
    };
    let mut out = std::io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else if args.sweep.is_some() {
        writeln!(out, "{:>8} {:>9} {:>9}", "t (s)", "std", "outer")?;
        for r in &report.rows {
            writeln!(out, "{:>8.3} {:>9.4} {:>9.4}", r.tolerance, r.std, r.outer)?;
        }
    } else {
        let name = match mode {
            DeltaMode::Std => "std",
            DeltaMode::Outer => "outer",
        };
        writeln!(
            out,
            "fa accuracy ({name}, t={:.3}): {:.4} over {} words",
            tolerances[0], report.accuracy, report.words
        )?;
    }
    Ok(())
}

fn load_alignments(path: &Path, tier: &str) -> Result<AlignedCorpus> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v = Vec::new();
        for entry in fs::read_dir(path).with_context(|| format!("reading {}", path.display()))? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("textgrid")) {
                v.push(p);
            }
        }
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut corpus = AlignedCorpus::new();
    for f in files {
        let bytes = fs::read(&f).with_context(|| format!("reading {}", f.display()))?;
        let doc = parse_textgrid(&bytes).with_context(|| f.display().to_string())?;
        let words = doc.tier(tier).ok_or_else(|| {
            anyhow!(
                "{}: no tier {tier:?}; available tiers: {}",
                f.display(),
                doc.tier_names().join(", ")
            )
        })?;
        // single files are paired with each other whatever their names
        let id = if path.is_dir() {
            f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        } else {
            String::new()
        };
        corpus.insert(id, words.entries.clone());
    }
    Ok(corpus)
}

fn run_ner(args: NerArgs) -> Result<()> {
    let read = |p: &Path| -> Result<_> {
        let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        parse_conll(&bytes, &ConllOptions::default()).with_context(|| p.display().to_string())
    };
    let pred = read(&args.pred)?;
    let gold = read(&args.gold)?;
    if pred.len() != gold.len() {
        bail!(
            "prediction has {} sentences but gold has {}",
            pred.len(),
            gold.len()
        );
    }
    for (i, (p, g)) in pred.iter().zip(&gold).enumerate() {
        if p.tokens != g.tokens {
            bail!("sentence {}: tokens differ between prediction and gold", i + 1);
        }
    }
    let spans = |s: &[deid::formats::ConllSentence]| -> Vec<_> {
        s.iter().map(|x| decode_bio(&x.labels)).collect()
    };
    let report = evaluate_spans(&spans(&pred), &spans(&gold))?;
    print_report(&report, args.json)
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let pred = load_timed(&args.pred)?;
    let gold = load_timed(&args.gold)?;
    let report = evaluate_timed(&pred, &gold, args.tolerance)?;
    print_report(&report, args.json)
}

fn load_timed(path: &Path) -> Result<BTreeMap<String, Vec<TimedEntity>>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let utterances = parse_entities_json(&bytes).with_context(|| path.display().to_string())?;
    let mut out = BTreeMap::new();
    for u in utterances {
        let mut timed = Vec::with_capacity(u.entities.len());
        for e in &u.entities {
            match e {
                EntityRecord::Timed(t) => timed.push(*t),
                EntityRecord::Tokens(_) => bail!(
                    "{}: utterance {:?} has token-offset entities; map them to time with \
                     `deid redact --timed-out` first",
                    path.display(),
                    u.id
                ),
            }
        }
        if out.insert(u.id.clone(), timed).is_some() {
            bail!("{}: duplicate utterance id {:?}", path.display(), u.id);
        }
    }
    Ok(out)
}

fn print_report(report: &EvalReport, json: bool) -> Result<()> {
    let mut out = std::io::stdout().lock();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(report)?)?;
    } else {
        write!(out, "{report}")?;
    }
    Ok(())
}
