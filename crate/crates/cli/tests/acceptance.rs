//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain binary
//! (`harness = false`) so the report is always printed; exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use deid::formats::{
    parse_conll, parse_entities_json, parse_textgrid, read_wav, write_conll, write_entities_json,
    write_textgrid, write_wav, AudioBuffer, ConllOptions, ConllSentence, EntityRecord,
    TextGridDocument, Tier,
};
use deid::metrics::{
    counts_for_pairing, delta_outer, delta_std, evaluate_spans, f1, fa_accuracy, nte_time_counts,
    pair_entities, AlignedCorpus, DeltaMode,
};
use deid::redaction::{build_plan, redact, Fill};
use deid::rng::SeededRng;
use deid::tagging::{apply_threshold, encode_bio, ThresholdMode};
use deid::{
    interval_overlap, ConfusionCounts, EntitySpan, EntityType, Label, LabelDistribution,
    TimeInterval, TimedEntity, WordAlignment,
};

/// Published aggregates are given to three decimals.
const F1_IDENTITY_TOLERANCE: f64 = 0.001;
const DELTA_TRIPLES: usize = 20_000;
const ORACLE_INSTANCES: usize = 1_000;
const ORACLE_MAX_SIDE: u64 = 6;
const ORACLE_MIN_AGREEMENT: f64 = 0.99;
const NTE_TYPED_CORPORA: usize = 1_000;
const THRESHOLD_SENTENCES: usize = 1_000;
const THRESHOLD_STEP: f64 = 0.05;
const RATIO_TOLERANCE: f64 = 1e-9;
const ROUND_TRIP_FIXTURES: usize = 24;
const TEXTGRID_TIME_TOLERANCE: f64 = 1e-6;
const PIPELINE_TOLERANCE: f64 = 0.25;
const PERTURBATION_S: f64 = 0.3;
const FA_FIXTURE_TOLERANCE: f64 = 1e-12;

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: false,
        detail: detail.into(),
    }
}

fn iv(s: f64, e: f64) -> TimeInterval {
    TimeInterval::new(s, e).unwrap()
}

fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

fn random_type(rng: &mut SeededRng) -> EntityType {
    EntityType::ALL[rng.below(EntityType::ALL.len() as u64) as usize]
}

// ---------------------------------------------------------------------------------------------

fn f1_identities() -> Outcome {
    let cases = [
        (0.985, 0.631, 0.769),
        (0.842, 0.960, 0.897),
        (0.835, 0.959, 0.893),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (p, r, expected) in cases {
        let got = f1(p, r);
        ok &= (got - expected).abs() <= F1_IDENTITY_TOLERANCE;
        details.push(format!("f1({p}, {r}) = {got:.4} (want {expected})"));
    }
    let detail = details.join("; ");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn random_interval(rng: &mut SeededRng) -> TimeInterval {
    if rng.below(20) == 0 {
        return TimeInterval::ZERO;
    }
    let s = uniform(rng, 0.0, 5.0);
    iv(s, s + uniform(rng, 0.0, 2.0))
}

fn delta_dominance_monotonicity() -> Outcome {
    let mut rng = SeededRng::new(1);
    let mut violations = Vec::new();
    for _ in 0..DELTA_TRIPLES {
        let p = random_interval(&mut rng);
        let g = random_interval(&mut rng);
        let t = uniform(&mut rng, 0.0, 1.0);
        let t2 = t + uniform(&mut rng, 0.0, 1.0);
        if delta_std(&p, &g, t) && !delta_outer(&p, &g, t) {
            violations.push(format!("dominance at {p:?} {g:?} t={t}"));
        }
        for (name, f) in [("std", delta_std as fn(_, _, _) -> bool), ("outer", delta_outer)] {
            if f(&p, &g, t) && !f(&p, &g, t2) {
                violations.push(format!("{name} not monotone at {p:?} {g:?} {t} -> {t2}"));
            }
        }
    }
    if violations.is_empty() {
        pass(format!("{DELTA_TRIPLES} triples, no violation"))
    } else {
        fail(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

/// Sorted, pairwise-disjoint intervals inside `[0, 10]`, like the entities of one utterance.
fn disjoint(mut candidates: Vec<TimeInterval>, cap: usize) -> Vec<TimeInterval> {
    candidates.sort_by(|a, b| a.start().total_cmp(&b.start()));
    let mut out: Vec<TimeInterval> = Vec::new();
    for c in candidates {
        if out.len() == cap {
            break;
        }
        if out.last().is_none_or(|l| l.end() < c.start()) {
            out.push(c);
        }
    }
    out
}

fn oracle_instance(rng: &mut SeededRng) -> (Vec<TimedEntity>, Vec<TimedEntity>) {
    let n_gold = rng.below(ORACLE_MAX_SIDE + 1) as usize;
    let gold_iv: Vec<TimeInterval> = disjoint(
        (0..n_gold * 2)
            .map(|_| {
                let s = uniform(rng, 0.0, 9.0);
                iv(s, s + uniform(rng, 0.1, 1.0))
            })
            .collect(),
        n_gold,
    );
    let mut pred_candidates = Vec::new();
    for g in &gold_iv {
        if rng.below(10) < 7 {
            let s = (g.start() + uniform(rng, -0.4, 0.4)).max(0.0);
            let e = (g.end() + uniform(rng, -0.4, 0.4)).max(s + 0.05);
            pred_candidates.push(iv(s, e));
        }
    }
    for _ in 0..rng.below(3) {
        let s = uniform(rng, 0.0, 9.0);
        pred_candidates.push(iv(s, s + uniform(rng, 0.1, 1.0)));
    }
    let pred_iv = disjoint(pred_candidates, ORACLE_MAX_SIDE as usize);
    let wrap = |v: Vec<TimeInterval>, rng: &mut SeededRng| -> Vec<TimedEntity> {
        v.into_iter().map(|i| TimedEntity::new(random_type(rng), i)).collect()
    };
    let gold = wrap(gold_iv, rng);
    let pred = wrap(pred_iv, rng);
    (pred, gold)
}

/// Exhaustive search over one-to-one pairings of overlapping entities, maximizing TP and then
/// the number of pairs. Returns `(tp, pairs)`.
fn oracle_best(pred: &[TimedEntity], gold: &[TimedEntity], t: f64) -> (usize, usize) {
    fn go(gi: usize, used: &mut Vec<bool>, pred: &[TimedEntity], gold: &[TimedEntity], t: f64) -> (usize, usize) {
        if gi == gold.len() {
            return (0, 0);
        }
        let mut best = go(gi + 1, used, pred, gold, t);
        for pi in 0..pred.len() {
            if used[pi] || interval_overlap(&pred[pi].interval, &gold[gi].interval) <= 0.0 {
                continue;
            }
            used[pi] = true;
            let (tp, n) = go(gi + 1, used, pred, gold, t);
            used[pi] = false;
            let hit = delta_outer(&pred[pi].interval, &gold[gi].interval, t) as usize;
            best = best.max((tp + hit, n + 1));
        }
        best
    }
    go(0, &mut vec![false; pred.len()], pred, gold, t)
}

fn nte_oracle_equivalence() -> Outcome {
    let mut rng = SeededRng::new(2);
    let mut tp_agree = 0;
    let mut compared = 0;
    let mut bookkeeping_errors = Vec::new();
    let mut discrepant = Vec::new();
    for n in 0..ORACLE_INSTANCES {
        let (pred, gold) = oracle_instance(&mut rng);
        let counts = nte_time_counts(&pred, &gold, PIPELINE_TOLERANCE);
        let pairing = pair_entities(&pred, &gold);
        let (oracle_tp, oracle_pairs) = oracle_best(&pred, &gold, PIPELINE_TOLERANCE);
        if counts.tp as usize == oracle_tp {
            tp_agree += 1;
        } else {
            let spans = |v: &[TimedEntity]| -> Vec<String> {
                v.iter()
                    .map(|e| format!("{:.2}-{:.2}", e.interval.start(), e.interval.end()))
                    .collect()
            };
            discrepant.push(format!(
                "#{n}: greedy TP {} vs oracle {oracle_tp}; pred {:?} gold {:?}",
                counts.tp,
                spans(&pred),
                spans(&gold)
            ));
            if std::env::var("DUMP").is_ok() { eprintln!("pred {:?}\ngold {:?}", pred.iter().map(|e| (e.interval.start(), e.interval.end())).collect::<Vec<_>>(), gold.iter().map(|e| (e.interval.start(), e.interval.end())).collect::<Vec<_>>()); }
        }
        if counts.tp as usize == oracle_tp && pairing.pairs.len() == oracle_pairs {
            compared += 1;
            let oracle_counts = ConfusionCounts::new(
                oracle_tp as u64,
                (pred.len() - oracle_pairs) as u64,
                (gold.len() - oracle_tp) as u64,
            );
            let from_pairing = counts_for_pairing(&pairing, &pred, &gold, PIPELINE_TOLERANCE);
            if counts != oracle_counts || from_pairing != counts {
                bookkeeping_errors.push(format!("#{n}: {counts:?} vs oracle {oracle_counts:?}"));
            }
        }
    }
    for d in &discrepant {
        eprintln!("  nte oracle discrepancy {d}");
    }
    let rate = tp_agree as f64 / ORACLE_INSTANCES as f64;
    let detail = format!(
        "TP agreement {tp_agree}/{ORACLE_INSTANCES} ({:.1}%), bookkeeping checked on {compared}, \
         {} mismatches",
        rate * 100.0,
        bookkeeping_errors.len()
    );
    if rate >= ORACLE_MIN_AGREEMENT && bookkeeping_errors.is_empty() {
        pass(detail)
    } else {
        let mut why = Vec::new();
        if rate < ORACLE_MIN_AGREEMENT {
            why.push(format!(
                "below the {:.0}% bar: overlap-greedy pairing takes the larger overlap even when \
                 it fails the tolerance and a smaller one would pass (instances logged above)",
                ORACLE_MIN_AGREEMENT * 100.0
            ));
        }
        why.extend(bookkeeping_errors);
        fail(format!("{detail}; {}", why.join("; ")))
    }
}

fn random_spans(rng: &mut SeededRng, len: usize) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < len {
        if rng.below(3) == 0 {
            let end = (i + 1 + rng.below(3) as usize).min(len);
            spans.push(EntitySpan::new(random_type(rng), i, end, len).unwrap());
            i = end + 1;
        } else {
            i += 1;
        }
    }
    spans
}

/// A prediction derived from gold: kept, retyped, reshaped or dropped, plus spurious spans.
fn noisy_prediction(rng: &mut SeededRng, gold: &[EntitySpan], len: usize) -> Vec<EntitySpan> {
    let mut out: Vec<EntitySpan> = Vec::new();
    for g in gold {
        match rng.below(5) {
            0 => {}
            1 => out.push(EntitySpan { entity_type: random_type(rng), ..*g }),
            2 if g.len() > 1 => out.push(EntitySpan { token_end: g.token_end - 1, ..*g }),
            _ => out.push(*g),
        }
    }
    for s in random_spans(rng, len) {
        if out.iter().all(|o| !o.overlaps(&s)) && rng.below(4) == 0 {
            out.push(s);
        }
    }
    out.sort();
    out
}

fn nte_at_least_typed() -> Outcome {
    let mut rng = SeededRng::new(3);
    let mut violations = Vec::new();
    for n in 0..NTE_TYPED_CORPORA {
        let sentences = 1 + rng.below(8) as usize;
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for _ in 0..sentences {
            let len = 1 + rng.below(15) as usize;
            let g = random_spans(&mut rng, len);
            pred.push(noisy_prediction(&mut rng, &g, len));
            gold.push(g);
        }
        let report = evaluate_spans(&pred, &gold).unwrap();
        if report.nte.f1 < report.total.f1 {
            violations.push(format!("#{n}: NTE {} < typed {}", report.nte.f1, report.total.f1));
        }
    }
    if violations.is_empty() {
        pass(format!("{NTE_TYPED_CORPORA} corpora, NTE F1 >= typed F1 on all"))
    } else {
        fail(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn random_distribution(rng: &mut SeededRng) -> LabelDistribution {
    let mut probs = [0.0; Label::COUNT];
    // O mass spread across [0, 1] so every threshold step flips some tokens
    let p_o = rng.next_f64();
    let mut weights = [0.0; Label::COUNT - 1];
    for w in &mut weights {
        *w = if rng.below(3) == 0 { 0.0 } else { rng.next_f64() };
    }
    weights[rng.below(weights.len() as u64) as usize] += 0.01;
    let total: f64 = weights.iter().sum();
    probs[0] = p_o;
    for (i, w) in weights.iter().enumerate() {
        probs[i + 1] = (1.0 - p_o) * w / total;
    }
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    LabelDistribution::from_array(probs).unwrap()
}

fn threshold_monotonicity() -> Outcome {
    let mut rng = SeededRng::new(4);
    let steps = (1.0 / THRESHOLD_STEP).round() as usize;
    let thetas: Vec<f64> = (0..=steps).map(|i| i as f64 * THRESHOLD_STEP).collect();
    let mut violations = Vec::new();
    let mut max_ratio_error: f64 = 0.0;
    for n in 0..THRESHOLD_SENTENCES {
        let len = 1 + rng.below(20) as usize;
        let sentence: Vec<LabelDistribution> = (0..len).map(|_| random_distribution(&mut rng)).collect();
        let mut previous: Option<Vec<bool>> = None;
        for &theta in &thetas {
            let mut non_o = Vec::with_capacity(len);
            for d in &sentence {
                let out = apply_threshold(d, theta, ThresholdMode::Renormalize).unwrap();
                non_o.push(!out.argmax().is_outside());
                let before = d.as_array();
                let after = out.as_array();
                if before[0] < theta {
                    for a in 1..Label::COUNT {
                        for b in 1..Label::COUNT {
                            if before[a] > 0.0 && before[b] > 0.0 {
                                let err = (after[a] / after[b] - before[a] / before[b]).abs()
                                    / (before[a] / before[b]);
                                max_ratio_error = max_ratio_error.max(err);
                            }
                        }
                    }
                } else if before != after {
                    violations.push(format!("#{n}: token above threshold {theta} changed"));
                }
            }
            if let Some(prev) = &previous {
                if prev.iter().zip(&non_o).any(|(was, is)| *was && !*is) {
                    violations.push(format!("#{n}: non-O set shrank at theta {theta:.2}"));
                }
            }
            previous = Some(non_o);
        }
    }
    let detail = format!(
        "{THRESHOLD_SENTENCES} sentences x {} thresholds, max relative ratio error {max_ratio_error:.2e}",
        thetas.len()
    );
    if violations.is_empty() && max_ratio_error <= RATIO_TOLERANCE {
        pass(detail)
    } else {
        fail(format!("{detail}; {} violations {:?}", violations.len(), violations.first()))
    }
}

fn noise_audio(rng: &mut SeededRng, rate: u32, channels: u16, seconds: f64) -> AudioBuffer {
    let frames = (rate as f64 * seconds) as usize;
    let samples = (0..frames * channels as usize)
        .map(|_| (rng.below(65536) as i64 - 32768) as i16)
        .collect();
    AudioBuffer::new(rate, channels, samples).unwrap()
}

fn redaction_exactness() -> Outcome {
    let mut rng = SeededRng::new(5);
    let mut errors = Vec::new();
    let mut fixtures = 0;
    for rate in [8000u32, 16000] {
        for channels in [1u16, 2] {
            for round in 0..5 {
                fixtures += 1;
                let audio = noise_audio(&mut rng, rate, channels, 3.0);
                let entities: Vec<TimedEntity> = (0..1 + rng.below(5))
                    .map(|_| {
                        let s = uniform(&mut rng, 0.0, 2.5);
                        TimedEntity::new(EntityType::Person, iv(s, s + uniform(&mut rng, 0.01, 0.5)))
                    })
                    .collect();
                let pad = if round % 2 == 0 { 0.0 } else { uniform(&mut rng, 0.0, 0.1) };
                // independent frame mask: floor/ceil rounding of every padded entity
                let frames = audio.frames();
                let mut mask = vec![false; frames];
                for e in &entities {
                    let lo = ((e.interval.start() - pad).max(0.0) * rate as f64).floor() as usize;
                    let hi = (((e.interval.end() + pad) * rate as f64).ceil() as usize).min(frames);
                    for m in &mut mask[lo.min(frames)..hi] {
                        *m = true;
                    }
                }
                let tone = Fill::DEFAULT_TONE;
                for fill in [Fill::Silence, tone] {
                    let plan = build_plan(&entities, pad, fill).unwrap();
                    let out = redact(&audio, &plan).unwrap();
                    for f in 0..frames {
                        let expected_fill = match fill {
                            Fill::Tone { freq, amplitude } => {
                                let t = f as f64 / rate as f64;
                                (amplitude * i16::MAX as f64 * (2.0 * PI * freq * t).sin()).round() as i16
                            }
                            _ => 0,
                        };
                        for c in 0..channels as usize {
                            let i = f * channels as usize + c;
                            let want = if mask[f] { expected_fill } else { audio.samples[i] };
                            if out.samples[i] != want {
                                errors.push(format!("{rate} Hz x{channels} {fill:?} frame {f}"));
                            }
                        }
                    }
                    if matches!(fill, Fill::Silence) && redact(&out, &plan).unwrap() != out {
                        errors.push(format!("{rate} Hz x{channels}: silence not idempotent"));
                    }
                }
            }
        }
    }
    let detail = format!("{fixtures} fixtures (8/16 kHz, mono/stereo), silence and tone fills");
    if errors.is_empty() {
        pass(detail)
    } else {
        fail(format!("{detail}; {} mismatches, first: {}", errors.len(), errors[0]))
    }
}

const WORDS: &[&str] = &[
    "bonjour", "Lyon", "l'euro", "a b", "\"cité\"", "Ω", "1,5", "Jean-Luc", "là", "x",
];

fn random_textgrid(rng: &mut SeededRng) -> TextGridDocument {
    let xmax = uniform(rng, 1.0, 20.0);
    let tiers = (0..1 + rng.below(3))
        .map(|k| {
            let mut t = uniform(rng, 0.0, 0.5);
            let mut entries = Vec::new();
            while t < xmax - 0.2 {
                let end = (t + uniform(rng, 0.01, 0.6)).min(xmax);
                let word = WORDS[rng.below(WORDS.len() as u64) as usize];
                entries.push(WordAlignment::new(word, iv(t, end)).unwrap());
                // sometimes contiguous, sometimes a pause
                t = if rng.below(2) == 0 { end } else { end + uniform(rng, 0.0, 0.3) };
            }
            Tier {
                name: format!("tier {k}"),
                entries,
            }
        })
        .collect();
    TextGridDocument { xmin: 0.0, xmax, tiers }
}

fn textgrid_close(a: &TextGridDocument, b: &TextGridDocument) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= TEXTGRID_TIME_TOLERANCE;
    close(a.xmin, b.xmin)
        && close(a.xmax, b.xmax)
        && a.tiers.len() == b.tiers.len()
        && a.tiers.iter().zip(&b.tiers).all(|(s, t)| {
            s.name == t.name
                && s.entries.len() == t.entries.len()
                && s.entries.iter().zip(&t.entries).all(|(x, y)| {
                    x.word == y.word
                        && close(x.interval.start(), y.interval.start())
                        && close(x.interval.end(), y.interval.end())
                })
        })
}

fn format_round_trips() -> Outcome {
    let mut rng = SeededRng::new(6);
    let mut errors = Vec::new();

    for n in 0..ROUND_TRIP_FIXTURES {
        let doc = random_textgrid(&mut rng);
        let first = parse_textgrid(&write_textgrid(&doc)).unwrap();
        let second = parse_textgrid(&write_textgrid(&first)).unwrap();
        if !textgrid_close(&doc, &first) || !textgrid_close(&first, &second) {
            errors.push(format!("textgrid #{n}"));
        }
    }

    for n in 0..ROUND_TRIP_FIXTURES {
        let rate = [8000, 16000, 22050, 44100][n % 4];
        let channels = 1 + (n / 4 % 2) as u16;
        let seconds = [0.0, 0.01, 0.5, 1.3][n / 8 % 3 + (n % 2)];
        let audio = noise_audio(&mut rng, rate, channels, seconds);
        let mut bytes = write_wav(&audio);
        if n % 3 == 0 {
            // an extra chunk before the data must not disturb the payload
            let mut with_list = bytes[..36].to_vec();
            with_list.extend_from_slice(b"LIST\x05\x00\x00\x00INFOx\x00");
            with_list.extend_from_slice(&bytes[36..]);
            let riff = (with_list.len() - 8) as u32;
            with_list[4..8].copy_from_slice(&riff.to_le_bytes());
            bytes = with_list;
        }
        let payload_in = &bytes[bytes.len() - audio.samples.len() * 2..];
        let rewritten = write_wav(&read_wav(&bytes).unwrap());
        let payload_out = &rewritten[44..];
        if payload_in != payload_out || read_wav(&rewritten).unwrap() != audio {
            errors.push(format!("wav #{n}"));
        }
    }

    for n in 0..ROUND_TRIP_FIXTURES {
        let sentences: Vec<ConllSentence> = (0..1 + rng.below(5))
            .map(|_| {
                let len = 1 + rng.below(12) as usize;
                let tokens = (0..len)
                    .map(|_| WORDS[rng.below(WORDS.len() as u64) as usize].to_string())
                    .collect();
                ConllSentence {
                    tokens,
                    labels: encode_bio(&random_spans(&mut rng, len), len),
                }
            })
            .collect();
        let parsed = parse_conll(&write_conll(&sentences), &ConllOptions::default()).unwrap();
        if parsed != sentences {
            errors.push(format!("conll #{n}"));
        }
    }

    let detail = format!("{ROUND_TRIP_FIXTURES} fixtures each for TextGrid, WAV and CoNLL");
    if errors.is_empty() {
        pass(detail)
    } else {
        fail(format!("{detail}; failed: {}", errors.join(", ")))
    }
}

fn deid(args: &[&str], cwd: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_deid"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("deid {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn nte_row(json: &str) -> Result<(f64, f64, f64), String> {
    let v: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let row = &v["nte"];
    let get = |k: &str| row[k].as_f64().ok_or_else(|| format!("missing nte.{k}"));
    Ok((get("precision")?, get("recall")?, get("f1")?))
}

fn end_to_end() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let t = PIPELINE_TOLERANCE.to_string();
    deid(&["demo", "--out", "."], dir)?;
    deid(
        &["tag", "--input", "transcript.txt", "--backend", "gazetteer:lexicon.tsv",
          "--entities-out", "tagged.json"],
        dir,
    )?;
    let summary = deid(
        &["redact", "--wav", "demo.wav", "--textgrid", "demo.TextGrid", "--entities",
          "tagged.json", "--out", "redacted.wav", "--timed-out", "timed.json"],
        dir,
    )?;

    let mut report = Vec::new();
    let perfect = |name: &str, pred: &str| -> Result<String, String> {
        let json = deid(
            &["eval", "pipeline", "--pred", pred, "--gold", "gold_entities.json", "-t", &t, "--json"],
            dir,
        )?;
        let (p, r, f) = nte_row(&json)?;
        if (p, r, f) != (1.0, 1.0, 1.0) {
            return Err(format!("{name}: NTE P={p} R={r} F1={f}, want 1"));
        }
        Ok(format!("{name} P=R=F1=1"))
    };
    report.push(perfect("tagged", "timed.json")?);
    report.push(perfect("copied gold", "gold_entities.json")?);

    // shift one multi-word entity by 0.3 s: still paired, now outside the outer tolerance
    let gold_bytes = std::fs::read(dir.join("gold_entities.json")).map_err(|e| e.to_string())?;
    let mut gold = parse_entities_json(&gold_bytes).map_err(|e| e.to_string())?;
    let n = gold[0].entities.len();
    let EntityRecord::Timed(target) = gold[0].entities[2] else {
        return Err("gold entity is not timed".into());
    };
    let shifted = iv(
        target.interval.start() + PERTURBATION_S,
        target.interval.end() + PERTURBATION_S,
    );
    gold[0].entities[2] = EntityRecord::Timed(TimedEntity::new(target.entity_type, shifted));
    std::fs::write(dir.join("perturbed.json"), write_entities_json(&gold)).map_err(|e| e.to_string())?;
    let json = deid(
        &["eval", "pipeline", "--pred", "perturbed.json", "--gold", "gold_entities.json", "-t", &t, "--json"],
        dir,
    )?;
    let (p, r, f) = nte_row(&json)?;
    let (want_r, want_f) = ((n - 1) as f64 / n as f64, 2.0 * (n - 1) as f64 / (2 * n - 1) as f64);
    if p != 1.0 || (r - want_r).abs() > 1e-12 || (f - want_f).abs() > 1e-12 {
        return Err(format!("perturbed: P={p} R={r} F1={f}, want 1, {want_r}, {want_f}"));
    }
    report.push(format!("perturbed P=1 R={r:.4} F1={f:.4}"));

    // redacted audio differs from the input only inside the entity intervals
    let original = read_wav(&std::fs::read(dir.join("demo.wav")).unwrap()).unwrap();
    let redacted = read_wav(&std::fs::read(dir.join("redacted.wav")).unwrap()).unwrap();
    let timed = parse_entities_json(&std::fs::read(dir.join("timed.json")).unwrap()).unwrap();
    let rate = original.sample_rate as f64;
    for (f, (a, b)) in original.samples.iter().zip(&redacted.samples).enumerate() {
        let inside = timed[0].entities.iter().any(|e| match e {
            EntityRecord::Timed(t) => {
                f >= (t.interval.start() * rate).floor() as usize
                    && f < (t.interval.end() * rate).ceil() as usize
            }
            EntityRecord::Tokens(_) => false,
        });
        if (inside && *b != 0) || (!inside && a != b) {
            return Err(format!("redacted audio wrong at frame {f}"));
        }
    }
    report.push(summary.trim().to_string());
    Ok(report.join("; "))
}

fn end_to_end_smoke() -> Outcome {
    match end_to_end() {
        Ok(detail) => pass(detail),
        Err(e) => fail(e),
    }
}

fn fa_fixture() -> Outcome {
    // (start offset, end offset) applied to gold word i = [i, i + 0.5]; None is the sentinel
    let perturbations: [Option<(f64, f64)>; 10] = [
        Some((0.0, 0.0)),
        Some((0.005, -0.005)),
        Some((-0.05, 0.05)),
        Some((0.05, -0.05)),
        Some((-0.2, 0.2)),
        Some((0.2, 0.0)),
        Some((0.0, -0.15)),
        Some((-0.3, 0.3)),
        Some((0.3, 0.3)),
        None,
    ];
    // analytically: which words pass at each tolerance
    let expected = [
        (0.01, 0.2, 0.5),
        (0.10, 0.4, 0.6),
        (0.25, 0.7, 0.8),
    ];
    let mut gold = AlignedCorpus::new();
    let mut pred = AlignedCorpus::new();
    for (i, p) in perturbations.iter().enumerate() {
        let id = if i < 5 { "u1" } else { "u2" };
        let g = iv(i as f64, i as f64 + 0.5);
        let pi = match p {
            Some((ds, de)) => iv(g.start() + ds, g.end() + de),
            None => TimeInterval::ZERO,
        };
        gold.entry(id.to_string()).or_default().push(WordAlignment::new(format!("w{i}"), g).unwrap());
        pred.entry(id.to_string()).or_default().push(WordAlignment::new(format!("w{i}"), pi).unwrap());
    }
    let mut details = Vec::new();
    let mut ok = true;
    for (t, want_std, want_outer) in expected {
        let std = fa_accuracy(&pred, &gold, t, DeltaMode::Std).unwrap();
        let outer = fa_accuracy(&pred, &gold, t, DeltaMode::Outer).unwrap();
        ok &= (std - want_std).abs() <= FA_FIXTURE_TOLERANCE;
        ok &= (outer - want_outer).abs() <= FA_FIXTURE_TOLERANCE;
        ok &= outer >= std;
        details.push(format!("t={t}: std {std:.2} outer {outer:.2}"));
    }
    if ok {
        pass(details.join("; "))
    } else {
        fail(format!("{} (want 0.2/0.5, 0.4/0.6, 0.7/0.8)", details.join("; ")))
    }
}

fn main() {
    // the harness passes its own flags (e.g. --nocapture); they do not apply here
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("f1 identities", f1_identities),
        ("delta dominance and monotonicity", delta_dominance_monotonicity),
        ("nte oracle equivalence", nte_oracle_equivalence),
        ("nte >= typed", nte_at_least_typed),
        ("threshold monotonicity", threshold_monotonicity),
        ("redaction exactness", redaction_exactness),
        ("format round-trips", format_round_trips),
        ("end-to-end smoke", end_to_end_smoke),
        ("fa_accuracy fixture", fa_fixture),
    ];
    let mut failed = 0;
    let mut summary = BTreeMap::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1000.0;
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{status} {name} ({ms:.0} ms): {}", outcome.detail);
        if !outcome.passed {
            failed += 1;
        }
        summary.insert(name, outcome.passed);
    }
    println!("acceptance: {} passed, {failed} failed", summary.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
