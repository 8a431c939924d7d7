//! A small self-contained corpus for trying the pipeline end to end: one ~10 s synthetic
//! recording with its word alignment, transcript, lexicon and gold entities, plus a few
//! annotated articles for `deid prep`.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use deid::formats::{
    write_entities_json, write_textgrid, write_wav, AudioBuffer, EntityRecord, TextGridDocument,
    Tier, UtteranceEntities,
};
use deid::{EntityType, TimeInterval, TimedEntity, WordAlignment};

use crate::prep::write_file;

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct DemoArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

pub const UTTERANCE_ID: &str = "demo";
const SAMPLE_RATE: u32 = 8000;
const DURATION_S: f64 = 10.0;

const TRANSCRIPT: &str = "Le club de la Lazio a rendu hommage à Mussolini hier soir. \
Jean Dupont habite à Sochaux mais travaille à Lyon chez Renault. Le billet coûte 12 euros.";

/// Gold entities as `(type, first word, one past the last word)` over the aligned words.
const GOLD: &[(EntityType, usize, usize)] = &[
    (EntityType::Organization, 4, 5),
    (EntityType::Person, 9, 10),
    (EntityType::Person, 12, 14),
    (EntityType::Location, 16, 17),
    (EntityType::Location, 20, 21),
    (EntityType::Organization, 22, 23),
    (EntityType::MoneyAmount, 26, 28),
];

const LEXICON: &str = "# demo lexicon: CODE<TAB>surface form
ORG\tLazio
ORG\tRenault
PER\tMussolini
PER\tJean Dupont
LOC\tSochaux
LOC\tLyon
LOC\tRome
CUR\teuro
CUR\teuros
CUR\tdollars
";

const CONFIG: &str = "# presets for `deid --config deid.toml <command>`; flags override them
[tag]
backend = \"gazetteer:lexicon.tsv\"
theta = 0.9

[redact]
tier = \"words\"
fill = \"silence\"

[eval.pipeline]
tolerance = 0.25
";

/// `(name, text, [(label, annotated surface)])`; annotations are located in text order.
const ARTICLES: &[(&str, &str, &[(&str, &str)])] = &[
    (
        "a01",
        "Le président de la Lazio a rencontré M. Jean Dupont à Rome. Le club a versé \
3 millions d'euros à la société Renault. Les supporters de Sochaux étaient présents. \
L'Union européenne a salué l'accord. La réunion s'est tenue à Lyon. Le contrat court \
jusqu'en 2025.\n",
        &[
            ("associations", "Lazio"),
            ("persons", "Jean Dupont"),
            ("cities", "Rome"),
            ("money_amounts", "3 millions d'euros"),
            ("companies", "Renault"),
            ("cities", "Sochaux"),
            ("geopolitical_entities", "Union européenne"),
            ("cities", "Lyon"),
        ],
    ),
    (
        "a02",
        "Marie Curie est née à Varsovie. Elle a travaillé à Paris avec Pierre Curie. \
Le CNRS finance ses recherches. Son salaire était de 500 francs par mois. \
Le journal Le Monde a publié son portrait. La Pologne honore sa mémoire.\n",
        &[
            ("persons", "Marie Curie"),
            ("cities", "Varsovie"),
            ("cities", "Paris"),
            ("persons", "Pierre Curie"),
            ("agents", "CNRS"),
            ("money_amounts", "500 francs"),
            ("medias", "Monde"),
            ("countries", "Pologne"),
        ],
    ),
    (
        "a03",
        "La Banque de France a relevé ses taux. Le gouverneur François Villeroy de Galhau \
s'est exprimé à Paris. Le dollar a reculé face à l'euro. Les actionnaires de Renault \
attendent la suite. L'Italie observe la situation.\n",
        &[
            ("companies", "Banque de France"),
            ("persons", "François Villeroy de Galhau"),
            ("cities", "Paris"),
            ("currencies", "dollar"),
            ("currencies", "euro"),
            ("companies", "Renault"),
            ("countries", "Italie"),
        ],
    ),
];

/// Aligned words: lowercase, no punctuation, as forced aligners emit them.
pub fn words() -> Vec<WordAlignment> {
    TRANSCRIPT
        .split_whitespace()
        .map(|w| w.trim_end_matches('.').to_lowercase())
        .enumerate()
        .map(|(i, w)| {
            let start = (250 + 340 * i) as f64 / 1000.0;
            let end = (550 + 340 * i) as f64 / 1000.0;
            WordAlignment::new(w, TimeInterval::new(start, end).expect("ordered")).expect("word")
        })
        .collect()
}

pub fn gold_entities(words: &[WordAlignment]) -> Vec<TimedEntity> {
    GOLD.iter()
        .map(|&(t, first, last)| {
            TimedEntity::new(t, words[first].interval.hull(&words[last - 1].interval))
        })
        .collect()
}

/// A tone burst per word with short ramps; silence between words.
fn synth(words: &[WordAlignment]) -> AudioBuffer {
    let frames = (DURATION_S * SAMPLE_RATE as f64) as usize;
    let mut samples = vec![0i16; frames];
    let rate = SAMPLE_RATE as f64;
    let ramp = 0.01 * rate;
    for (i, w) in words.iter().enumerate() {
        let lo = (w.interval.start() * rate).round() as usize;
        let hi = ((w.interval.end() * rate).round() as usize).min(frames);
        let freq = 220.0 + 30.0 * (i % 7) as f64;
        for (n, s) in samples[lo..hi].iter_mut().enumerate() {
            let from_edge = n.min(hi - lo - 1 - n) as f64;
            let env = (from_edge / ramp).min(1.0);
            let v = 0.25 * env * (2.0 * PI * freq * n as f64 / rate).sin();
            *s = (v * i16::MAX as f64).round() as i16;
        }
    }
    AudioBuffer::new(SAMPLE_RATE, 1, samples).expect("valid buffer")
}

/// Brat standoff lines with character offsets.
fn standoff(text: &str, annotations: &[(&str, &str)]) -> String {
    let mut out = String::new();
    let mut from = 0;
    for (n, (label, surface)) in annotations.iter().enumerate() {
        let byte = from + text[from..].find(surface).expect("annotation present in text");
        let start = text[..byte].chars().count();
        let end = start + surface.chars().count();
        out.push_str(&format!("T{}\t{label} {start} {end}\t{surface}\n", n + 1));
        from = byte + surface.len();
    }
    out
}

pub fn run(args: DemoArgs) -> Result<()> {
    let out = &args.out;
    let words = words();
    let doc = TextGridDocument {
        xmin: 0.0,
        xmax: DURATION_S,
        tiers: vec![Tier {
            name: "words".into(),
            entries: words.clone(),
        }],
    };
    let gold = vec![UtteranceEntities {
        id: UTTERANCE_ID.into(),
        tokens: None,
        entities: gold_entities(&words)
            .into_iter()
            .map(EntityRecord::Timed)
            .collect(),
    }];
    write_file(&out.join("demo.wav"), &write_wav(&synth(&words)))?;
    write_file(&out.join("demo.TextGrid"), &write_textgrid(&doc))?;
    write_file(
        &out.join("transcript.txt"),
        format!("{UTTERANCE_ID}\t{TRANSCRIPT}\n").as_bytes(),
    )?;
    write_file(&out.join("lexicon.tsv"), LEXICON.as_bytes())?;
    write_file(&out.join("gold_entities.json"), &write_entities_json(&gold))?;
    write_file(&out.join("deid.toml"), CONFIG.as_bytes())?;
    for (name, text, annotations) in ARTICLES {
        let dir = out.join("articles");
        write_file(&dir.join(format!("{name}.txt")), text.as_bytes())?;
        write_file(&dir.join(format!("{name}.ann")), standoff(text, annotations).as_bytes())?;
    }
    log::info!("demo corpus written to {}", out.display());
    Ok(())
}
