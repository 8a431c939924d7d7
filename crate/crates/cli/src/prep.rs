use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use deid::corpus_prep::{make_folds, parse_standoff, prepare_article, PrepError, RemapTable};
use deid::formats::{write_conll, ConllSentence};
use serde::Serialize;

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct PrepArgs {
    /// Directory of articles: `<name>.txt` with a brat standoff `<name>.ann` beside it.
    #[arg(long)]
    input: PathBuf,
    /// Remap rules added to (and overriding) the built-in ones.
    #[arg(long)]
    remap: Option<PathBuf>,
    /// Number of folds.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for `fold_XX.conll` and `manifest.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    folds: usize,
    sentences: usize,
    articles: Vec<String>,
    fold_files: Vec<FoldEntry>,
}

#[derive(Serialize)]
struct FoldEntry {
    file: String,
    members: Vec<Member>,
}

#[derive(Serialize, Clone)]
struct Member {
    article: String,
    sentence: usize,
}

pub fn run(args: PrepArgs) -> Result<()> {
    let mut table = RemapTable::default_rules();
    if let Some(path) = &args.remap {
        let text = read_text(path)?;
        table.extend(RemapTable::parse(&text).with_context(|| path.display().to_string())?);
    }

    let articles = list_articles(&args.input)?;
    if articles.is_empty() {
        bail!("no .txt articles in {}", args.input.display());
    }
    let mut pooled: Vec<(Member, ConllSentence)> = Vec::new();
    let mut unmapped: BTreeSet<String> = BTreeSet::new();
    for (name, txt, ann) in &articles {
        let text = read_text(txt)?;
        let ann_text = read_text(ann)?;
        let entities = parse_standoff(&ann_text).with_context(|| ann.display().to_string())?;
        match prepare_article(&text, &entities, &table) {
            Ok(sentences) => {
                pooled.extend(sentences.into_iter().enumerate().map(|(i, s)| {
                    let m = Member {
                        article: name.clone(),
                        sentence: i,
                    };
                    (m, s)
                }));
            }
            // keep going so every unmapped label in the corpus is reported at once
            Err(PrepError::UnmappedLabels(labels)) => unmapped.extend(labels),
            Err(e) => return Err(e).with_context(|| txt.display().to_string()),
        }
    }
    if !unmapped.is_empty() {
        let labels: Vec<String> = unmapped.into_iter().collect();
        return Err(PrepError::UnmappedLabels(labels).into());
    }

    let k = args.folds as usize;
    let folds = make_folds(pooled.len(), k, args.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut fold_files = Vec::with_capacity(k);
    for (fi, fold) in folds.iter().enumerate() {
        let file = format!("fold_{:02}.conll", fi + 1);
        let sentences: Vec<ConllSentence> = fold.iter().map(|&i| pooled[i].1.clone()).collect();
        write_file(&args.out.join(&file), &write_conll(&sentences))?;
        fold_files.push(FoldEntry {
            file,
            members: fold.iter().map(|&i| pooled[i].0.clone()).collect(),
        });
    }
    let manifest = Manifest {
        seed: args.seed,
        folds: k,
        sentences: pooled.len(),
        articles: articles.iter().map(|(n, _, _)| n.clone()).collect(),
        fold_files,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_file(&args.out.join("manifest.json"), &json)?;
    log::info!(
        "{} sentences from {} articles into {k} folds",
        pooled.len(),
        articles.len()
    );
    Ok(())
}

/// `(name, txt path, ann path)` sorted by name.
fn list_articles(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let ann = path.with_extension("ann");
        if !ann.is_file() {
            bail!("{} has no annotation file {}", path.display(), ann.display());
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push((name, path, ann));
    }
    out.sort();
    Ok(out)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
