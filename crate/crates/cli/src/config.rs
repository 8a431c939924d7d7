//! Config-file presets.
//!
//! The file is TOML with one table per subcommand (`[eval.fa]` for the eval subcommands).
//! Keys are flag names without the leading dashes; `_` and `-` are interchangeable.
//!
//! ```toml
//! [tag]
//! backend = "gazetteer:lexicon.tsv"
//! theta = 0.9
//!
//! [redact]
//! fill = "tone"
//! pad = 0.05
//! skip_mismatched = true
//!
//! [eval.fa]
//! sweep = [0.01, 0.10, 0.25]
//! ```
//!
//! Presets are spliced in right after the subcommand name. A preset is dropped when the same
//! flag is on the command line, so the typed value wins and an invalid preset cannot fail a
//! command that overrides it. `true` adds a switch, `false` omits it, arrays become
//! comma-separated values.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use toml::{Table, Value};

/// Removes `--config FILE` from `args` and splices in the presets for the chosen subcommand.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = take_config_flag(&mut args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let table: Table = text
        .parse()
        .with_context(|| format!("parsing config {}", path.display()))?;

    let positions = subcommand_positions(&args);
    let Some(&last) = positions.last() else {
        return Ok(args);
    };
    let names: Vec<String> = positions
        .iter()
        .map(|&i| args[i].to_string_lossy().into_owned())
        .collect();
    let typed = typed_flags(&args[last + 1..]);
    let presets = presets_for(&table, &names, &typed)?;
    args.splice(last + 1..last + 1, presets);
    Ok(args)
}

fn take_config_flag(args: &mut Vec<OsString>) -> Result<Option<std::path::PathBuf>> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            let Some(value) = args.get(i + 1).cloned() else {
                bail!("--config requires a file argument");
            };
            found = Some(Path::new(&value).to_path_buf());
            args.drain(i..i + 2);
            continue;
        }
        if let Some(value) = arg.strip_prefix("--config=") {
            found = Some(Path::new(value).to_path_buf());
            args.remove(i);
            continue;
        }
        i += 1;
    }
    Ok(found)
}

/// Indices of the subcommand name and, for `eval`, the nested subcommand name.
fn subcommand_positions(args: &[OsString]) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, a) in args.iter().enumerate().skip(1) {
        let a = a.to_string_lossy();
        if a.starts_with('-') {
            continue;
        }
        out.push(i);
        if out.len() == 2 || a != "eval" {
            break;
        }
    }
    out
}

/// Short flags that have a long name.
const SHORT_FLAGS: &[(&str, &str)] = &[("-t", "tolerance"), ("-v", "verbose")];

/// Long names of the flags present in `args`.
fn typed_flags(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    for a in args {
        let a = a.to_string_lossy();
        if a == "--" {
            break;
        }
        if let Some(long) = a.strip_prefix("--") {
            let name = long.split('=').next().unwrap_or_default();
            out.push(name.replace('_', "-"));
        } else if let Some((_, long)) = SHORT_FLAGS.iter().find(|(s, _)| a.starts_with(s)) {
            out.push(long.to_string());
        }
    }
    out
}

fn presets_for(table: &Table, names: &[String], typed: &[String]) -> Result<Vec<OsString>> {
    let mut section = table;
    for name in names {
        match section.get(name) {
            Some(Value::Table(t)) => section = t,
            Some(_) => bail!("config key {name:?} must be a table"),
            None => return Ok(Vec::new()),
        }
    }
    let mut out = Vec::new();
    for (key, value) in section {
        if matches!(value, Value::Table(_)) {
            continue;
        }
        let name = key.replace('_', "-");
        if typed.contains(&name) {
            continue;
        }
        let flag = format!("--{name}");
        match value {
            Value::Boolean(true) => out.push(flag.into()),
            Value::Boolean(false) => {}
            other => {
                out.push(flag.into());
                out.push(scalar_text(other, key)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar_text(value: &Value, key: &str) -> Result<String> {
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| scalar_text(v, key))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("config key {key:?}: unsupported value {value}"),
    })
}
