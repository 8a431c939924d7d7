//! Praat TextGrid reading (long and short text forms) and writing (long form).
//!
//! Both text forms carry the same sequence of values; the long form only adds `key =` labels
//! and `[n]` indices around them. The reader therefore lexes the file into a flat stream of
//! strings, numbers and `<flags>`, skipping labels, indices and `!` comments, and reads the
//! values in order.

use std::fmt::Write as _;

use crate::types::{TimeInterval, WordAlignment};

use super::FormatError;

/// Slack allowed when checking interval boundaries against each other and the grid bounds.
const BOUNDARY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Tier {
    pub name: String,
    pub entries: Vec<WordAlignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGridDocument {
    pub xmin: f64,
    pub xmax: f64,
    pub tiers: Vec<Tier>,
}

impl TextGridDocument {
    pub fn tier(&self, name: &str) -> Option<&Tier> {
        self.tiers.iter().find(|t| t.name == name)
    }

    pub fn tier_names(&self) -> Vec<&str> {
        self.tiers.iter().map(|t| t.name.as_str()).collect()
    }

    /// Checks bounds, ordering and tier-name uniqueness.
    pub fn validate(&self) -> Result<(), FormatError> {
        if !(self.xmin <= self.xmax) {
            return Err(FormatError::invalid(format!(
                "xmin {} > xmax {}",
                self.xmin, self.xmax
            )));
        }
        for (i, tier) in self.tiers.iter().enumerate() {
            if self.tiers[..i].iter().any(|t| t.name == tier.name) {
                return Err(FormatError::invalid(format!(
                    "duplicate tier name {:?}",
                    tier.name
                )));
            }
            let mut prev_end = self.xmin;
            for e in &tier.entries {
                let iv = e.interval;
                if iv.start() < prev_end - BOUNDARY_EPSILON
                    || iv.end() > self.xmax + BOUNDARY_EPSILON
                {
                    return Err(FormatError::invalid(format!(
                        "tier {:?}: interval {:?} ({}, {}) out of order or out of bounds",
                        tier.name,
                        e.word,
                        iv.start(),
                        iv.end()
                    )));
                }
                prev_end = iv.end();
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Num(f64),
    Flag(String),
}

#[derive(Debug)]
struct Token {
    value: Value,
    line: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, FormatError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() || c == '=' || c == ':' => i += 1,
            '!' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '[' => {
                while i < chars.len() && chars[i] != ']' {
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                i += 1;
            }
            '"' => {
                let start_line = line;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(FormatError::parse(start_line, "unterminated string"))
                        }
                        Some('"') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                tokens.push(Token {
                    value: Value::Str(s),
                    line: start_line,
                });
            }
            '<' => {
                let start = i + 1;
                while i < chars.len() && chars[i] != '>' && chars[i] != '\n' {
                    i += 1;
                }
                if chars.get(i) != Some(&'>') {
                    return Err(FormatError::parse(line, "unterminated <flag>"));
                }
                let flag: String = chars[start..i].iter().collect();
                i += 1;
                tokens.push(Token {
                    value: Value::Flag(flag),
                    line,
                });
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let num = word
                    .parse::<f64>()
                    .map_err(|_| FormatError::parse(line, format!("bad number {word:?}")))?;
                tokens.push(Token {
                    value: Value::Num(num),
                    line,
                });
            }
            _ => {
                // label such as `xmin`, `tiers?`, `intervals`
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '=' | ':' | '[' | '"')
                {
                    i += 1;
                }
            }
        }
    }
    Ok(tokens)
}

struct Reader {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Reader {
    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.line)
            .unwrap_or(self.last_line)
    }

    fn next(&mut self, what: &str) -> Result<&Token, FormatError> {
        match self.tokens.get(self.pos) {
            Some(_) => {
                self.pos += 1;
                Ok(&self.tokens[self.pos - 1])
            }
            None => Err(FormatError::parse(
                self.last_line,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn string(&mut self, what: &str) -> Result<(String, usize), FormatError> {
        let tok = self.next(what)?;
        match &tok.value {
            Value::Str(s) => Ok((s.clone(), tok.line)),
            other => Err(FormatError::parse(
                tok.line,
                format!("expected {what} (a string), found {other:?}"),
            )),
        }
    }

    fn number(&mut self, what: &str) -> Result<(f64, usize), FormatError> {
        let tok = self.next(what)?;
        match tok.value {
            Value::Num(n) => Ok((n, tok.line)),
            ref other => Err(FormatError::parse(
                tok.line,
                format!("expected {what} (a number), found {other:?}"),
            )),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, FormatError> {
        let (n, line) = self.number(what)?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(FormatError::parse(line, format!("{what} must be a count, got {n}")));
        }
        Ok(n as usize)
    }
}

fn decode_text(bytes: &[u8]) -> Result<String, FormatError> {
    let utf16 = |data: &[u8], le: bool| -> Result<String, FormatError> {
        if data.len() % 2 != 0 {
            return Err(FormatError::Encoding("odd byte count in UTF-16 input".into()));
        }
        let units: Vec<u16> = data
            .chunks_exact(2)
            .map(|c| {
                if le {
                    u16::from_le_bytes([c[0], c[1]])
                } else {
                    u16::from_be_bytes([c[0], c[1]])
                }
            })
            .collect();
        String::from_utf16(&units).map_err(|e| FormatError::Encoding(e.to_string()))
    };
    match bytes {
        [0xFF, 0xFE, rest @ ..] => utf16(rest, true),
        [0xFE, 0xFF, rest @ ..] => utf16(rest, false),
        [0xEF, 0xBB, 0xBF, rest @ ..] => {
            String::from_utf8(rest.to_vec()).map_err(|e| FormatError::Encoding(e.to_string()))
        }
        _ => String::from_utf8(bytes.to_vec()).map_err(|e| FormatError::Encoding(e.to_string())),
    }
}

/// Parses a TextGrid in long or short text form.
///
/// Only interval tiers are accepted. Intervals whose label is blank are silence markers and are
/// dropped from the returned entries.
pub fn parse_textgrid(bytes: &[u8]) -> Result<TextGridDocument, FormatError> {
    let text = decode_text(bytes)?;
    let tokens = lex(&text)?;
    let last_line = text.lines().count().max(1);
    let mut r = Reader {
        tokens,
        pos: 0,
        last_line,
    };

    let (file_type, line) = r
        .string("File type")
        .map_err(|_| FormatError::parse(1, "missing `File type = \"ooTextFile\"` header"))?;
    if file_type != "ooTextFile" && file_type != "ooTextFile short" {
        return Err(FormatError::parse(
            line,
            format!("unsupported file type {file_type:?}, expected \"ooTextFile\""),
        ));
    }
    let (class, line) = r.string("Object class")?;
    if class != "TextGrid" {
        return Err(FormatError::parse(
            line,
            format!("object class {class:?} is not \"TextGrid\""),
        ));
    }
    let (xmin, _) = r.number("xmin")?;
    let (xmax, line) = r.number("xmax")?;
    if xmin > xmax {
        return Err(FormatError::parse(line, format!("xmin {xmin} > xmax {xmax}")));
    }

    let tier_count = match r.tokens.get(r.pos).map(|t| &t.value) {
        Some(Value::Flag(f)) if f == "exists" => {
            r.pos += 1;
            r.count("tier count")?
        }
        Some(Value::Flag(f)) if f == "absent" => {
            r.pos += 1;
            0
        }
        None => 0,
        Some(_) => {
            return Err(FormatError::parse(
                r.line(),
                "expected <exists> or <absent> after grid bounds",
            ))
        }
    };

    let mut tiers: Vec<Tier> = Vec::with_capacity(tier_count);
    for tier_no in 1..=tier_count {
        let (class, class_line) = r
            .string("tier class")
            .map_err(|e| tier_count_error(e, tier_no, tier_count))?;
        let (name, name_line) = r.string("tier name")?;
        let _tier_xmin = r.number("tier xmin")?;
        let _tier_xmax = r.number("tier xmax")?;
        match class.as_str() {
            "IntervalTier" => {}
            "TextTier" => {
                return Err(FormatError::parse(
                    class_line,
                    format!("point tier {name:?} is not supported"),
                ))
            }
            other => {
                return Err(FormatError::parse(
                    class_line,
                    format!("unknown tier class {other:?}"),
                ))
            }
        }
        if tiers.iter().any(|t| t.name == name) {
            return Err(FormatError::parse(
                name_line,
                format!("duplicate tier name {name:?}"),
            ));
        }
        let n = r.count("interval count")?;
        let mut entries = Vec::new();
        let mut prev_end = xmin;
        for _ in 0..n {
            let (start, line) = r.number("interval xmin")?;
            let (end, _) = r.number("interval xmax")?;
            let (label, _) = r.string("interval text")?;
            if end < start
                || start < prev_end - BOUNDARY_EPSILON
                || start < xmin - BOUNDARY_EPSILON
                || end > xmax + BOUNDARY_EPSILON
            {
                return Err(FormatError::parse(
                    line,
                    format!(
                        "non-monotone interval ({start}, {end}) in tier {name:?} after {prev_end}"
                    ),
                ));
            }
            prev_end = end;
            if label.trim().is_empty() {
                continue;
            }
            let interval = TimeInterval::new(start.max(0.0), end.max(0.0))
                .map_err(|e| FormatError::parse(line, e.to_string()))?;
            entries.push(WordAlignment { word: label, interval });
        }
        tiers.push(Tier { name, entries });
    }
    if let Some(tok) = r.tokens.get(r.pos) {
        return Err(FormatError::parse(
            tok.line,
            format!("trailing data after {tier_count} tier(s); tier count mismatch?"),
        ));
    }
    Ok(TextGridDocument { xmin, xmax, tiers })
}

fn tier_count_error(e: FormatError, tier_no: usize, declared: usize) -> FormatError {
    match e {
        FormatError::Parse { line, .. } => FormatError::parse(
            line,
            format!("tier count mismatch: header declares {declared}, tier {tier_no} missing"),
        ),
        other => other,
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Writes the long text form. Gaps between entries are filled with blank intervals so the
/// output is a valid Praat interval tier.
pub fn write_textgrid(doc: &TextGridDocument) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n");
    let _ = writeln!(out, "xmin = {}", doc.xmin);
    let _ = writeln!(out, "xmax = {}", doc.xmax);
    if doc.tiers.is_empty() {
        out.push_str("tiers? <absent>\n");
        return out.into_bytes();
    }
    out.push_str("tiers? <exists>\n");
    let _ = writeln!(out, "size = {}", doc.tiers.len());
    out.push_str("item []:\n");
    for (ti, tier) in doc.tiers.iter().enumerate() {
        let mut intervals: Vec<(f64, f64, &str)> = Vec::new();
        let mut cursor = doc.xmin;
        for e in &tier.entries {
            if e.interval.start() > cursor {
                intervals.push((cursor, e.interval.start(), ""));
            }
            intervals.push((e.interval.start(), e.interval.end(), &e.word));
            cursor = e.interval.end();
        }
        if cursor < doc.xmax || intervals.is_empty() {
            intervals.push((cursor, doc.xmax, ""));
        }
        let _ = writeln!(out, "    item [{}]:", ti + 1);
        out.push_str("        class = \"IntervalTier\"\n");
        let _ = writeln!(out, "        name = {}", quote(&tier.name));
        let _ = writeln!(out, "        xmin = {}", doc.xmin);
        let _ = writeln!(out, "        xmax = {}", doc.xmax);
        let _ = writeln!(out, "        intervals: size = {}", intervals.len());
        for (ii, (s, e, text)) in intervals.iter().enumerate() {
            let _ = writeln!(out, "        intervals [{}]:", ii + 1);
            let _ = writeln!(out, "            xmin = {s}");
            let _ = writeln!(out, "            xmax = {e}");
            let _ = writeln!(out, "            text = {}", quote(text));
        }
    }
    out.into_bytes()
}
