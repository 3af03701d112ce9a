//! Extended llocs records: one line of recognition output stored as one
//! record per character, carrying the pixel span, the confidence of the
//! recognized character, and alternative characters with their confidences.
//!
//! Record grammar (UTF-8, one record per line):
//!
//! ```text
//! <char> TAB <x_start> TAB <x_end> TAB <conf> TAB <alts>
//! ```
//!
//! `<alts>` is zero or more `<char>=<conf>` items joined by `;`; the
//! trailing TAB is present even when `<alts>` is empty. Inside `<char>`
//! fields the literal characters tab, backslash, `;` and `=` are escaped
//! as `\t`, `\\`, `\;` and `\=`. Confidences are decimal fractions with a
//! `.` separator; the writer renders them with up to six decimal places,
//! trailing zeros trimmed, so values below 1e-6 do not survive a
//! write/parse round trip.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::Error;
use crate::Result;

/// Alternatives below this confidence are dropped by the writer. They sit
/// far below any sensible voting threshold and cannot be rendered at six
/// decimal places anyway.
pub const ALT_STORAGE_FLOOR: f64 = 1e-4;

/// One alternative reading of a recognized character.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alternative {
    pub ch: char,
    /// Fraction in (0, 1].
    pub conf: f64,
}

/// One recognized character with its pixel span, confidence, and
/// alternatives sorted by descending confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct LlocsEntry {
    pub ch: char,
    pub x_start: u32,
    pub x_end: u32,
    pub conf: f64,
    pub alternatives: Vec<Alternative>,
}

impl LlocsEntry {
    pub fn new(
        ch: char,
        x_start: u32,
        x_end: u32,
        conf: f64,
        alternatives: Vec<Alternative>,
    ) -> Result<Self> {
        let entry = Self {
            ch,
            x_start,
            x_end,
            conf,
            alternatives,
        };
        entry.validate()?;
        Ok(entry)
    }

    pub fn validate(&self) -> Result<()> {
        if !storable_char(self.ch) {
            return Err(Error::InvalidEntry(
                "newline characters cannot be stored in a record".to_string(),
            ));
        }
        if self.x_start > self.x_end {
            return Err(Error::InvalidEntry("x_start exceeds x_end".to_string()));
        }
        if !conf_in_range(self.conf) {
            return Err(Error::InvalidEntry("confidence outside (0, 1]".to_string()));
        }
        let mut prev_conf = f64::INFINITY;
        for (i, alt) in self.alternatives.iter().enumerate() {
            if !storable_char(alt.ch) {
                return Err(Error::InvalidEntry(
                    "newline characters cannot be stored in a record".to_string(),
                ));
            }
            if !conf_in_range(alt.conf) {
                return Err(Error::InvalidEntry(
                    "alternative confidence outside (0, 1]".to_string(),
                ));
            }
            if alt.conf > prev_conf {
                return Err(Error::InvalidEntry(
                    "alternatives not sorted by descending confidence".to_string(),
                ));
            }
            prev_conf = alt.conf;
            if alt.ch == self.ch {
                return Err(Error::InvalidEntry(
                    "alternative duplicates the top-1 character".to_string(),
                ));
            }
            if self.alternatives[..i].iter().any(|a| a.ch == alt.ch) {
                return Err(Error::InvalidEntry(
                    "duplicate alternative character".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// One model's output for one text line. `entries` is `None` when only the
/// plain text is known (no llocs were produced or found); voting then
/// treats every character as confidence 1.0 with no alternatives.
#[derive(Debug, Clone, PartialEq)]
pub struct LineHypothesis {
    /// Opaque label, e.g. the model directory name. Empty if unknown.
    pub model_id: String,
    pub text: String,
    pub entries: Option<Vec<LlocsEntry>>,
}

impl LineHypothesis {
    /// Builds a hypothesis from llocs entries; `text` is derived so the
    /// concatenation invariant holds by construction.
    pub fn from_entries(model_id: impl Into<String>, entries: Vec<LlocsEntry>) -> Result<Self> {
        for (i, entry) in entries.iter().enumerate() {
            entry.validate().map_err(|e| match e {
                Error::InvalidEntry(msg) => {
                    Error::InvalidEntry(alloc::format!("record {}: {}", i + 1, msg))
                }
                other => other,
            })?;
            if i > 0 && entry.x_start < entries[i - 1].x_start {
                return Err(Error::NonMonotoneStart { line: i + 1 });
            }
        }
        let text: String = entries.iter().map(|e| e.ch).collect();
        Ok(Self {
            model_id: model_id.into(),
            text,
            entries: Some(entries),
        })
    }

    /// A hypothesis carrying only text, no per-character confidences.
    pub fn text_only(model_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            text: text.into(),
            entries: None,
        }
    }

    pub fn has_llocs(&self) -> bool {
        self.entries.is_some()
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

fn storable_char(c: char) -> bool {
    c != '\n' && c != '\r'
}

fn conf_in_range(v: f64) -> bool {
    v.is_finite() && v > 0.0 && v <= 1.0
}

/// Parses an extended llocs document into a hypothesis with empty
/// `model_id`. Alternatives are stably re-sorted by descending confidence,
/// so leniently ordered input is accepted; everything else is strict.
pub fn parse_llocs(raw: &str) -> Result<LineHypothesis> {
    let mut records: Vec<&str> = raw.split('\n').collect();
    if records.last() == Some(&"") {
        records.pop();
    }
    let mut entries = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let line = i + 1;
        let entry = parse_record(record, line)?;
        if let Some(prev) = entries.last() {
            let prev: &LlocsEntry = prev;
            if entry.x_start < prev.x_start {
                return Err(Error::NonMonotoneStart { line });
            }
        }
        entries.push(entry);
    }
    LineHypothesis::from_entries("", entries)
}

fn parse_record(record: &str, line: usize) -> Result<LlocsEntry> {
    let fields: Vec<&str> = record.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::MalformedRecord {
            line,
            msg: alloc::format!("expected 5 tab-separated fields, found {}", fields.len()),
        });
    }
    let ch = unescape_char(fields[0]).map_err(|msg| Error::MalformedRecord { line, msg })?;
    let x_start = parse_pixel(fields[1], "x_start", line)?;
    let x_end = parse_pixel(fields[2], "x_end", line)?;
    if x_end < x_start {
        return Err(Error::MalformedRecord {
            line,
            msg: "x_end precedes x_start".to_string(),
        });
    }
    let conf = parse_conf(fields[3], line)?;
    let alternatives = parse_alts(fields[4], line)?;
    for (i, alt) in alternatives.iter().enumerate() {
        if alt.ch == ch {
            return Err(Error::MalformedRecord {
                line,
                msg: "alternative duplicates the top-1 character".to_string(),
            });
        }
        if alternatives[..i].iter().any(|a| a.ch == alt.ch) {
            return Err(Error::MalformedRecord {
                line,
                msg: "duplicate alternative character".to_string(),
            });
        }
    }
    Ok(LlocsEntry {
        ch,
        x_start,
        x_end,
        conf,
        alternatives,
    })
}

fn unescape_char(field: &str) -> core::result::Result<char, String> {
    let mut it = field.chars();
    match (it.next(), it.next(), it.next()) {
        (Some(c), None, _) if c != '\\' => Ok(c),
        (Some('\\'), Some(e), None) => match e {
            't' => Ok('\t'),
            '\\' => Ok('\\'),
            ';' => Ok(';'),
            '=' => Ok('='),
            other => Err(alloc::format!("unknown escape sequence `\\{other}`")),
        },
        (None, ..) => Err("empty character field".to_string()),
        _ => Err("character field must hold exactly one (possibly escaped) character".to_string()),
    }
}

fn parse_pixel(field: &str, name: &str, line: usize) -> Result<u32> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::MalformedRecord {
            line,
            msg: alloc::format!("{name} is not a non-negative integer"),
        });
    }
    field.parse::<u32>().map_err(|_| Error::MalformedRecord {
        line,
        msg: alloc::format!("{name} out of range"),
    })
}

fn parse_conf_number(field: &str) -> core::result::Result<f64, String> {
    let digits = field.bytes().filter(|b| b.is_ascii_digit()).count();
    let dots = field.bytes().filter(|&b| b == b'.').count();
    if digits == 0 || dots > 1 || digits + dots != field.len() {
        return Err("confidence is not a decimal fraction".to_string());
    }
    field
        .parse::<f64>()
        .map_err(|_| "confidence is not a decimal fraction".to_string())
}

fn parse_conf(field: &str, line: usize) -> Result<f64> {
    let value = parse_conf_number(field).map_err(|msg| Error::MalformedRecord { line, msg })?;
    if !conf_in_range(value) {
        return Err(Error::ConfidenceOutOfRange { line, value });
    }
    Ok(value)
}

fn parse_alts(field: &str, line: usize) -> Result<Vec<Alternative>> {
    let mut out = Vec::new();
    if field.is_empty() {
        return Ok(out);
    }
    let mut it = field.chars().peekable();
    loop {
        let first = it.next().ok_or_else(|| Error::MalformedRecord {
            line,
            msg: "empty alternative item".to_string(),
        })?;
        let ch = if first == '\\' {
            match it.next() {
                Some('t') => '\t',
                Some('\\') => '\\',
                Some(';') => ';',
                Some('=') => '=',
                other => {
                    return Err(Error::MalformedRecord {
                        line,
                        msg: match other {
                            Some(c) => alloc::format!("unknown escape sequence `\\{c}`"),
                            None => "dangling escape in alternatives".to_string(),
                        },
                    })
                }
            }
        } else {
            first
        };
        match it.next() {
            Some('=') => {}
            _ => {
                return Err(Error::MalformedRecord {
                    line,
                    msg: "expected `=` after alternative character".to_string(),
                })
            }
        }
        let mut number = String::new();
        while let Some(&c) = it.peek() {
            if c == ';' {
                break;
            }
            number.push(c);
            it.next();
        }
        let conf = parse_conf(&number, line)?;
        out.push(Alternative { ch, conf });
        match it.next() {
            None => break,
            Some(_) => {
                if it.peek().is_none() {
                    return Err(Error::MalformedRecord {
                        line,
                        msg: "trailing alternative separator".to_string(),
                    });
                }
            }
        }
    }
    // stable, so equal confidences keep their input order
    out.sort_by(|a, b| b.conf.partial_cmp(&a.conf).expect("finite confidences"));
    Ok(out)
}

/// Renders a hypothesis back into the record grammar. `parse_llocs` on the
/// result reproduces the hypothesis field for field (modulo `model_id`,
/// which is not stored) as long as confidences are representable with six
/// decimal places and alternatives sit at or above [`ALT_STORAGE_FLOOR`].
/// A text-only hypothesis yields an empty document.
pub fn write_llocs(hyp: &LineHypothesis) -> String {
    let mut out = String::new();
    let Some(entries) = &hyp.entries else {
        return out;
    };
    for entry in entries {
        push_escaped(&mut out, entry.ch);
        let _ = write!(
            out,
            "\t{}\t{}\t{}\t",
            entry.x_start,
            entry.x_end,
            format_conf(entry.conf)
        );
        let mut first = true;
        for alt in &entry.alternatives {
            if alt.conf < ALT_STORAGE_FLOOR {
                continue;
            }
            if !first {
                out.push(';');
            }
            first = false;
            push_escaped(&mut out, alt.ch);
            out.push('=');
            out.push_str(&format_conf(alt.conf));
        }
        out.push('\n');
    }
    out
}

fn push_escaped(buf: &mut String, c: char) {
    match c {
        '\t' => buf.push_str("\\t"),
        '\\' => buf.push_str("\\\\"),
        ';' => buf.push_str("\\;"),
        '=' => buf.push_str("\\="),
        _ => buf.push(c),
    }
}

fn format_conf(v: f64) -> String {
    let s = alloc::format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}
