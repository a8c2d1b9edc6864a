//! Reader and writer for the LIBSVM / svmlight sparse text format.
//!
//! ```text
//! # comment lines are skipped
//! 1 1:0.5 3:2
//! -1 2:1
//! ```
//!
//! Labels may be written as `0/1` or `-1/+1`; `-1` is mapped to `0`. Feature
//! indices are 1-based on the wire and strictly increasing within a line.

use std::fmt;
use std::io::{self, BufRead, Write};

use super::LabeledExample;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LibsvmErrorKind {
    UnknownLabel(String),
    MalformedPair(String),
    BadIndex(String),
    NonNumericValue(String),
    NonIncreasingIndex,
}

#[derive(Debug)]
pub enum LibsvmError {
    Io(io::Error),
    Parse { line: usize, kind: LibsvmErrorKind },
}

impl fmt::Display for LibsvmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LibsvmError::Io(e) => write!(f, "read error: {e}"),
            LibsvmError::Parse { line, kind } => match kind {
                LibsvmErrorKind::UnknownLabel(t) => write!(f, "unknown label '{t}' at line {line}"),
                LibsvmErrorKind::MalformedPair(t) => write!(f, "malformed pair '{t}' at line {line}"),
                LibsvmErrorKind::BadIndex(t) => write!(f, "invalid index '{t}' at line {line}"),
                LibsvmErrorKind::NonNumericValue(t) => {
                    write!(f, "non-numeric value '{t}' at line {line}")
                }
                LibsvmErrorKind::NonIncreasingIndex => {
                    write!(f, "non-increasing index at line {line}")
                }
            },
        }
    }
}

impl std::error::Error for LibsvmError {}

impl From<io::Error> for LibsvmError {
    fn from(e: io::Error) -> Self {
        LibsvmError::Io(e)
    }
}

fn parse_label(tok: &str) -> Option<u8> {
    let v: f64 = tok.parse().ok()?;
    if v == 1.0 {
        Some(1)
    } else if v == 0.0 || v == -1.0 {
        Some(0)
    } else {
        None
    }
}

/// Parses one non-empty, non-comment line. `line` is 1-based.
pub fn parse_line(text: &str, line: usize) -> Result<LabeledExample, LibsvmError> {
    let err = |kind| LibsvmError::Parse { line, kind };
    let body = text.split('#').next().unwrap_or("");
    let mut tokens = body.split_whitespace();
    let label_tok = tokens.next().unwrap_or("");
    let label = parse_label(label_tok).ok_or_else(|| err(LibsvmErrorKind::UnknownLabel(label_tok.into())))?;

    let mut features: Vec<(usize, f64)> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| err(LibsvmErrorKind::MalformedPair(tok.into())))?;
        let idx: usize = idx
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| err(LibsvmErrorKind::BadIndex(idx.into())))?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(LibsvmErrorKind::NonNumericValue(val.into())))?;
        if features.last().is_some_and(|&(prev, _)| prev >= idx - 1) {
            return Err(err(LibsvmErrorKind::NonIncreasingIndex));
        }
        features.push((idx - 1, val));
    }
    // validated above, construction cannot fail
    Ok(LabeledExample::new(features, label).expect("validated example"))
}

/// Reads a whole stream. Returns the examples and the inferred dimension
/// (the largest 1-based index seen on the wire).
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<(Vec<LabeledExample>, usize), LibsvmError> {
    let mut examples = Vec::new();
    let mut dim = 0;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let ex = parse_line(trimmed, k + 1)?;
        dim = dim.max(ex.min_dim());
        examples.push(ex);
    }
    Ok((examples, dim))
}

pub fn parse_libsvm_str(text: &str) -> Result<(Vec<LabeledExample>, usize), LibsvmError> {
    parse_libsvm(text.as_bytes())
}

/// Writes examples with `0/1` labels and 1-based indices. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_libsvm<W: Write>(examples: &[LabeledExample], mut out: W) -> io::Result<()> {
    for e in examples {
        write!(out, "{}", e.label())?;
        for &(k, v) in e.features() {
            write!(out, " {}:{}", k + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
