//! Grayscale matrix ingestion from PGM (P2/P5) files or plain CSV grids.
//!
//! PGM samples are scaled to `[0, 1]` by the header's maximum value. CSV
//! grids are read verbatim: one matrix row per line, comma separated.

use std::fmt::Write as _;

use thiserror::Error;

use super::{make_mask, MatrixCompletionData, ProblemError};

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("bad PGM data: {0}")]
    Pgm(String),
    #[error("bad CSV grid at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    /// Keeps the entries picked by [`make_mask`] as the observed set.
    pub fn completion_data(
        &self,
        fraction_observed: f64,
        seed: u64,
        radius: f64,
    ) -> Result<MatrixCompletionData, ProblemError> {
        let observed = make_mask(self.rows, self.cols, fraction_observed, seed)?
            .into_iter()
            .map(|(r, c)| (r, c, self.get(r, c)))
            .collect();
        MatrixCompletionData::new(self.rows, self.cols, observed, radius)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    s.push(',');
                }
                write!(s, "{}", self.get(r, c)).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

struct PgmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmHeader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str, GridError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(GridError::Pgm("unexpected end of data".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| GridError::Pgm("non-ASCII header".into()))
    }

    fn number(&mut self) -> Result<usize, GridError> {
        let t = self.token()?;
        t.parse().map_err(|_| GridError::Pgm(format!("expected a number, found '{t}'")))
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<Grid, GridError> {
    let mut h = PgmHeader { bytes, pos: 0 };
    let magic = h.token()?.to_string();
    if magic != "P2" && magic != "P5" {
        return Err(GridError::Pgm(format!("unsupported magic '{magic}'")));
    }
    let cols = h.number()?;
    let rows = h.number()?;
    let maxval = h.number()?;
    if rows == 0 || cols == 0 || maxval == 0 || maxval > 65535 {
        return Err(GridError::Pgm("invalid header values".into()));
    }
    let count = rows * cols;
    let scale = 1.0 / maxval as f64;
    let mut values = Vec::with_capacity(count);
    if magic == "P2" {
        for _ in 0..count {
            let v = h.number()?;
            if v > maxval {
                return Err(GridError::Pgm(format!("sample {v} exceeds maxval {maxval}")));
            }
            values.push(v as f64 * scale);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = h.pos + 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let raster = bytes
            .get(start..start + count * width)
            .ok_or_else(|| GridError::Pgm("truncated raster".into()))?;
        for chunk in raster.chunks_exact(width) {
            let v = if width == 1 { chunk[0] as usize } else { (chunk[0] as usize) << 8 | chunk[1] as usize };
            values.push(v as f64 * scale);
        }
    }
    Ok(Grid { rows, cols, values })
}

pub fn read_csv_grid(text: &str) -> Result<Grid, GridError> {
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| GridError::Csv { line: k + 1, msg: e.to_string() })?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(GridError::Csv { line: k + 1, msg: "non-finite value".into() });
        }
        if rows == 0 {
            cols = row.len();
        } else if row.len() != cols {
            return Err(GridError::Csv {
                line: k + 1,
                msg: format!("expected {cols} columns, found {}", row.len()),
            });
        }
        values.extend(row);
        rows += 1;
    }
    if rows == 0 {
        return Err(GridError::Csv { line: 0, msg: "empty grid".into() });
    }
    Ok(Grid { rows, cols, values })
}
