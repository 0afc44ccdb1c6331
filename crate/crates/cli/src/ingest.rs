//! Dataset CSV reading and writing.
//!
//! Format: a header of either `x_algo,y_algo,x_marked,y_marked` or
//! `x_algo,y_algo,x_marked,y_marked,x_real,y_real`, then one decimal row
//! per record (meters). Blank lines and `#` comments are skipped.
//! Errors carry the 1-based file line number.

use std::fmt::Write as _;
use std::path::Path;

use gtcorrect_core::estimate::{Dataset, Record};
use gtcorrect_core::Vec2;

const HEADER_BASE: [&str; 4] = ["x_algo", "y_algo", "x_marked", "y_marked"];
const HEADER_REAL: [&str; 6] = [
    "x_algo", "y_algo", "x_marked", "y_marked", "x_real", "y_real",
];

#[derive(Debug)]
pub enum IngestError {
    Io(std::io::Error),
    MissingHeader,
    BadHeader { line: usize, found: String },
    WrongColumnCount { line: usize, expected: usize, found: usize },
    BadNumber { line: usize, column: String, cell: String },
    Dataset(gtcorrect_core::estimate::EstimateError),
}

impl std::fmt::Display for IngestError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IngestError::Io(e) => write!(f, "{e}"),
            IngestError::MissingHeader => write!(f, "file has no header row"),
            IngestError::BadHeader { line, found } => write!(
                f,
                "line {line}: header must be '{}' or '{}', found '{found}'",
                HEADER_BASE.join(","),
                HEADER_REAL.join(",")
            ),
            IngestError::WrongColumnCount { line, expected, found } => {
                write!(f, "line {line}: expected {expected} columns, found {found}")
            }
            IngestError::BadNumber { line, column, cell } => {
                write!(f, "line {line}: column {column}: '{cell}' is not a finite number")
            }
            IngestError::Dataset(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for IngestError {}

impl From<std::io::Error> for IngestError {
    fn from(e: std::io::Error) -> Self {
        IngestError::Io(e)
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset, IngestError> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or(IngestError::MissingHeader)?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let with_real = if names == HEADER_BASE {
        false
    } else if names == HEADER_REAL {
        true
    } else {
        return Err(IngestError::BadHeader {
            line: header_line,
            found: header.to_string(),
        });
    };
    let expected = if with_real { 6 } else { 4 };

    let mut records = Vec::new();
    for (line, row) in lines {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != expected {
            return Err(IngestError::WrongColumnCount {
                line,
                expected,
                found: cells.len(),
            });
        }
        let mut parsed = [0.0f64; 6];
        for (i, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| IngestError::BadNumber {
                line,
                column: HEADER_REAL[i].to_string(),
                cell: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(IngestError::BadNumber {
                    line,
                    column: HEADER_REAL[i].to_string(),
                    cell: cell.to_string(),
                });
            }
            parsed[i] = value;
        }
        records.push(Record {
            algo: Vec2::new(parsed[0], parsed[1]),
            marked_gt: Vec2::new(parsed[2], parsed[3]),
            real_gt: with_real.then(|| Vec2::new(parsed[4], parsed[5])),
        });
    }
    Dataset::new(records).map_err(IngestError::Dataset)
}

/// Serialize a dataset in the ingestible format. Floats use the shortest
/// representation that round-trips exactly, so write-then-read is
/// lossless.
pub fn format_dataset(d: &Dataset) -> String {
    let with_real = d.has_real_gt();
    let mut out = String::new();
    out.push_str(if with_real {
        "x_algo,y_algo,x_marked,y_marked,x_real,y_real\n"
    } else {
        "x_algo,y_algo,x_marked,y_marked\n"
    });
    for r in d.records() {
        let _ = write!(out, "{},{},{},{}", r.algo.x, r.algo.y, r.marked_gt.x, r.marked_gt.y);
        if let Some(real) = r.real_gt {
            let _ = write!(out, ",{},{}", real.x, real.y);
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<(), IngestError> {
    std::fs::write(path, format_dataset(d))?;
    Ok(())
}
