//! Parsing raw traffic data into [`Record`]s.
//!
//! Labels are carried through for evaluation only; nothing in the training
//! path reads them.

mod apache;
mod csv;
mod kdd;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use self::apache::{parse_apache_line, ApacheOptions};
pub use self::csv::CsvOptions;
pub use self::kdd::{
    format_kdd_record, parse_kdd_record, KDD_CATEGORICAL, KDD_FIELDS, KDD_NORMAL_LABEL,
};

/// One parsed traffic sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub continuous: Vec<f64>,
    pub categorical: Vec<String>,
    pub text: Option<String>,
    pub label: Option<String>,
    /// Fractional digits of each continuous token as written in the source;
    /// `u8::MAX` when the token was not plain decimal notation.
    pub decimals: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceFormat {
    Kdd,
    Apache,
    Csv,
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceFormat::Kdd => "kdd",
            SourceFormat::Apache => "apache",
            SourceFormat::Csv => "csv",
        })
    }
}

impl FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kdd" => Ok(SourceFormat::Kdd),
            "apache" => Ok(SourceFormat::Apache),
            "csv" => Ok(SourceFormat::Csv),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

/// An ordered collection of records sharing one field layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub format: SourceFormat,
    pub continuous_names: Vec<String>,
    pub categorical_names: Vec<String>,
    pub has_text: bool,
    /// Lines that failed to parse and were skipped (apache only).
    pub skipped: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.label.is_some())
    }

    pub fn labels(&self) -> Option<Vec<&str>> {
        self.records.iter().map(|r| r.label.as_deref()).collect()
    }

    /// Returns a copy with every label removed.
    pub fn without_labels(&self) -> Dataset {
        let mut out = self.clone();
        for r in &mut out.records {
            r.label = None;
        }
        out
    }

    /// Keeps the records at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            format: self.format,
            continuous_names: self.continuous_names.clone(),
            categorical_names: self.categorical_names.clone(),
            has_text: self.has_text,
            skipped: 0,
        }
    }

    /// Checks that every record has the layout announced by the field names.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.continuous.len() != self.continuous_names.len()
                || r.categorical.len() != self.categorical_names.len()
                || r.text.is_some() != self.has_text
            {
                return Err(Error::invalid(format!(
                    "record {} does not match the dataset field layout",
                    i + 1
                )));
            }
            if let Some(v) = r.continuous.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "record {} has non-finite value {v}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Per-format parsing options.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub apache: ApacheOptions,
    pub csv: CsvOptions,
}

/// Draws `limit` distinct indices out of `n`, returned in ascending order.
pub fn subsample_indices(n: usize, limit: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, limit.min(n)).into_vec();
    picked.sort_unstable();
    picked
}

/// Parses a whole text buffer.
pub fn parse_dataset(
    text: &str,
    format: SourceFormat,
    limit: Option<usize>,
    seed: u64,
    options: &LoadOptions,
) -> Result<Dataset> {
    match format {
        SourceFormat::Csv => csv::parse_csv(text, limit, seed, &options.csv),
        SourceFormat::Kdd => {
            let lines = numbered_lines(text);
            let lines = subsample(lines, limit, seed);
            let records = lines
                .par_iter()
                .map(|&(n, line)| parse_kdd_record(line).map_err(|e| e.at_line(n)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Dataset {
                records,
                format,
                continuous_names: kdd::continuous_names(),
                categorical_names: KDD_CATEGORICAL.iter().map(|s| s.to_string()).collect(),
                has_text: false,
                skipped: 0,
            })
        }
        SourceFormat::Apache => {
            let lines = numbered_lines(text);
            let parsed: Vec<Option<Record>> = lines
                .par_iter()
                .map(|&(_, line)| parse_apache_line(line, &options.apache).ok())
                .collect();
            let skipped = parsed.iter().filter(|r| r.is_none()).count();
            if skipped > 0 {
                log::warn!("skipped {skipped} malformed log lines");
            }
            let records: Vec<Record> = parsed.into_iter().flatten().collect();
            let records = subsample(records, limit, seed);
            Ok(Dataset {
                records,
                format,
                continuous_names: Vec::new(),
                categorical_names: Vec::new(),
                has_text: true,
                skipped,
            })
        }
    }
}

/// Reads and parses a dataset file; with `limit`, keeps a seeded uniform
/// subsample of that many records in file order.
pub fn load_dataset(
    path: &Path,
    format: SourceFormat,
    limit: Option<usize>,
    seed: u64,
    options: &LoadOptions,
) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let data = parse_dataset(&text, format, limit, seed, options)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    Ok(data)
}

fn numbered_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect()
}

fn subsample<T>(items: Vec<T>, limit: Option<usize>, seed: u64) -> Vec<T> {
    match limit {
        Some(limit) if limit < items.len() => {
            let keep = subsample_indices(items.len(), limit, seed);
            let mut keep = keep.into_iter().peekable();
            items
                .into_iter()
                .enumerate()
                .filter_map(|(i, item)| {
                    if keep.peek() == Some(&i) {
                        keep.next();
                        Some(item)
                    } else {
                        None
                    }
                })
                .collect()
        }
        _ => items,
    }
}

impl Error {
    /// Attaches a line number to a line-level parse error.
    pub(crate) fn at_line(self, line: usize) -> Error {
        match self {
            Error::Parse { msg, .. } => Error::Parse { line, msg },
            other => other,
        }
    }
}

/// Counts the fractional digits of a plain decimal token.
pub(crate) fn decimals_of(token: &str) -> u8 {
    let t = token.trim_start_matches(['-', '+']);
    if !t.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return u8::MAX;
    }
    match t.split_once('.') {
        Some((_, frac)) => frac.len().min(u8::MAX as usize - 1) as u8,
        None => 0,
    }
}

pub(crate) fn format_decimal(value: f64, decimals: u8) -> String {
    if decimals == u8::MAX {
        format!("{value}")
    } else {
        format!("{value:.*}", decimals as usize)
    }
}
