use super::{decimals_of, subsample, Dataset, Record, SourceFormat};
use crate::error::{Error, Result};

/// Options for generic comma-separated data with a header row.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Column holding the evaluation label; ignored when absent from the header.
    pub label_column: String,
    /// When set, exactly these columns are categorical and every other column
    /// must be numeric. When unset, a column is continuous iff all its values
    /// parse as finite numbers.
    pub categorical_columns: Option<Vec<String>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: "label".into(),
            categorical_columns: None,
        }
    }
}

pub(super) fn parse_csv(
    text: &str,
    limit: Option<usize>,
    seed: u64,
    options: &CsvOptions,
) -> Result<Dataset> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(e, i + 2))?;
        if row.iter().all(str::is_empty) {
            continue;
        }
        rows.push((i + 2, row.iter().map(str::to_string).collect()));
    }
    let rows = subsample(rows, limit, seed);

    let label_idx = header.iter().position(|h| *h == options.label_column);
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != label_idx).collect();
    let is_continuous: Vec<bool> = feature_cols
        .iter()
        .map(|&c| match &options.categorical_columns {
            Some(cats) => !cats.contains(&header[c]),
            None => {
                !rows.is_empty()
                    && rows
                        .iter()
                        .all(|(_, r)| r[c].parse::<f64>().is_ok_and(f64::is_finite))
            }
        })
        .collect();

    let mut records = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        let mut rec = Record {
            label: label_idx.map(|c| row[c].clone()),
            ..Record::default()
        };
        for (&c, &cont) in feature_cols.iter().zip(&is_continuous) {
            let tok = &row[c];
            if cont {
                let v = tok
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: *line,
                        msg: format!("column {} is not a finite number: {tok:?}", header[c]),
                    })?;
                rec.continuous.push(v);
                rec.decimals.push(decimals_of(tok));
            } else {
                rec.categorical.push(tok.clone());
            }
        }
        records.push(rec);
    }

    let names = |want: bool| -> Vec<String> {
        feature_cols
            .iter()
            .zip(&is_continuous)
            .filter(|(_, &c)| c == want)
            .map(|(&c, _)| header[c].clone())
            .collect()
    };
    Ok(Dataset {
        records,
        format: SourceFormat::Csv,
        continuous_names: names(true),
        categorical_names: names(false),
        has_text: false,
        skipped: 0,
    })
}

fn csv_error(e: ::csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}
