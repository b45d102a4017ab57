//! Feature schema fitting and binarization.
//!
//! Continuous fields are cut into equal-width bins between the training
//! minimum and maximum, categorical fields are one-hot encoded over their
//! training vocabulary, and text is encoded as character n-gram presence.
//! Columns that never fire on the training data are omitted. The fitted
//! schema is reused unchanged at test time.

pub(crate) mod escape;
mod matrix;
mod schema_file;

use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Record};
use crate::scalar::Scalar;

pub use self::matrix::BinaryFeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub n_bins: usize,
    pub ngram_n: usize,
    /// Feed n-gram counts (instead of presence) to the embedding.
    pub ngram_counts: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_bins: 10,
            ngram_n: 2,
            ngram_counts: false,
        }
    }
}

/// Equal-width bin boundaries of one continuous field.
///
/// A constant field has a single degenerate bin with `min == max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    edges: Vec<f64>,
}

impl BinEdges {
    pub fn equal_width(min: f64, max: f64, n_bins: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::invalid(format!("invalid bin range [{min}, {max}]")));
        }
        if min == max {
            return Ok(BinEdges {
                edges: vec![min, max],
            });
        }
        if n_bins < 2 {
            return Err(Error::invalid(format!("n_bins must be at least 2, got {n_bins}")));
        }
        let span = max - min;
        let mut edges: Vec<f64> = (0..=n_bins)
            .map(|k| min + span * k as f64 / n_bins as f64)
            .collect();
        edges[n_bins] = max;
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "range [{min}, {max}] too narrow for {n_bins} bins"
            )));
        }
        Ok(BinEdges { edges })
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        let ok = edges.len() >= 2
            && edges.iter().all(|e| e.is_finite())
            && (edges.len() == 2 && edges[0] == edges[1]
                || edges.windows(2).all(|w| w[0] < w[1]));
        if !ok {
            return Err(Error::invalid(format!("invalid bin edges {edges:?}")));
        }
        Ok(BinEdges { edges })
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn min(&self) -> f64 {
        self.edges[0]
    }

    pub fn max(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn is_degenerate(&self) -> bool {
        self.min() == self.max()
    }

    /// Interval `[lo, hi)` of a 1-based bin; the last bin is closed.
    pub fn interval(&self, bin: usize) -> (f64, f64) {
        (self.edges[bin - 1], self.edges[bin])
    }

    /// 1-based bin of `value`. Bins are left-closed, the last bin also holds
    /// the maximum, and values outside the training range clamp to the
    /// outer bins.
    pub fn bin_index(&self, value: f64) -> usize {
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|&e| e <= value) + 1
    }
}

pub fn bin_index(value: f64, edges: &BinEdges) -> usize {
    edges.bin_index(value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousField {
    pub name: String,
    pub bins: BinEdges,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalField {
    pub name: String,
    /// Categories in order of first appearance in the training data.
    pub vocabulary: Vec<String>,
}

/// Character n-gram vocabulary in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramVocabulary {
    pub n: usize,
    pub grams: Vec<String>,
    index: HashMap<String, usize>,
}

impl NgramVocabulary {
    pub fn new(n: usize, grams: Vec<String>) -> Self {
        let index = grams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        NgramVocabulary { n, grams, index }
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn position(&self, gram: &str) -> Option<usize> {
        self.index.get(gram).copied()
    }

    /// Occurrence counts of each vocabulary n-gram in `text`; n-grams outside
    /// the vocabulary are ignored.
    pub fn counts(&self, text: &str) -> Vec<u32> {
        let mut out = vec![0; self.grams.len()];
        for g in ngrams(text, self.n) {
            if let Some(i) = self.position(g) {
                out[i] += 1;
            }
        }
        out
    }

    pub fn presence(&self, text: &str) -> Vec<u8> {
        self.counts(text).into_iter().map(|c| (c > 0) as u8).collect()
    }
}

/// Sliding window of `n` characters over `text`. Strings shorter than `n`
/// yield nothing.
pub fn ngrams(text: &str, n: usize) -> impl Iterator<Item = &str> + '_ {
    assert!(n >= 1, "n-gram size must be at least 1");
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let count = bounds.len().saturating_sub(n);
    (0..count).map(move |i| &text[bounds[i]..bounds[i + n]])
}

/// Where a binary column comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnSource {
    /// 1-based bin of a continuous field.
    Bin { field: usize, bin: usize },
    Category { field: usize, category: usize },
    Ngram { gram: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub source: ColumnSource,
}

/// Fitted encoding from records to binary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub continuous: Vec<ContinuousField>,
    pub categorical: Vec<CategoricalField>,
    pub ngram: Option<NgramVocabulary>,
    columns: Vec<Column>,
    dropped: Vec<String>,
    fingerprint: String,
}

fn column_name(
    continuous: &[ContinuousField],
    categorical: &[CategoricalField],
    ngram: Option<&NgramVocabulary>,
    source: ColumnSource,
) -> String {
    match source {
        ColumnSource::Bin { field, bin } => format!("{}=bin{bin}", continuous[field].name),
        ColumnSource::Category { field, category } => {
            let f = &categorical[field];
            format!("{}={}", f.name, f.vocabulary[category])
        }
        ColumnSource::Ngram { gram } => format!("ngram={}", ngram.unwrap().grams[gram]),
    }
}

pub fn fingerprint_of<'a>(names: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(escape::escape(n).as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl FeatureSchema {
    /// Schema with every possible column retained.
    pub fn new(
        continuous: Vec<ContinuousField>,
        categorical: Vec<CategoricalField>,
        ngram: Option<NgramVocabulary>,
    ) -> Self {
        let mut sources = Vec::new();
        for (f, field) in continuous.iter().enumerate() {
            for bin in 1..=field.bins.n_bins() {
                sources.push(ColumnSource::Bin { field: f, bin });
            }
        }
        for (f, field) in categorical.iter().enumerate() {
            for c in 0..field.vocabulary.len() {
                sources.push(ColumnSource::Category {
                    field: f,
                    category: c,
                });
            }
        }
        if let Some(v) = &ngram {
            for g in 0..v.len() {
                sources.push(ColumnSource::Ngram { gram: g });
            }
        }
        let columns = sources
            .into_iter()
            .map(|source| Column {
                name: column_name(&continuous, &categorical, ngram.as_ref(), source),
                source,
            })
            .collect();
        let mut schema = FeatureSchema {
            continuous,
            categorical,
            ngram,
            columns,
            dropped: Vec::new(),
            fingerprint: String::new(),
        };
        schema.refresh_fingerprint();
        schema
    }

    fn refresh_fingerprint(&mut self) {
        self.fingerprint = fingerprint_of(self.columns.iter().map(|c| c.name.as_str()));
    }

    pub(crate) fn from_parts(
        continuous: Vec<ContinuousField>,
        categorical: Vec<CategoricalField>,
        ngram: Option<NgramVocabulary>,
        retained: &[String],
        dropped: Vec<String>,
    ) -> Result<Self> {
        let full = FeatureSchema::new(continuous, categorical, ngram);
        let by_name: HashMap<&str, &Column> =
            full.columns.iter().map(|c| (c.name.as_str(), c)).collect();
        let columns = retained
            .iter()
            .map(|n| {
                by_name
                    .get(n.as_str())
                    .map(|c| (*c).clone())
                    .ok_or_else(|| Error::invalid(format!("column {n:?} not produced by schema")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut schema = FeatureSchema {
            columns,
            dropped,
            ..full
        };
        schema.refresh_fingerprint();
        Ok(schema)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn dropped_columns(&self) -> &[String] {
        &self.dropped
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Hex SHA-256 over the retained column names.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Drops columns that are zero on every record of `data`, and the lone
    /// column of each constant continuous field.
    pub fn retain_nonzero(mut self, data: &Dataset) -> Result<Self> {
        let m = self.binarize(data)?;
        let counts = m.column_counts();
        let degenerate: Vec<bool> = self
            .continuous
            .iter()
            .map(|f| f.bins.is_degenerate())
            .collect();
        let (keep, drop): (Vec<_>, Vec<_>) =
            self.columns.drain(..).zip(counts).partition(|(col, n)| {
                let constant =
                    matches!(col.source, ColumnSource::Bin { field, .. } if degenerate[field]);
                *n > 0 && !constant
            });
        self.columns = keep.into_iter().map(|(c, _)| c).collect();
        self.dropped.extend(drop.into_iter().map(|(c, _)| c.name));
        self.refresh_fingerprint();
        Ok(self)
    }

    /// Checks that `data` has the field layout the schema was fitted on.
    pub fn check_layout(&self, data: &Dataset) -> Result<()> {
        let cont: Vec<&str> = self.continuous.iter().map(|f| f.name.as_str()).collect();
        let cat: Vec<&str> = self.categorical.iter().map(|f| f.name.as_str()).collect();
        if data.continuous_names != cont {
            return Err(Error::SchemaMismatch(format!(
                "continuous fields {:?} do not match schema {:?}",
                data.continuous_names, cont
            )));
        }
        if data.categorical_names != cat {
            return Err(Error::SchemaMismatch(format!(
                "categorical fields {:?} do not match schema {:?}",
                data.categorical_names, cat
            )));
        }
        if data.has_text != self.ngram.is_some() {
            return Err(Error::SchemaMismatch(
                "text fields present in exactly one of data and schema".into(),
            ));
        }
        Ok(())
    }

    fn category_maps(&self) -> Vec<HashMap<&str, usize>> {
        self.categorical
            .iter()
            .map(|f| {
                f.vocabulary
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.as_str(), i))
                    .collect()
            })
            .collect()
    }

    /// Position of each possible column source among the retained columns.
    fn column_lookup(&self) -> HashMap<ColumnSource, usize> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| (c.source, j))
            .collect()
    }

    fn encode_row(
        &self,
        rec: &Record,
        cats: &[HashMap<&str, usize>],
        lookup: &HashMap<ColumnSource, usize>,
        words: usize,
        unseen: &mut usize,
    ) -> Vec<u64> {
        let mut row = vec![0u64; words];
        let mut put = |src: ColumnSource| {
            if let Some(&j) = lookup.get(&src) {
                row[j / 64] |= 1 << (j % 64);
            }
        };
        for (f, (field, &v)) in self.continuous.iter().zip(&rec.continuous).enumerate() {
            put(ColumnSource::Bin {
                field: f,
                bin: field.bins.bin_index(v),
            });
        }
        for (f, tok) in rec.categorical.iter().enumerate() {
            match cats[f].get(tok.as_str()) {
                Some(&c) => put(ColumnSource::Category {
                    field: f,
                    category: c,
                }),
                None => *unseen += 1,
            }
        }
        if let (Some(vocab), Some(text)) = (&self.ngram, &rec.text) {
            for g in ngrams(text, vocab.n) {
                if let Some(i) = vocab.position(g) {
                    put(ColumnSource::Ngram { gram: i });
                }
            }
        }
        row
    }

    /// Encodes every record as a binary row over the retained columns.
    /// Unseen categories leave their field's columns at zero.
    pub fn binarize(&self, data: &Dataset) -> Result<BinaryFeatureMatrix> {
        self.check_layout(data)?;
        let cats = self.category_maps();
        let lookup = self.column_lookup();
        let words = matrix::words_for(self.columns.len());
        let rows: Vec<(Vec<u64>, usize)> = data
            .records
            .par_iter()
            .map(|rec| {
                let mut unseen = 0;
                let row = self.encode_row(rec, &cats, &lookup, words, &mut unseen);
                (row, unseen)
            })
            .collect();
        let unseen: usize = rows.iter().map(|(_, u)| u).sum();
        if unseen > 0 {
            log::warn!("{unseen} categorical values not seen during training");
        }
        let bits = rows.into_iter().flat_map(|(r, _)| r).collect();
        Ok(BinaryFeatureMatrix::from_packed(
            data.len(),
            self.columns.len(),
            bits,
            self.fingerprint.clone(),
        ))
    }

    /// Per-record encoder for streaming classification.
    pub fn encoder(&self) -> RecordEncoder<'_> {
        RecordEncoder {
            schema: self,
            cats: self.category_maps(),
            lookup: self.column_lookup(),
            words: matrix::words_for(self.columns.len()),
        }
    }

    /// Real-valued view over the retained columns for the embedding: 0/1
    /// everywhere except n-gram columns, which hold occurrence counts.
    pub fn count_matrix<T: Scalar>(&self, data: &Dataset) -> Result<Array2<T>> {
        let bin = self.binarize(data)?;
        let mut out = bin.to_dense::<T>();
        if let Some(vocab) = &self.ngram {
            for (i, rec) in data.records.iter().enumerate() {
                let counts = vocab.counts(rec.text.as_deref().unwrap_or(""));
                for (j, col) in self.columns.iter().enumerate() {
                    if let ColumnSource::Ngram { gram } = col.source {
                        out[[i, j]] = T::of(counts[gram] as f64);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Retained column indices of each field, in schema order: continuous
    /// fields first, then categorical. Used to render and compact rules.
    pub fn field_groups(&self) -> Vec<FieldGroup> {
        let mut groups: Vec<FieldGroup> = self
            .continuous
            .iter()
            .map(|f| FieldGroup {
                name: f.name.clone(),
                kind: FieldKind::Continuous,
                columns: Vec::new(),
                complete: false,
            })
            .chain(self.categorical.iter().map(|f| FieldGroup {
                name: f.name.clone(),
                kind: FieldKind::Categorical,
                columns: Vec::new(),
                complete: false,
            }))
            .collect();
        let n_cont = self.continuous.len();
        for (j, c) in self.columns.iter().enumerate() {
            match c.source {
                ColumnSource::Bin { field, .. } => groups[field].columns.push(j),
                ColumnSource::Category { field, .. } => groups[n_cont + field].columns.push(j),
                ColumnSource::Ngram { .. } => {}
            }
        }
        for (g, group) in groups.iter_mut().enumerate() {
            let possible = if g < n_cont {
                self.continuous[g].bins.n_bins()
            } else {
                self.categorical[g - n_cont].vocabulary.len()
            };
            group.complete = group.columns.len() == possible;
        }
        groups
    }

    /// Human-readable condition for a column being set, e.g.
    /// `petal_width∈bin1[0.1,0.9)`.
    pub fn describe_column(&self, j: usize) -> String {
        match self.columns[j].source {
            ColumnSource::Bin { field, bin } => {
                let f = &self.continuous[field];
                let (lo, hi) = f.bins.interval(bin);
                let close = if bin == f.bins.n_bins() { ']' } else { ')' };
                format!("{}∈bin{bin}[{},{}{close}", f.name, short(lo), short(hi))
            }
            ColumnSource::Category { field, category } => {
                let f = &self.categorical[field];
                format!("{}={}", f.name, f.vocabulary[category])
            }
            ColumnSource::Ngram { gram } => {
                format!("contains({:?})", self.ngram.as_ref().unwrap().grams[gram])
            }
        }
    }

    pub fn to_text(&self) -> String {
        schema_file::write(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        schema_file::read(text)
    }
}

pub struct RecordEncoder<'a> {
    schema: &'a FeatureSchema,
    cats: Vec<HashMap<&'a str, usize>>,
    lookup: HashMap<ColumnSource, usize>,
    words: usize,
}

impl RecordEncoder<'_> {
    pub fn encode(&self, rec: &Record) -> Vec<u64> {
        let mut unseen = 0;
        self.schema
            .encode_row(rec, &self.cats, &self.lookup, self.words, &mut unseen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Exactly one bin column is set on every row.
    Continuous,
    /// At most one category column is set.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldGroup {
    pub name: String,
    pub kind: FieldKind,
    pub columns: Vec<usize>,
    /// No column of the field was omitted, so a continuous field has exactly
    /// one of `columns` set on every encoded row.
    pub complete: bool,
}

/// Fits bin edges, category vocabularies and the n-gram vocabulary on the
/// training data and omits columns that never fire.
/// Edge value for display: at most six decimals, trailing zeros trimmed.
fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn fit_schema(train: &Dataset, config: &FeatureConfig) -> Result<FeatureSchema> {
    if train.is_empty() {
        return Err(Error::invalid("cannot fit a schema on an empty dataset"));
    }
    if config.n_bins < 2 {
        return Err(Error::invalid(format!(
            "n_bins must be at least 2, got {}",
            config.n_bins
        )));
    }
    train.validate()?;

    let continuous = train
        .continuous_names
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let (lo, hi) = train
                .records
                .iter()
                .map(|r| r.continuous[f])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            Ok(ContinuousField {
                name: name.clone(),
                bins: BinEdges::equal_width(lo, hi, config.n_bins)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let categorical = train
        .categorical_names
        .iter()
        .enumerate()
        .map(|(f, name)| CategoricalField {
            name: name.clone(),
            vocabulary: first_appearance(train.records.iter().map(|r| r.categorical[f].as_str())),
        })
        .collect();

    let ngram = if train.has_text {
        if config.ngram_n == 0 {
            return Err(Error::invalid("n-gram size must be at least 1"));
        }
        let grams = first_appearance(
            train
                .records
                .iter()
                .flat_map(|r| ngrams(r.text.as_deref().unwrap_or(""), config.ngram_n)),
        );
        Some(NgramVocabulary::new(config.ngram_n, grams))
    } else {
        None
    };

    FeatureSchema::new(continuous, categorical, ngram).retain_nonzero(train)
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    items
        .filter(|s| seen.insert(*s))
        .map(str::to_string)
        .collect()
}

/// Binarizes `data` with a fitted schema.
pub fn binarize(data: &Dataset, schema: &FeatureSchema) -> Result<BinaryFeatureMatrix> {
    schema.binarize(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SourceFormat;
    use proptest::prelude::*;

    pub(crate) fn numeric_dataset(names: &[&str], rows: &[&[f64]]) -> Dataset {
        Dataset {
            records: rows
                .iter()
                .map(|r| Record {
                    continuous: r.to_vec(),
                    decimals: vec![u8::MAX; r.len()],
                    ..Record::default()
                })
                .collect(),
            format: SourceFormat::Csv,
            continuous_names: names.iter().map(|s| s.to_string()).collect(),
            categorical_names: vec![],
            has_text: false,
            skipped: 0,
        }
    }

    fn text_dataset(lines: &[&str]) -> Dataset {
        Dataset {
            records: lines
                .iter()
                .map(|t| Record {
                    text: Some(t.to_string()),
                    ..Record::default()
                })
                .collect(),
            format: SourceFormat::Apache,
            continuous_names: vec![],
            categorical_names: vec![],
            has_text: true,
            skipped: 0,
        }
    }

    fn petal_width_edges() -> BinEdges {
        BinEdges::equal_width(0.1, 2.5, 3).unwrap()
    }

    #[test]
    fn iris_petal_width_edges() {
        let e = petal_width_edges();
        for (got, want) in e.edges().iter().zip([0.1, 0.9, 1.7, 2.5]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(e.min(), 0.1);
        assert_eq!(e.max(), 2.5);
    }

    #[test]
    fn bin_index_examples() {
        let e = petal_width_edges();
        assert_eq!(e.bin_index(0.5), 1);
        assert_eq!(e.bin_index(0.1), 1);
        assert_eq!(e.bin_index(2.5), 3);
        assert_eq!(e.bin_index(3.0), 3);
        assert_eq!(e.bin_index(-1.0), 1);
        assert_eq!(e.bin_index(e.edges()[1]), 2);
        assert_eq!(e.bin_index(e.edges()[2]), 3);
    }

    #[test]
    fn n_bins_below_two_is_rejected() {
        let d = numeric_dataset(&["x"], &[&[1.0], &[2.0]]);
        let cfg = FeatureConfig {
            n_bins: 1,
            ..FeatureConfig::default()
        };
        assert!(fit_schema(&d, &cfg).is_err());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let d = numeric_dataset(&["x"], &[]);
        assert!(fit_schema(&d, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn constant_field_is_dropped() {
        let d = numeric_dataset(&["x", "c"], &[&[1.0, 5.0], &[2.0, 5.0], &[3.0, 5.0]]);
        let cfg = FeatureConfig {
            n_bins: 3,
            ..FeatureConfig::default()
        };
        let s = fit_schema(&d, &cfg).unwrap();
        assert!(s.continuous[1].bins.is_degenerate());
        assert_eq!(s.continuous[1].bins.n_bins(), 1);
        assert_eq!(s.column_names(), ["x=bin1", "x=bin2", "x=bin3"]);
        assert_eq!(s.dropped_columns(), ["c=bin1"]);
    }

    #[test]
    fn worked_binarization_example() {
        // bins given directly as values with unit-width bins around 1, 2, 3
        let edges = || BinEdges::from_edges(vec![0.5, 1.5, 2.5, 3.5]).unwrap();
        let fields = ["f1", "f2", "f3"]
            .iter()
            .map(|n| ContinuousField {
                name: n.to_string(),
                bins: edges(),
            })
            .collect();
        let d = numeric_dataset(
            &["f1", "f2", "f3"],
            &[&[1.0, 2.0, 1.0], &[3.0, 2.0, 3.0], &[2.0, 1.0, 1.0]],
        );
        let s = FeatureSchema::new(fields, vec![], None)
            .retain_nonzero(&d)
            .unwrap();
        assert_eq!(
            s.column_names(),
            ["f1=bin1", "f1=bin2", "f1=bin3", "f2=bin1", "f2=bin2", "f3=bin1", "f3=bin3"]
        );
        let m = s.binarize(&d).unwrap();
        assert_eq!(m.row_bits(0), [1, 0, 0, 0, 1, 1, 0]);
        assert_eq!(m.row_bits(1), [0, 0, 1, 0, 1, 0, 1]);
        assert_eq!(m.row_bits(2), [0, 1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn bigram_examples() {
        let a: Vec<&str> = ngrams("anomaly", 2).collect();
        assert_eq!(a, ["an", "no", "om", "ma", "al", "ly"]);
        let b: Vec<&str> = ngrams("analysis", 2).collect();
        assert_eq!(b, ["an", "na", "al", "ly", "ys", "si", "is"]);
        assert_eq!(ngrams("a", 2).count(), 0);
        assert_eq!(ngrams("äöü", 2).collect::<Vec<_>>(), ["äö", "öü"]);
    }

    #[test]
    fn bigram_feature_table() {
        let d = text_dataset(&["anomaly", "analysis"]);
        let s = fit_schema(&d, &FeatureConfig::default()).unwrap();
        let grams = &s.ngram.as_ref().unwrap().grams;
        assert_eq!(
            grams,
            &["an", "no", "om", "ma", "al", "ly", "na", "ys", "si", "is"]
        );
        let m = s.binarize(&d).unwrap();
        assert_eq!(m.row_bits(0), [1, 1, 1, 1, 1, 1, 0, 0, 0, 0]);
        assert_eq!(m.row_bits(1), [1, 0, 0, 0, 1, 1, 1, 1, 1, 1]);
        let vocab = s.ngram.as_ref().unwrap();
        assert_eq!(vocab.presence("a"), vec![0; 10]);
        assert_eq!(vocab.counts("anan")[0], 2);
        assert_eq!(vocab.counts("xyz"), vec![0; 10]);
    }

    #[test]
    fn ngram_counts_feed_the_embedding_view() {
        let d = text_dataset(&["anan", "no"]);
        let s = fit_schema(&d, &FeatureConfig::default()).unwrap();
        let c = s.count_matrix::<f64>(&d).unwrap();
        assert_eq!(c[[0, 0]], 2.0);
        let b = s.binarize(&d).unwrap();
        assert!(b.get(0, 0));
    }

    #[test]
    fn unseen_category_gives_zero_columns() {
        let mut train = numeric_dataset(&[], &[&[], &[]]);
        train.categorical_names = vec!["proto".into()];
        train.records[0].categorical = vec!["tcp".into()];
        train.records[1].categorical = vec!["udp".into()];
        let s = fit_schema(&train, &FeatureConfig::default()).unwrap();
        let mut test = train.clone();
        test.records[0].categorical = vec!["icmp".into()];
        let m = s.binarize(&test).unwrap();
        assert_eq!(m.row_bits(0), [0, 0]);
        assert_eq!(m.row_bits(1), [0, 1]);
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let d = numeric_dataset(&["x"], &[&[1.0], &[2.0]]);
        let s = fit_schema(&d, &FeatureConfig::default()).unwrap();
        let other = numeric_dataset(&["y"], &[&[1.0]]);
        assert!(matches!(s.binarize(&other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn describes_columns() {
        let d = numeric_dataset(&["petal_width"], &[&[0.1], &[2.5], &[1.0]]);
        let cfg = FeatureConfig {
            n_bins: 3,
            ..FeatureConfig::default()
        };
        let s = fit_schema(&d, &cfg).unwrap();
        assert!(s.describe_column(0).starts_with("petal_width∈bin1[0.1,0.9"));
        assert!(s.describe_column(2).ends_with(",2.5]"));
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..4, 2usize..40).prop_flat_map(|(fields, rows)| {
            proptest::collection::vec(
                proptest::collection::vec(-100.0f64..100.0, fields),
                rows,
            )
            .prop_map(move |rows| {
                let names: Vec<String> = (0..fields).map(|i| format!("f{i}")).collect();
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                let rows: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                numeric_dataset(&names, &rows)
            })
        })
    }

    proptest! {
        #[test]
        fn one_bin_per_continuous_field(
            train in arb_dataset(),
            n_bins in 2usize..12,
            probes in proptest::collection::vec(-300.0f64..300.0, 1..20),
        ) {
            let cfg = FeatureConfig { n_bins, ..FeatureConfig::default() };
            let s = fit_schema(&train, &cfg).unwrap();
            // training matrix has no all-zero column
            let m = s.binarize(&train).unwrap();
            prop_assert!(m.column_counts().iter().all(|&c| c > 0));
            // every value, in or out of range, lands in exactly one bin
            for field in &s.continuous {
                for &v in &probes {
                    let b = field.bins.bin_index(v);
                    prop_assert!(b >= 1 && b <= field.bins.n_bins());
                }
                let e = field.bins.edges();
                prop_assert!(field.bins.is_degenerate() || e.windows(2).all(|w| w[0] < w[1]));
            }
            // each training row sets exactly one column per non-degenerate field
            for group in s.field_groups() {
                for i in 0..m.rows() {
                    let set = group.columns.iter().filter(|&&j| m.get(i, j)).count();
                    prop_assert!(set <= 1);
                }
            }
        }

        #[test]
        fn schema_text_round_trip(train in arb_dataset(), n_bins in 2usize..12) {
            let cfg = FeatureConfig { n_bins, ..FeatureConfig::default() };
            let s = fit_schema(&train, &cfg).unwrap();
            let text = s.to_text();
            let parsed = FeatureSchema::from_text(&text).unwrap();
            prop_assert_eq!(parsed.to_text(), text);
            prop_assert_eq!(parsed.binarize(&train).unwrap(), s.binarize(&train).unwrap());
        }
    }
}
