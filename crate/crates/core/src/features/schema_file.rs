//! Text format of a fitted schema:
//!
//! ```text
//! SCHEMA v1
//! fingerprint <hex>
//! continuous <count>
//! field <name> <n_bins> <edge_0> ... <edge_n>
//! categorical <count>
//! field <name> <k> <token_1> ... <token_k>
//! ngram none | ngram <n> <count>
//! gram <token>
//! columns <m>
//! col <index> <name>
//! dropped <count>
//! drop <name>
//! ```
//!
//! Names and tokens use the escaping in [`super::escape`]; edges use the
//! shortest round-trip decimal form.

use super::escape::{escape, unescape};
use super::{BinEdges, CategoricalField, ContinuousField, FeatureSchema, NgramVocabulary};
use crate::error::{Error, Result};

pub const HEADER: &str = "SCHEMA v1";
const FILE: &str = "schema";

pub(super) fn write(schema: &FeatureSchema) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(HEADER.into());
    line(format!("fingerprint {}", schema.fingerprint()));
    line(format!("continuous {}", schema.continuous.len()));
    for f in &schema.continuous {
        let edges: Vec<String> = f.bins.edges().iter().map(|e| format!("{e}")).collect();
        line(format!(
            "field {} {} {}",
            escape(&f.name),
            f.bins.n_bins(),
            edges.join(" ")
        ));
    }
    line(format!("categorical {}", schema.categorical.len()));
    for f in &schema.categorical {
        let mut parts = vec![
            "field".to_string(),
            escape(&f.name),
            f.vocabulary.len().to_string(),
        ];
        parts.extend(f.vocabulary.iter().map(|t| escape(t)));
        line(parts.join(" "));
    }
    match &schema.ngram {
        None => line("ngram none".into()),
        Some(v) => {
            line(format!("ngram {} {}", v.n, v.len()));
            for g in &v.grams {
                line(format!("gram {}", escape(g)));
            }
        }
    }
    line(format!("columns {}", schema.n_columns()));
    for (j, c) in schema.columns().iter().enumerate() {
        line(format!("col {j} {}", escape(&c.name)));
    }
    line(format!("dropped {}", schema.dropped_columns().len()));
    for d in schema.dropped_columns() {
        line(format!("drop {}", escape(d)));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            file: FILE,
            line: self.last,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => {
                self.last += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    /// Next line split on spaces, checking the leading keyword.
    fn expect(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let l = self.next_line()?;
        let mut parts = l.split(' ');
        if parts.next() != Some(keyword) {
            return Err(self.err(format!("expected `{keyword}`")));
        }
        Ok(parts.collect())
    }

    fn count(&mut self, keyword: &str) -> Result<usize> {
        let parts = self.expect(keyword)?;
        match parts.as_slice() {
            [n] => self.num(n),
            _ => Err(self.err(format!("expected `{keyword} <count>`"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn text(&self, s: &str) -> Result<String> {
        unescape(s).ok_or_else(|| self.err(format!("bad escape in {s:?}")))
    }
}

pub(super) fn read(text: &str) -> Result<FeatureSchema> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    if lines.next_line()? != HEADER {
        return Err(lines.err(format!("expected `{HEADER}`")));
    }
    let fp = lines.expect("fingerprint")?;
    let fingerprint = match fp.as_slice() {
        [h] if !h.is_empty() => h.to_string(),
        _ => return Err(lines.err("missing fingerprint")),
    };

    let n = lines.count("continuous")?;
    let mut continuous = Vec::with_capacity(n);
    for _ in 0..n {
        let parts = lines.expect("field")?;
        if parts.len() < 2 {
            return Err(lines.err("truncated continuous field"));
        }
        let nb: usize = lines.num(parts[1])?;
        if parts.len() != 3 + nb {
            return Err(lines.err(format!("expected {} edges", nb + 1)));
        }
        let edges = parts[2..]
            .iter()
            .map(|e| lines.num::<f64>(e))
            .collect::<Result<Vec<_>>>()?;
        continuous.push(ContinuousField {
            name: lines.text(parts[0])?,
            bins: BinEdges::from_edges(edges).map_err(|e| lines.err(e.to_string()))?,
        });
    }

    let n = lines.count("categorical")?;
    let mut categorical = Vec::with_capacity(n);
    for _ in 0..n {
        let parts = lines.expect("field")?;
        if parts.len() < 2 {
            return Err(lines.err("truncated categorical field"));
        }
        let k: usize = lines.num(parts[1])?;
        if parts.len() != 2 + k {
            return Err(lines.err(format!("expected {k} categories")));
        }
        categorical.push(CategoricalField {
            name: lines.text(parts[0])?,
            vocabulary: parts[2..]
                .iter()
                .map(|t| lines.text(t))
                .collect::<Result<_>>()?,
        });
    }

    let ng = lines.expect("ngram")?;
    let ngram = match ng.as_slice() {
        ["none"] => None,
        [n, count] => {
            let n: usize = lines.num(n)?;
            let count: usize = lines.num(count)?;
            let mut grams = Vec::with_capacity(count);
            for _ in 0..count {
                match lines.expect("gram")?.as_slice() {
                    [g] => grams.push(lines.text(g)?),
                    _ => return Err(lines.err("expected `gram <token>`")),
                }
            }
            Some(NgramVocabulary::new(n, grams))
        }
        _ => return Err(lines.err("expected `ngram none` or `ngram <n> <count>`")),
    };

    let m = lines.count("columns")?;
    let mut retained = Vec::with_capacity(m);
    for j in 0..m {
        match lines.expect("col")?.as_slice() {
            [idx, name] if lines.num::<usize>(idx)? == j => retained.push(lines.text(name)?),
            _ => return Err(lines.err(format!("expected `col {j} <name>`"))),
        }
    }
    let d = lines.count("dropped")?;
    let mut dropped = Vec::with_capacity(d);
    for _ in 0..d {
        match lines.expect("drop")?.as_slice() {
            [name] => dropped.push(lines.text(name)?),
            _ => return Err(lines.err("expected `drop <name>`")),
        }
    }
    if let Some((i, extra)) = lines.inner.next() {
        if !extra.is_empty() {
            return Err(Error::Format {
                file: FILE,
                line: i + 1,
                msg: "trailing content".into(),
            });
        }
    }

    let schema = FeatureSchema::from_parts(continuous, categorical, ngram, &retained, dropped)
        .map_err(|e| lines.err(e.to_string()))?;
    if schema.fingerprint() != fingerprint {
        return Err(Error::SchemaMismatch(format!(
            "schema fingerprint {fingerprint} does not match its columns ({})",
            schema.fingerprint()
        )));
    }
    Ok(schema)
}
