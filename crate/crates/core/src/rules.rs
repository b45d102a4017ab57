//! Conjunctive rule extraction, matching and the ruleset file.
//!
//! File format (UTF-8, one item per line, column indices zero-based):
//!
//! ```text
//! RULESET v1
//! schema <hex fingerprint>
//! columns <m>
//! col <index> <name>
//! <class><TAB><terms>
//! ```
//!
//! Terms are `+j` (column must be 1) or `-j` (column must be 0), ascending
//! and space-separated; an empty term list matches everything. Names and
//! class tokens are escaped as in the schema file.

use std::collections::HashMap;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clustering::ClassLabeling;
use crate::error::{Error, Result};
use crate::features::escape::{escape, unescape};
use crate::features::{fingerprint_of, BinaryFeatureMatrix, FeatureSchema, FieldKind};

pub const HEADER: &str = "RULESET v1";
pub const UNKNOWN: &str = "UNKNOWN";
const FILE: &str = "ruleset";

fn words_for(cols: usize) -> usize {
    cols.div_ceil(64).max(1)
}

fn bit(words: &[u64], j: usize) -> bool {
    words[j / 64] >> (j % 64) & 1 == 1
}

/// A conjunction of literals over binary columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveRule {
    /// Index into [`RuleSet::classes`].
    pub class: usize,
    must_one: Vec<u64>,
    must_zero: Vec<u64>,
    width: usize,
    /// Training row the rule was grown from, if known.
    pub origin: Option<usize>,
}

impl ConjunctiveRule {
    /// Rule from a {-1, 0, +1} mask.
    pub fn from_mask(class: usize, mask: &[i8]) -> Self {
        let mut r = ConjunctiveRule::match_all(class, mask.len());
        for (j, &m) in mask.iter().enumerate() {
            match m.signum() {
                1 => r.must_one[j / 64] |= 1 << (j % 64),
                -1 => r.must_zero[j / 64] |= 1 << (j % 64),
                _ => {}
            }
        }
        r
    }

    pub fn match_all(class: usize, width: usize) -> Self {
        let w = words_for(width);
        ConjunctiveRule {
            class,
            must_one: vec![0; w],
            must_zero: vec![0; w],
            width,
            origin: None,
        }
    }

    /// Most specific rule for a packed row: every column fixed to its value.
    fn seeded(class: usize, row: &[u64], width: usize, origin: usize) -> Self {
        let mut r = ConjunctiveRule::match_all(class, width);
        r.origin = Some(origin);
        for j in 0..width {
            if bit(row, j) {
                r.must_one[j / 64] |= 1 << (j % 64);
            } else {
                r.must_zero[j / 64] |= 1 << (j % 64);
            }
        }
        r
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mask(&self) -> Vec<i8> {
        (0..self.width).map(|j| self.term(j)).collect()
    }

    /// +1, -1 or 0 for column `j`.
    pub fn term(&self, j: usize) -> i8 {
        if bit(&self.must_one, j) {
            1
        } else if bit(&self.must_zero, j) {
            -1
        } else {
            0
        }
    }

    /// Nonzero terms as `(column, sign)` in ascending column order.
    pub fn terms(&self) -> Vec<(usize, i8)> {
        (0..self.width)
            .filter_map(|j| match self.term(j) {
                0 => None,
                t => Some((j, t)),
            })
            .collect()
    }

    pub fn n_terms(&self) -> usize {
        self.must_one
            .iter()
            .chain(&self.must_zero)
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    fn clear(&mut self, j: usize) {
        self.must_one[j / 64] &= !(1 << (j % 64));
        self.must_zero[j / 64] &= !(1 << (j % 64));
    }

    fn set(&mut self, j: usize, sign: i8) {
        self.clear(j);
        match sign {
            1 => self.must_one[j / 64] |= 1 << (j % 64),
            -1 => self.must_zero[j / 64] |= 1 << (j % 64),
            _ => {}
        }
    }

    /// Whether a packed row satisfies every literal.
    #[inline]
    pub fn matches(&self, row: &[u64]) -> bool {
        self.must_one
            .iter()
            .zip(&self.must_zero)
            .zip(row)
            .all(|((&one, &zero), &x)| x & one == one && x & zero == 0)
    }

    /// Mask-level match against an unpacked 0/1 row.
    pub fn matches_bits(&self, x: &[u8]) -> Result<bool> {
        if x.len() != self.width {
            return Err(Error::invalid(format!(
                "row has {} entries but the rule has {}",
                x.len(),
                self.width
            )));
        }
        Ok((0..self.width).all(|j| match self.term(j) {
            1 => x[j] != 0,
            -1 => x[j] == 0,
            _ => true,
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassDecision {
    /// Index into [`RuleSet::classes`]; `None` is an unknown anomaly.
    pub class: Option<usize>,
    /// Zero-based index of the first matching rule.
    pub rule: Option<usize>,
    /// Number of rules that match.
    pub matches: usize,
}

impl ClassDecision {
    pub fn is_unknown(&self) -> bool {
        self.class.is_none()
    }
}

/// Ordered rules; the first match decides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub columns: Vec<String>,
    pub fingerprint: String,
    /// Class tokens in order of first appearance in `rules`.
    pub classes: Vec<String>,
    pub rules: Vec<ConjunctiveRule>,
    /// Seed used for extraction (not stored in the file).
    pub seed: Option<u64>,
}

impl RuleSet {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn class_name(&self, d: &ClassDecision) -> &str {
        d.class.map_or(UNKNOWN, |c| self.classes[c].as_str())
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn rules_per_class(&self) -> Vec<(String, usize)> {
        self.classes
            .iter()
            .enumerate()
            .map(|(c, name)| (name.clone(), self.rules.iter().filter(|r| r.class == c).count()))
            .collect()
    }

    #[inline]
    pub fn classify(&self, row: &[u64]) -> ClassDecision {
        let mut first = None;
        let mut matches = 0;
        for (i, r) in self.rules.iter().enumerate() {
            if r.matches(row) {
                matches += 1;
                first.get_or_insert(i);
            }
        }
        ClassDecision {
            class: first.map(|i| self.rules[i].class),
            rule: first,
            matches,
        }
    }

    /// Classifies every row; the matrix must come from the same schema.
    pub fn classify_matrix(&self, x: &BinaryFeatureMatrix) -> Result<Vec<ClassDecision>> {
        self.check_matrix(x)?;
        Ok((0..x.rows()).into_par_iter().map(|i| self.classify(x.row(i))).collect())
    }

    fn check_matrix(&self, x: &BinaryFeatureMatrix) -> Result<()> {
        // hand-built matrices carry no fingerprint; only their width is checked
        if !x.fingerprint().is_empty() && x.fingerprint() != self.fingerprint {
            return Err(Error::SchemaMismatch(format!(
                "ruleset was built for schema {} but the data uses {}",
                self.fingerprint,
                if x.fingerprint().is_empty() { "an unnamed layout" } else { x.fingerprint() }
            )));
        }
        if x.cols() != self.width() {
            return Err(Error::SchemaMismatch(format!(
                "ruleset has {} columns, data has {}",
                self.width(),
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER}\nschema {}\ncolumns {}\n", self.fingerprint, self.width());
        for (j, c) in self.columns.iter().enumerate() {
            s.push_str(&format!("col {j} {}\n", escape(c)));
        }
        for r in &self.rules {
            let terms: Vec<String> = r
                .terms()
                .into_iter()
                .map(|(j, t)| format!("{}{j}", if t > 0 { '+' } else { '-' }))
                .collect();
            s.push_str(&format!("{}\t{}\n", escape(&self.classes[r.class]), terms.join(" ")));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<RuleSet> {
        let err = |line: usize, msg: String| Error::Format { file: FILE, line, msg };
        let lines: Vec<&str> = text.lines().collect();
        let get = |i: usize| lines.get(i).copied().ok_or_else(|| err(i + 1, "unexpected end of file".into()));
        if get(0)? != HEADER {
            return Err(err(1, format!("expected `{HEADER}`")));
        }
        let fingerprint = match get(1)?.strip_prefix("schema ") {
            Some(h) if !h.is_empty() && !h.contains(' ') => h.to_string(),
            _ => return Err(err(2, "missing schema fingerprint".into())),
        };
        let m: usize = get(2)?
            .strip_prefix("columns ")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| err(3, "expected `columns <m>`".into()))?;
        let mut columns = Vec::with_capacity(m);
        for j in 0..m {
            let l = get(3 + j)?;
            let name = l
                .strip_prefix(&format!("col {j} "))
                .and_then(unescape)
                .ok_or_else(|| err(4 + j, format!("expected `col {j} <name>`")))?;
            columns.push(name);
        }
        let mut classes: Vec<String> = Vec::new();
        let mut rules = Vec::new();
        for (i, l) in lines.iter().enumerate().skip(3 + m) {
            let line = i + 1;
            let (class, terms) = l
                .split_once('\t')
                .ok_or_else(|| err(line, "expected `<class><TAB><terms>`".into()))?;
            let class = unescape(class)
                .filter(|c| !c.is_empty() || class == "%")
                .ok_or_else(|| err(line, format!("bad class token {class:?}")))?;
            let c = match classes.iter().position(|x| *x == class) {
                Some(c) => c,
                None => {
                    classes.push(class);
                    classes.len() - 1
                }
            };
            let mut rule = ConjunctiveRule::match_all(c, m);
            let mut last: Option<usize> = None;
            if !terms.is_empty() {
                for t in terms.split(' ') {
                    let sign = match t.as_bytes().first() {
                        Some(b'+') => 1,
                        Some(b'-') => -1,
                        _ => return Err(err(line, format!("bad term {t:?}"))),
                    };
                    let j: usize = t[1..]
                        .parse()
                        .ok()
                        .filter(|d: &usize| t[1..] == d.to_string())
                        .ok_or_else(|| err(line, format!("bad term {t:?}")))?;
                    if j >= m || last.is_some_and(|p| j <= p) {
                        return Err(err(line, format!("term {t:?} out of range or order")));
                    }
                    last = Some(j);
                    rule.set(j, sign);
                }
            }
            rules.push(rule);
        }
        Ok(RuleSet {
            columns,
            fingerprint,
            classes,
            rules,
            seed: None,
        })
    }
}

/// Distinct training rows with their class and one representative index.
struct Distinct {
    rows: Vec<Vec<u64>>,
    class: Vec<usize>,
    first: Vec<usize>,
    of_row: Vec<usize>,
}

fn distinct_rows(x: &BinaryFeatureMatrix, labels: &ClassLabeling) -> Result<Distinct> {
    let mut index: HashMap<&[u64], usize> = HashMap::new();
    let mut d = Distinct {
        rows: vec![],
        class: vec![],
        first: vec![],
        of_row: Vec::with_capacity(x.rows()),
    };
    for i in 0..x.rows() {
        let row = x.row(i);
        let c = labels.point_class[i];
        let u = *index.entry(row).or_insert_with(|| {
            d.rows.push(row.to_vec());
            d.class.push(c);
            d.first.push(i);
            d.rows.len() - 1
        });
        if d.class[u] != c {
            return Err(Error::ContradictoryRows {
                first: d.first[u] + 1,
                second: i + 1,
                first_class: labels.classes[d.class[u]].clone(),
                second_class: labels.classes[c].clone(),
            });
        }
        d.of_row.push(u);
    }
    Ok(d)
}

/// Generalizes the fully specific rule of row `seed` by dropping literals in
/// ascending column order while no row of another class becomes covered.
fn grow(d: &Distinct, seed: usize, width: usize, origin: usize) -> ConjunctiveRule {
    let x = &d.rows[seed];
    let c = d.class[seed];
    let mut rule = ConjunctiveRule::seeded(c, x, width, origin);
    // for each other-class row, the literals of the current rule it violates
    let others: Vec<usize> = (0..d.rows.len()).filter(|&u| d.class[u] != c).collect();
    let diff: Vec<Vec<u64>> = others
        .iter()
        .map(|&u| d.rows[u].iter().zip(x).map(|(a, b)| a ^ b).collect())
        .collect();
    let mut violated: Vec<u32> = diff.iter().map(|v| v.iter().map(|w| w.count_ones()).sum()).collect();
    let mut blocked = vec![0u64; words_for(width)];
    let mut retained = vec![!0u64; words_for(width)];
    let single = |v: &[u64], retained: &[u64]| -> usize {
        for (w, (a, r)) in v.iter().zip(retained).enumerate() {
            let m = a & r;
            if m != 0 {
                return w * 64 + m.trailing_zeros() as usize;
            }
        }
        unreachable!("row differs from seed")
    };
    for (o, v) in diff.iter().enumerate() {
        if violated[o] == 1 {
            let j = single(v, &retained);
            blocked[j / 64] |= 1 << (j % 64);
        }
    }
    for j in 0..width {
        if bit(&blocked, j) {
            continue;
        }
        rule.clear(j);
        retained[j / 64] &= !(1 << (j % 64));
        for (o, v) in diff.iter().enumerate() {
            if bit(v, j) {
                violated[o] -= 1;
                if violated[o] == 1 {
                    let k = single(v, &retained);
                    blocked[k / 64] |= 1 << (k % 64);
                }
            }
        }
    }
    rule
}

/// Rewrites a run of negations that leaves exactly one column of a one-hot
/// group open as the single positive literal on that column.
fn compact(rule: &mut ConjunctiveRule, groups: &[Vec<usize>]) {
    for g in groups {
        if g.len() < 2 {
            continue;
        }
        let negated = g.iter().filter(|&&j| rule.term(j) == -1).count();
        let positive = g.iter().any(|&j| rule.term(j) == 1);
        if !positive && negated == g.len() - 1 {
            let open = *g.iter().find(|&&j| rule.term(j) == 0).unwrap();
            for &j in g {
                rule.clear(j);
            }
            rule.set(open, 1);
        }
    }
}

/// Extracts an ordered ruleset reproducing `labels` on `x`.
///
/// Column names are synthesized (`x0`, `x1`, ...); use
/// [`extract_rules_for_schema`] to name them after a feature schema.
pub fn extract_rules(x: &BinaryFeatureMatrix, labels: &ClassLabeling, seed: u64) -> Result<RuleSet> {
    let columns: Vec<String> = (0..x.cols()).map(|j| format!("x{j}")).collect();
    let fingerprint = if x.fingerprint().is_empty() {
        fingerprint_of(columns.iter().map(String::as_str))
    } else {
        x.fingerprint().to_string()
    };
    extract(x, labels, seed, &[], columns, fingerprint)
}

/// Extraction for a matrix binarized with `schema`. Rules are compacted over
/// every continuous field whose bins were all retained.
pub fn extract_rules_for_schema(
    x: &BinaryFeatureMatrix,
    labels: &ClassLabeling,
    seed: u64,
    schema: &FeatureSchema,
) -> Result<RuleSet> {
    if x.fingerprint() != schema.fingerprint() || x.cols() != schema.n_columns() {
        return Err(Error::SchemaMismatch("matrix was not produced by this schema".into()));
    }
    let groups: Vec<Vec<usize>> = schema
        .field_groups()
        .into_iter()
        .filter(|g| g.kind == FieldKind::Continuous && g.complete)
        .map(|g| g.columns)
        .collect();
    let columns = schema.column_names().into_iter().map(String::from).collect();
    extract(x, labels, seed, &groups, columns, schema.fingerprint().to_string())
}

fn extract(
    x: &BinaryFeatureMatrix,
    labels: &ClassLabeling,
    seed: u64,
    groups: &[Vec<usize>],
    columns: Vec<String>,
    fingerprint: String,
) -> Result<RuleSet> {
    if labels.point_class.len() != x.rows() {
        return Err(Error::invalid(format!(
            "{} labels for {} rows",
            labels.point_class.len(),
            x.rows()
        )));
    }
    let d = distinct_rows(x, labels)?;
    let mut order: Vec<usize> = (0..x.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut covered = vec![false; d.rows.len()];
    let mut rules: Vec<ConjunctiveRule> = Vec::new();
    for &e in &order {
        let u = d.of_row[e];
        if covered[u] {
            continue;
        }
        let mut rule = grow(&d, u, x.cols(), e);
        compact(&mut rule, groups);
        for (v, row) in d.rows.iter().enumerate() {
            if !covered[v] && rule.matches(row) {
                debug_assert_eq!(d.class[v], rule.class);
                covered[v] = true;
            }
        }
        rules.push(rule);
    }

    // renumber classes by first appearance in the rule list
    let mut classes: Vec<String> = Vec::new();
    let mut map = HashMap::new();
    for r in &mut rules {
        let name = &labels.classes[r.class];
        let c = *map.entry(r.class).or_insert_with(|| {
            classes.push(name.clone());
            classes.len() - 1
        });
        r.class = c;
    }
    debug!("extracted {} rules over {} distinct rows", rules.len(), d.rows.len());
    Ok(RuleSet {
        columns,
        fingerprint,
        classes,
        rules,
        seed: Some(seed),
    })
}

/// Rows whose first matching rule is missing or has the wrong class.
pub fn coverage_failures(rs: &RuleSet, x: &BinaryFeatureMatrix, labels: &ClassLabeling) -> Vec<usize> {
    (0..x.rows())
        .filter(|&i| {
            let d = rs.classify(x.row(i));
            d.class.map(|c| rs.classes[c].as_str()) != Some(labels.label(i))
        })
        .collect()
}

/// `(rule, column)` pairs where dropping the literal would not cover any
/// training row of another class, i.e. violations of minimality.
pub fn minimality_violations(
    rs: &RuleSet,
    x: &BinaryFeatureMatrix,
    labels: &ClassLabeling,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ri, r) in rs.rules.iter().enumerate() {
        for (j, _) in r.terms() {
            let mut relaxed = r.clone();
            relaxed.clear(j);
            let hits_other = (0..x.rows())
                .any(|i| labels.label(i) != rs.classes[r.class] && relaxed.matches(x.row(i)));
            if !hits_other {
                out.push((ri, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(v: &[&str]) -> ClassLabeling {
        ClassLabeling::from_labels(v)
    }

    #[test]
    fn mask_matching() {
        // r1 = (-1, 0, 0, 0, 0): "a is false"
        let r1 = ConjunctiveRule::from_mask(0, &[-1, 0, 0, 0, 0]);
        assert!(r1.matches_bits(&[0, 1, 1, 0, 1]).unwrap());
        assert!(!r1.matches_bits(&[1, 0, 0, 0, 0]).unwrap());
        // r3 = a AND b AND NOT c
        let r3 = ConjunctiveRule::from_mask(2, &[1, 1, -1, 0, 0]);
        assert!(!r3.matches_bits(&[1, 1, 1, 1, 1]).unwrap());
        assert!(r3.matches_bits(&[1, 1, 0, 1, 1]).unwrap());
        let all = ConjunctiveRule::match_all(0, 5);
        assert!(all.matches_bits(&[0, 0, 0, 0, 0]).unwrap());
        assert!(all.matches_bits(&[1, 1, 1, 1, 0]).unwrap());
        assert!(r1.matches_bits(&[0, 1]).is_err());
        assert_eq!(r3.mask(), vec![1, 1, -1, 0, 0]);
    }

    fn two_rule_set() -> RuleSet {
        let columns = vec!["a".to_string(), "b".to_string()];
        RuleSet {
            fingerprint: fingerprint_of(columns.iter().map(String::as_str)),
            columns,
            classes: vec!["normal".into(), "attack".into()],
            rules: vec![
                ConjunctiveRule::from_mask(0, &[1, 0]),
                ConjunctiveRule::from_mask(1, &[0, 1]),
            ],
            seed: None,
        }
    }

    #[test]
    fn first_match_wins() {
        let rs = two_rule_set();
        let d = rs.classify(&[0b11]);
        assert_eq!(d.class, Some(0));
        assert_eq!(d.rule, Some(0));
        assert_eq!(d.matches, 2);
        let d = rs.classify(&[0b00]);
        assert!(d.is_unknown());
        assert_eq!(rs.class_name(&d), "UNKNOWN");
        assert_eq!(rs.classify(&[0b10]).class, Some(1));
    }

    #[test]
    fn sparse_notation() {
        let columns = vec!["a".to_string(), "b".to_string()];
        let rs = RuleSet {
            fingerprint: "ff".into(),
            columns,
            classes: vec!["c1".into()],
            rules: vec![ConjunctiveRule::from_mask(0, &[-1, 0])],
            seed: None,
        };
        assert_eq!(rs.to_text(), "RULESET v1\nschema ff\ncolumns 2\ncol 0 a\ncol 1 b\nc1\t-0\n");
    }

    #[test]
    fn parse_errors() {
        let text = two_rule_set().to_text();
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        match RuleSet::from_text(&cut) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(RuleSet::from_text("RULESET v2\n").is_err());
        assert!(RuleSet::from_text("RULESET v1\nschema \ncolumns 0\n").is_err());
        assert!(RuleSet::from_text("RULESET v1\ncolumns 0\n").is_err());
        let bad = text.replace("\t+0", "\t+0 +0");
        assert!(RuleSet::from_text(&bad).is_err());
        let bad = text.replace("\t+0", "\t+7");
        assert!(RuleSet::from_text(&bad).is_err());
        assert!(RuleSet::from_text("").is_err());
    }

    #[test]
    fn one_class_gives_match_all_rule() {
        let x = BinaryFeatureMatrix::from_rows(&[[1u8, 0, 1], [0, 1, 1], [0, 0, 0]], 3);
        let rs = extract_rules(&x, &labels(&["a", "a", "a"]), 3).unwrap();
        assert_eq!(rs.rules.len(), 1);
        assert_eq!(rs.rules[0].n_terms(), 0);
        assert_eq!(rs.to_text().lines().last().unwrap(), "a\t");
    }

    #[test]
    fn contradictory_rows_are_reported() {
        let x = BinaryFeatureMatrix::from_rows(&[[1u8, 0], [0, 1], [1, 0]], 2);
        match extract_rules(&x, &labels(&["a", "b", "c"]), 0) {
            Err(Error::ContradictoryRows { first, second, .. }) => assert_eq!((first, second), (1, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negations_of_one_hot_group_are_compacted() {
        // columns 0..3 are one bin group, column 3 is noise
        let x = BinaryFeatureMatrix::from_rows(
            &[[1u8, 0, 0, 0], [1, 0, 0, 1], [0, 1, 0, 0], [0, 1, 0, 1], [0, 0, 1, 0], [0, 0, 1, 1]],
            4,
        );
        let l = labels(&["s", "s", "v", "v", "v", "v"]);
        for seed in 0..10 {
            let mut plain = extract_rules(&x, &l, seed).unwrap();
            for r in &mut plain.rules {
                compact(r, &[vec![0, 1, 2]]);
            }
            let s = plain.rules.iter().find(|r| plain.classes[r.class] == "s").unwrap();
            assert_eq!(s.terms(), vec![(0, 1)]);
            assert!(coverage_failures(&plain, &x, &l).is_empty());
            assert!(minimality_violations(&plain, &x, &l).is_empty());
        }
    }

    fn labeled_matrix() -> impl Strategy<Value = (BinaryFeatureMatrix, ClassLabeling)> {
        (1usize..70, 1usize..40).prop_flat_map(|(cols, rows)| {
            (
                prop::collection::vec(prop::collection::vec(0u8..2, cols), rows),
                prop::collection::vec(0usize..3, rows),
            )
                .prop_map(move |(bits, cls)| {
                    // make labels a function of the row so duplicates agree
                    let names: Vec<String> = bits
                        .iter()
                        .zip(&cls)
                        .map(|(r, _)| {
                            let h: usize = r.iter().enumerate().map(|(j, &b)| (j + 1) * b as usize).sum();
                            ["p", "q", "r"][h % 3].to_string()
                        })
                        .collect();
                    (BinaryFeatureMatrix::from_rows(&bits, cols), ClassLabeling::from_labels(&names))
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn training_rows_are_covered((x, l) in labeled_matrix(), seed in 0u64..1000) {
            let rs = extract_rules(&x, &l, seed).unwrap();
            prop_assert!(coverage_failures(&rs, &x, &l).is_empty());
            let d = rs.classify_matrix(&x).unwrap();
            prop_assert!(d.iter().all(|d| !d.is_unknown()));
        }

        #[test]
        fn rules_are_minimal((x, l) in labeled_matrix(), seed in 0u64..1000) {
            let rs = extract_rules(&x, &l, seed).unwrap();
            prop_assert!(minimality_violations(&rs, &x, &l).is_empty());
        }

        #[test]
        fn rules_generalize_their_seed((x, l) in labeled_matrix(), seed in 0u64..1000) {
            let rs = extract_rules(&x, &l, seed).unwrap();
            for r in &rs.rules {
                let o = r.origin.unwrap();
                let specific = ConjunctiveRule::seeded(r.class, x.row(o), x.cols(), o);
                for i in 0..x.rows() {
                    if specific.matches(x.row(i)) {
                        prop_assert!(r.matches(x.row(i)));
                    }
                }
            }
        }

        #[test]
        fn extraction_is_deterministic((x, l) in labeled_matrix(), seed in 0u64..1000) {
            prop_assert_eq!(extract_rules(&x, &l, seed).unwrap(), extract_rules(&x, &l, seed).unwrap());
        }

        #[test]
        fn file_round_trip((x, l) in labeled_matrix(), seed in 0u64..1000) {
            let rs = extract_rules(&x, &l, seed).unwrap();
            let text = rs.to_text();
            let back = RuleSet::from_text(&text).unwrap();
            prop_assert_eq!(back.to_text(), text);
            let mut expected = rs.clone();
            expected.seed = None;
            expected.rules.iter_mut().for_each(|r| r.origin = None);
            prop_assert_eq!(back, expected);
        }
    }
}
