//! Binary confusion matrix (attack is the positive class) and the derived
//! detection metrics, plus a count-only table for multi-class runs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How decisions that matched no rule enter the binary confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownPolicy {
    /// An unmatched point is an anomaly, i.e. a positive prediction.
    #[default]
    AsAttack,
    /// Unmatched points are left out and counted separately.
    Exclude,
}

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownPolicy::AsAttack => "as-attack",
            UnknownPolicy::Exclude => "exclude",
        })
    }
}

impl FromStr for UnknownPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-attack" => Ok(UnknownPolicy::AsAttack),
            "exclude" => Ok(UnknownPolicy::Exclude),
            _ => Err(Error::invalid(format!("unknown policy {s:?} (as-attack|exclude)"))),
        }
    }
}

/// Predicted label of one point: `None` matched no rule.
pub type Prediction = Option<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    /// Points dropped under [`UnknownPolicy::Exclude`].
    pub excluded: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        ConfusionMatrix {
            tp,
            fp,
            tn,
            fn_,
            excluded: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts predictions against the truth, where `true` means attack.
pub fn confusion(
    predicted: &[Prediction],
    truth: &[bool],
    policy: UnknownPolicy,
) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} decisions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, &t) in predicted.iter().zip(truth) {
        let p = match (p, policy) {
            (Some(p), _) => *p,
            (None, UnknownPolicy::AsAttack) => true,
            (None, UnknownPolicy::Exclude) => {
                cm.excluded += 1;
                continue;
            }
        };
        match (p, t) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Metrics as fractions in [0, 1] (MCC in [-1, 1]).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub sensitivity: f64,
    pub fpr: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub mcc: f64,
    /// Names of metrics whose denominator was zero (reported as 0).
    pub degenerate: Vec<&'static str>,
}

fn ratio(num: f64, den: f64, name: &'static str, flags: &mut Vec<&'static str>) -> f64 {
    if den == 0.0 {
        flags.push(name);
        0.0
    } else {
        num / den
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let mut flags = Vec::new();
    let sensitivity = ratio(tp, tp + fn_, "sensitivity", &mut flags);
    let fpr = ratio(fp, fp + tn, "fpr", &mut flags);
    let specificity = if fp + tn == 0.0 {
        flags.push("specificity");
        0.0
    } else {
        1.0 - fpr
    };
    let accuracy = ratio(tp + tn, tp + tn + fp + fn_, "accuracy", &mut flags);
    let precision = ratio(tp, tp + fp, "precision", &mut flags);
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio(tp * tn - fp * fn_, den, "mcc", &mut flags);
    MetricsReport {
        sensitivity,
        fpr,
        specificity,
        accuracy,
        precision,
        mcc,
        degenerate: flags,
    }
}

impl MetricsReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }

    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("sensitivity", self.sensitivity),
            ("fpr", self.fpr),
            ("specificity", self.specificity),
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("mcc", self.mcc),
        ]
    }

    /// `key<TAB>value` lines.
    pub fn to_tsv(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k}\t{v:.6}\n")).collect()
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            let flag = if self.degenerate.contains(&k) { "  (undefined)" } else { "" };
            writeln!(f, "{k:<12} {:>8.2}%{flag}", v * 100.0)?;
        }
        Ok(())
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>16} {:>10} {:>10}", "", "pred normal", "pred attack")?;
        writeln!(f, "{:>16} {:>10} {:>10}", "actual normal", self.tn, self.fp)?;
        writeln!(f, "{:>16} {:>10} {:>10}", "actual attack", self.fn_, self.tp)?;
        if self.excluded > 0 {
            writeln!(f, "excluded (unknown): {}", self.excluded)?;
        }
        Ok(())
    }
}

/// Count table of true class versus predicted class; the last predicted
/// column is UNKNOWN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    pub truth: Vec<String>,
    pub predicted: Vec<String>,
    /// `counts[t][p]`, with `p == predicted.len()` for UNKNOWN.
    pub counts: Vec<Vec<u64>>,
}

pub fn class_table<S: AsRef<str>>(predicted: &[Option<S>], truth: &[S]) -> Result<ClassTable> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid("decision and label counts differ"));
    }
    let mut tv: Vec<String> = Vec::new();
    let mut pv: Vec<String> = Vec::new();
    let idx = |v: &mut Vec<String>, s: &str| match v.iter().position(|x| x == s) {
        Some(i) => i,
        None => {
            v.push(s.to_string());
            v.len() - 1
        }
    };
    let pairs: Vec<(usize, Option<usize>)> = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (idx(&mut tv, t.as_ref()), p.as_ref().map(|p| idx(&mut pv, p.as_ref()))))
        .collect();
    let mut counts = vec![vec![0; pv.len() + 1]; tv.len()];
    for (t, p) in pairs {
        counts[t][p.unwrap_or(pv.len())] += 1;
    }
    Ok(ClassTable {
        truth: tv,
        predicted: pv,
        counts,
    })
}

impl fmt::Display for ClassTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>16}", "truth \\ pred")?;
        for p in self.predicted.iter().map(String::as_str).chain(["UNKNOWN"]) {
            write!(f, " {p:>10}")?;
        }
        writeln!(f)?;
        for (t, row) in self.truth.iter().zip(&self.counts) {
            write!(f, "{t:>16}")?;
            for c in row {
                write!(f, " {c:>10}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let truth = [true, true, true, true, true, true, false, false, false, false];
        let pred: Vec<Prediction> = truth.iter().map(|&t| Some(t)).collect();
        let cm = confusion(&pred, &truth, UnknownPolicy::AsAttack).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(4, 0, 0, 6));
    }

    #[test]
    fn unknown_policies() {
        let truth = [true; 5];
        let pred = [None; 5];
        let cm = confusion(&pred, &truth, UnknownPolicy::AsAttack).unwrap();
        assert_eq!(cm.tp, 5);
        let cm = confusion(&pred, &truth, UnknownPolicy::Exclude).unwrap();
        assert_eq!((cm.total(), cm.excluded), (0, 5));
        assert!(confusion(&pred[..2], &truth, UnknownPolicy::AsAttack).is_err());
    }

    #[test]
    fn empty_matrix_is_degenerate() {
        let m = compute_metrics(&ConfusionMatrix::default());
        assert!(m.entries().iter().all(|(_, v)| *v == 0.0));
        assert!(m.is_degenerate());
        assert_eq!(m.degenerate.len(), 6);
    }

    #[test]
    fn small_hand_computed_case() {
        // tp=2 fp=1 tn=3 fn=1
        let m = compute_metrics(&ConfusionMatrix::new(3, 1, 1, 2));
        assert!((m.sensitivity - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.fpr - 0.25).abs() < 1e-15);
        assert!((m.accuracy - 5.0 / 7.0).abs() < 1e-15);
        assert!((m.mcc - 5.0 / 12f64.sqrt() / 12f64.sqrt()).abs() < 1e-15);
        assert!(!m.is_degenerate());
    }

    #[test]
    fn class_table_counts() {
        let t = class_table(&[Some("1"), Some("2"), None, Some("1")], &["a", "b", "b", "a"]).unwrap();
        assert_eq!(t.truth, ["a", "b"]);
        assert_eq!(t.counts, vec![vec![2, 0, 0], vec![0, 1, 1]]);
    }

    fn cm() -> impl Strategy<Value = ConfusionMatrix> {
        (0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000).prop_map(|(a, b, c, d)| ConfusionMatrix::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn rates_are_bounded(c in cm()) {
            let m = compute_metrics(&c);
            for (k, v) in m.entries() {
                if k == "mcc" {
                    prop_assert!((-1.0..=1.0).contains(&v));
                } else {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            if c.fp + c.tn > 0 {
                prop_assert_eq!(m.specificity, 1.0 - m.fpr);
            }
        }

        #[test]
        fn mcc_symmetry(c in cm()) {
            let swapped = ConfusionMatrix::new(c.tp, c.fn_, c.fp, c.tn);
            prop_assert!((compute_metrics(&c).mcc - compute_metrics(&swapped).mcc).abs() < 1e-12);
        }

        #[test]
        fn mcc_extremes(a in 1u64..1000, b in 1u64..1000) {
            prop_assert_eq!(compute_metrics(&ConfusionMatrix::new(a, 0, 0, b)).mcc, 1.0);
            prop_assert_eq!(compute_metrics(&ConfusionMatrix::new(0, a, b, 0)).mcc, -1.0);
        }
    }
}
