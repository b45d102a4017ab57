//! Published confusion matrices and the metric values reported alongside
//! them (percent, two decimals).

use difrules::metrics::{compute_metrics, ConfusionMatrix};

fn check(cm: ConfusionMatrix, expected: [f64; 6]) {
    let m = compute_metrics(&cm);
    for ((name, got), want) in m.entries().iter().zip(expected) {
        assert!((got * 100.0 - want).abs() <= 0.005, "{name}: {} vs {want}", got * 100.0);
    }
    assert!(!m.is_degenerate());
}

#[test]
fn five_thousand_line_split() {
    check(
        ConfusionMatrix::new(947, 12, 63, 3978),
        [98.44, 1.25, 98.75, 98.50, 99.70, 95.31],
    );
}

#[test]
fn whole_ten_percent_set() {
    let cm = ConfusionMatrix::new(87_228, 5_162, 5_795, 371_135);
    assert_eq!(cm.total(), 469_320);
    check(cm, [98.46, 5.59, 94.41, 97.67, 98.63, 92.64]);
}
