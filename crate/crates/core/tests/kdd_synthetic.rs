//! End-to-end runs on generated KDD-shaped traffic.

use difrules::ingest::{parse_dataset, Dataset, LoadOptions, SourceFormat, KDD_NORMAL_LABEL};
use difrules::metrics::UnknownPolicy;
use difrules::pipeline::{
    evaluate, majority_normal_clusters, train, ClusterSummary, EvalReport, Labeling, Model, RunConfig,
    TrainedModel,
};
use difrules::rules::{coverage_failures, minimality_violations};
use difrules::synth::{kdd_lines, KDD_MIX};

fn parse(lines: &[String]) -> Dataset {
    parse_dataset(&lines.join("\n"), SourceFormat::Kdd, None, 0, &LoadOptions::default()).unwrap()
}

fn train_with_expert(data: &Dataset, cfg: &RunConfig) -> TrainedModel {
    let labels: Vec<String> = data.records.iter().map(|r| r.label.clone().unwrap()).collect();
    let mut expert = |s: &[ClusterSummary]| {
        let l: Vec<&str> = labels.iter().map(String::as_str).collect();
        Ok(majority_normal_clusters(&l, s))
    };
    let cfg = RunConfig {
        labeling: Labeling::AutoPrompt,
        ..cfg.clone()
    };
    train(data, &cfg, Some(&mut expert)).unwrap()
}

#[test]
fn train_test_split_detects_attacks() {
    let lines = kdd_lines(2000, &KDD_MIX, 11);
    let (train_part, test_part) = lines.split_at(1000);
    let cfg = RunConfig {
        seed: 4,
        ..RunConfig::default()
    };
    let m = train_with_expert(&parse(train_part), &cfg);
    assert!(coverage_failures(&m.rules, &m.matrix, &m.labeling).is_empty());
    assert!(minimality_violations(&m.rules, &m.matrix, &m.labeling).is_empty());
    assert!(m.rules.rules.len() < 100, "{} rules", m.rules.rules.len());

    let model = Model::from_parts(m.schema.clone(), m.rules.clone()).unwrap();
    match evaluate(&model, &parse(test_part), UnknownPolicy::AsAttack).unwrap() {
        EvalReport::Binary { metrics, confusion, .. } => {
            assert_eq!(confusion.total(), 1000);
            assert!(metrics.sensitivity >= 0.95, "{metrics}");
            assert!(metrics.fpr <= 0.05, "{metrics}");
            assert!(metrics.mcc >= 0.9, "{metrics}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn labels_never_reach_training() {
    let lines = kdd_lines(400, &KDD_MIX, 5);
    let stripped: Vec<String> = lines
        .iter()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect();
    let cfg = RunConfig {
        k_max: 6,
        restarts: 3,
        ..RunConfig::default()
    };
    let a = train(&parse(&lines), &cfg, None).unwrap();
    let b = train(&parse(&stripped), &cfg, None).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    a.write(dir_a.path()).unwrap();
    b.write(dir_b.path()).unwrap();
    assert_same_tree(dir_a.path(), dir_b.path());
}

#[test]
fn training_is_deterministic() {
    let data = parse(&kdd_lines(400, &KDD_MIX, 6));
    let cfg = RunConfig {
        k_max: 6,
        restarts: 3,
        seed: 9,
        ..RunConfig::default()
    };
    let dirs: Vec<_> = (0..2)
        .map(|_| {
            let d = tempfile::tempdir().unwrap();
            train(&data, &cfg, None).unwrap().write(d.path()).unwrap();
            d
        })
        .collect();
    assert_same_tree(dirs[0].path(), dirs[1].path());
}

#[test]
fn ruleset_grows_slower_than_the_data() {
    let lines = kdd_lines(4000, &KDD_MIX, 21);
    let cfg = RunConfig {
        seed: 2,
        ..RunConfig::default()
    };
    let per_row: Vec<f64> = [1000, 2000, 4000]
        .iter()
        .map(|&n| {
            let m = train_with_expert(&parse(&lines[..n]), &cfg);
            m.rules.rules.len() as f64 / n as f64
        })
        .collect();
    assert!(per_row.windows(2).all(|w| w[1] <= w[0]), "{per_row:?}");
}

#[test]
fn normal_label_is_recognized() {
    let data = parse(&kdd_lines(50, &KDD_MIX, 1));
    let labels = data.labels().unwrap();
    assert!(labels.contains(&KDD_NORMAL_LABEL));
}

fn assert_same_tree(a: &std::path::Path, b: &std::path::Path) {
    let mut files = Vec::new();
    for entry in walk(a) {
        let rel = entry.strip_prefix(a).unwrap().to_path_buf();
        files.push(rel);
    }
    files.sort();
    assert!(files.len() >= 8);
    for rel in files {
        let x = std::fs::read(a.join(&rel)).unwrap();
        let y = std::fs::read(b.join(&rel)).unwrap();
        assert!(x == y, "{} differs", rel.display());
    }
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
