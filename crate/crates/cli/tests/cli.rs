use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use difrules::synth::{blobs_csv, kdd_lines, two_blobs, KDD_MIX};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_difrules"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn iris(dir: &Path) -> PathBuf {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/iris.csv");
    let dst = dir.join("iris.csv");
    fs::write(&dst, fs::read_to_string(src).unwrap().replacen("species", "label", 1)).unwrap();
    dst
}

fn train_iris(dir: &Path, model: &Path) -> Output {
    let data = iris(dir);
    run(&[
        "train",
        data.to_str().unwrap(),
        "-m",
        model.to_str().unwrap(),
        "--format",
        "csv",
        "--bins",
        "3",
        "--skip-embedding",
        "--k",
        "3",
        "--labeling",
        "per-cluster",
    ])
}

#[test]
fn iris_train_inspect_classify() {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("model");
    let o = train_iris(tmp.path(), &model);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["schema.txt", "rules.txt", "config.txt", "diag/clusters.tsv", "diag/silhouette.tsv"] {
        assert!(model.join(f).exists(), "{f}");
    }
    let config = fs::read_to_string(model.join("config.txt")).unwrap();
    assert!(config.contains("bins=3\n") && config.contains("resolved_k=3\n"));

    let o = run(&["inspect", "-m", model.to_str().unwrap(), "--grid"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("IF petal_width∈bin1[0.1,0.9)\n"));

    let data = tmp.path().join("iris.csv");
    let o = run(&["classify", data.to_str().unwrap(), "-m", model.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 150);
    assert!(out.lines().all(|l| l.split('\t').count() == 4 && !l.contains("UNKNOWN")));
    assert!(out.starts_with("1\t"));
}

#[test]
fn training_twice_gives_identical_model_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(train_iris(tmp.path(), &a).status.success());
    assert!(train_iris(tmp.path(), &b).status.success());
    for f in ["schema.txt", "rules.txt", "config.txt", "diag/points.tsv", "diag/clusters.tsv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn kdd_with_prompted_labels_evaluates() {
    let tmp = tempfile::tempdir().unwrap();
    let lines = kdd_lines(800, &KDD_MIX, 3);
    let data = tmp.path().join("train.txt");
    fs::write(&data, lines.join("\n")).unwrap();
    let model = tmp.path().join("m");

    // first pass to see the clusters, then answer with those holding normal rows
    let mut child = bin()
        .args(["train", data.to_str().unwrap(), "-m", model.to_str().unwrap(), "--k-max", "6", "--restarts", "3"])
        .args(["--labeling", "manual:auto-prompt"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let prompt = String::from_utf8(o.stderr).unwrap();
    assert!(prompt.contains("cluster 1 (") && prompt.contains("normal cluster(s)"));

    let o = run(&["eval", data.to_str().unwrap(), "-m", model.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert!(report.contains("mcc") && report.contains("unknown (no rule matched): 0"));

    let o = run(&["eval", data.to_str().unwrap(), "-m", model.to_str().unwrap(), "--unknown-policy", "exclude"]);
    assert!(o.status.success());

    let o = run(&["inspect", "-m", model.to_str().unwrap()]);
    let listing = stdout(&o);
    assert!(listing.contains("class normal:") && listing.contains("class attack:"), "{listing}");
}

#[test]
fn split_is_seeded_and_disjoint() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("all.txt");
    fs::write(&data, kdd_lines(300, &KDD_MIX, 1).join("\n")).unwrap();
    let outs = |seed: &str| {
        let (tr, te) = (tmp.path().join(format!("tr{seed}")), tmp.path().join(format!("te{seed}")));
        let o = run(&[
            "split",
            data.to_str().unwrap(),
            "--train",
            "100",
            "--test",
            "100",
            "--seed",
            seed,
            "--train-out",
            tr.to_str().unwrap(),
            "--test-out",
            te.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (fs::read_to_string(tr).unwrap(), fs::read_to_string(te).unwrap())
    };
    let (tr, te) = outs("7");
    assert_eq!((tr.lines().count(), te.lines().count()), (100, 100));
    assert_eq!(outs("7"), (tr.clone(), te.clone()));
    assert_ne!(outs("8").0, tr);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let model = tmp.path().join("m");
    let o = run(&["train", empty.to_str().unwrap(), "-m", model.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&["inspect", "-m", tmp.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));

    let o = run(&["train", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["train", "x", "-m", "y", "--labeling", "sideways"]);
    assert_eq!(o.status.code(), Some(2));

    // a model trained on other columns
    let (x, _) = two_blobs([20, 20], [(0.0, 0.0), (5.0, 5.0)], 0.5, 1);
    let blobs = tmp.path().join("blobs.csv");
    fs::write(&blobs, blobs_csv(&x, None)).unwrap();
    let o = run(&["train", blobs.to_str().unwrap(), "-m", model.to_str().unwrap(), "--format", "csv", "--bins", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["classify", iris(tmp.path()).to_str().unwrap(), "-m", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));

    // rules from one model next to the schema of another
    let other = tmp.path().join("iris_model");
    assert!(train_iris(tmp.path(), &other).status.success());
    fs::copy(other.join("rules.txt"), model.join("rules.txt")).unwrap();
    let o = run(&["inspect", "-m", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));

    fs::write(model.join("rules.txt"), "").unwrap();
    let o = run(&["inspect", "-m", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));

    // unlabeled data cannot be evaluated
    assert!(train_iris(tmp.path(), &other).status.success());
    let o = run(&["eval", blobs.to_str().unwrap(), "-m", other.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn help_lists_defaults() {
    let o = run(&["train", "--help"]);
    let h = stdout(&o);
    for d in ["[default: 10]", "[default: 25000]", "[default: 20]", "[default: largest]"] {
        assert!(h.contains(d), "{d}");
    }
}
