//! End-to-end training and testing on top of the individual stages, and the
//! on-disk model directory.
//!
//! ```text
//! <model>/schema.txt      fitted feature schema
//! <model>/rules.txt       ordered ruleset
//! <model>/config.txt      resolved run configuration, sorted key=value
//! <model>/diag/epsilon.tsv      ε scan (ε, L)
//! <model>/diag/eigenvalues.tsv  leading eigenvalues
//! <model>/diag/silhouette.tsv   k versus mean silhouette
//! <model>/diag/clusters.tsv     cluster sizes and classes
//! <model>/diag/points.tsv       per-row cluster and coordinates
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use ndarray::Array2;

use crate::clustering::{
    kmeans, label_clusters, select_k, silhouette, ClassLabeling, LabelStrategy, ATTACK, NORMAL,
};
use crate::embedding::{embed, DiffusionConfig};
use crate::error::{Error, Result};
use crate::features::{fit_schema, BinaryFeatureMatrix, FeatureConfig, FeatureSchema, FieldKind};
use crate::ingest::{
    format_kdd_record, parse_dataset, subsample_indices, ApacheOptions, CsvOptions, Dataset,
    LoadOptions, SourceFormat, KDD_NORMAL_LABEL,
};
use crate::metrics::{class_table, compute_metrics, confusion, ClassTable, ConfusionMatrix, MetricsReport, UnknownPolicy};
use crate::rules::{extract_rules_for_schema, ClassDecision, RuleSet};
use crate::scalar::Scalar;

pub const SCHEMA_FILE: &str = "schema.txt";
pub const RULES_FILE: &str = "rules.txt";
pub const CONFIG_FILE: &str = "config.txt";
pub const DIAG_DIR: &str = "diag";

/// How the training clusters are turned into classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Labeling {
    Strategy(LabelStrategy),
    /// Show the clusters and ask for the normal ones once (see [`ClusterPrompt`]).
    AutoPrompt,
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Labeling::Strategy(s) => s.fmt(f),
            Labeling::AutoPrompt => f.write_str("manual:auto-prompt"),
        }
    }
}

impl FromStr for Labeling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "manual:auto-prompt" {
            Ok(Labeling::AutoPrompt)
        } else {
            s.parse().map(Labeling::Strategy)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub format: SourceFormat,
    pub n_bins: usize,
    pub ngram_n: usize,
    pub ngram_counts: bool,
    pub epsilon: Option<f64>,
    pub dims: Option<usize>,
    /// Fixed number of clusters; `None` searches `k_min..=k_max`.
    pub k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub seed: u64,
    pub labeling: Labeling,
    pub unknown_policy: UnknownPolicy,
    pub train_cap: usize,
    pub limit: Option<usize>,
    pub skip_embedding: bool,
    pub scaled_eigenvectors: bool,
    pub precision: Precision,
    pub label_column: String,
    pub include_user_agent: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format: SourceFormat::Kdd,
            n_bins: 10,
            ngram_n: 2,
            ngram_counts: false,
            epsilon: None,
            dims: None,
            k: None,
            k_min: 2,
            k_max: 20,
            restarts: 10,
            seed: 1,
            labeling: Labeling::Strategy(LabelStrategy::LargestIsNormal),
            unknown_policy: UnknownPolicy::AsAttack,
            train_cap: 25_000,
            limit: None,
            skip_embedding: false,
            scaled_eigenvectors: false,
            precision: Precision::F64,
            label_column: "label".into(),
            include_user_agent: false,
        }
    }
}

impl RunConfig {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            apache: ApacheOptions {
                include_user_agent: self.include_user_agent,
            },
            csv: CsvOptions {
                label_column: self.label_column.clone(),
                categorical_columns: None,
            },
        }
    }

    fn entries(&self) -> BTreeMap<&'static str, String> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        BTreeMap::from([
            ("format", self.format.to_string()),
            ("bins", self.n_bins.to_string()),
            ("ngram", self.ngram_n.to_string()),
            ("ngram_counts", self.ngram_counts.to_string()),
            ("epsilon", opt(self.epsilon.map(|e| e.to_string()))),
            ("dims", opt(self.dims.map(|d| d.to_string()))),
            ("k", opt(self.k.map(|k| k.to_string()))),
            ("k_min", self.k_min.to_string()),
            ("k_max", self.k_max.to_string()),
            ("restarts", self.restarts.to_string()),
            ("seed", self.seed.to_string()),
            ("labeling", self.labeling.to_string()),
            ("unknown_policy", self.unknown_policy.to_string()),
            ("train_cap", self.train_cap.to_string()),
            ("limit", self.limit.map_or("none".into(), |l| l.to_string())),
            ("skip_embedding", self.skip_embedding.to_string()),
            ("scaled_eigenvectors", self.scaled_eigenvectors.to_string()),
            (
                "precision",
                match self.precision {
                    Precision::F32 => "f32",
                    Precision::F64 => "f64",
                }
                .into(),
            ),
            ("label_column", self.label_column.clone()),
            ("include_user_agent", self.include_user_agent.to_string()),
        ])
    }
}

/// What the expert sees when choosing normal clusters by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    /// One-based.
    pub ordinal: usize,
    pub size: usize,
    /// A few member records rendered in their source format.
    pub representatives: Vec<String>,
    /// Indices of all members in the training set.
    pub members: Vec<usize>,
}

/// Answers the normal-cluster question for `manual:auto-prompt`.
pub trait ClusterPrompt {
    fn normal_clusters(&mut self, clusters: &[ClusterSummary]) -> Result<Vec<usize>>;
}

impl<F: FnMut(&[ClusterSummary]) -> Result<Vec<usize>>> ClusterPrompt for F {
    fn normal_clusters(&mut self, clusters: &[ClusterSummary]) -> Result<Vec<usize>> {
        self(clusters)
    }
}

/// Prints the clusters to `out` and reads one line of ordinals from `input`.
pub struct StdioPrompt<R, W> {
    pub input: R,
    pub out: W,
}

impl<R: BufRead, W: Write> ClusterPrompt for StdioPrompt<R, W> {
    fn normal_clusters(&mut self, clusters: &[ClusterSummary]) -> Result<Vec<usize>> {
        let io = |e| Error::io("<prompt>", e);
        for c in clusters {
            writeln!(self.out, "cluster {} ({} rows)", c.ordinal, c.size).map_err(io)?;
            for r in &c.representatives {
                writeln!(self.out, "    {r}").map_err(io)?;
            }
        }
        write!(self.out, "normal cluster(s), comma-separated: ").map_err(io)?;
        self.out.flush().map_err(io)?;
        let mut line = String::new();
        self.input.read_line(&mut line).map_err(io)?;
        match format!("manual:{}", line.trim()).parse::<LabelStrategy>()? {
            LabelStrategy::Manual(v) => Ok(v),
            _ => unreachable!(),
        }
    }
}

/// Tab-separated diagnostics written under `diag/`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub epsilon: String,
    pub eigenvalues: String,
    pub silhouette: String,
    pub clusters: String,
    pub points: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: RunConfig,
    pub schema: FeatureSchema,
    pub rules: RuleSet,
    /// Class of every training row as handed to rule extraction.
    pub labeling: ClassLabeling,
    pub matrix: BinaryFeatureMatrix,
    /// Zero-based cluster of every training row.
    pub assignment: Vec<usize>,
    pub k: usize,
    pub epsilon: Option<f64>,
    pub dims: Option<usize>,
    pub resolved_labeling: String,
    pub diagnostics: Diagnostics,
}

struct Clustered {
    assignment: Vec<usize>,
    k: usize,
    epsilon: Option<f64>,
    dims: Option<usize>,
    diag: Diagnostics,
}

fn cluster_stage<T: Scalar>(
    matrix: &BinaryFeatureMatrix,
    counts: Option<Array2<T>>,
    cfg: &RunConfig,
) -> Result<Clustered> {
    let n = matrix.rows();
    let mut diag = Diagnostics {
        epsilon: "epsilon\tL\n".into(),
        eigenvalues: "index\teigenvalue\n".into(),
        ..Diagnostics::default()
    };
    let (points, epsilon, dims): (Array2<T>, Option<f64>, Option<usize>) = if cfg.skip_embedding {
        (counts.unwrap_or_else(|| matrix.to_dense()), None, None)
    } else {
        let dc = DiffusionConfig::<T> {
            epsilon: cfg.epsilon.map(T::of),
            dims: cfg.dims,
            scaled_eigenvectors: cfg.scaled_eigenvectors,
            seed: cfg.seed,
            ..DiffusionConfig::default()
        };
        let (emb, spec, scan) = match &counts {
            Some(c) => embed(c, &dc)?,
            None => embed(matrix, &dc)?,
        };
        diag.epsilon = scan.to_tsv();
        diag.eigenvalues = spec.eigenvalues_tsv();
        info!(
            "embedding: epsilon {:e}, {} dimensions",
            scan.chosen_epsilon.as_f64(),
            emb.dims
        );
        (emb.coords, Some(scan.chosen_epsilon.as_f64()), Some(emb.dims))
    };

    let model = match cfg.k {
        Some(k) => {
            let m = kmeans(points.view(), k, cfg.seed, cfg.restarts)?;
            let s = if k >= 2 { Some(silhouette(points.view(), &m.assignment)?.mean) } else { None };
            diag.silhouette = format!("k\tsilhouette\n{k}\t{}\n", s.map_or("nan".into(), |s| s.as_f64().to_string()));
            m
        }
        None => {
            let k_max = cfg.k_max.min(n.saturating_sub(1));
            let sel = select_k(points.view(), cfg.k_min, k_max, cfg.seed, cfg.restarts)?;
            diag.silhouette = sel.curve_tsv();
            info!("selected k = {}", sel.k);
            sel.model
        }
    };
    let mut pts = String::from("row\tcluster");
    if !cfg.skip_embedding {
        for c in 0..points.ncols() {
            pts.push_str(&format!("\tc{}", c + 1));
        }
    }
    pts.push('\n');
    for (i, &a) in model.assignment.iter().enumerate() {
        pts.push_str(&format!("{}\t{}", i + 1, a + 1));
        if !cfg.skip_embedding {
            for v in points.row(i) {
                pts.push_str(&format!("\t{:e}", v.as_f64()));
            }
        }
        pts.push('\n');
    }
    diag.points = pts;
    Ok(Clustered {
        assignment: model.assignment,
        k: model.k,
        epsilon,
        dims,
        diag,
    })
}

/// Makes duplicate binary rows agree on their cluster: each group of
/// identical rows takes its majority cluster (earliest row's on ties).
pub fn reconcile_duplicates(matrix: &BinaryFeatureMatrix, assignment: &mut [usize]) -> usize {
    let mut groups: HashMap<&[u64], Vec<usize>> = HashMap::new();
    for i in 0..matrix.rows() {
        groups.entry(matrix.row(i)).or_default().push(i);
    }
    let mut changed = 0;
    let mut keys: Vec<&Vec<usize>> = groups.values().collect();
    keys.sort_by_key(|g| g[0]);
    for members in keys {
        let mut votes: Vec<(usize, usize, usize)> = Vec::new(); // cluster, count, first
        for (pos, &i) in members.iter().enumerate() {
            match votes.iter_mut().find(|v| v.0 == assignment[i]) {
                Some(v) => v.1 += 1,
                None => votes.push((assignment[i], 1, pos)),
            }
        }
        if votes.len() > 1 {
            let winner = votes
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
                .unwrap()
                .0;
            for &i in members {
                if assignment[i] != winner {
                    assignment[i] = winner;
                    changed += 1;
                }
            }
        }
    }
    changed
}

fn render_record(data: &Dataset, i: usize) -> String {
    let r = &data.records[i];
    match data.format {
        SourceFormat::Kdd => {
            let mut line = format_kdd_record(r);
            if let Some((body, _)) = line.rsplit_once(',').filter(|_| r.label.is_some()) {
                line = body.to_string();
            }
            line
        }
        SourceFormat::Apache => r.text.clone().unwrap_or_default(),
        SourceFormat::Csv => {
            let mut parts: Vec<String> = r.continuous.iter().map(|v| v.to_string()).collect();
            parts.extend(r.categorical.iter().cloned());
            parts.join(",")
        }
    }
}

/// Summaries of every cluster, with up to `reps` member rows each.
pub fn summarize_clusters(data: &Dataset, assignment: &[usize], k: usize, reps: usize) -> Vec<ClusterSummary> {
    (0..k)
        .map(|c| {
            let members: Vec<usize> = (0..assignment.len()).filter(|&i| assignment[i] == c).collect();
            ClusterSummary {
                ordinal: c + 1,
                size: members.len(),
                representatives: members.iter().take(reps).map(|&i| render_record(data, i)).collect(),
                members,
            }
        })
        .collect()
}

/// Learns a schema and ruleset from `data`. Labels present in `data` are
/// dropped before anything else happens.
pub fn train(data: &Dataset, cfg: &RunConfig, prompt: Option<&mut dyn ClusterPrompt>) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("training data".into()));
    }
    data.validate()?;
    let mut train = data.without_labels();
    if train.len() > cfg.train_cap {
        warn!("subsampling {} training rows to the cap of {}", train.len(), cfg.train_cap);
        train = train.select(&subsample_indices(train.len(), cfg.train_cap, cfg.seed));
    }
    let fc = FeatureConfig {
        n_bins: cfg.n_bins,
        ngram_n: cfg.ngram_n,
        ngram_counts: cfg.ngram_counts,
    };
    let schema = fit_schema(&train, &fc)?;
    let matrix = schema.binarize(&train)?;
    info!("training matrix: {} x {}", matrix.rows(), matrix.cols());

    let counts = cfg.ngram_counts && train.has_text;
    let mut clustered = match cfg.precision {
        Precision::F64 => {
            let c = if counts { Some(schema.count_matrix::<f64>(&train)?) } else { None };
            cluster_stage::<f64>(&matrix, c, cfg)?
        }
        Precision::F32 => {
            let c = if counts { Some(schema.count_matrix::<f32>(&train)?) } else { None };
            cluster_stage::<f32>(&matrix, c, cfg)?
        }
    };
    let moved = reconcile_duplicates(&matrix, &mut clustered.assignment);
    if moved > 0 {
        warn!("{moved} duplicate rows reassigned to their majority cluster");
    }
    let k = clustered.k;

    let strategy = match &cfg.labeling {
        Labeling::Strategy(s) => s.clone(),
        Labeling::AutoPrompt => {
            let prompt = prompt.ok_or_else(|| Error::invalid("auto-prompt labeling needs a prompt"))?;
            let summaries = summarize_clusters(&train, &clustered.assignment, k, 3);
            LabelStrategy::Manual(prompt.normal_clusters(&summaries)?)
        }
    };
    let labeling = label_clusters(&clustered.assignment, k, &strategy)?;
    let rules = extract_rules_for_schema(&matrix, &labeling, cfg.seed, &schema)?;
    info!("{} rules", rules.rules.len());

    let sizes = {
        let mut s = vec![0usize; k];
        for &a in &clustered.assignment {
            s[a] += 1;
        }
        s
    };
    let mut clusters = String::from("cluster\tsize\tclass\n");
    for (c, size) in sizes.iter().enumerate() {
        clusters.push_str(&format!("{}\t{size}\t{}\n", c + 1, labeling.classes[labeling.cluster_class[c]]));
    }
    clustered.diag.clusters = clusters;

    Ok(TrainedModel {
        config: cfg.clone(),
        schema,
        rules,
        labeling,
        matrix,
        assignment: clustered.assignment,
        k,
        epsilon: clustered.epsilon,
        dims: clustered.dims,
        resolved_labeling: strategy.to_string(),
        diagnostics: clustered.diag,
    })
}

impl TrainedModel {
    pub fn config_text(&self) -> String {
        let mut e = self.config.entries();
        e.insert("resolved_epsilon", self.epsilon.map_or("none".into(), |v| format!("{v:e}")));
        e.insert("resolved_dims", self.dims.map_or("none".into(), |v| v.to_string()));
        e.insert("resolved_k", self.k.to_string());
        e.insert("resolved_labeling", self.resolved_labeling.clone());
        e.insert("train_rows", self.matrix.rows().to_string());
        e.insert("columns", self.matrix.cols().to_string());
        e.insert("rules", self.rules.rules.len().to_string());
        e.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let diag = dir.join(DIAG_DIR);
        fs::create_dir_all(&diag).map_err(|e| Error::io(&diag, e))?;
        let put = |p: std::path::PathBuf, s: &str| fs::write(&p, s).map_err(|e| Error::io(&p, e));
        put(dir.join(SCHEMA_FILE), &self.schema.to_text())?;
        put(dir.join(RULES_FILE), &self.rules.to_text())?;
        put(dir.join(CONFIG_FILE), &self.config_text())?;
        let d = &self.diagnostics;
        put(diag.join("epsilon.tsv"), &d.epsilon)?;
        put(diag.join("eigenvalues.tsv"), &d.eigenvalues)?;
        put(diag.join("silhouette.tsv"), &d.silhouette)?;
        put(diag.join("clusters.tsv"), &d.clusters)?;
        put(diag.join("points.tsv"), &d.points)?;
        Ok(())
    }
}

/// A persisted schema and ruleset, ready to classify.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub schema: FeatureSchema,
    pub rules: RuleSet,
    pub config: BTreeMap<String, String>,
}

impl Model {
    pub fn from_parts(schema: FeatureSchema, rules: RuleSet) -> Result<Model> {
        if schema.fingerprint() != rules.fingerprint
            || schema.column_names() != rules.columns.iter().map(String::as_str).collect::<Vec<_>>()
        {
            return Err(Error::SchemaMismatch(format!(
                "ruleset fingerprint {} does not match schema {}",
                rules.fingerprint,
                schema.fingerprint()
            )));
        }
        Ok(Model {
            schema,
            rules,
            config: BTreeMap::new(),
        })
    }

    pub fn load(dir: &Path) -> Result<Model> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        };
        let schema = FeatureSchema::from_text(&read(SCHEMA_FILE)?)?;
        let rules = RuleSet::from_text(&read(RULES_FILE)?)?;
        let mut model = Model::from_parts(schema, rules)?;
        if let Ok(text) = read(CONFIG_FILE) {
            model.config = text
                .lines()
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
        }
        Ok(model)
    }

    pub fn format(&self) -> Option<SourceFormat> {
        self.config.get("format").and_then(|f| f.parse().ok())
    }

    /// Parsing options matching those used for training.
    pub fn load_options(&self) -> LoadOptions {
        let categorical = self
            .schema
            .field_groups()
            .into_iter()
            .filter(|g| g.kind == FieldKind::Categorical)
            .map(|g| g.name)
            .collect();
        LoadOptions {
            apache: ApacheOptions {
                include_user_agent: self.config.get("include_user_agent").is_some_and(|v| v == "true"),
            },
            csv: CsvOptions {
                label_column: self.config.get("label_column").cloned().unwrap_or_else(|| "label".into()),
                categorical_columns: Some(categorical),
            },
        }
    }

    pub fn classify(&self, data: &Dataset) -> Result<Vec<ClassDecision>> {
        let x = self.schema.binarize(data)?;
        self.rules.classify_matrix(&x)
    }

    /// One line per rule, `class=<c> IF <cond> AND ...`, then per-class counts.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.rules.rules.iter().enumerate() {
            let conds: Vec<String> = r
                .terms()
                .into_iter()
                .map(|(j, t)| {
                    let c = self.schema.describe_column(j);
                    if t > 0 { c } else { format!("NOT {c}") }
                })
                .collect();
            let body = if conds.is_empty() { "TRUE".to_string() } else { conds.join(" AND ") };
            s.push_str(&format!("rule {}: class={} IF {body}\n", i + 1, self.rules.classes[r.class]));
        }
        s.push_str(&format!("{} rules\n", self.rules.rules.len()));
        for (c, n) in self.rules.rules_per_class() {
            s.push_str(&format!("  class {c}: {n}\n"));
        }
        s
    }

    /// One row per rule and one cell per column: `+`, `-` or `.`.
    pub fn grid(&self) -> String {
        self.rules
            .rules
            .iter()
            .map(|r| {
                let cells: String = r
                    .mask()
                    .iter()
                    .map(|&t| match t {
                        1 => '+',
                        -1 => '-',
                        _ => '.',
                    })
                    .collect();
                format!("{}\t{cells}\n", self.rules.classes[r.class])
            })
            .collect()
    }
}

/// Decision line: `<row>\t<class>\t<rule|UNKNOWN>\t<matches>` (one-based).
pub fn decision_line(rules: &RuleSet, row: usize, d: &ClassDecision) -> String {
    format!(
        "{row}\t{}\t{}\t{}",
        rules.class_name(d),
        d.rule.map_or("UNKNOWN".into(), |r| (r + 1).to_string()),
        d.matches
    )
}

/// Classifies `input` in chunks of `chunk` lines, writing one decision line
/// per parsed record. Returns the number of records classified.
pub fn classify_stream<R: BufRead, W: Write>(
    model: &Model,
    format: SourceFormat,
    input: R,
    mut out: W,
    chunk: usize,
) -> Result<usize> {
    let opts = model.load_options();
    let mut lines = input.lines();
    let mut header: Option<String> = None;
    let mut row = 0;
    let io = |e| Error::io("<stream>", e);
    if format == SourceFormat::Csv {
        header = match lines.next() {
            Some(h) => Some(h.map_err(io)?),
            None => return Ok(0),
        };
    }
    loop {
        let mut buf = String::new();
        if let Some(h) = &header {
            buf.push_str(h);
            buf.push('\n');
        }
        let mut taken = 0;
        for l in lines.by_ref() {
            buf.push_str(&l.map_err(io)?);
            buf.push('\n');
            taken += 1;
            if taken == chunk {
                break;
            }
        }
        if taken == 0 {
            break;
        }
        let data = parse_dataset(&buf, format, None, 0, &opts)?;
        let x = model.schema.binarize(&data)?;
        let decisions = model.rules.classify_matrix(&x)?;
        for d in &decisions {
            row += 1;
            writeln!(out, "{}", decision_line(&model.rules, row, d)).map_err(io)?;
        }
        if taken < chunk {
            break;
        }
    }
    out.flush().map_err(io)?;
    Ok(row)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalReport {
    /// The ruleset speaks normal/attack: binary confusion and metrics.
    Binary {
        confusion: ConfusionMatrix,
        metrics: MetricsReport,
        unknown: usize,
    },
    /// Any other class vocabulary: counts only.
    MultiClass { table: ClassTable, unknown: usize },
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalReport::Binary {
                confusion,
                metrics,
                unknown,
            } => {
                write!(f, "{confusion}")?;
                writeln!(f, "unknown (no rule matched): {unknown}")?;
                write!(f, "{metrics}")
            }
            EvalReport::MultiClass { table, unknown } => {
                write!(f, "{table}")?;
                writeln!(f, "unknown (no rule matched): {unknown}")
            }
        }
    }
}

/// Scores the ruleset against the labels carried by `data`.
pub fn evaluate(model: &Model, data: &Dataset, policy: UnknownPolicy) -> Result<EvalReport> {
    let labels = data
        .labels()
        .filter(|_| !data.is_empty())
        .ok_or_else(|| Error::invalid("evaluation data carries no labels"))?;
    let decisions = model.classify(data)?;
    let unknown = decisions.iter().filter(|d| d.is_unknown()).count();
    let binary = model.rules.classes.iter().all(|c| c == NORMAL || c == ATTACK);
    if binary {
        let truth: Vec<bool> = labels.iter().map(|l| *l != KDD_NORMAL_LABEL).collect();
        let pred: Vec<Option<bool>> = decisions
            .iter()
            .map(|d| d.class.map(|c| model.rules.classes[c] != NORMAL))
            .collect();
        let cm = confusion(&pred, &truth, policy)?;
        Ok(EvalReport::Binary {
            metrics: compute_metrics(&cm),
            confusion: cm,
            unknown,
        })
    } else {
        let pred: Vec<Option<&str>> = decisions
            .iter()
            .map(|d| d.class.map(|c| model.rules.classes[c].as_str()))
            .collect();
        Ok(EvalReport::MultiClass {
            table: class_table(&pred, &labels)?,
            unknown,
        })
    }
}

/// Clusters whose members are mostly labeled normal. Only for simulating the
/// expert in experiments; training never looks at labels.
pub fn majority_normal_clusters(labels: &[&str], summaries: &[ClusterSummary]) -> Vec<usize> {
    summaries
        .iter()
        .filter(|s| {
            let normal = s.members.iter().filter(|&&i| labels[i] == KDD_NORMAL_LABEL).count();
            2 * normal > s.size
        })
        .map(|s| s.ordinal)
        .collect()
}
