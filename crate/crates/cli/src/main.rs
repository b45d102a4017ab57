use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use difrules::ingest::{load_dataset, subsample_indices, SourceFormat};
use difrules::metrics::UnknownPolicy;
use difrules::pipeline::{
    classify_stream, evaluate, train, Labeling, Model, Precision, RunConfig, StdioPrompt,
};
use difrules::Error;

/// Unsupervised anomaly rules: diffusion map + k-means + conjunctive rule
/// extraction.
#[derive(Parser)]
#[command(name = "difrules", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a schema and ruleset from unlabeled data.
    Train(TrainArgs),
    /// Print one decision line per input row.
    Classify(ClassifyArgs),
    /// Confusion matrix and metrics against labeled data.
    Eval(EvalArgs),
    /// Human-readable rule listing.
    Inspect(InspectArgs),
    /// Seeded random train/test split of a data file.
    Split(SplitArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Training data file.
    data: PathBuf,
    /// Output model directory.
    #[arg(short, long)]
    model: PathBuf,
    /// Input format: kdd, apache or csv.
    #[arg(long, default_value = "kdd")]
    format: SourceFormat,
    /// Equal-width bins per continuous field.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Character n-gram length for raw log text.
    #[arg(long, default_value_t = 2)]
    ngram: usize,
    /// Embed n-gram counts instead of presence bits.
    #[arg(long)]
    ngram_counts: bool,
    /// Kernel width; chosen from the L(ε) curve when omitted.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Embedding dimensions; chosen at the largest eigengap when omitted.
    #[arg(long)]
    dims: Option<usize>,
    /// Fixed number of clusters; searched over --k-min..--k-max when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 20)]
    k_max: usize,
    /// k-means restarts per k.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// largest, per-cluster, manual:<i,j,..> or manual:auto-prompt.
    #[arg(long, default_value = "largest")]
    labeling: String,
    /// Training rows above this are subsampled.
    #[arg(long, default_value_t = 25_000)]
    train_cap: usize,
    /// Read only a seeded random subset of this many rows.
    #[arg(long)]
    limit: Option<usize>,
    /// Cluster the binary features directly.
    #[arg(long)]
    skip_embedding: bool,
    /// Scale eigenvectors so embedded distances are diffusion distances.
    #[arg(long)]
    scaled_eigenvectors: bool,
    /// Single-precision embedding and clustering.
    #[arg(long)]
    f32: bool,
    /// CSV label column (dropped before training).
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Keep the user-agent string in log text features.
    #[arg(long)]
    include_user_agent: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Data file, or - for standard input.
    data: PathBuf,
    #[arg(short, long)]
    model: PathBuf,
    /// Input format; defaults to the one the model was trained on.
    #[arg(long)]
    format: Option<SourceFormat>,
    /// Rows parsed per batch.
    #[arg(long, default_value_t = 65_536)]
    chunk: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled data file.
    data: PathBuf,
    #[arg(short, long)]
    model: PathBuf,
    #[arg(long)]
    format: Option<SourceFormat>,
    /// as-attack or exclude.
    #[arg(long, default_value = "as-attack")]
    unknown_policy: UnknownPolicy,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(short, long)]
    model: PathBuf,
    /// Also print the rule-by-column grid.
    #[arg(long)]
    grid: bool,
}

#[derive(Args)]
struct SplitArgs {
    data: PathBuf,
    #[arg(long)]
    train: usize,
    /// Test rows; all remaining rows when omitted.
    #[arg(long)]
    test: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// The first line is a header and goes to both outputs.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
}

const EXIT_USAGE: u8 = 2;
const EXIT_INGEST: u8 = 3;
const EXIT_TRAIN: u8 = 4;
const EXIT_MODEL: u8 = 5;

struct Failure {
    code: u8,
    stage: &'static str,
    err: anyhow::Error,
}

fn fail<E: Into<anyhow::Error>>(code: u8, stage: &'static str) -> impl FnOnce(E) -> Failure {
    move |e| Failure {
        code,
        stage,
        err: e.into(),
    }
}

/// Model-side errors keep their own code even when raised while classifying.
fn data_or_model(stage: &'static str) -> impl FnOnce(Error) -> Failure {
    move |e| {
        let code = if matches!(e, Error::SchemaMismatch(_)) { EXIT_MODEL } else { EXIT_INGEST };
        fail(code, stage)(e)
    }
}

fn run_train(a: TrainArgs) -> Result<(), Failure> {
    let labeling: Labeling = a.labeling.parse().map_err(fail(EXIT_USAGE, "usage"))?;
    let cfg = RunConfig {
        format: a.format,
        n_bins: a.bins,
        ngram_n: a.ngram,
        ngram_counts: a.ngram_counts,
        epsilon: a.epsilon,
        dims: a.dims,
        k: a.k,
        k_min: a.k_min,
        k_max: a.k_max,
        restarts: a.restarts,
        seed: a.seed,
        labeling,
        unknown_policy: UnknownPolicy::AsAttack,
        train_cap: a.train_cap,
        limit: a.limit,
        skip_embedding: a.skip_embedding,
        scaled_eigenvectors: a.scaled_eigenvectors,
        precision: if a.f32 { Precision::F32 } else { Precision::F64 },
        label_column: a.label_column,
        include_user_agent: a.include_user_agent,
    };
    let data = load_dataset(&a.data, cfg.format, cfg.limit, cfg.seed, &cfg.load_options())
        .map_err(fail(EXIT_INGEST, "ingest"))?;
    log::info!("{} training rows", data.len());
    let trained = if cfg.labeling == Labeling::AutoPrompt {
        let stdin = io::stdin();
        let mut prompt = StdioPrompt {
            input: stdin.lock(),
            out: io::stderr(),
        };
        train(&data, &cfg, Some(&mut prompt))
    } else {
        train(&data, &cfg, None)
    }
    .map_err(fail(EXIT_TRAIN, "train"))?;
    trained.write(&a.model).map_err(fail(EXIT_TRAIN, "write model"))?;
    println!(
        "{} rules over {} columns from {} rows (k={}) -> {}",
        trained.rules.rules.len(),
        trained.matrix.cols(),
        trained.matrix.rows(),
        trained.k,
        a.model.display()
    );
    Ok(())
}

fn load_model(dir: &Path) -> Result<Model, Failure> {
    Model::load(dir).map_err(fail(EXIT_MODEL, "model"))
}

fn resolve_format(model: &Model, f: Option<SourceFormat>) -> Result<SourceFormat, Failure> {
    f.or_else(|| model.format())
        .ok_or_else(|| fail(EXIT_USAGE, "usage")(anyhow::anyhow!("model has no recorded format; pass --format")))
}

fn run_classify(a: ClassifyArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    let format = resolve_format(&model, a.format)?;
    let out = BufWriter::new(io::stdout().lock());
    let n = if a.data.as_os_str() == "-" {
        classify_stream(&model, format, io::stdin().lock(), out, a.chunk)
    } else {
        let f = fs::File::open(&a.data).map_err(fail(EXIT_INGEST, "ingest"))?;
        classify_stream(&model, format, BufReader::new(f), out, a.chunk)
    }
    .map_err(data_or_model("classify"))?;
    log::info!("{n} rows classified");
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    let format = resolve_format(&model, a.format)?;
    let data = load_dataset(&a.data, format, None, 0, &model.load_options()).map_err(fail(EXIT_INGEST, "ingest"))?;
    if !data.is_labeled() {
        return Err(fail(EXIT_INGEST, "eval")(anyhow::anyhow!("{} carries no labels", a.data.display())));
    }
    let report = evaluate(&model, &data, a.unknown_policy).map_err(data_or_model("eval"))?;
    print!("{report}");
    Ok(())
}

fn run_inspect(a: InspectArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    print!("{}", model.describe());
    if a.grid {
        print!("{}", model.grid());
    }
    Ok(())
}

fn run_split(a: SplitArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.data).map_err(fail(EXIT_INGEST, "ingest"))?;
    let mut lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let header = if a.header && !lines.is_empty() { Some(lines.remove(0)) } else { None };
    let n = lines.len();
    let want = a.train + a.test.unwrap_or(0);
    if a.train >= n || want > n {
        return Err(fail(EXIT_USAGE, "usage")(anyhow::anyhow!("{n} rows cannot supply the requested split")));
    }
    // one seeded draw of train+test rows, then a second to pick the train part
    let pool = match a.test {
        Some(_) => subsample_indices(n, want, a.seed),
        None => (0..n).collect(),
    };
    let train_pos = subsample_indices(pool.len(), a.train, a.seed.wrapping_add(1));
    let mut in_train = vec![false; pool.len()];
    for p in train_pos {
        in_train[p] = true;
    }
    let write = |path: &Path, pick: bool| -> io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        if let Some(h) = header {
            writeln!(w, "{h}")?;
        }
        for (p, &i) in pool.iter().enumerate() {
            if in_train[p] == pick {
                writeln!(w, "{}", lines[i])?;
            }
        }
        w.flush()
    };
    write(&a.train_out, true).map_err(fail(EXIT_INGEST, "split"))?;
    write(&a.test_out, false).map_err(fail(EXIT_INGEST, "split"))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Train(a) => run_train(a),
        Cmd::Classify(a) => run_classify(a),
        Cmd::Eval(a) => run_eval(a),
        Cmd::Inspect(a) => run_inspect(a),
        Cmd::Split(a) => run_split(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("difrules: {} failed: {}", f.stage, f.err);
            ExitCode::from(f.code)
        }
    }
}
