//! Command-line runner: dataset generation, training, evaluation, the
//! robustness grid, and interpretability exports.
//!
//! Every invocation lands in a run directory (under `SARN_RUN_DIR`, or
//! `./runs`) named by a hash of the behavior-affecting settings, and leaves
//! exactly one `manifest.json` there describing what ran. Exit codes are a
//! stable scripting contract: 0 success, 2 usage problems, 3 refusing to
//! overwrite without `--force`, 4 incompatible inputs (mismatched sizes,
//! foreign checkpoints, undecodable files).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sarn::dataset::vocab::{qtype, COLOR_NAMES};
use sarn::dataset::{read_dataset, write_dataset, Dataset, DatasetConfig, Split};
use sarn::introspect::{build_report, export_report, localization_score};
use sarn::models::{
    model_config_to_string, parse_model_config, ModelConfig, ModelKind, ModelParams,
};
use sarn::tensor::read_checkpoint;
use sarn::train::{
    evaluate, report_csv, robustness_csv, run_robustness_suite, train_with_model_config,
    RobustnessSpec, TrainConfig,
};

#[derive(Parser)]
#[command(name = "sarn", version, about = "Relational visual QA experiments", disable_help_subcommand = true)]
struct Cli {
    /// Cap the number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and test dataset files.
    Generate(GenerateArgs),
    /// Train one model kind on a generated dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a test split.
    Eval(EvalArgs),
    /// Train and evaluate the image-size/object-size grid.
    Robustness(RobustnessArgs),
    /// Export attention and relation-activation artifacts for one question,
    /// or score attention localization over the test split.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Sarn,
    Rn,
    Baseline,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> ModelKind {
        match k {
            KindArg::Sarn => ModelKind::Sarn,
            KindArg::Rn => ModelKind::Rn,
            KindArg::Baseline => ModelKind::Baseline,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 75)]
    image_size: u16,
    #[arg(long, default_value_t = 5)]
    object_size: u16,
    /// Number of training images.
    #[arg(long, default_value_t = 9800)]
    train: u32,
    /// Number of test images.
    #[arg(long, default_value_t = 200)]
    test: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory (default: a hash-named directory under the run root).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing dataset files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Model kind; may also come from --config.
    #[arg(long)]
    model: Option<KindArg>,
    /// Directory containing train.socv and test.socv.
    #[arg(long)]
    data: PathBuf,
    /// Model configuration file (key=value); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f32,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write an intermediate checkpoint every N epochs (0: only the final one).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory containing test.socv.
    #[arg(long)]
    data: PathBuf,
    /// Expected model kind; inferred from the checkpoint when omitted.
    #[arg(long)]
    model: Option<KindArg>,
    /// Model configuration file; defaults to model.cfg next to the
    /// checkpoint when present.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit the report as JSON on stdout instead of a table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    /// Acknowledge the multi-hour time budget of a custom or full-size grid.
    #[arg(long)]
    confirm: bool,
    /// Run the reduced preset: 2000 train images, 30 epochs per cell.
    #[arg(long)]
    reduced: bool,
    /// Grid cells to run, e.g. 64_4,128_8 (default: all five).
    #[arg(long, value_delimiter = ',')]
    configs: Vec<String>,
    /// Model kinds to run (default: all three).
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<KindArg>,
    #[arg(long, default_value_t = 2000)]
    n_train: u32,
    #[arg(long, default_value_t = 200)]
    n_test: u32,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f32,
    #[arg(long, default_value_t = 7)]
    data_seed: u64,
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory containing test.socv.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: Option<KindArg>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Score attention localization over the whole test split instead of
    /// exporting artifacts for one question.
    #[arg(long)]
    localization: bool,
    /// Test image index.
    #[arg(long)]
    image: Option<usize>,
    /// Question index within the image (0..47).
    #[arg(long)]
    question: Option<usize>,
    /// Reference color, e.g. blue (with --qtype).
    #[arg(long)]
    color: Option<String>,
    /// Question type, e.g. nearest-shape (with --color).
    #[arg(long)]
    qtype: Option<String>,
    /// Overlay blend strength in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f32,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Refusal(String),
    Incompatible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Refusal(_) => 3,
            Failure::Incompatible(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Refusal(m) | Failure::Incompatible(m) => m,
        }
    }
}

/// Flag validation problems exit 2; broken or mismatched inputs exit 4.
fn lib_err(e: sarn::Error) -> Failure {
    match e {
        sarn::Error::InvalidArgument(_) | sarn::Error::Generation(_) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Incompatible(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignored if a pool already exists; all reductions are
        // order-deterministic so the thread count never changes results.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Robustness(args) => cmd_robustness(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn output_root() -> PathBuf {
    std::env::var_os("SARN_RUN_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn config_hash(subcommand: &str, config: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(subcommand.as_bytes());
    hasher.update(b"\n");
    hasher.update(config.to_string().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::Incompatible(format!("cannot read {}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn resolve_run_dir(out: Option<PathBuf>, hash: &str) -> PathBuf {
    out.unwrap_or_else(|| output_root().join(&hash[..16]))
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Every run directory gets exactly one manifest describing the invocation.
fn write_manifest(
    dir: &Path,
    subcommand: &str,
    config: Value,
    hash: &str,
    outputs: &[String],
) -> Result<(), Failure> {
    let manifest = json!({
        "subcommand": subcommand,
        "config": config,
        "config_hash": hash,
        "created_unix": unix_now(),
        "outputs": outputs,
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, format!("{:#}\n", manifest))
        .map_err(|e| Failure::Incompatible(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Incompatible(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let config = DatasetConfig {
        image_size: args.image_size,
        object_size: args.object_size,
        n_train: args.train,
        n_test: args.test,
        seed: args.seed,
    };
    config.validate().map_err(lib_err)?;

    let resolved = json!({
        "image_size": args.image_size,
        "object_size": args.object_size,
        "train": args.train,
        "test": args.test,
        "seed": args.seed,
    });
    let hash = config_hash("generate", &resolved);
    let dir = resolve_run_dir(args.out, &hash);
    let files = [dir.join("train.socv"), dir.join("test.socv")];
    if !args.force {
        if let Some(existing) = files.iter().find(|f| f.exists()) {
            return Err(Failure::Refusal(format!(
                "{} exists; pass --force to overwrite",
                existing.display()
            )));
        }
    }
    create_dir(&dir)?;

    for (split, path) in [(Split::Train, &files[0]), (Split::Test, &files[1])] {
        let ds = Dataset::generate(&config, split).map_err(lib_err)?;
        write_dataset(path, &ds).map_err(lib_err)?;
    }
    write_manifest(
        &dir,
        "generate",
        resolved,
        &hash,
        &["train.socv".into(), "test.socv".into()],
    )?;
    println!("{}", dir.display());
    Ok(())
}

/// Reads `name.socv` from the data directory.
fn load_split(data: &Path, name: &str) -> Result<Dataset, Failure> {
    let path = data.join(format!("{name}.socv"));
    read_dataset(&path).map_err(|e| Failure::Incompatible(e.to_string()))
}

fn resolve_model_config(
    config_path: Option<&Path>,
    model: Option<KindArg>,
    default_image_size: u16,
) -> Result<ModelConfig, Failure> {
    match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Incompatible(format!("cannot read {}: {e}", path.display()))
            })?;
            let mut config =
                parse_model_config(&text).map_err(|e| Failure::Incompatible(e.to_string()))?;
            if let Some(kind) = model {
                config.kind = kind.into();
            }
            Ok(config)
        }
        None => {
            let kind = model.ok_or_else(|| {
                Failure::Usage("pass --model (sarn, rn, baseline) or --config".into())
            })?;
            Ok(ModelConfig::new(kind.into(), default_image_size))
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), Failure> {
    let train_ds = load_split(&args.data, "train")?;
    let test_ds = load_split(&args.data, "test")?;
    let model_config =
        resolve_model_config(args.config.as_deref(), args.model, train_ds.config.image_size)?;
    if model_config.image_size != train_ds.config.image_size {
        return Err(Failure::Incompatible(format!(
            "model expects {} px images but the dataset is {} px",
            model_config.image_size, train_ds.config.image_size
        )));
    }
    if model_config.n_answers < 18 {
        return Err(Failure::Incompatible(format!(
            "dataset labels span 18 answer classes, model only has {}",
            model_config.n_answers
        )));
    }
    let train_config = TrainConfig {
        kind: model_config.kind,
        lr: args.lr,
        batch_size: args.batch,
        epochs: args.epochs,
        seed: args.seed,
        checkpoint_every: args.checkpoint_every,
    };
    train_config.validate().map_err(lib_err)?;

    let config_text = model_config_to_string(&model_config);
    let resolved = json!({
        "model": model_config.kind.tag(),
        "model_config": config_text,
        "data_train_sha256": sha256_file(&args.data.join("train.socv"))?,
        "data_test_sha256": sha256_file(&args.data.join("test.socv"))?,
        "epochs": args.epochs,
        "lr": args.lr,
        "batch": args.batch,
        "seed": args.seed,
        "checkpoint_every": args.checkpoint_every,
    });
    let hash = config_hash("train", &resolved);
    let dir = resolve_run_dir(args.out, &hash);
    if dir.join("model.ckpt").exists() && !args.force {
        return Err(Failure::Refusal(format!(
            "{} exists; pass --force to overwrite",
            dir.join("model.ckpt").display()
        )));
    }
    create_dir(&dir)?;
    std::fs::write(dir.join("model.cfg"), &config_text)
        .map_err(|e| Failure::Incompatible(format!("cannot write model.cfg: {e}")))?;

    let outcome = train_with_model_config(&train_config, model_config, &train_ds, &test_ds, Some(&dir))
        .map_err(lib_err)?;

    let mut outputs: Vec<String> = std::fs::read_dir(&dir)
        .map_err(|e| Failure::Incompatible(e.to_string()))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    outputs.sort();
    write_manifest(&dir, "train", resolved, &hash, &outputs)?;

    let report = outcome.final_report;
    println!("{}", dir.display());
    println!(
        "final test accuracy: overall {:.4}  non_rel {:.4}  rel {:.4}",
        report.overall(),
        report.non_relational(),
        report.relational()
    );
    Ok(())
}

/// Loads a checkpoint, inferring the architecture when `--model` is absent:
/// the group inventory identifies the kind unambiguously.
fn load_params(
    checkpoint: &Path,
    config_path: Option<&Path>,
    model: Option<KindArg>,
    image_size: u16,
) -> Result<ModelParams, Failure> {
    let ckpt = read_checkpoint(checkpoint).map_err(|e| Failure::Incompatible(e.to_string()))?;

    let sibling = checkpoint.parent().map(|d| d.join("model.cfg"));
    let config_path = config_path.or_else(|| {
        sibling
            .as_deref()
            .filter(|p| p.exists())
    });
    if let Some(path) = config_path {
        let config = resolve_model_config(Some(path), model, image_size)?;
        return ModelParams::from_checkpoint(config, &ckpt)
            .map_err(|e| Failure::Incompatible(e.to_string()));
    }

    let kinds: Vec<ModelKind> = match model {
        Some(k) => vec![k.into()],
        None => vec![ModelKind::Sarn, ModelKind::Rn, ModelKind::Baseline],
    };
    let mut last_err = None;
    for kind in kinds {
        match ModelParams::from_checkpoint(ModelConfig::new(kind, image_size), &ckpt) {
            Ok(params) => return Ok(params),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Failure::Incompatible(format!(
        "checkpoint does not fit any requested architecture at {} px: {}",
        image_size,
        last_err.expect("at least one kind tried")
    )))
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let test_ds = load_split(&args.data, "test")?;
    let params = load_params(
        &args.checkpoint,
        args.config.as_deref(),
        args.model,
        test_ds.config.image_size,
    )?;
    let outcome = evaluate(&params, &test_ds).map_err(lib_err)?;
    let report = outcome.report;

    let resolved = json!({
        "checkpoint_sha256": sha256_file(&args.checkpoint)?,
        "data_test_sha256": sha256_file(&args.data.join("test.socv"))?,
        "model": params.config().kind.tag(),
    });
    let hash = config_hash("eval", &resolved);
    let dir = resolve_run_dir(args.out, &hash);
    create_dir(&dir)?;
    let csv = report_csv(&report);
    std::fs::write(dir.join("eval.csv"), &csv)
        .map_err(|e| Failure::Incompatible(format!("cannot write eval.csv: {e}")))?;
    write_manifest(&dir, "eval", resolved, &hash, &["eval.csv".into()])?;

    if args.json {
        let per_type: serde_json::Map<String, Value> = qtype::REPORT_ORDER
            .iter()
            .map(|&t| {
                (
                    qtype::report_label(t).to_string(),
                    json!({
                        "accuracy": report.per_type(t),
                        "count": report.count(t),
                    }),
                )
            })
            .collect();
        println!(
            "{:#}",
            json!({
                "overall": report.overall(),
                "non_rel": report.non_relational(),
                "rel": report.relational(),
                "mean_loss": outcome.mean_loss,
                "per_type": per_type,
                "run_dir": dir.display().to_string(),
            })
        );
    } else {
        println!("overall   {:.4}", report.overall());
        println!("non_rel   {:.4}", report.non_relational());
        println!("rel       {:.4}", report.relational());
        for &t in &qtype::REPORT_ORDER {
            println!("{:<10}{:.4}", qtype::report_label(t), report.per_type(t));
        }
        println!("mean loss {:.4}", outcome.mean_loss);
        println!("{}", dir.display());
    }
    Ok(())
}

fn cmd_robustness(args: RobustnessArgs) -> Result<(), Failure> {
    if !args.confirm && !args.reduced {
        return Err(Failure::Usage(
            "grid training takes hours; acknowledge with --reduced (2000 images, 30 epochs) or --confirm".into(),
        ));
    }

    let mut spec = RobustnessSpec::reduced();
    spec.n_train = args.n_train;
    spec.n_test = args.n_test;
    spec.epochs = args.epochs;
    spec.batch_size = args.batch;
    spec.lr = args.lr;
    spec.data_seed = args.data_seed;
    spec.train_seed = args.train_seed;
    if !args.kinds.is_empty() {
        spec.kinds = args.kinds.iter().map(|&k| k.into()).collect();
    }
    if !args.configs.is_empty() {
        spec.configs = args
            .configs
            .iter()
            .map(|c| {
                let (is, os) = c.split_once('_').ok_or_else(|| {
                    Failure::Usage(format!("--configs entries look like 64_4, got {c:?}"))
                })?;
                match (is.parse(), os.parse()) {
                    (Ok(is), Ok(os)) => Ok((is, os)),
                    _ => Err(Failure::Usage(format!("cannot parse grid cell {c:?}"))),
                }
            })
            .collect::<Result<_, _>>()?;
    }
    spec.validate().map_err(lib_err)?;

    let resolved = json!({
        "configs": spec.configs.iter().map(|&(is, os)| format!("{is}_{os}")).collect::<Vec<_>>(),
        "kinds": spec.kinds.iter().map(|k| k.tag()).collect::<Vec<_>>(),
        "n_train": spec.n_train,
        "n_test": spec.n_test,
        "epochs": spec.epochs,
        "batch": spec.batch_size,
        "lr": spec.lr,
        "data_seed": spec.data_seed,
        "train_seed": spec.train_seed,
    });
    let hash = config_hash("robustness", &resolved);
    let dir = resolve_run_dir(args.out, &hash);
    create_dir(&dir)?;

    let grid = run_robustness_suite(&spec, &dir.join("cells")).map_err(lib_err)?;
    for cell in &grid.cells {
        if let Err(e) = &cell.outcome {
            eprintln!(
                "cell {}_{} {} failed: {e}",
                cell.image_size,
                cell.object_size,
                cell.kind.tag()
            );
        }
    }
    let csv = robustness_csv(&grid);
    std::fs::write(dir.join("robustness.csv"), &csv)
        .map_err(|e| Failure::Incompatible(format!("cannot write robustness.csv: {e}")))?;
    write_manifest(&dir, "robustness", resolved, &hash, &["robustness.csv".into()])?;
    print!("{csv}");
    println!("{}", dir.display());
    Ok(())
}

fn parse_color(name: &str) -> Result<u8, Failure> {
    COLOR_NAMES
        .iter()
        .position(|&c| c == name)
        .map(|i| i as u8)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "unknown color {name:?}; expected one of {}",
                COLOR_NAMES.join(", ")
            ))
        })
}

fn parse_qtype(name: &str) -> Result<u8, Failure> {
    (0..qtype::COUNT as u8)
        .find(|&q| qtype::name(q) == name)
        .ok_or_else(|| {
            let all: Vec<&str> = (0..qtype::COUNT as u8).map(qtype::name).collect();
            Failure::Usage(format!(
                "unknown question type {name:?}; expected one of {}",
                all.join(", ")
            ))
        })
}

fn cmd_inspect(args: InspectArgs) -> Result<(), Failure> {
    let test_ds = load_split(&args.data, "test")?;
    let params = load_params(
        &args.checkpoint,
        args.config.as_deref(),
        args.model,
        test_ds.config.image_size,
    )?;

    if args.localization {
        let score = localization_score(&params, &test_ds).map_err(lib_err)?;
        println!("{score:.6}");
        return Ok(());
    }

    let image = args
        .image
        .ok_or_else(|| Failure::Usage("pass --image <index> (or --localization)".into()))?;
    let sample = test_ds.samples.get(image).ok_or_else(|| {
        Failure::Usage(format!(
            "--image {image} out of range: the test split has {} images",
            test_ds.samples.len()
        ))
    })?;

    let question_index = match (&args.color, &args.qtype, args.question) {
        (Some(color), Some(qt), None) => {
            let color = parse_color(color)?;
            let qt = parse_qtype(qt)?;
            sample
                .qa
                .iter()
                .position(|qa| qa.question.color == color && qa.question.qtype == qt)
                .ok_or_else(|| {
                    Failure::Incompatible(format!(
                        "image {image} has no question for that color/type pair"
                    ))
                })?
        }
        (None, None, index) => {
            let index = index.unwrap_or(0);
            if index >= sample.qa.len() {
                return Err(Failure::Usage(format!(
                    "--question {index} out of range: each image has {} questions",
                    sample.qa.len()
                )));
            }
            index
        }
        _ => {
            return Err(Failure::Usage(
                "pick a question with --color AND --qtype, or with --question <index>".into(),
            ))
        }
    };
    let qa = sample.qa[question_index];

    let report = build_report(
        &params,
        test_ds.config.image_size,
        &sample.pixels,
        qa,
        args.alpha,
    )
    .map_err(lib_err)?;

    let resolved = json!({
        "checkpoint_sha256": sha256_file(&args.checkpoint)?,
        "data_test_sha256": sha256_file(&args.data.join("test.socv"))?,
        "model": params.config().kind.tag(),
        "image": image,
        "question": question_index,
        "alpha": args.alpha,
    });
    let hash = config_hash("inspect", &resolved);
    let dir = resolve_run_dir(args.out, &hash);
    create_dir(&dir)?;
    let files = export_report(&report, &dir).map_err(lib_err)?;
    let outputs: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    write_manifest(&dir, "inspect", resolved, &hash, &outputs)?;

    println!(
        "question: color={} type={}",
        COLOR_NAMES[qa.question.color as usize],
        qtype::name(qa.question.qtype)
    );
    println!(
        "predicted: {}  label: {}",
        sarn::dataset::vocab::answer::name(report.predicted),
        sarn::dataset::vocab::answer::name(report.label)
    );
    for f in &files {
        println!("{}", f.display());
    }
    Ok(())
}
