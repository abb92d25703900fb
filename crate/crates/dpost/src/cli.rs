//! Command-line entry points: corpus generation, the self-training run,
//! evaluation, the decode benchmark, and report plots, all driven by a TOML
//! config. Exit codes: 0 success, 2 config error, 3 data error, 4 training
//! divergence.

use crate::calc::{throughput_bench, write_bench_csv, BenchConfig};
use crate::config::{ExperimentConfig, UnlabeledSource};
use crate::corpus::{
    generate_synthetic, load_jsonl, save_jsonl, validate_dataset, Dataset, DatasetKind,
};
use crate::engine::checkpoint::{Checkpoint, Role};
use crate::engine::model::Model;
use crate::engine::tokenizer::Tokenizer;
use crate::evalsuite::plots::{bar_chart, line_chart, scatter_chart_log_x, Series};
use crate::evalsuite::{accuracy, pass_at_k};
use crate::selftrain::store::{ExperimentStore, Manifest, MANIFEST_VERSION};
use crate::selftrain::{run_loop, IterationReport, LoopInputs, Mode, SelfTrainError};
use crate::task::question_prompt;
use crate::training::TrainError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable overriding the default output root.
pub const HOME_ENV: &str = "DPOST_HOME";
const DEFAULT_ROOT: &str = "dpost-runs";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Divergence(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Divergence(m) => write!(f, "training diverged: {m}"),
            CliError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<SelfTrainError> for CliError {
    fn from(e: SelfTrainError) -> Self {
        match e {
            SelfTrainError::Train(TrainError::Divergence { .. })
            | SelfTrainError::Train(TrainError::NonFiniteLoss) => CliError::Divergence(e.to_string()),
            SelfTrainError::Config(m) => CliError::Config(m),
            SelfTrainError::EmptyLabeled => CliError::Data(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dpost",
    about = "DPO-augmented self-training for math word problems, desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the synthetic train/dev/test JSONL splits
    GenData(GenDataArgs),
    /// Run warm-up plus the self-training loop
    Run(RunArgs),
    /// Evaluate a checkpoint on a JSONL problem set
    Eval(EvalArgs),
    /// Decode-throughput benchmark (CSV + SVG)
    Bench(BenchArgs),
    /// Render plots from a finished run directory
    Report(ReportArgs),
    /// Write a template config file
    InitConfig(InitConfigArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// TOML experiment config
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: <root>/<name>/data)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override loop mode
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Override max iterations
    #[arg(long)]
    pub iters: Option<usize>,
    /// Override K (SFT-step samples per question)
    #[arg(long)]
    pub k: Option<usize>,
    /// Override the experiment seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory (default: <root>/<name>)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    St,
    DpoSt,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Checkpoint file
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// JSONL problem set with gold answers
    #[arg(long)]
    pub data: PathBuf,
    /// Also measure Pass@K for these K values
    #[arg(long, value_delimiter = ',')]
    pub pass_k: Vec<usize>,
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_new_tokens: usize,
    /// Disable the decoding calculator
    #[arg(long)]
    pub no_calculator: bool,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CalcArg {
    On,
    Off,
    Both,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Checkpoint to benchmark (default: latest sft checkpoint in the run
    /// directory)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 8, 16, 32])]
    pub batch_sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = CalcArg::Both)]
    pub calculator: CalcArg,
    #[arg(long, default_value_t = 64)]
    pub new_tokens: usize,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    /// Number of prompts (>= 100)
    #[arg(long, default_value_t = 128)]
    pub prompts: usize,
    /// Output directory (default: <root>/<name>/bench)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directory holding reports.json
    #[arg(long)]
    pub run: PathBuf,
    /// Output directory for the SVGs (default: <run>/plots)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InitConfigArgs {
    /// Where to write the template
    #[arg(long, default_value = "dpost.toml")]
    pub out: PathBuf,
}

/// Output root: DPOST_HOME, then the config's `output.root`, then ./dpost-runs.
fn output_root(cfg: &ExperimentConfig) -> PathBuf {
    if let Ok(home) = std::env::var(HOME_ENV) {
        if !home.is_empty() {
            return PathBuf::from(home);
        }
    }
    if let Some(out) = &cfg.output {
        if let Some(root) = &out.root {
            return PathBuf::from(root);
        }
    }
    PathBuf::from(DEFAULT_ROOT)
}

fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    output_root(cfg).join(&cfg.name)
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::load(path).map_err(CliError::Config)
}

/// Guards an experiment directory against concurrent writers.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Other(e.to_string()))?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Other(
                format!(
                    "{} is locked by another dpost command (remove {} if stale)",
                    dir.display(),
                    path.display()
                ),
            )),
            Err(e) => Err(CliError::Other(e.to_string())),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub struct GeneratedData {
    pub dir: PathBuf,
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<GeneratedData, CliError> {
    let cfg = load_config(&args.config)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| run_dir(&cfg).join("data"));
    let _lock = DirLock::acquire(&dir)?;
    let c = &cfg.corpus;
    let total = c.train + c.dev + c.test;
    let pool = generate_synthetic(cfg.seed, total, c.min_steps..=c.max_steps);
    validate_dataset(&pool).map_err(|e| CliError::Data(e.to_string()))?;
    let items = pool.items;
    let train = Dataset::new(DatasetKind::Labeled, items[..c.train].to_vec());
    let dev = Dataset::new(DatasetKind::Labeled, items[c.train..c.train + c.dev].to_vec());
    let test = Dataset::new(DatasetKind::Labeled, items[c.train + c.dev..].to_vec());
    for (name, ds) in [("train", &train), ("dev", &dev), ("test", &test)] {
        save_jsonl(ds, dir.join(format!("{name}.jsonl")))
            .map_err(|e| CliError::Data(e.to_string()))?;
        fs::write(
            dir.join(format!("{name}.meta.json")),
            serde_json::to_string_pretty(&serde_json::json!({
                "config_hash": cfg.hash(),
                "items": ds.len(),
            }))
            .expect("meta serializes"),
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(GeneratedData {
        dir,
        train,
        dev,
        test,
    })
}

fn load_split(dir: &Path, name: &str, kind: DatasetKind) -> Result<Dataset, CliError> {
    let path = dir.join(format!("{name}.jsonl"));
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{} not found; run `dpost gen-data` first",
            path.display()
        )));
    }
    load_jsonl(&path, kind).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub struct RunSummary {
    pub dir: PathBuf,
    pub reports: Vec<IterationReport>,
    pub config_hash: String,
}

pub fn cmd_run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(mode) = args.mode {
        cfg.loop_cfg.mode = match mode {
            ModeArg::St => Mode::St,
            ModeArg::DpoSt => Mode::DpoSt,
        };
    }
    if let Some(iters) = args.iters {
        cfg.loop_cfg.max_iterations = iters;
    }
    if let Some(k) = args.k {
        cfg.loop_cfg.sft_samples_per_question = k;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(CliError::Config)?;
    let hash = cfg.hash();

    let dir = args.out.clone().unwrap_or_else(|| run_dir(&cfg));
    let data_dir = dir.join("data");
    let train = load_split(&data_dir, "train", DatasetKind::Labeled)?;
    let dev = load_split(&data_dir, "dev", DatasetKind::Labeled)?;
    let test = load_split(&data_dir, "test", DatasetKind::Labeled)?;
    if train.len() < cfg.corpus.labeled {
        return Err(CliError::Data(format!(
            "train split holds {} problems but config labels {}",
            train.len(),
            cfg.corpus.labeled
        )));
    }

    let _lock = DirLock::acquire(&dir)?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        config_hash: hash.clone(),
        seed: cfg.seed,
        mode: cfg.loop_cfg.mode.to_string(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        command: std::env::args().collect(),
    };
    let mut store =
        ExperimentStore::create(&dir, &manifest).map_err(|e| CliError::Data(e.to_string()))?;
    cfg.save(dir.join("config.toml"))
        .map_err(|e| CliError::Other(e.to_string()))?;

    let tokenizer = Tokenizer::standard();
    let model = Model::init(cfg.model.to_model_config(tokenizer.vocab_size()), cfg.seed);
    let base = Checkpoint::new(model, Role::Base, hash.clone());

    let labeled = Dataset::new(
        DatasetKind::Labeled,
        train.items[..cfg.corpus.labeled].to_vec(),
    );
    let unlabeled = match cfg.corpus.unlabeled {
        UnlabeledSource::Rest => Dataset::new(
            DatasetKind::Labeled,
            train.items[cfg.corpus.labeled..].to_vec(),
        )
        .strip_rationales(),
        UnlabeledSource::AllTrain => train.strip_rationales(),
    };

    let inputs = LoopInputs {
        base: &base,
        labeled: &labeled,
        unlabeled: &unlabeled,
        dev: &dev,
        test: Some(&test),
    };
    let outcome = run_loop(
        &inputs,
        &cfg.loop_cfg,
        &cfg.profiles.sft,
        &cfg.dpo,
        &cfg.eval,
        cfg.seed,
        &tokenizer,
        Some(&mut store),
    )?;
    Ok(RunSummary {
        dir,
        reports: outcome.reports,
        config_hash: hash,
    })
}

#[derive(serde::Serialize)]
pub struct EvalReport {
    pub checkpoint: String,
    pub role: String,
    pub config_hash: String,
    pub data: String,
    pub problems: usize,
    pub accuracy: f64,
    pub calculator_enabled: bool,
    pub pass_at_k: Vec<crate::selftrain::PassAtKSummary>,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport, CliError> {
    if !args.checkpoint.exists() {
        return Err(CliError::Data(format!(
            "checkpoint {} does not exist",
            args.checkpoint.display()
        )));
    }
    let (ckpt, tokenizer) =
        Checkpoint::load(&args.checkpoint).map_err(|e| CliError::Data(e.to_string()))?;
    let data = load_jsonl(&args.data, DatasetKind::Labeled)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.data.display())))?;
    let calc = !args.no_calculator;
    let out = accuracy(&ckpt.model, &tokenizer, &data, calc, args.max_new_tokens, 32);
    let mut summaries = Vec::new();
    for &k in &args.pass_k {
        if k == 0 {
            return Err(CliError::Config("--pass-k values must be >= 1".into()));
        }
        let (r, _) = pass_at_k(
            &ckpt.model,
            &tokenizer,
            &data,
            k,
            args.temperature,
            args.seed,
            calc,
            args.max_new_tokens,
            32,
        );
        summaries.push(crate::selftrain::PassAtKSummary {
            k,
            temperature: r.temperature,
            rate: r.rate,
        });
    }
    let report = EvalReport {
        checkpoint: args.checkpoint.display().to_string(),
        role: ckpt.role.to_string(),
        config_hash: ckpt.config_hash.clone(),
        data: args.data.display().to_string(),
        problems: data.len(),
        accuracy: out.accuracy,
        calculator_enabled: calc,
        pass_at_k: summaries,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.out {
        Some(path) => fs::write(path, json).map_err(|e| CliError::Other(e.to_string()))?,
        None => println!("{json}"),
    }
    Ok(report)
}

/// Newest sft checkpoint in the run directory (highest iteration).
fn latest_sft_checkpoint(dir: &Path) -> Option<PathBuf> {
    let mut best: Option<(usize, PathBuf)> = None;
    let entries = fs::read_dir(dir).ok()?;
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(num) = name.strip_prefix("iter-") {
            if let Ok(i) = num.parse::<usize>() {
                let ckpt = entry.path().join("checkpoint.sft.json");
                if ckpt.exists() && best.as_ref().is_none_or(|(bi, _)| i > *bi) {
                    best = Some((i, ckpt));
                }
            }
        }
    }
    best.map(|(_, p)| p)
}

pub struct BenchSummary {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub rows: Vec<crate::calc::BenchRow>,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchSummary, CliError> {
    let cfg = load_config(&args.config)?;
    if args.prompts < 100 {
        return Err(CliError::Config("benchmark needs at least 100 prompts".into()));
    }
    let ckpt_path = match &args.checkpoint {
        Some(p) => p.clone(),
        None => latest_sft_checkpoint(&run_dir(&cfg)).ok_or_else(|| {
            CliError::Data(format!(
                "no checkpoint found under {}; pass --checkpoint or run `dpost run` first",
                run_dir(&cfg).display()
            ))
        })?,
    };
    if !ckpt_path.exists() {
        return Err(CliError::Data(format!(
            "checkpoint {} does not exist",
            ckpt_path.display()
        )));
    }
    let (ckpt, tokenizer) =
        Checkpoint::load(&ckpt_path).map_err(|e| CliError::Data(e.to_string()))?;

    // prompts come from the synthetic generator under the experiment seed
    let pool = generate_synthetic(cfg.seed ^ 0xBE9C, args.prompts, cfg.corpus.min_steps..=cfg.corpus.max_steps);
    let prompts: Vec<Vec<u32>> = pool
        .problems()
        .map(|p| question_prompt(&tokenizer, &p.question))
        .collect();

    let bench_cfg = BenchConfig {
        batch_sizes: args.batch_sizes.clone(),
        calculator: match args.calculator {
            CalcArg::On => vec![true],
            CalcArg::Off => vec![false],
            CalcArg::Both => vec![true, false],
        },
        new_tokens: args.new_tokens,
        runs: args.runs,
        temperature: 0.7,
        seed: cfg.seed,
    };
    let rows = throughput_bench(&ckpt.model, &tokenizer, &prompts, &bench_cfg);

    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| run_dir(&cfg).join("bench"));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Other(e.to_string()))?;
    let csv_path = out_dir.join("throughput.csv");
    write_bench_csv(&rows, &csv_path).map_err(|e| CliError::Other(e.to_string()))?;

    let mut series = Vec::new();
    for &calc in &bench_cfg.calculator {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.calculator == calc)
            .map(|r| (r.batch_size as f64, r.tokens_per_sec))
            .collect();
        series.push(Series::new(
            if calc { "calculator on" } else { "calculator off" },
            pts,
        ));
    }
    let svg = line_chart(
        "decode throughput",
        "batch size",
        "tokens / second",
        &series,
    );
    let svg_path = out_dir.join("throughput.svg");
    fs::write(&svg_path, svg).map_err(|e| CliError::Other(e.to_string()))?;
    Ok(BenchSummary {
        csv_path,
        svg_path,
        rows,
    })
}

pub struct ReportSummary {
    pub plots: Vec<PathBuf>,
}

pub fn cmd_report(args: &ReportArgs) -> Result<ReportSummary, CliError> {
    let reports = ExperimentStore::load_all_reports(&args.run)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.run.display())))?;
    if reports.is_empty() {
        return Err(CliError::Data("reports.json is empty".into()));
    }
    let out_dir = args.out.clone().unwrap_or_else(|| args.run.join("plots"));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Other(e.to_string()))?;
    let mut plots = Vec::new();

    // accuracy over iterations
    let mut series = vec![Series::new(
        format!("dev ({})", reports[0].mode),
        reports
            .iter()
            .map(|r| (r.iteration as f64, r.dev_accuracy))
            .collect(),
    )];
    if reports.iter().any(|r| r.test_accuracy.is_some()) {
        series.push(Series::new(
            "test",
            reports
                .iter()
                .filter_map(|r| r.test_accuracy.map(|a| (r.iteration as f64, a)))
                .collect(),
        ));
    }
    let p = out_dir.join("accuracy_vs_iteration.svg");
    fs::write(&p, line_chart("accuracy over iterations", "iteration", "accuracy", &series))
        .map_err(|e| CliError::Other(e.to_string()))?;
    plots.push(p);

    // pass@k and pseudo-label yield per iteration
    let groups: Vec<String> = reports.iter().map(|r| format!("iter {}", r.iteration)).collect();
    let mut bar_series: Vec<(String, Vec<f64>)> = Vec::new();
    let ks: Vec<usize> = reports
        .first()
        .map(|r| r.pass_at_k.iter().map(|p| p.k).collect())
        .unwrap_or_default();
    for k in ks {
        bar_series.push((
            format!("pass@{k}"),
            reports
                .iter()
                .map(|r| {
                    r.pass_at_k
                        .iter()
                        .find(|p| p.k == k)
                        .map(|p| p.rate)
                        .unwrap_or(0.0)
                })
                .collect(),
        ));
    }
    bar_series.push((
        "dev accuracy".into(),
        reports.iter().map(|r| r.dev_accuracy).collect(),
    ));
    let p = out_dir.join("pass_at_k.svg");
    fs::write(&p, bar_chart("pass@k and accuracy", "rate", &groups, &bar_series))
        .map_err(|e| CliError::Other(e.to_string()))?;
    plots.push(p);

    let p = out_dir.join("pseudo_labels.svg");
    fs::write(
        &p,
        bar_chart(
            "pseudo-labels kept per iteration",
            "count",
            &groups,
            &[(
                "|S^alpha|".into(),
                reports.iter().map(|r| r.pseudo_kept as f64).collect(),
            )],
        ),
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    plots.push(p);

    // accuracy vs cumulative FLOPs
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.total_flops.max(1.0), r.dev_accuracy))
        .collect();
    let p = out_dir.join("accuracy_vs_flops.svg");
    fs::write(
        &p,
        scatter_chart_log_x(
            "accuracy vs compute",
            "cumulative FLOPs",
            "dev accuracy",
            &[Series::new("iterations", pts)],
        ),
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    plots.push(p);

    Ok(ReportSummary { plots })
}

pub fn cmd_init_config(args: &InitConfigArgs) -> Result<(), CliError> {
    ExperimentConfig::toy()
        .save(&args.out)
        .map_err(|e| CliError::Other(e.to_string()))
}

/// Parse argv and dispatch; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match &cli.command {
        Command::GenData(args) => cmd_gen_data(args).map(|out| {
            println!(
                "wrote {} train / {} dev / {} test problems to {}",
                out.train.len(),
                out.dev.len(),
                out.test.len(),
                out.dir.display()
            );
        }),
        Command::Run(args) => cmd_run(args).map(|out| {
            for r in &out.reports {
                println!(
                    "iter {} dev_acc={:.4} test_acc={} |S|={} |S^a|={} pairs={} flops={:.3e}",
                    r.iteration,
                    r.dev_accuracy,
                    r.test_accuracy
                        .map(|a| format!("{a:.4}"))
                        .unwrap_or_else(|| "-".into()),
                    r.pseudo_total,
                    r.pseudo_kept,
                    r.preference_pairs,
                    r.total_flops,
                );
            }
            println!("run artifacts in {}", out.dir.display());
        }),
        Command::Eval(args) => cmd_eval(args).map(|_| ()),
        Command::Bench(args) => cmd_bench(args).map(|out| {
            for r in &out.rows {
                println!(
                    "batch {:>3} calculator {:>3}: {:>10.1} tok/s",
                    r.batch_size,
                    if r.calculator { "on" } else { "off" },
                    r.tokens_per_sec
                );
            }
            println!("csv: {}", out.csv_path.display());
            println!("svg: {}", out.svg_path.display());
        }),
        Command::Report(args) => cmd_report(args).map(|out| {
            for p in &out.plots {
                println!("{}", p.display());
            }
        }),
        Command::InitConfig(args) => cmd_init_config(args).map(|()| {
            println!("wrote {}", args.out.display());
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
