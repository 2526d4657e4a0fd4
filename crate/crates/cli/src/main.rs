//! `featgen` command-line driver.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration error.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use featgen::dataframe::{format_number, load_csv, FeatureKind, LoadOptions, RawTable, Task};
use featgen::ops::{canonical_string, FitMode, Operator};
use featgen::pipeline::{self, Metric, PipelineConfig, TransformSpec};
use featgen::synthlab::{self, Scenario, SynthConfig};

const SPEC_FILE: &str = "transforms.spec";
const REPORT_FILE: &str = "report.txt";

#[derive(Parser)]
#[command(name = "featgen", version, about = "Automated feature generation for tabular data")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for new features and write a transform spec.
    Generate(GenerateArgs),
    /// Append the features of a transform spec to a CSV file.
    Apply(ApplyArgs),
    /// Run the synthetic group-mean experiment.
    Simulate(SimulateArgs),
}

#[derive(Args, Default)]
struct GenerateArgs {
    /// File of `key=value` lines; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Number of halving blocks, a power of two.
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    max_order: Option<usize>,
    /// `train-fit` or `transductive`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    valid_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `rmse`, `auc` or `accuracy`.
    #[arg(long)]
    metric: Option<String>,
    /// `regression`, `binary` or `multiclass`.
    #[arg(long)]
    task: Option<String>,
    /// Comma-separated operator names.
    #[arg(long)]
    operators: Option<String>,
    /// Column kind overrides as `name:kind`, comma-separated.
    #[arg(long)]
    schema: Option<String>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// `bernoulli` or `gaussian`.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 2000)]
    k1: usize,
    #[arg(long, default_value_t = 500)]
    k2: usize,
    #[arg(long, default_value_t = 50)]
    h: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory to write `train.csv` and `test.csv` into.
    #[arg(long)]
    dump: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 1,
            Failure::Config(_) => 2,
        }
    }
}

impl From<featgen::Error> for Failure {
    fn from(e: featgen::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

/// `key=value` lines; blank lines and `#` comments are skipped. Keys accept
/// `-` or `_`.
fn read_config_file(path: &Path) -> Result<HashMap<String, (usize, String)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("--config {}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("--config {} line {}: expected key=value", path.display(), i + 1)))?;
        out.insert(k.trim().replace('-', "_"), (i + 1, v.trim().to_string()));
    }
    Ok(out)
}

const CONFIG_KEYS: &[&str] = &[
    "input",
    "target",
    "out",
    "top_k",
    "blocks",
    "folds",
    "max_order",
    "mode",
    "valid_fraction",
    "seed",
    "metric",
    "task",
    "operators",
    "schema",
    "threads",
];

struct Merged {
    file: HashMap<String, (usize, String)>,
}

impl Merged {
    /// Flag value if given, else the parsed config file entry.
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(format!("config key '{key}' (line {line}): cannot parse '{v}': {e}"))),
        }
    }
}

fn parse_mode(s: &str) -> Result<FitMode, Failure> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "trainfit" => Ok(FitMode::TrainFit),
        "transductive" => Ok(FitMode::Transductive),
        _ => Err(config_err(format!("--mode: unknown mode '{s}'"))),
    }
}

fn parse_operators(s: &str) -> Result<Vec<Operator>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .map(|n| Operator::from_name(n).ok_or_else(|| config_err(format!("--operators: unknown operator '{n}'"))))
        .collect()
}

fn parse_schema(s: &str) -> Result<HashMap<String, FeatureKind>, Failure> {
    let mut out = HashMap::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (name, kind) = item
            .rsplit_once(':')
            .ok_or_else(|| config_err(format!("--schema: expected name:kind, found '{item}'")))?;
        let kind = FeatureKind::from_str(kind).map_err(|e| config_err(format!("--schema '{item}': {e}")))?;
        out.insert(name.to_string(), kind);
    }
    Ok(out)
}

struct GenerateJob {
    input: PathBuf,
    target: String,
    out: PathBuf,
    options: LoadOptions,
    config: PipelineConfig,
    threads: Option<usize>,
}

fn resolve_generate(args: GenerateArgs, threads: Option<usize>) -> Result<GenerateJob, Failure> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => HashMap::new(),
    };
    if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(config_err(format!("config key '{k}' is not recognised")));
    }
    let m = Merged { file };
    let input: PathBuf = m.get(args.input, "input")?.ok_or_else(|| config_err("missing --input"))?;
    let target: String =
        m.get(args.target, "target")?.ok_or_else(|| config_err("missing --target (name of the target column)"))?;
    let out: PathBuf = m.get(args.out, "out")?.unwrap_or_else(|| PathBuf::from("featgen_out"));

    let mut config = PipelineConfig::default();
    if let Some(k) = m.get(args.top_k, "top_k")? {
        config.top_k = k;
    }
    if let Some(b) = m.get(args.blocks, "blocks")? {
        if b == 0 || !b.is_power_of_two() {
            return Err(config_err(format!("--blocks {b} is not a power of two")));
        }
        config.q = b.trailing_zeros();
    }
    if let Some(k) = m.get(args.folds, "folds")? {
        config.k_folds = k;
    }
    if let Some(o) = m.get(args.max_order, "max_order")? {
        config.max_order = o;
    }
    if let Some(s) = m.get(args.mode, "mode")? {
        config.mode = parse_mode(&s)?;
    }
    if let Some(v) = m.get(args.valid_fraction, "valid_fraction")? {
        config.valid_fraction = v;
    }
    if let Some(s) = m.get(args.seed, "seed")? {
        config.seed = s;
    }
    if let Some(s) = m.get::<String>(args.metric, "metric")? {
        config.metric = Some(Metric::from_str(&s).map_err(|e| config_err(format!("--metric: {e}")))?);
    }
    if let Some(s) = m.get::<String>(args.operators, "operators")? {
        config.operators = parse_operators(&s)?;
    }
    let mut options = LoadOptions::default();
    if let Some(s) = m.get::<String>(args.task, "task")? {
        options.task = Some(Task::from_str(&s).map_err(|e| config_err(format!("--task: {e}")))?);
    }
    if let Some(s) = m.get::<String>(args.schema, "schema")? {
        options.schema_hints = parse_schema(&s)?;
    }
    config.validate()?;
    let threads = m.get(threads, "threads")?;
    Ok(GenerateJob { input, target, out, options, config, threads })
}

fn set_threads(n: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = n {
        if n == 0 {
            return Err(config_err("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_err(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs, threads: Option<usize>) -> Result<(), Failure> {
    let job = resolve_generate(args, threads)?;
    set_threads(job.threads)?;
    let loaded = load_csv(&job.input, &job.target, &job.options).map_err(|e| match e {
        featgen::Error::Config(m) => Failure::Config(format!("--target: {m}")),
        e => Failure::from(e),
    })?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("loaded {} rows, {} features", loaded.dataset.n_rows(), loaded.dataset.columns().len());
    let (spec, report) = pipeline::run(&loaded.dataset, &job.config)?;
    fs::create_dir_all(&job.out).map_err(|e| Failure::Data(format!("--out {}: {e}", job.out.display())))?;
    spec.write(&job.out.join(SPEC_FILE))?;
    fs::write(job.out.join(REPORT_FILE), report.to_string())
        .map_err(|e| Failure::Data(format!("--out {}: {e}", job.out.display())))?;
    println!(
        "{} features; {} {} -> {}; spec {}",
        spec.entries.len(),
        report.metric,
        format_number(report.base_metric),
        format_number(report.augmented_metric),
        job.out.join(SPEC_FILE).display()
    );
    Ok(())
}

fn cmd_apply(args: ApplyArgs) -> Result<(), Failure> {
    let spec = TransformSpec::read(&args.spec)
        .map_err(|e| Failure::Data(format!("--spec {}: {e}", args.spec.display())))?;
    let raw = RawTable::read(&args.input).map_err(|e| Failure::Data(format!("--input {}: {e}", args.input.display())))?;
    let missing: Vec<String> =
        spec.required_columns().into_iter().filter(|c| !raw.headers.iter().any(|h| h == c)).collect();
    if !missing.is_empty() {
        return Err(Failure::Data(format!("--input is missing base columns: {}", missing.join(", "))));
    }
    let hints: HashMap<String, FeatureKind> = spec
        .base_features
        .iter()
        .filter(|(n, _)| raw.headers.iter().any(|h| h == n))
        .map(|(n, k)| (n.clone(), *k))
        .collect();
    let options = LoadOptions { schema_hints: hints, task: None };
    let ds = featgen::dataframe::dataset_from_raw(&raw, None, &options)?.dataset;
    let augmented = pipeline::apply(&spec, &ds)?;
    let added = &augmented.columns()[ds.columns().len()..];

    let mut w = csv::Writer::from_path(&args.output)
        .map_err(|e| Failure::Data(format!("--output {}: {e}", args.output.display())))?;
    let csv_err = |e: csv::Error| Failure::Data(format!("--output {}: {e}", args.output.display()));
    let header: Vec<String> =
        raw.headers.iter().cloned().chain(spec.entries.iter().map(|e| canonical_string(&e.expr))).collect();
    w.write_record(&header).map_err(csv_err)?;
    for (r, record) in raw.records.iter().enumerate() {
        let row = record.iter().cloned().chain(added.iter().map(|c| c.display_value(r)));
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Failure::Data(format!("--output {}: {e}", args.output.display())))?;
    eprintln!("appended {} columns to {} rows", added.len(), raw.records.len());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let scenario = Scenario::from_str(&args.scenario).map_err(|e| config_err(format!("--scenario: {e}")))?;
    let config = SynthConfig {
        k1: args.k1,
        k2: args.k2,
        h: args.h,
        d: args.d,
        scenario,
        noise: args.noise,
        seed: args.seed,
    };
    config.validate()?;
    if let Some(dir) = &args.dump {
        let data = synthlab::generate(&config)?;
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("--dump {}: {e}", dir.display())))?;
        featgen::dataframe::write_csv(&data.train, &dir.join("train.csv"))?;
        featgen::dataframe::write_csv(&data.test, &dir.join("test.csv"))?;
        eprintln!("wrote {} and {}", dir.join("train.csv").display(), dir.join("test.csv").display());
    }
    let out = synthlab::simulate(&config, &synthlab::sim_params())?;
    println!("scenario,k1,k2,h,raw_mse,augmented_mse,floor");
    println!(
        "{},{},{},{},{},{},{}",
        scenario,
        config.k1,
        config.k2,
        config.h,
        format_number(out.raw_mse),
        format_number(out.augmented_mse),
        out.floor.map_or_else(|| "NA".to_string(), format_number)
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, cli.threads),
        Command::Apply(a) => set_threads(cli.threads).and_then(|_| cmd_apply(a)),
        Command::Simulate(a) => set_threads(cli.threads).and_then(|_| cmd_simulate(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(m) | Failure::Data(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
