//! The `zsslr` command line.
//!
//! Every subcommand reads an optional TOML run config (`--config`); flags
//! override its keys one for one. Failures print one JSON line to stderr and
//! map to exit codes: 2 usage, 3 configuration or data, 4 numerical.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    generate_synthetic, load_dataset, validate_dataset, write_dataset, write_feature_file, DataError, Stream, SyntheticConfig,
    MANIFEST_FILE,
};
use crate::encoders::{EncoderConfig, EncoderKind, InitialState, Readout};
use crate::eval::{format_report, percent, random_baseline, run_experiment, EvalError, EvalReport, ExperimentConfig};
use crate::gradcheck::{run_all, GradCheckConfig, GradCheckError};
use crate::zsl::{fit_model, read_model, write_model, ModelKind, ModelSpec, TargetEncoding, TrainConfig, ZslError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const MODEL_FILE: &str = "model.zsm1";
pub const PLANTING_FILE: &str = "planting.zsf1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Zsl(#[from] ZslError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    GradCheck(#[from] GradCheckError),
    #[error("{failed} gradient suite(s) exceeded the tolerance")]
    GradientMismatch { failed: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is invalid ({0} violation(s))")]
    InvalidDataset(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Zsl(e) if e.is_numeric() => EXIT_NUMERIC,
            CliError::Eval(e) if e.is_numeric() => EXIT_NUMERIC,
            CliError::GradCheck(_) | CliError::GradientMismatch { .. } => EXIT_NUMERIC,
            CliError::Config(_) | CliError::Data(_) | CliError::Zsl(_) | CliError::Eval(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::InvalidDataset(_) => EXIT_CONFIG,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_NUMERIC => "numeric",
            EXIT_CONFIG => "config",
            _ => "failure",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zsslr", version, about = "Zero-shot recognition with bilinear compatibility models")]
pub struct Cli {
    /// Worker threads; results are identical for any count.
    #[arg(long, global = true, env = "ZSSLR_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset with a planted compatibility matrix.
    Synth(SynthArgs),
    /// Check a manifest and every file it references.
    Validate(ValidateArgs),
    /// Fit one model and save it.
    Train(RunArgs),
    /// Evaluate a saved model.
    Eval(EvalArgs),
    /// Train and evaluate over repeated runs and emit a report table.
    Experiment(RunArgs),
    /// Compare every analytic gradient with finite differences.
    Gradcheck(GradcheckArgs),
    /// Chance-level top-k accuracy.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with synthetic-generator keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// e.g. `body` or `body+hand`.
    #[arg(long, value_delimiter = '+')]
    pub streams: Option<Vec<Stream>>,
    #[arg(long)]
    pub train_classes: Option<usize>,
    #[arg(long)]
    pub val_classes: Option<usize>,
    #[arg(long)]
    pub test_classes: Option<usize>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    #[arg(long)]
    pub snippets: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub temporal_jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Manifest file or the directory containing `manifest.toml`.
    pub manifest: PathBuf,
}

/// Keys shared by `train`, `eval` and `experiment` config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub model: Vec<ModelKind>,
    pub encoder: Vec<EncoderKind>,
    pub streams: Vec<Stream>,
    pub hidden: Option<usize>,
    pub readout: Readout,
    pub initial_state: InitialState,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub normalize_theta: bool,
    pub eszsl_targets: TargetEncoding,
    pub ks: Vec<usize>,
    pub runs: usize,
    pub grid_search: bool,
    pub widen_candidates: bool,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let x = ExperimentConfig::default();
        Self {
            manifest: None,
            model: vec![ModelKind::Lle],
            encoder: vec![EncoderKind::AvgPool],
            streams: vec![Stream::Body],
            hidden: None,
            readout: Readout::default(),
            initial_state: InitialState::default(),
            lambda: None,
            gamma: t.gamma,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            normalize_theta: t.normalize_theta,
            eszsl_targets: t.eszsl_targets,
            ks: x.ks,
            runs: x.runs,
            grid_search: x.grid_search,
            widen_candidates: x.widen_candidates,
            out: None,
            seed: 0,
        }
    }
}

/// Default `λ` when none is configured.
pub fn default_lambda(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Lle => 1e-4,
        ModelKind::Eszsl => 1e-3,
        ModelKind::Sae => 1.0,
    }
}

impl RunConfig {
    pub fn spec(&self, kind: ModelKind, encoder: EncoderKind) -> ModelSpec {
        ModelSpec {
            kind,
            encoder: EncoderConfig {
                kind: encoder,
                hidden: self.hidden,
                streams: Stream::canonical(&self.streams),
                readout: self.readout,
                initial_state: self.initial_state,
            },
            train: TrainConfig {
                lambda: self.lambda.unwrap_or_else(|| default_lambda(kind)),
                gamma: self.gamma,
                learning_rate: self.learning_rate,
                momentum: self.momentum,
                batch_size: self.batch_size,
                max_epochs: self.max_epochs,
                patience: self.patience,
                normalize_theta: self.normalize_theta,
                eszsl_targets: self.eszsl_targets,
                seed: self.seed,
            },
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            runs: self.runs,
            ks: self.ks.clone(),
            seed: self.seed,
            grid_search: self.grid_search,
            widen_candidates: self.widen_candidates,
        }
    }

    fn manifest(&self) -> Result<PathBuf, CliError> {
        let p = self.manifest.clone().ok_or_else(|| CliError::Config("no manifest given (--manifest or `manifest` key)".into()))?;
        Ok(manifest_path(&p))
    }

    fn check(&self) -> Result<(), CliError> {
        if self.model.is_empty() || self.encoder.is_empty() || self.streams.is_empty() {
            return Err(CliError::Config("model, encoder and streams must be nonempty".into()));
        }
        let mut ks = self.ks.clone();
        ks.sort_unstable();
        ks.dedup();
        if ks != self.ks || ks.first() == Some(&0) || ks.is_empty() {
            return Err(CliError::Config(format!("ks must be ascending, unique and ≥ 1 (got {:?})", self.ks)));
        }
        if self.runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML run config; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Comma-separated: lle, eszsl, sae.
    #[arg(long, value_delimiter = ',')]
    pub model: Option<Vec<ModelKind>>,
    /// Comma-separated: avgpool, lstm, gru, bilstm.
    #[arg(long, value_delimiter = ',')]
    pub encoder: Option<Vec<EncoderKind>>,
    #[arg(long, value_delimiter = '+')]
    pub streams: Option<Vec<Stream>>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, value_parser = ["final", "mean"])]
    pub readout: Option<String>,
    #[arg(long, value_parser = ["average_pool", "zero"])]
    pub initial_state: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub normalize_theta: bool,
    #[arg(long, value_parser = ["binary", "signed"])]
    pub eszsl_targets: Option<String>,
    /// Comma-separated, e.g. `1,2,5`.
    #[arg(long, value_delimiter = ',')]
    pub topk: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub grid_search: bool,
    #[arg(long)]
    pub widen_candidates: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn from_toml_value<T: serde::de::DeserializeOwned>(s: &str) -> T {
    toml::Value::String(s.to_string()).try_into().expect("value restricted by the flag parser")
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => read_toml::<RunConfig>(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident <- $flag:expr),* $(,)?) => { $( if let Some(v) = $flag.clone() { c.$field = v; } )* };
        }
        set!(
            manifest <- self.manifest.clone().map(Some),
            model <- self.model,
            encoder <- self.encoder,
            streams <- self.streams,
            hidden <- self.hidden.map(Some),
            lambda <- self.lambda.map(Some),
            gamma <- self.gamma,
            learning_rate <- self.learning_rate,
            momentum <- self.momentum,
            batch_size <- self.batch_size,
            max_epochs <- self.max_epochs,
            patience <- self.patience,
            ks <- self.topk,
            runs <- self.runs,
            out <- self.out.clone().map(Some),
            seed <- self.seed,
        );
        if let Some(r) = &self.readout {
            c.readout = from_toml_value(r);
        }
        if let Some(s) = &self.initial_state {
            c.initial_state = from_toml_value(s);
        }
        if let Some(t) = &self.eszsl_targets {
            c.eszsl_targets = from_toml_value(t);
        }
        c.normalize_theta |= self.normalize_theta;
        c.grid_search |= self.grid_search;
        c.widen_candidates |= self.widen_candidates;
        c.check()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Model to evaluate; defaults to `<out>/model.zsm1`.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
    pub topk: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

/// Output of one subcommand: text for stdout.
type Outcome = Result<String, CliError>;

fn synth(args: &SynthArgs) -> Outcome {
    let mut c = match &args.config {
        Some(p) => read_toml::<SyntheticConfig>(p)?,
        None => SyntheticConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field.clone() { c.$field = v; } )* };
    }
    set!(
        feature_dim,
        embedding_dim,
        streams,
        train_classes,
        val_classes,
        test_classes,
        samples_per_class,
        snippets,
        noise,
        temporal_jitter,
        seed
    );
    let synth = generate_synthetic(&c)?;
    let manifest = write_dataset(&synth.dataset, &args.out)?;
    write_feature_file(args.out.join(PLANTING_FILE), &synth.planting)?;
    let ds = &synth.dataset;
    Ok(format!("wrote {} classes, {} videos to {}\n", ds.classes().len(), ds.videos().len(), manifest.display()))
}

fn validate(args: &ValidateArgs) -> Outcome {
    let path = manifest_path(&args.manifest);
    let report = validate_dataset(&path)?;
    if report.is_valid() {
        Ok(format!("{}: valid\n", path.display()))
    } else {
        print!("{report}");
        Err(CliError::InvalidDataset(report.violations.len()))
    }
}

fn single<T: Copy + std::fmt::Display>(items: &[T], what: &str) -> Result<T, CliError> {
    match items {
        [one] => Ok(*one),
        _ => Err(CliError::Config(format!("{what} must name exactly one value for this subcommand"))),
    }
}

fn train(args: &RunArgs) -> Outcome {
    let cfg = args.resolve()?;
    let out = cfg.out.clone().ok_or_else(|| CliError::Config("train needs --out".into()))?;
    let spec = cfg.spec(single(&cfg.model, "model")?, single(&cfg.encoder, "encoder")?);
    let dataset = load_dataset(cfg.manifest()?)?.with_streams(&spec.encoder.streams)?;
    let (model, log) = fit_model(&dataset, &spec)?;
    let path = out.join(MODEL_FILE);
    write_model(&model, &path)?;
    let mut text =
        format!("{} / {} / {}: wrote {}\n", spec.kind.label(), spec.encoder.kind, Stream::label(&spec.encoder.streams), path.display());
    if let Some(log) = log {
        let last = log.epochs.last().expect("training ran");
        let _ = writeln!(
            text,
            "epochs {}, best epoch {} (val top-1 {}), final loss {:.6}",
            log.epochs.len(),
            log.best_epoch,
            percent(log.best_val_top1),
            last.train_loss
        );
    }
    Ok(text)
}

fn emit_reports(reports: &[EvalReport], out: Option<&Path>) -> Outcome {
    let f = format_report(reports)?;
    for r in reports {
        if !r.excluded_classes.is_empty() {
            eprintln!("warning: test classes without videos excluded: {:?}", r.excluded_classes);
        }
    }
    if let Some(dir) = out {
        write_file(&dir.join(REPORT_TXT), f.text.as_bytes())?;
        write_file(&dir.join(REPORT_CSV), f.csv.as_bytes())?;
    }
    Ok(f.text)
}

fn eval(args: &EvalArgs) -> Outcome {
    let cfg = args.run.resolve()?;
    let model_path = match (&args.model_file, &cfg.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => out.join(MODEL_FILE),
        (None, None) => return Err(CliError::Config("eval needs --model-file or --out".into())),
    };
    let model = read_model(&model_path)?;
    let dataset = load_dataset(cfg.manifest()?)?.with_streams(&model.encoder_config().streams)?;
    let report = EvalReport::for_model(&model, &dataset, &cfg.ks, cfg.widen_candidates)?;
    emit_reports(&[report], cfg.out.as_deref())
}

fn experiment(args: &RunArgs) -> Outcome {
    let cfg = args.resolve()?;
    let dataset = load_dataset(cfg.manifest()?)?;
    let mut reports = Vec::new();
    for &encoder in &cfg.encoder {
        for &kind in &cfg.model {
            let spec = cfg.spec(kind, encoder);
            reports.push(run_experiment(&dataset, &spec, &cfg.experiment())?);
        }
    }
    emit_reports(&reports, cfg.out.as_deref())
}

fn gradcheck(args: &GradcheckArgs) -> Outcome {
    let results = run_all(&GradCheckConfig { seed: args.seed, ..Default::default() })?;
    let mut text = String::new();
    for r in &results {
        let _ = writeln!(text, "{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        print!("{text}");
        return Err(CliError::GradientMismatch { failed });
    }
    Ok(text)
}

fn baseline(args: &BaselineArgs) -> Outcome {
    let b = random_baseline(args.classes, &args.topk, args.runs, args.seed)?;
    let mut text = format!("random baseline, {} classes, {} runs\n", b.num_classes, b.runs);
    for e in &b.entries {
        let _ = writeln!(text, "top-{:<3} analytic {:>5}  monte-carlo {:>5}", e.k, percent(e.analytic), percent(e.monte_carlo));
    }
    Ok(text)
}

fn run(command: &Command) -> Outcome {
    match command {
        Command::Synth(a) => synth(a),
        Command::Validate(a) => validate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Baseline(a) => baseline(a),
    }
}

/// One-line JSON description of a failure.
pub fn error_line(err: &CliError) -> String {
    serde_json::json!({ "error": err.kind(), "exit_code": err.exit_code(), "message": err.to_string() }).to_string()
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli.command)),
            Err(e) => Err(CliError::Config(format!("thread pool: {e}"))),
        },
        None => run(&cli.command),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "model = [\"eszsl\"]\nruns = 2\nks = [1, 5]\nlambda = 0.5\n").unwrap();
        let args = RunArgs { config: Some(path), runs: Some(3), readout: Some("mean".into()), ..Default::default() };
        let c = args.resolve().unwrap();
        assert_eq!(c.model, vec![ModelKind::Eszsl]);
        assert_eq!(c.runs, 3);
        assert_eq!(c.ks, vec![1, 5]);
        assert_eq!(c.readout, Readout::Mean);
        assert_eq!(c.spec(ModelKind::Eszsl, EncoderKind::AvgPool).train.lambda, 0.5);
    }

    #[test]
    fn unsorted_ks_are_a_config_error() {
        let args = RunArgs { topk: Some(vec![5, 1]), ..Default::default() };
        assert_eq!(args.resolve().unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(dispatch(["zsslr", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn default_lambda_per_model() {
        let c = RunConfig::default();
        assert_eq!(c.spec(ModelKind::Sae, EncoderKind::AvgPool).train.lambda, 1.0);
        assert_eq!(c.spec(ModelKind::Lle, EncoderKind::AvgPool).train.lambda, 1e-4);
    }
}
