//! Command-line orchestration: configuration, subcommands, manifests and
//! exit codes.

mod artifacts;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::creditmodel::CreditError;
use crate::evalharness::EvalError;
use crate::hin::HinError;
use crate::metapath::MetaPathError;
use crate::riskbayes::BayesError;
use crate::synthgen::SynthError;

pub use artifacts::{manifest_name, slug, ArtifactEntry, ArtifactSet, Manifest};
pub use commands::run_command;
pub use config::{parse_kind, parse_window, PipelineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => EXIT_USAGE,
            ErrorClass::Data => EXIT_DATA,
            ErrorClass::Numerical => EXIT_NUMERICAL,
            ErrorClass::Internal => EXIT_INTERNAL,
        }
    }
}

#[derive(Debug, Error)]
#[error("{module}: {cause}")]
pub struct CliError {
    pub class: ErrorClass,
    pub module: &'static str,
    pub cause: String,
}

impl CliError {
    fn new(class: ErrorClass, module: &'static str, cause: impl Into<String>) -> Self {
        CliError {
            class,
            module,
            cause: cause.into(),
        }
    }

    pub fn usage(module: &'static str, cause: impl Into<String>) -> Self {
        CliError::new(ErrorClass::Usage, module, cause)
    }

    pub fn data(module: &'static str, cause: impl Into<String>) -> Self {
        CliError::new(ErrorClass::Data, module, cause)
    }

    pub fn numerical(module: &'static str, cause: impl Into<String>) -> Self {
        CliError::new(ErrorClass::Numerical, module, cause)
    }

    pub fn internal(module: &'static str, cause: impl Into<String>) -> Self {
        CliError::new(ErrorClass::Internal, module, cause)
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl From<HinError> for CliError {
    fn from(e: HinError) -> Self {
        CliError::data("hin", e.to_string())
    }
}

impl From<MetaPathError> for CliError {
    fn from(e: MetaPathError) -> Self {
        CliError::data("metapath", e.to_string())
    }
}

impl From<BayesError> for CliError {
    fn from(e: BayesError) -> Self {
        match e {
            BayesError::InvalidAlpha(_) | BayesError::InvalidThreshold(_) => CliError::usage("riskbayes", e.to_string()),
            _ => CliError::data("riskbayes", e.to_string()),
        }
    }
}

impl From<CreditError> for CliError {
    fn from(e: CreditError) -> Self {
        match e {
            CreditError::SeparationDetected | CreditError::SingularInformation => CliError::numerical("creditmodel", e.to_string()),
            CreditError::DegenerateLabels => CliError::data("creditmodel", e.to_string()),
            _ => CliError::internal("creditmodel", e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Hin(e) => e.into(),
            EvalError::Bayes(e) => e.into(),
            EvalError::Credit(e) => e.into(),
            EvalError::LengthMismatch { .. } => CliError::internal("evalharness", e.to_string()),
            _ => CliError::data("evalharness", e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InfeasibleConfig(_) => CliError::usage("synthgen", e.to_string()),
            SynthError::Hin(e) => CliError::internal("synthgen", e.to_string()),
            SynthError::Io(_) => CliError::internal("synthgen", e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mprisk", version, about = "Meta-path credit-risk pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalOpts {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding nodes.csv, edges.csv and optional attributes.csv, labels.csv.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Meta paths to use instead of enumeration, one per line.
    #[arg(long, global = true)]
    pub metapaths: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub max_relations: Option<usize>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Keep only timestamps in START:END (epoch-days, inclusive).
    #[arg(long, global = true, value_parser = parse_window)]
    pub as_of: Option<(i64, i64)>,
    /// Comma-separated subset of naive,countsim,hetesim.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_kind)]
    pub feature_kinds: Option<Vec<crate::mpfeatures::FeatureKind>>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Load the CSV tables and write the normalized network plus a summary.
    Ingest,
    /// Check type safety and references; exit 3 on invalid data.
    Validate,
    /// List candidate meta paths, from the data when given, else the schema.
    Enumerate,
    /// Fit Naive Bayes risk models and impute unlabeled nodes.
    InferRisk,
    /// Compute feature matrices for every method.
    Features,
    /// Fit and rank logistic models on all labeled enterprises.
    Train,
    /// Cross-validated method comparison.
    Evaluate,
    /// Evaluate the meta-path methods on each time window.
    Sweep {
        /// START:END windows, repeatable.
        #[arg(long = "window", value_parser = parse_window)]
        windows: Vec<(i64, i64)>,
    },
    /// Generate a synthetic network with planted contagion.
    Synth,
    /// Render an evaluation directory as Markdown.
    Report {
        /// Directory written by `evaluate` (and optionally `sweep`).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Validate => "validate",
            Command::Enumerate => "enumerate",
            Command::InferRisk => "infer-risk",
            Command::Features => "features",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Sweep { .. } => "sweep",
            Command::Synth => "synth",
            Command::Report { .. } => "report",
        }
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(opts: &GlobalOpts, command: &Command) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(path) => PipelineConfig::from_toml_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &opts.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &opts.metapaths {
        cfg.metapaths = Some(v.clone());
    }
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.workers {
        cfg.workers = v;
    }
    if let Some(v) = opts.max_relations {
        cfg.max_relations = v;
    }
    if let Some(v) = opts.top_k {
        cfg.top_k = v;
    }
    if let Some(v) = opts.folds {
        cfg.folds = v;
    }
    if let Some(v) = opts.as_of {
        cfg.as_of = Some(v);
    }
    if let Some(v) = &opts.feature_kinds {
        cfg.feature_kinds = Vec::new();
        for &k in v {
            if !cfg.feature_kinds.contains(&k) {
                cfg.feature_kinds.push(k);
            }
        }
    }
    if let Command::Sweep { windows } = command {
        if !windows.is_empty() {
            cfg.windows = windows.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr as `mprisk: <module>: <cause>`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.opts.verbose {
        let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    } else {
        let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    }
    let result = resolve_config(&cli.opts, &cli.command).and_then(|cfg| {
        if cfg.workers > 0 {
            // Only the first call in a process can size the global pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
        }
        run_command(&cli.command, &cfg, &cli.opts.out)
    });
    match result {
        Ok(manifest) => {
            log::info!("{} wrote {} artifacts", manifest.command, manifest.artifacts.len());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("mprisk: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mprisk").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 5\ntop_k = 3\nfolds = 4\n").unwrap();
        let cli = parse(&["evaluate", "--config", path.to_str().unwrap(), "--seed", "9"]);
        let cfg = resolve_config(&cli.opts, &cli.command).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.top_k, 3);
        assert_eq!(cfg.folds, 4);
        assert_eq!(cfg.max_relations, 5);
        let cli = parse(&["evaluate", "--feature-kinds", "hetesim,naive,hetesim"]);
        let cfg = resolve_config(&cli.opts, &cli.command).unwrap();
        assert_eq!(cfg.feature_kinds, vec![crate::mpfeatures::FeatureKind::HeteSim, crate::mpfeatures::FeatureKind::Naive]);
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(run(["mprisk", "evaluate", "--as-of", "9:1"]), EXIT_USAGE);
        assert_eq!(run(["mprisk", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["mprisk", "evaluate", "--top-k", "0"]), EXIT_USAGE);
        assert_eq!(run(["mprisk", "evaluate"]), EXIT_USAGE);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(CreditError::SeparationDetected).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(EvalError::DegenerateLabels).exit_code(), EXIT_DATA);
        assert_eq!(CliError::from(EvalError::Credit(CreditError::SingularInformation)).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(SynthError::InfeasibleConfig("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::internal("cli", "x").exit_code(), EXIT_INTERNAL);
    }
}
