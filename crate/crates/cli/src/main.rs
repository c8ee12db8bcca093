//! `artikit`: batch commands over articulated objects.
//!
//! Exit codes: 0 success, 2 invalid input (parse, validation, bad
//! parameters), 3 file system errors, 4 structure-prior provider errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use artikit_core::Error;
use clap::{Args, Parser, Subcommand};

use crate::config::{Orientations, ProviderKind};

#[derive(Debug, Parser)]
#[command(name = "artikit", version, about = "Articulated object toolkit")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a PartNet-Mobility style URDF into a canonical object file.
    Ingest(IngestArgs),
    /// Check a canonical object file and print the validation report.
    Validate(ValidateArgs),
    /// Write posed instances of an object at sampled joint states.
    SampleStates(SampleStatesArgs),
    /// Compare a generated and a reference object set.
    Evaluate(EvaluateArgs),
    /// Train the denoiser on the bundled synthetic set.
    TrainToy(TrainToyArgs),
    /// Sample an object for a connectivity graph from a checkpoint.
    Generate(GenerateArgs),
    /// Ask a structure-prior provider for the connectivity graph of a condition.
    InferGraph(InferGraphArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// URDF file or directory holding one.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep the raw URDF coordinates.
    #[arg(long)]
    pub no_normalize: bool,
    /// Attach the 8-value PCA shape descriptor to every part.
    #[arg(long)]
    pub latent: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub obj: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleStatesArgs {
    #[arg(long)]
    pub obj: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// uniform, stratified or endpoints.
    #[arg(long, default_value = "uniform")]
    pub strategy: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of generated `.akj` objects.
    #[arg(long)]
    pub gen: PathBuf,
    /// Directory of reference `.akj` objects.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Report file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pose samples per object.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub orientations: Option<Orientations>,
    #[arg(long)]
    pub por_resolution: Option<usize>,
    /// Distance-matrix cache; defaults to `.artikit-cache` next to the report.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    /// Checkpoint file.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss trace; defaults to the checkpoint path with a `.trace.tsv` extension.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Directory of `.akj` training objects instead of the bundled set.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub sgd_steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Connectivity graph file, as written by `infer-graph`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Condition tokens (AKFT feature file).
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferGraphArgs {
    #[arg(long, conflicts_with = "image", required_unless_present = "image")]
    pub text: Option<String>,
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub provider: Option<ProviderKind>,
    /// Recorded responses for the mock provider.
    #[arg(long)]
    pub recordings: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Directory with `cot_step{1,2,3}.txt`; the bundled prompts otherwise.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::MissingMesh(_) => 3,
        Error::Provider { .. } => 4,
        Error::Range(_) | Error::Parameter(_) | Error::Structure(_) | Error::Shape { .. } | Error::Geometry(_) | Error::Parse { .. } => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    let result = config::CliConfig::load_or_default(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, &a),
        Command::Validate(a) => commands::validate(&a),
        Command::SampleStates(a) => commands::sample_states(&cfg, &a),
        Command::Evaluate(a) => commands::evaluate(&cfg, &a),
        Command::TrainToy(a) => commands::train_toy(&cfg, &a),
        Command::Generate(a) => commands::generate(&cfg, &a),
        Command::InferGraph(a) => commands::infer_graph(&cfg, &a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_mapping() {
        assert_eq!(exit_code(&Error::parse("x")), 2);
        assert_eq!(exit_code(&Error::Structure("x".into())), 2);
        assert_eq!(exit_code(&Error::MissingMesh("m".into())), 3);
        assert_eq!(exit_code(&std::io::Error::other("x").into()), 3);
        assert_eq!(exit_code(&Error::Provider { message: "x".into(), retriable: true }), 4);
    }

    #[test]
    fn flags_are_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
