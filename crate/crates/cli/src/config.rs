//! The optional TOML configuration file. Every section and key is optional;
//! unknown keys are rejected. Command-line flags win over file values.

use std::path::{Path, PathBuf};

use artikit_core::geometry::DEFAULT_POR_RESOLUTION;
use artikit_core::graph::HttpProviderConfig;
use artikit_core::metrics::IdConfig;
use artikit_core::{Error, Result};
use artikit_diffusion::{DenoiserConfig, TrainConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// Seed for every random draw of a command, unless `--seed` is given.
    pub seed: Option<u64>,
    /// SGD steps of `train-toy`.
    pub sgd_steps: Option<usize>,
    pub paths: PathsSection,
    pub id: IdSection,
    pub denoiser: DenoiserConfig,
    pub train: TrainConfig,
    pub provider: ProviderSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub cache_dir: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Orientations {
    Identity,
    FourYaw,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdSection {
    pub m: usize,
    pub points_per_object: usize,
    pub orientations: Orientations,
    pub por_resolution: usize,
}

impl Default for IdSection {
    fn default() -> Self {
        let d = IdConfig::<f64>::default();
        Self { m: d.m, points_per_object: d.points_per_object, orientations: Orientations::Identity, por_resolution: DEFAULT_POR_RESOLUTION }
    }
}

impl IdSection {
    pub fn id_config(&self, seed: u64) -> IdConfig<f64> {
        let orientations = match self.orientations {
            Orientations::Identity => IdConfig::default().orientations,
            Orientations::FourYaw => IdConfig::four_yaw(),
        };
        IdConfig { m: self.m, points_per_object: self.points_per_object, orientations, seed }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    /// Recorded responses for the mock provider.
    pub recordings: Option<PathBuf>,
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub accepts_image: bool,
}

impl Default for ProviderSection {
    fn default() -> Self {
        let d = HttpProviderConfig::default();
        Self {
            kind: ProviderKind::Mock,
            recordings: None,
            endpoint: d.endpoint,
            model: d.model,
            timeout_secs: d.timeout_secs,
            max_retries: d.max_retries,
            accepts_image: d.accepts_image,
        }
    }
}

impl ProviderSection {
    pub fn http_config(&self) -> HttpProviderConfig {
        HttpProviderConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            timeout_secs: self.timeout_secs,
            max_retries: self.max_retries,
            accepts_image: self.accepts_image,
        }
    }
}

impl CliConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(format!("config: {}", e.message().trim_end())).with_span(e.span()))
    }

    /// Reads `path`; relative paths inside the file are taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let mut cfg = Self::from_str(&text).map_err(|e| match e {
            Error::Parse { message, offset, payload } => Error::Parse { message: format!("{}: {message}", path.display()), offset, payload },
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.paths.cache_dir, &mut cfg.paths.prompts, &mut cfg.provider.recordings].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

trait WithSpan {
    fn with_span(self, span: Option<std::ops::Range<usize>>) -> Self;
}

impl WithSpan for Error {
    fn with_span(self, span: Option<std::ops::Range<usize>>) -> Self {
        match self {
            Error::Parse { message, payload, .. } => Error::Parse { message, offset: span.map(|s| s.start), payload },
            e => e,
        }
    }
}
