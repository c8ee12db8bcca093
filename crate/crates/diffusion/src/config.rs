use artikit_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::schedule::NoiseMode;

/// Denoiser hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    /// Shape-latent length `F`; attribute vectors have `20 + F` entries.
    pub latent_dim: usize,
    pub n_experts: usize,
    pub top_k: usize,
    pub expert_hidden: usize,
    pub cond_dim: usize,
    pub tokens_per_part: usize,
    /// Graph hops admitted by the global attention mask.
    pub mask_hops: usize,
    pub noise_mode: NoiseMode,
    /// Seed of the semantic label hash in the routing embeddings.
    pub routing_seed: u64,
    pub seed: u64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_layers: 4,
            latent_dim: 0,
            n_experts: 4,
            top_k: 2,
            expert_hidden: 128,
            cond_dim: 32,
            tokens_per_part: 1,
            mask_hops: 1,
            noise_mode: NoiseMode::Ddpm,
            routing_seed: 0,
            seed: 0,
        }
    }
}

impl DenoiserConfig {
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("n_layers", self.n_layers),
            ("n_experts", self.n_experts),
            ("top_k", self.top_k),
            ("expert_hidden", self.expert_hidden),
            ("cond_dim", self.cond_dim),
            ("tokens_per_part", self.tokens_per_part),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be positive")));
        }
        if self.top_k > self.n_experts {
            return Err(Error::Parameter(format!("top_k {} exceeds n_experts {}", self.top_k, self.n_experts)));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Parameter(format!("d_model {} not divisible by n_heads {}", self.d_model, self.n_heads)));
        }
        Ok(())
    }

    pub fn attribute_dim(&self) -> usize {
        artikit_core::model::attribute_dim(self.latent_dim)
    }
}
