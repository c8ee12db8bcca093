//! Denoising diffusion over part-attribute tokens.
//!
//! Objects become `N × (20 + F)` matrices of attribute rows. A small
//! transformer predicts the noise added by a linear-beta DDPM schedule; each
//! block runs local attention within a part, global attention across parts
//! under the structure mask, cross-attention to condition tokens and a
//! mixture-of-experts feed-forward routed by joint type and label.
//! Gradients come from a minimal reverse-mode tape.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod loss;
pub mod model;
pub mod params;
pub mod sample;
pub mod schedule;
pub mod tape;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_HEADER};
pub use config::DenoiserConfig;
pub use dataset::synthetic_dataset;
pub use loss::{diffusion_loss, grad_check, Example, GradCheck, LossOutput};
pub use model::{cross_attention_inject, denoiser_forward, local_global_attention, moe_layer, Denoiser, DenoiserInput, TokenBatch};
pub use sample::{attributes_to_object, sample, sample_attributes};
pub use schedule::{forward_noise, make_noise_schedule, NoiseMode, NoiseSchedule, Timestep};
pub use tensor::Matrix;
pub use train::{train_toy, LossTrace, TraceRow, TrainConfig, TrainError, TrainOutcome};
