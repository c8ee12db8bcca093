//! Plain SGD on the noise-prediction loss with per-epoch part shuffling and
//! state resampling.

use std::fmt::Write as _;

use artikit_core::graph::ConnectivityGraph;
use artikit_core::model::{sample_states, shuffle_parts, validate_object, ArticulatedObject, SampleStrategy};
use artikit_core::{Error, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::DenoiserConfig;
use crate::loss::{diffusion_loss, Example};
use crate::model::Denoiser;
use crate::schedule::{make_noise_schedule, NoiseSchedule, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_STEPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub clip_norm: f64,
    /// Copies of each object per step, each with its own shuffle, states, `t` and `ε`.
    pub replicas: usize,
    pub divergence_threshold: f64,
    pub shuffle_parts: bool,
    pub resample_states: bool,
    /// Trailing window of [`LossTrace::smoothed`].
    pub smoothing_window: usize,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            clip_norm: 10.0,
            replicas: 1,
            divergence_threshold: 1e3,
            shuffle_parts: true,
            resample_states: true,
            smoothing_window: 100,
            steps: DEFAULT_STEPS,
            beta_start: DEFAULT_BETA_START,
            beta_end: DEFAULT_BETA_END,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn schedule<T: Scalar>(&self) -> artikit_core::Result<NoiseSchedule<T>> {
        make_noise_schedule(self.steps, T::lit(self.beta_start), T::lit(self.beta_end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    pub rows: Vec<TraceRow>,
}

impl LossTrace {
    /// Mean loss over the last `window` steps.
    pub fn smoothed(&self, window: usize) -> Option<f64> {
        let tail = &self.rows[self.rows.len().saturating_sub(window.max(1))..];
        (!tail.is_empty()).then(|| tail.iter().map(|r| r.loss).sum::<f64>() / tail.len() as f64)
    }

    /// Tab-separated `step loss lr` rows under a header line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("step\tloss\tlr\n");
        for r in &self.rows {
            let _ = writeln!(s, "{}\t{:e}\t{:e}", r.step, r.loss, r.lr);
        }
        s
    }

    pub fn from_tsv(text: &str) -> artikit_core::Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || Error::parse(format!("loss trace line {}: `{line}`", n + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            rows.push(TraceRow {
                step: f[0].parse().map_err(|_| bad())?,
                loss: f[1].parse().map_err(|_| bad())?,
                lr: f[2].parse().map_err(|_| bad())?,
            });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64, trace: LossTrace },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T = f64> {
    pub model: Denoiser<T>,
    pub trace: LossTrace,
}

fn mix(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut x = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [a, b, c] {
        x = (x ^ v).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 31;
    }
    x
}

/// Trains a fresh model for `epochs` SGD steps, each over every object in
/// `dataset` times `replicas`. `graphs[k]` must describe `dataset[k]`.
pub fn train_toy<T: Scalar>(
    dataset: &[ArticulatedObject<T>],
    graphs: &[ConnectivityGraph],
    model_cfg: &DenoiserConfig,
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<TrainOutcome<T>, TrainError> {
    if dataset.is_empty() {
        return Err(Error::Parameter("empty training set".into()).into());
    }
    if graphs.len() != dataset.len() {
        return Err(Error::shape(format!("{} graphs", dataset.len()), graphs.len()).into());
    }
    if cfg.replicas == 0 {
        return Err(Error::Parameter("replicas must be at least 1".into()).into());
    }
    for (k, (o, g)) in dataset.iter().zip(graphs).enumerate() {
        let report = validate_object(o);
        if !report.is_valid() {
            return Err(Error::Structure(format!("training object {k}: {}", report.to_string().trim_end())).into());
        }
        if ConnectivityGraph::from_object(o) != *g {
            return Err(Error::Structure(format!("graph {k} does not describe training object {k}")).into());
        }
    }
    let sched = cfg.schedule::<T>()?;
    let mut model = Denoiser::new(model_cfg.clone())?;
    let mut trace = LossTrace::default();
    let lr = T::lit(cfg.lr);
    for step in 0..epochs {
        let mut batch = Vec::with_capacity(dataset.len() * cfg.replicas);
        for (k, object) in dataset.iter().enumerate() {
            for r in 0..cfg.replicas {
                let s = mix(cfg.seed, step as u64, k as u64, r as u64);
                let mut o = if cfg.shuffle_parts { shuffle_parts(object, s)? } else { object.clone() };
                if cfg.resample_states {
                    let states = sample_states(&o, 1, s ^ 0xA5A5, SampleStrategy::Uniform)?.remove(0);
                    o = o.with_states(&states)?;
                }
                batch.push(Example::from_object(&o, model_cfg)?);
            }
        }
        let mut out = diffusion_loss(&model, &batch, &sched, mix(cfg.seed, step as u64, u64::MAX, 0))?;
        let loss = out.loss.to_f64_lossy();
        trace.rows.push(TraceRow { step, loss, lr: cfg.lr });
        if !loss.is_finite() || loss > cfg.divergence_threshold {
            return Err(TrainError::Diverged { step, loss, trace });
        }
        out.grads.clip_norm(T::lit(cfg.clip_norm));
        model.params.sgd_step(&out.grads, lr);
        if step % 100 == 0 {
            log::debug!("step {step} loss {loss:.5}");
        }
    }
    Ok(TrainOutcome { model, trace })
}
