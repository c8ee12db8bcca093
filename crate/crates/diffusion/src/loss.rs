//! Noise-prediction objective and its finite-difference check.

use artikit_core::graph::{adjacency_to_attention_mask, encode_routing_embeddings, to_adjacency_matrix, AttentionMask, ConnectivityGraph, RoutingEmbedding};
use artikit_core::model::{attributes_to_vector, ArticulatedObject};
use artikit_core::{Error, Result, Scalar};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::DenoiserConfig;
use crate::model::{Denoiser, DenoiserInput};
use crate::params::Gradients;
use crate::schedule::{forward_noise, NoiseMode, NoiseSchedule, Timestep};
use crate::tape::Tape;
use crate::tensor::Matrix;

/// One clean object as the denoiser sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T = f64> {
    /// `A_0`, one attribute row per part.
    pub a0: Matrix<T>,
    pub routing: Vec<RoutingEmbedding<T>>,
    pub mask: AttentionMask,
    pub cond: Matrix<T>,
}

impl<T: Scalar> Example<T> {
    /// Attribute rows, routing and mask of `object` in its part order.
    pub fn from_object(object: &ArticulatedObject<T>, cfg: &DenoiserConfig) -> Result<Self> {
        let dim = cfg.attribute_dim();
        let rows: Vec<Vec<T>> = object.parts.iter().map(attributes_to_vector).collect();
        if let Some(p) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::shape(format!("attribute vectors of length {dim}"), format!("part {p}: {}", rows[p].len())));
        }
        let graph = ConnectivityGraph::from_object(object);
        let (routing, mask) = graph_inputs(&graph, cfg)?;
        Ok(Self { a0: Matrix::from_rows(&rows)?, routing, mask, cond: Matrix::zeros(0, cfg.cond_dim) })
    }

    pub fn with_cond(mut self, cond: Matrix<T>) -> Self {
        self.cond = cond;
        self
    }
}

/// Routing embeddings and the global attention mask derived from a graph.
pub fn graph_inputs<T: Scalar>(graph: &ConnectivityGraph, cfg: &DenoiserConfig) -> Result<(Vec<RoutingEmbedding<T>>, AttentionMask)> {
    let adj = to_adjacency_matrix(graph)?;
    let mask = adjacency_to_attention_mask(&adj, true, cfg.mask_hops)?;
    Ok((encode_routing_embeddings(graph, cfg.routing_seed), mask))
}

/// Interpolation weight of the clean signal at integer step `t`.
pub fn interp_fraction<T: Scalar>(t: usize, steps: usize) -> T {
    T::one() - T::from_usize(t).expect("step") / T::from_usize(steps + 1).expect("step count")
}

/// Noisy input at step `t` for the configured noising mode.
pub fn noised<T: Scalar>(a0: &Matrix<T>, t: usize, eps: &Matrix<T>, sched: &NoiseSchedule<T>, mode: NoiseMode) -> Result<Matrix<T>> {
    let ts = match mode {
        NoiseMode::Ddpm => Timestep::Step(t),
        NoiseMode::Interp => Timestep::Fraction(interp_fraction(t, sched.steps)),
    };
    forward_noise(a0, ts, eps, sched, mode)
}

pub fn standard_normal<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
    Matrix { rows, cols, data }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T = f64> {
    /// Mean over examples of the per-example mean squared error.
    pub loss: T,
    pub grads: Gradients<T>,
}

/// Draws `t ∈ [1, T]` and `ε ~ N(0, I)` per example from `seed`, and returns
/// the mean of `‖ε − ε_θ(A_t, t, c)‖² / len` with its parameter gradients.
pub fn diffusion_loss<T: Scalar>(model: &Denoiser<T>, batch: &[Example<T>], sched: &NoiseSchedule<T>, seed: u64) -> Result<LossOutput<T>> {
    if batch.is_empty() {
        return Err(Error::Parameter("empty batch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grads = model.params.zeros_like();
    let weight = T::one() / T::from_usize(batch.len()).expect("batch size");
    let mut total = T::zero();
    for ex in batch {
        let t = rng.random_range(1..=sched.steps);
        let eps = standard_normal(&mut rng, ex.a0.rows, ex.a0.cols);
        let input = DenoiserInput {
            attributes: noised(&ex.a0, t, &eps, sched, model.config.noise_mode)?,
            routing: ex.routing.clone(),
            mask: ex.mask.clone(),
            t,
            cond: ex.cond.clone(),
        };
        let mut tape = Tape::new(&model.params);
        let pred = model.forward_on(&mut tape, &input)?;
        let l = tape.mse(pred, eps)?;
        total += tape.value(l).data[0];
        tape.backward(l, &mut grads, weight);
    }
    Ok(LossOutput { loss: total * weight, grads })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck<T = f64> {
    pub max_rel_error: T,
    /// `(flat index, analytic, numeric)` per checked parameter.
    pub entries: Vec<(usize, T, T)>,
}

/// Compares analytic gradients with central differences `(f(θ+h) − f(θ−h)) / 2h`
/// on `count` parameters drawn from `seed`. Relative error denominators are
/// floored at `1e-8`.
pub fn grad_check<T: Scalar>(
    model: &Denoiser<T>,
    batch: &[Example<T>],
    sched: &NoiseSchedule<T>,
    h: T,
    count: usize,
    seed: u64,
) -> Result<GradCheck<T>> {
    let loss_seed = seed ^ 0x5EED;
    let analytic = diffusion_loss(model, batch, sched, loss_seed)?.grads;
    let total = model.params.scalar_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, total, count.min(total)).into_vec();
    picks.sort_unstable();
    let mut probe = model.clone();
    let mut entries = Vec::with_capacity(picks.len());
    let mut worst = T::zero();
    let floor = T::lit(1e-8);
    for k in picks {
        let orig = probe.params.flat_get(k);
        probe.params.flat_set(k, orig + h);
        let up = diffusion_loss(&probe, batch, sched, loss_seed)?.loss;
        probe.params.flat_set(k, orig - h);
        let down = diffusion_loss(&probe, batch, sched, loss_seed)?.loss;
        probe.params.flat_set(k, orig);
        let numeric = (up - down) / (h + h);
        let a = analytic.flat_get(k);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(rel);
        entries.push((k, a, numeric));
    }
    Ok(GradCheck { max_rel_error: worst, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use artikit_core::fixtures::chain;

    fn tiny() -> DenoiserConfig {
        DenoiserConfig { d_model: 8, n_heads: 2, n_layers: 1, expert_hidden: 6, cond_dim: 4, ..Default::default() }
    }

    fn example(cfg: &DenoiserConfig) -> Example {
        let mut obj = chain(3);
        obj.parts[1].state = 0.3;
        obj.parts[2].state = 0.8;
        let cond = Matrix::from_vec(2, 4, vec![0.5, -0.2, 0.1, 0.9, -0.7, 0.3, 0.0, 0.4]).unwrap();
        Example::from_object(&obj, cfg).unwrap().with_cond(cond)
    }

    #[test]
    fn gradients_match_differences() {
        let cfg = tiny();
        let mut model = Denoiser::new(cfg.clone()).unwrap();
        model.jitter(3, 0.3);
        let ex = example(&cfg);
        let sched = NoiseSchedule::default();
        let check = grad_check(&model, &[ex.clone(), ex], &sched, 1e-5, 200, 11).unwrap();
        assert!(check.max_rel_error < 1e-4, "max relative error {}", check.max_rel_error);
        assert!(check.entries.iter().filter(|e| e.1 != 0.0).count() > 100);
    }

    #[test]
    fn zero_head_gives_unit_loss() {
        let cfg = tiny();
        let model = Denoiser::new(cfg.clone()).unwrap();
        let batch = vec![example(&cfg); 64];
        let out = diffusion_loss(&model, &batch, &NoiseSchedule::default(), 5).unwrap();
        assert!((out.loss - 1.0).abs() < 0.1, "loss {}", out.loss);
        let again = diffusion_loss(&model, &batch, &NoiseSchedule::default(), 5).unwrap();
        assert_eq!(out.loss.to_bits(), again.loss.to_bits());
    }
}
