//! The denoiser: input projection, timestep embedding, `n_layers` blocks of
//! local attention, global attention, cross-attention and a mixture of
//! experts, then a zero-initialized output head.

use std::ops::Range;

use artikit_core::graph::{AttentionMask, BoolMatrix, RoutingEmbedding, ROUTING_DIM};
use artikit_core::{Error, Result, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::DenoiserConfig;
use crate::params::{uniform_init, ParamId, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Matrix;

pub const TIME_EMBEDDING_DIM: usize = 16;

/// Noisy attributes plus everything the denoiser conditions on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserInput<T = f64> {
    /// `N × (20 + F)`, one row per part.
    pub attributes: Matrix<T>,
    pub routing: Vec<RoutingEmbedding<T>>,
    /// `N × N` part-level mask for the global pass.
    pub mask: AttentionMask,
    pub t: usize,
    /// `C × cond_dim`; zero rows means unconditioned.
    pub cond: Matrix<T>,
}

/// Token-level state between layers.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBatch<T = f64> {
    pub tokens: Matrix<T>,
    /// Token range of each part.
    pub spans: Vec<Range<usize>>,
    pub routing: Vec<RoutingEmbedding<T>>,
    pub mask: AttentionMask,
    pub t: usize,
    pub cond: Matrix<T>,
}

impl<T: Scalar> TokenBatch<T> {
    /// Owning part of every token; fails unless the spans partition the tokens.
    pub fn token_parts(&self) -> Result<Vec<usize>> {
        check_layout(&self.spans, self.tokens.rows, &self.mask, &self.routing)
    }

    /// Block-diagonal mask over tokens: each token sees its own part only.
    pub fn local_mask(&self) -> Result<BoolMatrix> {
        let owner = self.token_parts()?;
        Ok(token_mask(&owner, |a, b| a == b))
    }

    /// Part mask lifted to tokens.
    pub fn global_mask(&self) -> Result<BoolMatrix> {
        let owner = self.token_parts()?;
        Ok(token_mask(&owner, |a, b| self.mask.get(a, b)))
    }

    fn with_tokens(&self, tokens: Matrix<T>) -> Self {
        Self { tokens, ..self.clone() }
    }
}

fn check_layout<T: Scalar>(spans: &[Range<usize>], n: usize, mask: &AttentionMask, routing: &[RoutingEmbedding<T>]) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (p, span) in spans.iter().enumerate() {
        if span.end > n || span.start >= span.end {
            return Err(Error::Structure(format!("span {span:?} of part {p} is empty or outside {n} tokens")));
        }
        for o in &mut owner[span.clone()] {
            if *o != usize::MAX {
                return Err(Error::Structure(format!("span {span:?} of part {p} overlaps part {}", *o)));
            }
            *o = p;
        }
    }
    if let Some(t) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::Structure(format!("token {t} belongs to no span")));
    }
    let parts = spans.len();
    if (mask.rows, mask.cols) != (parts, parts) {
        return Err(Error::shape(format!("{parts}x{parts} mask"), format!("{}x{}", mask.rows, mask.cols)));
    }
    if routing.len() != parts || routing.iter().any(|r| r.0.len() != ROUTING_DIM) {
        return Err(Error::shape(format!("{parts} routing embeddings of length {ROUTING_DIM}"), routing.len()));
    }
    Ok(owner)
}

fn token_mask(owner: &[usize], allow: impl Fn(usize, usize) -> bool) -> BoolMatrix {
    let n = owner.len();
    let mut m = BoolMatrix::new(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, allow(owner[i], owner[j]));
        }
    }
    m
}

/// Sinusoidal embedding of the timestep: 8 sines then 8 cosines.
pub fn timestep_embedding<T: Scalar>(t: usize) -> Matrix<T> {
    let half = TIME_EMBEDDING_DIM / 2;
    let mut m = Matrix::zeros(1, TIME_EMBEDDING_DIM);
    for k in 0..half {
        let freq = (-(10000f64).ln() * k as f64 / half as f64).exp();
        let a = t as f64 * freq;
        m.data[k] = T::lit(a.sin());
        m.data[half + k] = T::lit(a.cos());
    }
    m
}

#[derive(Debug, Clone)]
struct LinearIds {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct NormIds {
    gamma: ParamId,
    beta: ParamId,
}

#[derive(Debug, Clone)]
struct AttnIds {
    norm: NormIds,
    q: LinearIds,
    k: LinearIds,
    v: LinearIds,
    out: LinearIds,
}

#[derive(Debug, Clone)]
struct FfIds {
    fc1: LinearIds,
    fc2: LinearIds,
}

#[derive(Debug, Clone)]
struct MoeIds {
    norm: NormIds,
    gate: LinearIds,
    gate_route: ParamId,
    shared: FfIds,
    experts: Vec<FfIds>,
}

#[derive(Debug, Clone)]
struct LayerIds {
    local: AttnIds,
    global: AttnIds,
    cross: AttnIds,
    moe: MoeIds,
}

#[derive(Debug, Clone)]
struct ModelIds {
    input: LinearIds,
    time: LinearIds,
    layers: Vec<LayerIds>,
    final_norm: NormIds,
    head: LinearIds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `±1/√fan_in`.
    Uniform(usize),
    Zeros,
    Ones,
}

/// Parameter name, shape and initializer, in registry order.
pub type ParamSpec = (String, usize, usize, Init);

fn linear_specs(out: &mut Vec<ParamSpec>, name: &str, fan_in: usize, fan_out: usize, zero: bool) {
    let init = if zero { Init::Zeros } else { Init::Uniform(fan_in) };
    out.push((format!("{name}.weight"), fan_in, fan_out, init));
    out.push((format!("{name}.bias"), 1, fan_out, init));
}

fn norm_specs(out: &mut Vec<ParamSpec>, name: &str, d: usize) {
    out.push((format!("{name}.gamma"), 1, d, Init::Ones));
    out.push((format!("{name}.beta"), 1, d, Init::Zeros));
}

fn attn_specs(out: &mut Vec<ParamSpec>, name: &str, d: usize, kv_dim: usize, zero_out: bool) {
    norm_specs(out, &format!("{name}.norm"), d);
    linear_specs(out, &format!("{name}.q"), d, d, false);
    linear_specs(out, &format!("{name}.k"), kv_dim, d, false);
    linear_specs(out, &format!("{name}.v"), kv_dim, d, false);
    linear_specs(out, &format!("{name}.out"), d, d, zero_out);
}

fn ff_specs(out: &mut Vec<ParamSpec>, name: &str, d: usize, hidden: usize) {
    linear_specs(out, &format!("{name}.fc1"), d, hidden, false);
    linear_specs(out, &format!("{name}.fc2"), hidden, d, false);
}

/// Every parameter of a model with configuration `cfg`.
pub fn parameter_specs(cfg: &DenoiserConfig) -> Vec<ParamSpec> {
    let d = cfg.d_model;
    let mut s = Vec::new();
    linear_specs(&mut s, "input", cfg.attribute_dim(), cfg.tokens_per_part * d, false);
    linear_specs(&mut s, "time", TIME_EMBEDDING_DIM, d, false);
    for l in 0..cfg.n_layers {
        let p = format!("layers.{l}");
        attn_specs(&mut s, &format!("{p}.local"), d, d, false);
        attn_specs(&mut s, &format!("{p}.global"), d, d, false);
        attn_specs(&mut s, &format!("{p}.cross"), d, cfg.cond_dim, true);
        norm_specs(&mut s, &format!("{p}.moe.norm"), d);
        linear_specs(&mut s, &format!("{p}.moe.gate"), d, cfg.n_experts, false);
        s.push((format!("{p}.moe.gate.route"), ROUTING_DIM, cfg.n_experts, Init::Uniform(ROUTING_DIM)));
        ff_specs(&mut s, &format!("{p}.moe.shared"), d, cfg.expert_hidden);
        for e in 0..cfg.n_experts {
            ff_specs(&mut s, &format!("{p}.moe.experts.{e}"), d, cfg.expert_hidden);
        }
    }
    norm_specs(&mut s, "final_norm", d);
    linear_specs(&mut s, "head", cfg.tokens_per_part * d, cfg.attribute_dim(), true);
    s
}

impl ModelIds {
    fn resolve<T: Scalar>(cfg: &DenoiserConfig, p: &ParamStore<T>) -> Result<Self> {
        let lin = |n: &str| -> Result<LinearIds> { Ok(LinearIds { w: p.id(&format!("{n}.weight"))?, b: p.id(&format!("{n}.bias"))? }) };
        let norm = |n: &str| -> Result<NormIds> { Ok(NormIds { gamma: p.id(&format!("{n}.gamma"))?, beta: p.id(&format!("{n}.beta"))? }) };
        let attn = |n: &str| -> Result<AttnIds> {
            Ok(AttnIds {
                norm: norm(&format!("{n}.norm"))?,
                q: lin(&format!("{n}.q"))?,
                k: lin(&format!("{n}.k"))?,
                v: lin(&format!("{n}.v"))?,
                out: lin(&format!("{n}.out"))?,
            })
        };
        let ff = |n: &str| -> Result<FfIds> { Ok(FfIds { fc1: lin(&format!("{n}.fc1"))?, fc2: lin(&format!("{n}.fc2"))? }) };
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let pre = format!("layers.{l}");
                Ok(LayerIds {
                    local: attn(&format!("{pre}.local"))?,
                    global: attn(&format!("{pre}.global"))?,
                    cross: attn(&format!("{pre}.cross"))?,
                    moe: MoeIds {
                        norm: norm(&format!("{pre}.moe.norm"))?,
                        gate: lin(&format!("{pre}.moe.gate"))?,
                        gate_route: p.id(&format!("{pre}.moe.gate.route"))?,
                        shared: ff(&format!("{pre}.moe.shared"))?,
                        experts: (0..cfg.n_experts).map(|e| ff(&format!("{pre}.moe.experts.{e}"))).collect::<Result<_>>()?,
                    },
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { input: lin("input")?, time: lin("time")?, layers, final_norm: norm("final_norm")?, head: lin("head")? })
    }
}

/// Noise-prediction network `ε_θ(A_t, t, c)`.
#[derive(Debug, Clone)]
pub struct Denoiser<T = f64> {
    pub config: DenoiserConfig,
    pub params: ParamStore<T>,
    ids: ModelIds,
}

impl<T: Scalar> Denoiser<T> {
    /// Fresh model, initialized deterministically from `config.seed`.
    pub fn new(config: DenoiserConfig) -> Result<Self> {
        config.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();
        for (name, rows, cols, init) in parameter_specs(&config) {
            let m = match init {
                Init::Uniform(fan_in) => uniform_init(&mut rng, rows, cols, fan_in),
                Init::Zeros => Matrix::zeros(rows, cols),
                Init::Ones => Matrix::filled(rows, cols, T::one()),
            };
            params.insert(name, m)?;
        }
        let ids = ModelIds::resolve(&config, &params)?;
        Ok(Self { config, params, ids })
    }

    /// Wraps loaded parameters, checking names and shapes against `config`.
    pub fn from_parts(config: DenoiserConfig, params: ParamStore<T>) -> Result<Self> {
        config.check()?;
        let specs = parameter_specs(&config);
        if specs.len() != params.len() {
            return Err(Error::Parameter(format!("expected {} parameters, found {}", specs.len(), params.len())));
        }
        for ((name, rows, cols, _), (_, have, m)) in specs.iter().zip(params.iter()) {
            if name != have || (m.rows, m.cols) != (*rows, *cols) {
                return Err(Error::Parameter(format!("parameter {have} {}x{} does not match {name} {rows}x{cols}", m.rows, m.cols)));
            }
        }
        let ids = ModelIds::resolve(&config, &params)?;
        Ok(Self { config, params, ids })
    }

    /// Projects attributes to tokens and adds the timestep embedding.
    pub fn embed(&self, input: &DenoiserInput<T>) -> Result<TokenBatch<T>> {
        let mut tape = Tape::new(&self.params);
        let (z, spans) = self.embed_on(&mut tape, input)?;
        Ok(TokenBatch {
            tokens: tape.value(z).clone(),
            spans,
            routing: input.routing.clone(),
            mask: input.mask.clone(),
            t: input.t,
            cond: input.cond.clone(),
        })
    }

    fn check_input(&self, input: &DenoiserInput<T>) -> Result<()> {
        let n = input.attributes.rows;
        let d = self.config.attribute_dim();
        if n == 0 || input.attributes.cols != d {
            return Err(Error::shape(format!("N x {d} attributes with N >= 1"), format!("{}x{}", n, input.attributes.cols)));
        }
        if input.cond.cols != self.config.cond_dim && input.cond.rows > 0 {
            return Err(Error::shape(format!("condition tokens of width {}", self.config.cond_dim), input.cond.cols));
        }
        Ok(())
    }

    fn embed_on(&self, tape: &mut Tape<'_, T>, input: &DenoiserInput<T>) -> Result<(Var, Vec<Range<usize>>)> {
        self.check_input(input)?;
        let (n, p, d) = (input.attributes.rows, self.config.tokens_per_part, self.config.d_model);
        let a = tape.input(input.attributes.clone());
        let h = linear(tape, &self.ids.input, a);
        let z = tape.reshape(h, n * p, d)?;
        let te = tape.input(timestep_embedding(input.t));
        let te = linear(tape, &self.ids.time, te);
        let z = tape.add_row(z, te);
        Ok((z, (0..n).map(|i| i * p..(i + 1) * p).collect()))
    }

    /// Records the full forward pass on `tape` and returns the `N × (20 + F)` output.
    pub fn forward_on(&self, tape: &mut Tape<'_, T>, input: &DenoiserInput<T>) -> Result<Var> {
        let (mut z, spans) = self.embed_on(tape, input)?;
        let ctx = LayerContext::new(&spans, tape.value(z).rows, &input.mask, &input.routing)?;
        let cond = (input.cond.rows > 0).then(|| tape.input(input.cond.clone()));
        let route = tape.input(ctx.route.clone());
        for l in 0..self.config.n_layers {
            z = self.attention_pass(tape, &self.ids.layers[l].local, z, None, Some(&ctx.local))?.0;
            z = self.attention_pass(tape, &self.ids.layers[l].global, z, None, Some(&ctx.global))?.0;
            if let Some(c) = cond {
                z = self.attention_pass(tape, &self.ids.layers[l].cross, z, Some(c), None)?.0;
            }
            z = self.moe_pass(tape, &self.ids.layers[l].moe, z, route)?.0;
        }
        let ids = &self.ids.final_norm;
        let (g, b) = (tape.param(ids.gamma), tape.param(ids.beta));
        let z = tape.layer_norm(z, g, b);
        let y = tape.reshape(z, input.attributes.rows, self.config.tokens_per_part * self.config.d_model)?;
        Ok(linear(tape, &self.ids.head, y))
    }

    /// Pre-norm attention with a residual. Keys and values come from `kv`
    /// when given, else from the normalized tokens. Returns the output and
    /// the attention node.
    fn attention_pass(&self, tape: &mut Tape<'_, T>, ids: &AttnIds, z: Var, kv: Option<Var>, mask: Option<&BoolMatrix>) -> Result<(Var, Var)> {
        let (g, b) = (tape.param(ids.norm.gamma), tape.param(ids.norm.beta));
        let x = tape.layer_norm(z, g, b);
        let src = kv.unwrap_or(x);
        let q = linear(tape, &ids.q, x);
        let k = linear(tape, &ids.k, src);
        let v = linear(tape, &ids.v, src);
        let att = tape.attention(q, k, v, self.config.n_heads, mask)?;
        let o = linear(tape, &ids.out, att);
        Ok((tape.add(z, o), att))
    }

    /// `z + SE(x) + Σ_{i ∈ topk} G_i · E_i(x)` with `x = Norm(z)`. Returns the
    /// output and the gate node.
    fn moe_pass(&self, tape: &mut Tape<'_, T>, ids: &MoeIds, z: Var, route: Var) -> Result<(Var, Var)> {
        let (g, b) = (tape.param(ids.norm.gamma), tape.param(ids.norm.beta));
        let x = tape.layer_norm(z, g, b);
        let from_tokens = linear(tape, &ids.gate, x);
        let wr = tape.param(ids.gate_route);
        let from_route = tape.linear(route, wr, None);
        let logits = tape.add(from_tokens, from_route);
        let gate = tape.top_k_gate(logits, self.config.top_k);
        let shared = feed_forward(tape, &ids.shared, x);
        let mut out = tape.add(z, shared);
        let n = tape.value(z).rows;
        let selection = tape.gate_selection(gate).expect("gate node").to_vec();
        for (e, expert) in ids.experts.iter().enumerate() {
            let rows: Vec<usize> = (0..n).filter(|&r| selection[r].contains(&e)).collect();
            if rows.is_empty() {
                continue;
            }
            let xs = tape.gather(x, rows.clone());
            let h = feed_forward(tape, expert, xs);
            let s = tape.scatter(h, gate, e, rows, n);
            out = tape.add(out, s);
        }
        Ok((out, gate))
    }

    fn layer_ids(&self, layer: usize) -> Result<&LayerIds> {
        self.ids.layers.get(layer).ok_or_else(|| Error::Parameter(format!("layer {layer} of {}", self.config.n_layers)))
    }

    /// Adds uniform noise in `±scale` to every parameter, zero-initialized
    /// ones included. Used to probe gradients away from the initial point.
    pub fn jitter(&mut self, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..self.params.scalar_count() {
            let v = self.params.flat_get(k) + T::lit(rng.random_range(-scale..scale));
            self.params.flat_set(k, v);
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.scalar_count()
    }
}

fn linear<T: Scalar>(tape: &mut Tape<'_, T>, ids: &LinearIds, x: Var) -> Var {
    let (w, b) = (tape.param(ids.w), tape.param(ids.b));
    tape.linear(x, w, Some(b))
}

fn feed_forward<T: Scalar>(tape: &mut Tape<'_, T>, ids: &FfIds, x: Var) -> Var {
    let h = linear(tape, &ids.fc1, x);
    let h = tape.gelu(h);
    linear(tape, &ids.fc2, h)
}

struct LayerContext<T> {
    local: BoolMatrix,
    global: BoolMatrix,
    route: Matrix<T>,
}

impl<T: Scalar> LayerContext<T> {
    fn new(spans: &[Range<usize>], tokens: usize, mask: &AttentionMask, routing: &[RoutingEmbedding<T>]) -> Result<Self> {
        let owner = check_layout(spans, tokens, mask, routing)?;
        let mut route = Matrix::zeros(tokens, ROUTING_DIM);
        for (t, &p) in owner.iter().enumerate() {
            route.row_mut(t).copy_from_slice(&routing[p].0);
        }
        Ok(Self { local: token_mask(&owner, |a, b| a == b), global: token_mask(&owner, |a, b| mask.get(a, b)), route })
    }

    fn of(batch: &TokenBatch<T>) -> Result<Self> {
        Self::new(&batch.spans, batch.tokens.rows, &batch.mask, &batch.routing)
    }
}

/// Attention probabilities of one local-global block, one matrix per head.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights<T = f64> {
    pub local: Vec<Matrix<T>>,
    pub global: Vec<Matrix<T>>,
}

/// Local pass restricted to each part's span, then the global pass under the
/// part mask; residual around each.
pub fn local_global_attention<T: Scalar>(
    model: &Denoiser<T>,
    layer: usize,
    batch: &TokenBatch<T>,
) -> Result<(TokenBatch<T>, AttentionWeights<T>)> {
    let ids = model.layer_ids(layer)?;
    let ctx = LayerContext::of(batch)?;
    let mut tape = Tape::new(&model.params);
    let z = tape.input(batch.tokens.clone());
    let (z, local) = model.attention_pass(&mut tape, &ids.local, z, None, Some(&ctx.local))?;
    let (z, global) = model.attention_pass(&mut tape, &ids.global, z, None, Some(&ctx.global))?;
    let weights = AttentionWeights {
        local: tape.attention_probs(local).expect("attention node").to_vec(),
        global: tape.attention_probs(global).expect("attention node").to_vec(),
    };
    Ok((batch.with_tokens(tape.value(z).clone()), weights))
}

/// `Z + CrossAttn(Norm(Z), c)`; identity when there are no condition tokens.
/// Returns the per-head weights over the condition tokens.
pub fn cross_attention_inject<T: Scalar>(
    model: &Denoiser<T>,
    layer: usize,
    batch: &TokenBatch<T>,
) -> Result<(TokenBatch<T>, Vec<Matrix<T>>)> {
    let ids = model.layer_ids(layer)?;
    batch.token_parts()?;
    if batch.cond.cols != model.config.cond_dim && batch.cond.rows > 0 {
        return Err(Error::shape(format!("condition tokens of width {}", model.config.cond_dim), batch.cond.cols));
    }
    if batch.cond.rows == 0 {
        return Ok((batch.clone(), Vec::new()));
    }
    let mut tape = Tape::new(&model.params);
    let z = tape.input(batch.tokens.clone());
    let c = tape.input(batch.cond.clone());
    let (z, att) = model.attention_pass(&mut tape, &ids.cross, z, Some(c), None)?;
    let probs = tape.attention_probs(att).expect("attention node").to_vec();
    Ok((batch.with_tokens(tape.value(z).clone()), probs))
}

/// Mixture-of-experts feed-forward with residual. Returns the dense
/// `tokens × n_experts` gate weights.
pub fn moe_layer<T: Scalar>(model: &Denoiser<T>, layer: usize, batch: &TokenBatch<T>) -> Result<(TokenBatch<T>, Matrix<T>)> {
    let ids = model.layer_ids(layer)?;
    let ctx = LayerContext::of(batch)?;
    let mut tape = Tape::new(&model.params);
    let z = tape.input(batch.tokens.clone());
    let route = tape.input(ctx.route);
    let (z, gate) = model.moe_pass(&mut tape, &ids.moe, z, route)?;
    let weights = tape.value(gate).clone();
    Ok((batch.with_tokens(tape.value(z).clone()), weights))
}

/// Predicted noise, same shape as `input.attributes`.
pub fn denoiser_forward<T: Scalar>(model: &Denoiser<T>, input: &DenoiserInput<T>) -> Result<Matrix<T>> {
    let mut tape = Tape::new(&model.params);
    let out = model.forward_on(&mut tape, input)?;
    Ok(tape.value(out).clone())
}
