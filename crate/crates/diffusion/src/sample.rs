//! Ancestral sampling from pure noise and conversion back to an object.

use artikit_core::graph::{validate_graph, ConnectivityGraph};
use artikit_core::math::Vec3;
use artikit_core::model::{vector_to_attributes, ArticulatedObject, JointType, OrientedBox, PartLabels, PartNode, DEFAULT_SCREW_PITCH};
use artikit_core::{Error, Result, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::loss::{graph_inputs, interp_fraction, standard_normal};
use crate::model::{Denoiser, DenoiserInput};
use crate::schedule::{NoiseMode, NoiseSchedule};
use crate::tensor::Matrix;

pub const SAMPLED_CATEGORY: &str = "generated";

/// Runs the reverse chain from `x_T ~ N(0, I)` to `Â_0` for the parts of
/// `graph`, then rebuilds a valid object from the rows.
pub fn sample<T: Scalar>(
    model: &Denoiser<T>,
    cond: &Matrix<T>,
    graph: &ConnectivityGraph,
    sched: &NoiseSchedule<T>,
    seed: u64,
) -> Result<ArticulatedObject<T>> {
    let a0 = sample_attributes(model, cond, graph, sched, seed)?;
    attributes_to_object(&a0, graph, model.config.latent_dim)
}

/// The raw `N × (20 + F)` sample before post-processing.
pub fn sample_attributes<T: Scalar>(
    model: &Denoiser<T>,
    cond: &Matrix<T>,
    graph: &ConnectivityGraph,
    sched: &NoiseSchedule<T>,
    seed: u64,
) -> Result<Matrix<T>> {
    let report = validate_graph(graph);
    if !report.is_valid() {
        return Err(Error::Structure(report.to_string().trim_end().replace('\n', "; ")));
    }
    let (routing, mask) = graph_inputs(graph, &model.config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (graph.len(), model.config.attribute_dim());
    let mut x = standard_normal(&mut rng, n, d);
    let mut input = DenoiserInput { attributes: x.clone(), routing, mask, t: sched.steps, cond: cond.clone() };
    for t in (1..=sched.steps).rev() {
        input.attributes = x;
        input.t = t;
        let eps = crate::model::denoiser_forward(model, &input)?;
        x = match model.config.noise_mode {
            NoiseMode::Ddpm => {
                let coef = sched.beta(t) / (T::one() - sched.alpha_bar(t)).sqrt();
                let scale = T::one() / sched.alpha(t).sqrt();
                let mut next = input.attributes.clone();
                for (v, &e) in next.data.iter_mut().zip(&eps.data) {
                    *v = (*v - coef * e) * scale;
                }
                if t > 1 {
                    let z = standard_normal::<T, _>(&mut rng, n, d);
                    next.axpy(sched.posterior_variance(t).sqrt(), &z);
                }
                next
            }
            NoiseMode::Interp => {
                // x = f A0 + (1 - f) ε: estimate A0, then re-mix at the next fraction
                let f: T = interp_fraction(t, sched.steps);
                let f_next = if t > 1 { interp_fraction(t - 1, sched.steps) } else { T::one() };
                let mut next = input.attributes.clone();
                for (v, &e) in next.data.iter_mut().zip(&eps.data) {
                    let a0 = (*v - (T::one() - f) * e) / f;
                    *v = f_next * a0 + (T::one() - f_next) * e;
                }
                next
            }
        };
    }
    Ok(x)
}

/// Clamps and repairs sampled rows into parts: non-finite entries become 0,
/// half extents are made positive, the axis is renormalized, the active range
/// pair is ordered and the unused one zeroed, and `s` is clamped to `[0, 1]`.
pub fn attributes_to_object<T: Scalar>(rows: &Matrix<T>, graph: &ConnectivityGraph, latent_dim: usize) -> Result<ArticulatedObject<T>> {
    let parents = graph.parent_positions()?;
    if rows.rows != graph.len() {
        return Err(Error::shape(format!("{} attribute rows", graph.len()), rows.rows));
    }
    let mut parts = Vec::with_capacity(graph.len());
    for (k, node) in graph.nodes.iter().enumerate() {
        let v: Vec<T> = rows.row(k).iter().map(|&x| if x.is_finite() { x } else { T::zero() }).collect();
        let labels = PartLabels {
            part_id: node.node_id,
            semantic_label: node.semantic_label.clone(),
            parent_id: parents[k].map(|p| graph.nodes[p].node_id),
            mesh_ref: None,
            screw_pitch: T::lit(DEFAULT_SCREW_PITCH),
        };
        let part = vector_to_attributes(&v, latent_dim, node.joint_type, &labels)?;
        parts.push(repair(part));
    }
    Ok(ArticulatedObject::new(SAMPLED_CATEGORY, graph.root_id, parts))
}

fn repair<T: Scalar>(mut p: PartNode<T>) -> PartNode<T> {
    p.obb = OrientedBox::new(p.obb.center, Vec3(p.obb.half_extents.0.map(T::abs)), p.obb.rotation);
    let j = &mut p.joint;
    let norm = j.axis_direction.norm();
    j.axis_direction = if norm > T::lit(1e-9) { j.axis_direction.scale(T::one() / norm) } else { Vec3::new(T::zero(), T::zero(), T::one()) };
    for pair in [0, 2] {
        if j.range[pair] > j.range[pair + 1] {
            j.range.swap(pair, pair + 1);
        }
    }
    let z = T::zero();
    match j.joint_type {
        JointType::Fixed => j.range = [z; 4],
        JointType::Revolute | JointType::Continuous => (j.range[2], j.range[3]) = (z, z),
        JointType::Prismatic | JointType::Screw => (j.range[0], j.range[1]) = (z, z),
    }
    p.state = p.state.max(T::zero()).min(T::one());
    p
}
