use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{overlap_rate_of_meshes, TriMesh};
use crate::metrics::instantiation::{IdConfig, ObjectAsset};
use crate::metrics::matrix::{pairwise_distance_matrix, CacheStatus};
use crate::metrics::set::{coverage, mmd, one_nna};
use crate::model::{forward_kinematics, sample_states, SampleStrategy, StateVector};
use crate::scalar::Scalar;

pub const CONVENTION_NOTES: [&str; 6] = [
    "chamfer: squared nearest-neighbor distances, mean per cloud, both directions summed",
    "mmd: for each reference object, the distance to its nearest generated object, averaged",
    "cov: reference objects that are some generated object's nearest neighbor, ties to the lower index",
    "1-nna: leave-one-out 1-NN accuracy over the pooled sets, distance ties go to the opposite set",
    "por: summed pairwise voxel intersection volume over summed part volume, raw ratio; por_scaled_e2 = 100 x por_mean",
    "por_mean averages each generated object over the all-0 and all-1 poses plus M uniform poses; por_rest uses the all-0 pose",
];

/// Echo of the settings a report was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub m: usize,
    pub points_per_object: usize,
    pub orientations: usize,
    pub seed: u64,
    pub por_resolution: usize,
    pub generated: usize,
    pub reference: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub mmd: f64,
    pub cov: f64,
    pub one_nna: f64,
    pub por_mean: f64,
    pub por_scaled_e2: f64,
    pub por_rest: f64,
    pub config_hash: String,
    /// Cache keys of the generated × reference, generated × generated and
    /// reference × reference matrices.
    pub matrices: [String; 3],
    pub config: ReportConfig,
    pub convention_notes: Vec<String>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(format!("metrics report: {e}")))
    }

    /// `POR MMD COV 1-NNA` values in that order.
    pub fn summary_line(&self) -> String {
        format!("{:.6} {:.6} {:.6} {:.6}", self.por_mean, self.mmd, self.cov, self.one_nna)
    }
}

/// Overlap rate of an object at one pose.
pub fn object_overlap_rate<T: Scalar>(asset: &ObjectAsset<T>, states: &StateVector<T>, resolution: usize) -> Result<T> {
    let surfaces = asset.part_surfaces()?;
    let world = forward_kinematics(&asset.object, states)?;
    let posed: Vec<TriMesh<T>> = surfaces.iter().zip(&world).map(|(m, t)| m.transformed(t)).collect();
    overlap_rate_of_meshes(&posed, resolution)
}

/// Overlap rate at rest and averaged over the endpoint poses plus `m` uniform poses.
pub fn overlap_profile<T: Scalar>(asset: &ObjectAsset<T>, m: usize, seed: u64, resolution: usize) -> Result<(T, T)> {
    let n = asset.object.len();
    let rest = object_overlap_rate(asset, &StateVector::zeros(n), resolution)?;
    let poses = sample_states(&asset.object, m + 2, seed, SampleStrategy::Endpoints)?;
    let mut total = T::zero();
    for s in &poses {
        total += object_overlap_rate(asset, s, resolution)?;
    }
    Ok((rest, total / T::from_usize(poses.len()).unwrap_or_else(T::one)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    /// Cache outcome per matrix, in the order of [`MetricsReport::matrices`].
    pub cache: [CacheStatus; 3],
}

/// POR over the generated set plus MMD, COV and 1-NNA from the three distance matrices.
pub fn evaluate_sets<T: Scalar>(
    gen: &[ObjectAsset<T>],
    reference: &[ObjectAsset<T>],
    cfg: &IdConfig<T>,
    por_resolution: usize,
    cache_dir: Option<&Path>,
) -> Result<Evaluation> {
    if gen.is_empty() || reference.is_empty() {
        return Err(Error::Parameter("both object sets must be nonempty".into()));
    }
    let (gr, c0) = pairwise_distance_matrix(gen, reference, cfg, cache_dir)?;
    let (gg, c1) = pairwise_distance_matrix(gen, gen, cfg, cache_dir)?;
    let (rr, c2) = pairwise_distance_matrix(reference, reference, cfg, cache_dir)?;
    let (mut rest, mut mean) = (0.0, 0.0);
    for g in gen {
        let (r, m) = overlap_profile(g, cfg.m, cfg.seed, por_resolution)?;
        rest += r.to_f64_lossy();
        mean += m.to_f64_lossy();
    }
    let k = gen.len() as f64;
    let (por_rest, por_mean) = (rest / k, mean / k);
    let report = MetricsReport {
        mmd: mmd(&gr)?.to_f64_lossy(),
        cov: coverage(&gr)?.to_f64_lossy(),
        one_nna: one_nna(&gg, &gr, &rr)?.to_f64_lossy(),
        por_mean,
        por_scaled_e2: por_mean * 100.0,
        por_rest,
        config_hash: cfg.hash(),
        matrices: [gr.provenance, gg.provenance, rr.provenance],
        config: ReportConfig {
            m: cfg.m,
            points_per_object: cfg.points_per_object,
            orientations: cfg.orientations.len(),
            seed: cfg.seed,
            por_resolution,
            generated: gen.len(),
            reference: reference.len(),
        },
        convention_notes: CONVENTION_NOTES.iter().map(|s| s.to_string()).collect(),
    };
    Ok(Evaluation { report, cache: [c0, c1, c2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{box_object, random_tree};
    use crate::math::Vec3;

    fn cfg() -> IdConfig {
        IdConfig { m: 2, points_per_object: 128, ..IdConfig::default() }
    }

    #[test]
    fn identical_sets() {
        let set: Vec<ObjectAsset> = (0..3).map(|k| ObjectAsset::boxes(random_tree(3, 10 + k))).collect();
        let e = evaluate_sets(&set, &set.clone(), &cfg(), 16, None).unwrap();
        assert_eq!((e.report.mmd, e.report.cov, e.report.one_nna), (0.0, 1.0, 0.0));
        let back = MetricsReport::from_json(&e.report.to_json()).unwrap();
        assert_eq!(back, e.report);
    }

    #[test]
    fn disjoint_cubes_do_not_overlap() {
        let mut o = box_object(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        let mut second = o.parts[0].clone();
        second.part_id = 1;
        second.parent_id = Some(0);
        second.obb.center = Vec3::new(2.5, 0.5, 0.5);
        o.parts.push(second);
        let set = vec![ObjectAsset::boxes(o)];
        let e = evaluate_sets(&set, &set, &cfg(), 32, None).unwrap();
        assert_eq!(e.report.por_mean, 0.0);
        assert_eq!(e.report.por_rest, 0.0);
    }
}
