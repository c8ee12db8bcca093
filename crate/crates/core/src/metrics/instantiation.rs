//! Articulation-aware distance between two objects: chamfer distance between
//! whole-object point clouds, matched across Monte Carlo joint poses.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{chamfer_with_trees, proportional_allocation, sample_surface_points, KdTree, MeshStore, PointCloud, TriMesh};
use crate::math::{Mat3, RigidTransform, Vec3};
use crate::model::{forward_kinematics, sample_states, ArticulatedObject, SampleStrategy, StateVector};
use crate::scalar::Scalar;

/// An object together with the meshes its parts reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAsset<T = f64> {
    pub object: ArticulatedObject<T>,
    pub meshes: MeshStore<T>,
}

impl<T: Scalar> ObjectAsset<T> {
    pub fn new(object: ArticulatedObject<T>, meshes: MeshStore<T>) -> Self {
        Self { object, meshes }
    }

    /// Object whose parts carry no meshes; their OBBs stand in as geometry.
    pub fn boxes(object: ArticulatedObject<T>) -> Self {
        Self { object, meshes: MeshStore::new() }
    }

    /// Rest-frame surface of every part: its mesh, or its OBB when it has none.
    pub fn part_surfaces(&self) -> Result<Vec<TriMesh<T>>> {
        self.object
            .parts
            .iter()
            .map(|p| match &p.mesh_ref {
                Some(r) => self.meshes.get(r).cloned().ok_or_else(|| {
                    Error::Parameter(format!("part {} references missing geometry `{r}`", p.part_id))
                }),
                None => Ok(p.obb.to_mesh()),
            })
            .collect()
    }
}

/// Configuration of the instantiation distance.
#[derive(Debug, Clone, PartialEq)]
pub struct IdConfig<T = f64> {
    /// Joint poses drawn per object.
    pub m: usize,
    pub points_per_object: usize,
    /// The chamfer term is minimized over these rotations of the first object.
    pub orientations: Vec<Mat3<T>>,
    pub seed: u64,
}

impl<T: Scalar> Default for IdConfig<T> {
    fn default() -> Self {
        Self { m: 10, points_per_object: 2048, orientations: vec![Mat3::identity()], seed: 0 }
    }
}

impl<T: Scalar> IdConfig<T> {
    /// Rotations by multiples of a quarter turn about z.
    pub fn four_yaw() -> Vec<Mat3<T>> {
        (0..4).map(|k| Mat3::from_axis_angle(&Vec3::unit_z(), T::FRAC_PI_2() * T::lit(k as f64))).collect()
    }

    pub fn check(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Parameter("pose sample count M must be at least 1".into()));
        }
        if self.points_per_object == 0 {
            return Err(Error::Parameter("points_per_object must be at least 1".into()));
        }
        if self.orientations.is_empty() {
            return Err(Error::Parameter("orientation set must not be empty".into()));
        }
        Ok(())
    }

    /// SHA-256 over every field, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"idconfig-1");
        h.update((self.m as u64).to_le_bytes());
        h.update((self.points_per_object as u64).to_le_bytes());
        h.update(self.seed.to_le_bytes());
        h.update((self.orientations.len() as u64).to_le_bytes());
        for r in &self.orientations {
            for row in r.0 {
                for v in row {
                    h.update(v.to_f64_lossy().to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}

/// Per-part surface samples in the rest frame, drawn once per object.
/// Part `k` receives a share of the budget proportional to its surface area
/// and is sampled with a seed derived from `seed` and `k`.
pub fn rest_part_clouds<T: Scalar>(asset: &ObjectAsset<T>, points: usize, seed: u64) -> Result<Vec<PointCloud<T>>> {
    let surfaces = asset.part_surfaces()?;
    let areas: Vec<f64> = surfaces.iter().map(|m| m.surface_area().to_f64_lossy()).collect();
    if !(areas.iter().sum::<f64>() > 0.0) {
        return Err(Error::Parameter("object has no surface area to sample".into()));
    }
    let shares = proportional_allocation(&areas, points);
    surfaces
        .iter()
        .zip(shares)
        .enumerate()
        .map(|(k, (mesh, n))| {
            if n == 0 {
                return Ok(PointCloud::default());
            }
            sample_surface_points(mesh, n, part_seed(seed, k))
        })
        .collect()
}

fn part_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Whole-object clouds at the `M` poses drawn for the object, with search trees.
#[derive(Debug, Clone)]
pub struct PosedClouds<T = f64> {
    pub states: Vec<StateVector<T>>,
    pub clouds: Vec<PointCloud<T>>,
    trees: Vec<KdTree<T>>,
}

impl<T: Scalar> PosedClouds<T> {
    pub fn build(asset: &ObjectAsset<T>, cfg: &IdConfig<T>) -> Result<Self> {
        cfg.check()?;
        let rest = rest_part_clouds(asset, cfg.points_per_object, cfg.seed)?;
        let states = sample_states(&asset.object, cfg.m, cfg.seed, SampleStrategy::Uniform)?;
        let mut clouds = Vec::with_capacity(states.len());
        for s in &states {
            let world = forward_kinematics(&asset.object, s)?;
            let cloud: PointCloud<T> =
                rest.iter().zip(&world).flat_map(|(c, t)| c.points.iter().map(move |p| t.apply(p))).collect();
            clouds.push(cloud);
        }
        let trees = clouds.iter().map(|c| KdTree::new(&c.points)).collect();
        Ok(Self { states, clouds, trees })
    }
}

/// Pose-to-pose distances `d̃(q1, q2)`: chamfer distance minimized over the
/// orientation set applied to the first object.
pub fn pose_distance_matrix<T: Scalar>(a: &PosedClouds<T>, b: &PosedClouds<T>, orientations: &[Mat3<T>]) -> Vec<Vec<T>> {
    let rotated: Vec<Vec<(PointCloud<T>, KdTree<T>)>> = orientations
        .iter()
        .map(|r| {
            let t = RigidTransform::from_rotation(*r);
            a.clouds
                .iter()
                .zip(&a.trees)
                .map(|(c, tree)| {
                    if t.is_identity() {
                        (c.clone(), tree.clone())
                    } else {
                        let rc = c.transformed(&t);
                        let rt = KdTree::new(&rc.points);
                        (rc, rt)
                    }
                })
                .collect()
        })
        .collect();
    (0..a.clouds.len())
        .map(|i| {
            (0..b.clouds.len())
                .map(|j| {
                    rotated
                        .iter()
                        .map(|per_pose| chamfer_with_trees(&per_pose[i].0, &per_pose[i].1, &b.clouds[j], &b.trees[j]))
                        .fold(T::infinity(), T::min)
                })
                .collect()
        })
        .collect()
}

/// `(1/M) Σ_q1 min_q2 d̃ + (1/M) Σ_q2 min_q1 d̃` from precomputed pose clouds.
pub fn instantiation_distance_posed<T: Scalar>(a: &PosedClouds<T>, b: &PosedClouds<T>, orientations: &[Mat3<T>]) -> T {
    let d = pose_distance_matrix(a, b, orientations);
    let m1 = T::from_usize(d.len()).unwrap_or_else(T::one);
    let m2 = T::from_usize(b.clouds.len()).unwrap_or_else(T::one);
    let rows: T = d.iter().map(|row| row.iter().copied().fold(T::infinity(), T::min)).sum::<T>() / m1;
    let cols: T = (0..b.clouds.len()).map(|j| d.iter().map(|row| row[j]).fold(T::infinity(), T::min)).sum::<T>() / m2;
    // fixed operand order so that swapping the objects is exact
    if rows <= cols {
        rows + cols
    } else {
        cols + rows
    }
}

pub fn instantiation_distance<T: Scalar>(o1: &ObjectAsset<T>, o2: &ObjectAsset<T>, cfg: &IdConfig<T>) -> Result<T> {
    let a = PosedClouds::build(o1, cfg)?;
    let b = PosedClouds::build(o2, cfg)?;
    Ok(instantiation_distance_posed(&a, &b, &cfg.orientations))
}

/// Content hash of an object and its meshes.
pub fn object_digest<T: Scalar>(asset: &ObjectAsset<T>) -> [u8; 32] {
    let mut h = Sha256::new();
    let f = |h: &mut Sha256, v: T| h.update(v.to_f64_lossy().to_le_bytes());
    let o = &asset.object;
    h.update(o.category.as_bytes());
    h.update([0]);
    h.update((o.root_id as u64).to_le_bytes());
    if let Some(n) = &o.normalization {
        for k in 0..3 {
            f(&mut h, n.center[k]);
        }
        f(&mut h, n.scale);
    }
    for p in &o.parts {
        h.update((p.part_id as u64).to_le_bytes());
        h.update(p.semantic_label.as_bytes());
        h.update([0]);
        for v in p.obb.center.0.iter().chain(&p.obb.half_extents.0).chain(&p.obb.rotation.0) {
            f(&mut h, *v);
        }
        for v in p.shape_latent.iter().flatten() {
            f(&mut h, *v);
        }
        h.update(p.joint.joint_type.as_str().as_bytes());
        for v in p.joint.axis_origin.0.iter().chain(&p.joint.axis_direction.0).chain(&p.joint.range) {
            f(&mut h, *v);
        }
        f(&mut h, p.joint.screw_pitch);
        f(&mut h, p.state);
        h.update(p.parent_id.map_or(u64::MAX, |x| x as u64).to_le_bytes());
        h.update(p.mesh_ref.as_deref().unwrap_or("").as_bytes());
        h.update([0]);
    }
    for (name, mesh) in &asset.meshes {
        h.update(name.as_bytes());
        h.update([0]);
        for v in &mesh.vertices {
            for k in 0..3 {
                f(&mut h, v[k]);
            }
        }
        for face in &mesh.faces {
            for i in face {
                h.update((*i as u64).to_le_bytes());
            }
        }
    }
    h.finalize().into()
}
