//! Small objects used by tests, benchmarks and examples.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{MeshStore, TriMesh};
use crate::math::Vec3;
use crate::model::{ArticulatedObject, JointSpec, JointType, OrientedBox, PartNode, DEFAULT_SCREW_PITCH};

/// A part with no motion, parent or mesh.
pub fn static_part(part_id: usize, label: &str, obb: OrientedBox) -> PartNode {
    PartNode {
        part_id,
        semantic_label: label.to_string(),
        obb,
        shape_latent: None,
        joint: JointSpec::fixed(),
        state: 0.0,
        parent_id: None,
        mesh_ref: None,
    }
}

/// `n` links, each hinged to the previous one about the z axis through the
/// origin with range `[0, π/2]`.
pub fn chain(n: usize) -> ArticulatedObject {
    let parts = (0..n)
        .map(|i| {
            let x = i as f64;
            let mut p = static_part(
                i,
                &format!("link{i}"),
                OrientedBox::axis_aligned(Vec3::new(x, 0.0, 0.0), Vec3::new(x + 1.0, 0.2, 0.2)),
            );
            if i > 0 {
                p.parent_id = Some(i - 1);
                p.joint = JointSpec::revolute(Vec3::zeros(), Vec3::unit_z(), 0.0, FRAC_PI_2).expect("unit axis");
            }
            p
        })
        .collect();
    ArticulatedObject::new("chain", 0, parts)
}

/// One fixed part carrying the unit cube `[0,1]³` as mesh `"cube"`.
pub fn unit_cube_part() -> (ArticulatedObject, MeshStore) {
    let mut part = static_part(0, "cube", OrientedBox::axis_aligned(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)));
    part.mesh_ref = Some("cube".into());
    let mut store = MeshStore::new();
    store.insert("cube".into(), TriMesh::cuboid(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)));
    (ArticulatedObject::new("cube", 0, vec![part]), store)
}

/// Single static axis-aligned box without a mesh; its OBB is its geometry.
pub fn box_object(min: Vec3, max: Vec3) -> ArticulatedObject {
    ArticulatedObject::new("box", 0, vec![static_part(0, "box", OrientedBox::axis_aligned(min, max))])
}

/// Random valid tree of `n` parts exercising every joint type.
pub fn random_tree(n: usize, seed: u64) -> ArticulatedObject {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| {
        loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if let Some(u) = v.try_normalize(0.1) {
                return u;
            }
        }
    };
    let mut parts = Vec::with_capacity(n);
    for i in 0..n {
        let center = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let half = Vec3::new(rng.random_range(0.02..0.3), rng.random_range(0.02..0.3), rng.random_range(0.02..0.3));
        let rot = unit(&mut rng).scale(rng.random_range(0.0..PI));
        let mut p = static_part(i, &format!("part{i}"), OrientedBox::new(center, half, rot));
        p.state = rng.random::<f64>();
        if i > 0 {
            p.parent_id = Some(rng.random_range(0..i));
            let origin = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let axis = unit(&mut rng);
            let lo = rng.random_range(-1.0..0.5);
            let hi = lo + rng.random_range(0.0..1.5);
            p.joint = match JointType::ALL[rng.random_range(0..JointType::ALL.len())] {
                JointType::Fixed => Ok(JointSpec::fixed()),
                JointType::Revolute => JointSpec::revolute(origin, axis, lo, hi),
                JointType::Continuous => JointSpec::continuous(origin, axis),
                JointType::Prismatic => JointSpec::prismatic(origin, axis, lo * 0.3, hi * 0.3),
                JointType::Screw => JointSpec::screw(origin, axis, lo * 0.1, hi * 0.1, DEFAULT_SCREW_PITCH * 2.0),
            }
            .expect("unit axis");
        }
        parts.push(p);
    }
    ArticulatedObject::new("random", 0, parts)
}
