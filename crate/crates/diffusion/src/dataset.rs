//! Bundled synthetic training set: eight small cabinets, boxes and bins
//! with two to four parts each.

use artikit_core::math::Vec3;
use artikit_core::model::{ArticulatedObject, JointSpec, OrientedBox, PartNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SYNTHETIC_SEED: u64 = 1;
pub const SYNTHETIC_COUNT: usize = 8;

const CHILD_LABELS: [&str; 3] = ["door", "drawer", "lid"];

/// The eight-object toy set, identical on every call.
pub fn synthetic_dataset() -> Vec<ArticulatedObject> {
    let mut rng = ChaCha8Rng::seed_from_u64(SYNTHETIC_SEED);
    (0..SYNTHETIC_COUNT).map(|i| synthetic_object(&mut rng, 2 + i % 3, &format!("toy_{i}"))).collect()
}

/// A fixed base plus `parts - 1` children hinged or sliding on its faces.
pub fn synthetic_object<R: Rng>(rng: &mut R, parts: usize, category: &str) -> ArticulatedObject {
    let half = Vec3::new(rng.random_range(0.2..0.4), rng.random_range(0.2..0.4), rng.random_range(0.15..0.35));
    let base = PartNode {
        part_id: 0,
        semantic_label: "base".into(),
        obb: OrientedBox::new(Vec3::zeros(), half, Vec3::new(0.0, 0.0, rng.random_range(-0.2..0.2))),
        shape_latent: None,
        joint: JointSpec::fixed(),
        state: 0.0,
        parent_id: None,
        mesh_ref: None,
    };
    let mut out = vec![base];
    for k in 1..parts {
        let h = Vec3::new(rng.random_range(0.03..0.2), rng.random_range(0.1..0.3), rng.random_range(0.02..0.15));
        let center = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let mut direction = Vec3::zeros();
        direction[rng.random_range(0..3)] = 1.0;
        let joint = if rng.random_bool(0.5) {
            let origin = center + Vec3::new(h[0], 0.0, 0.0);
            JointSpec::revolute(origin, direction, 0.0, rng.random_range(0.2..1.7))
        } else {
            JointSpec::prismatic(Vec3::zeros(), direction, 0.0, rng.random_range(0.1..0.6))
        }
        .expect("unit axis and ordered range");
        out.push(PartNode {
            part_id: k,
            semantic_label: CHILD_LABELS[k - 1].into(),
            obb: OrientedBox::new(center, h, Vec3::new(0.0, 0.0, rng.random_range(-0.25..0.25))),
            shape_latent: None,
            joint,
            state: 0.0,
            parent_id: Some(0),
            mesh_ref: None,
        });
    }
    ArticulatedObject::new(category, 0, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use artikit_core::model::validate_object;

    #[test]
    fn eight_valid_objects() {
        let set = synthetic_dataset();
        assert_eq!(set.len(), 8);
        for o in &set {
            assert!((2..=4).contains(&o.len()));
            assert!(validate_object(o).is_valid(), "{}", validate_object(o));
        }
        assert_eq!(set, synthetic_dataset());
    }
}
