use artikit_core::fixtures::static_part;
use artikit_core::geometry::*;
use artikit_core::math::{Mat3, RigidTransform, Vec3};
use artikit_core::model::{pose_object, ArticulatedObject, OrientedBox, StateVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cube(x: f64) -> TriMesh {
    TriMesh::cuboid(Vec3::new(x, 0.0, 0.0), Vec3::new(x + 1.0, 1.0, 1.0))
}

// Equal cubes sharing a fraction f of their volume fill the overlap with two
// parts and the rest with one, so POR = f V / (2 (1 - f) V + 2 f V) = f / 2.
fn expected_por(f: f64) -> f64 {
    f / 2.0
}

#[test]
fn por_fixtures() {
    assert_eq!(overlap_rate_of_meshes(&[cube(0.0), cube(2.0)], 64).unwrap(), 0.0);
    assert_eq!(overlap_rate_of_meshes(&[cube(0.0), cube(1.5)], 64).unwrap(), 0.0);
    let same = overlap_rate_of_meshes(&[cube(0.0), cube(0.0)], 64).unwrap();
    assert!((same - expected_por(1.0)).abs() <= 0.02, "{same}");
    let half = overlap_rate_of_meshes(&[cube(0.0), cube(0.5)], 64).unwrap();
    assert!((half - expected_por(0.5)).abs() <= 0.02, "{half}");
}

#[test]
fn por_of_a_posed_object() {
    let parts = vec![
        static_part(0, "a", OrientedBox::axis_aligned(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0))),
        {
            let mut p = static_part(1, "b", OrientedBox::axis_aligned(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0)));
            p.parent_id = Some(0);
            p
        },
    ];
    let o = ArticulatedObject::new("pair", 0, parts);
    let posed = pose_object(&o, &StateVector::zeros(2), None).unwrap();
    let por = part_overlap_rate(&posed, 64).unwrap();
    assert!((por - 0.25).abs() <= 0.02, "{por}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn por_follows_the_shared_fraction(f in 0.1f64..1.0) {
        let por = overlap_rate_of_meshes(&[cube(0.0), cube(1.0 - f)], 48).unwrap();
        prop_assert!((por - expected_por(f)).abs() <= 0.03, "{f}: {por}");
    }

    #[test]
    fn kd_tree_nearest_is_exact(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = || Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let pts: Vec<Vec3> = (0..n).map(|_| point()).collect();
        let tree = KdTree::new(&pts);
        for _ in 0..20 {
            let q = point();
            let (_, d) = tree.nearest(&q).unwrap();
            let best = pts.iter().map(|p| p.distance_squared(&q)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d, best);
        }
    }

    #[test]
    fn fitted_box_contains_its_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot = Mat3::from_rpy(rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5), rng.random_range(-3.0..3.0));
        let t = RigidTransform::new(rot, Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()));
        let mesh = TriMesh::cuboid(Vec3::new(-0.4, -0.2, -0.1), Vec3::new(0.4, 0.2, 0.1)).transformed(&t);
        let obb = fit_obb(&PointCloud::new(mesh.vertices.clone())).unwrap();
        prop_assert!(mesh.vertices.iter().all(|v| obb.contains(v, 1e-9)));
        prop_assert!((obb.volume() - 0.8 * 0.4 * 0.2).abs() <= 1e-6, "{}", obb.volume());
    }

    #[test]
    fn surface_samples_lie_on_the_mesh(seed in any::<u64>(), n in 1usize..300) {
        let mesh = cube(0.0);
        let cloud = sample_surface_points(&mesh, n, seed).unwrap();
        prop_assert_eq!(cloud.len(), n);
        let on_face = |p: &Vec3| (0..3).any(|k| p[k].abs() <= 1e-12 || (p[k] - 1.0).abs() <= 1e-12);
        prop_assert!(cloud.points.iter().all(|p| on_face(p) && (0..3).all(|k| (-1e-12..=1.0 + 1e-12).contains(&p[k]))));
        prop_assert_eq!(sample_surface_points(&mesh, n, seed).unwrap(), cloud);
    }
}

#[test]
fn allocation_sums_to_the_budget() {
    assert_eq!(proportional_allocation(&[1.0, 1.0, 2.0], 8), vec![2, 2, 4]);
    let a = proportional_allocation(&[0.3, 0.3, 0.4], 10);
    assert_eq!(a.iter().sum::<usize>(), 10);
}
