use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use artikit_core::fixtures::random_tree;
use artikit_core::geometry::MeshStore;
use artikit_core::math::Vec3;
use artikit_core::model::{validate_object, ArticulatedObject, JointType};
use artikit_core::Error;
use artikit_io::{export_urdf, parse_mobility_urdf, parse_mobility_urdf_with, rest_bounds, urdf_string, UrdfOptions, PCA_LATENT_DIM};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
    a.max_abs_diff(&b) <= tol
}

/// Largest difference over every numeric attribute; `None` when the
/// structure or labels differ.
fn numeric_gap(a: &ArticulatedObject, b: &ArticulatedObject) -> Option<f64> {
    if a.len() != b.len() || a.root_id != b.root_id || a.category != b.category {
        return None;
    }
    let mut gap: f64 = 0.0;
    for (p, q) in a.parts.iter().zip(&b.parts) {
        if p.part_id != q.part_id || p.parent_id != q.parent_id || p.semantic_label != q.semantic_label || p.joint.joint_type != q.joint.joint_type {
            return None;
        }
        if p.shape_latent.as_ref().map(Vec::len) != q.shape_latent.as_ref().map(Vec::len) {
            return None;
        }
        let pairs = [
            (p.joint.axis_origin, q.joint.axis_origin),
            (p.joint.axis_direction, q.joint.axis_direction),
            (p.obb.center, q.obb.center),
            (p.obb.half_extents, q.obb.half_extents),
            (p.obb.rotation, q.obb.rotation),
        ];
        for (x, y) in pairs {
            gap = gap.max(x.max_abs_diff(&y));
        }
        for k in 0..4 {
            gap = gap.max((p.joint.range[k] - q.joint.range[k]).abs());
        }
        gap = gap.max((p.joint.screw_pitch - q.joint.screw_pitch).abs()).max((p.state - q.state).abs());
        if let (Some(l), Some(m)) = (&p.shape_latent, &q.shape_latent) {
            gap = l.iter().zip(m).fold(gap, |g, (x, y)| g.max((x - y).abs()));
        }
    }
    match (&a.normalization, &b.normalization) {
        (Some(n), Some(m)) => gap = gap.max(n.center.max_abs_diff(&m.center)).max((n.scale - m.scale).abs()),
        (None, None) => {}
        _ => return None,
    }
    Some(gap)
}

fn round_trip(o: &ArticulatedObject, store: &MeshStore) -> (ArticulatedObject, MeshStore) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.urdf");
    export_urdf(o, store, &path).unwrap();
    parse_mobility_urdf(&path).unwrap()
}

#[test]
fn cabinet_fixture() {
    let (o, store) = parse_mobility_urdf(&fixture("cabinet")).unwrap();
    assert!(validate_object(&o).is_valid());
    assert_eq!(o.len(), 2);
    assert_eq!(o.category, "cabinet");
    let door = &o.parts[1];
    assert_eq!(door.semantic_label, "door");
    assert_eq!(o.parts[0].semantic_label, "body");
    assert_eq!(door.joint.joint_type, JointType::Revolute);
    assert_eq!(door.joint.range, [0.0, 1.5708, 0.0, 0.0]);
    assert_eq!(door.parent_id, Some(0));
    assert!(close(door.joint.axis_direction, Vec3::new(0.0, 0.0, -1.0), 1e-15));

    // rest box x [0, 0.6], y [-0.02, 0.4], z [0, 0.8]
    let n = o.normalization.clone().unwrap();
    assert!((n.scale - 1.25).abs() < 1e-12);
    assert!(close(n.center, Vec3::new(0.3, 0.19, 0.4), 1e-12));
    assert!(close(door.joint.axis_origin, Vec3::new(-0.375, -0.2375, -0.5), 1e-12));
    let b = rest_bounds(&o, &store).unwrap();
    let e = b.extent();
    assert!((e[0].max(e[1]).max(e[2]) - 1.0).abs() < 1e-12);
    assert!(close(b.center(), Vec3::zeros(), 1e-12));
    assert!((o.parts[0].obb.volume() - 0.6 * 0.4 * 0.8 * 1.25f64.powi(3)).abs() < 1e-9);
    assert_eq!(store.len(), 2);
}

#[test]
fn drawer_fixture_frames() {
    let (o, _) = parse_mobility_urdf(&fixture("drawer")).unwrap();
    assert!(validate_object(&o).is_valid());
    assert_eq!(o.category, "StorageFurniture");
    let labels: Vec<&str> = o.parts.iter().map(|p| p.semantic_label.as_str()).collect();
    assert_eq!(labels, ["body", "drawer", "knob"]);
    assert_eq!(o.root_id, 0);
    assert_eq!(o.parts[0].joint.joint_type, JointType::Fixed);
    // rpy (π/2, 0, -π/2) sends (x, y, z) to (-z, -x, y)
    let drawer = &o.parts[1].joint;
    let knob = &o.parts[2].joint;
    assert!(close(drawer.axis_direction, Vec3::new(-1.0, 0.0, 0.0), 1e-12));
    assert!(close(knob.axis_direction, Vec3::new(-1.0, 0.0, 0.0), 1e-12));
    assert_eq!(knob.joint_type, JointType::Continuous);
    assert_eq!(knob.range, [-PI, PI, 0.0, 0.0]);
    let n = o.normalization.clone().unwrap();
    assert!((n.scale - 1.25).abs() < 1e-12);
    assert!(close(n.center, Vec3::new(-0.02, 0.0, 0.0), 1e-12));
    assert!(close(n.invert(&knob.axis_origin), Vec3::new(-0.27, 0.0, 0.2), 1e-12));
    assert!((drawer.range[3] - 0.3 * 1.25).abs() < 1e-12);
}

#[test]
fn screw_vendor_extension() {
    let (o, _) = parse_mobility_urdf(&fixture("jar/jar.urdf")).unwrap();
    let lid = &o.parts[1].joint;
    assert_eq!(lid.joint_type, JointType::Screw);
    let scale = 1.0 / 0.23;
    assert!((lid.screw_pitch - 0.005 * scale).abs() < 1e-12);
    assert!((lid.range[3] - 0.02 * scale).abs() < 1e-12);
}

#[test]
fn raw_coordinates_without_normalization() {
    let opts = UrdfOptions { normalize: false, ..Default::default() };
    let (o, store) = parse_mobility_urdf_with(&fixture("cabinet"), &opts).unwrap();
    assert!(o.normalization.is_none());
    assert_eq!(store["door"].aabb().unwrap().max, Vec3::new(0.6, 0.0, 0.8));
}

#[test]
fn pca_latents_on_request() {
    let opts = UrdfOptions { latent_dim: PCA_LATENT_DIM, latent_points: 256, ..Default::default() };
    let (o, _) = parse_mobility_urdf_with(&fixture("drawer"), &opts).unwrap();
    assert!(o.parts.iter().all(|p| p.latent_dim() == PCA_LATENT_DIM));
    assert!(validate_object(&o).is_valid());
}

#[test]
fn parse_is_deterministic() {
    for f in ["cabinet", "drawer", "jar/jar.urdf"] {
        assert_eq!(parse_mobility_urdf(&fixture(f)).unwrap(), parse_mobility_urdf(&fixture(f)).unwrap());
    }
}

#[test]
fn error_fixtures() {
    let err = |name: &str| parse_mobility_urdf(&fixture(&format!("errors/{name}"))).unwrap_err();
    match err("loop") {
        Error::Structure(m) => assert!(m.contains("b -> c -> b"), "{m}"),
        e => panic!("{e}"),
    }
    match err("missing_limit") {
        Error::Parse { message, .. } => assert!(message.contains("without <limit>"), "{message}"),
        e => panic!("{e}"),
    }
    match err("unknown_type") {
        Error::Parse { message, .. } => assert!(message.contains("`floating`"), "{message}"),
        e => panic!("{e}"),
    }
    assert!(matches!(err("missing_mesh"), Error::Io(_)));
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(parse_mobility_urdf(empty.path()).unwrap_err(), Error::Io(_)));
}

#[test]
fn export_conventions() {
    let (o, store) = parse_mobility_urdf(&fixture("cabinet")).unwrap();
    let (text, files) = urdf_string(&o, &store).unwrap();
    assert!(text.contains("<joint name=\"world_joint\" type=\"fixed\""));
    assert!(text.contains("<parent link=\"world\"/>"));
    assert!(text.contains("lower=\"0\" upper=\"1.5708\""));
    assert_eq!(files.len(), 2);
}

#[test]
fn fixture_round_trips() {
    for f in ["cabinet", "drawer", "jar/jar.urdf"] {
        let (o, store) = parse_mobility_urdf(&fixture(f)).unwrap();
        let (once, store1) = round_trip(&o, &store);
        let gap = numeric_gap(&o, &once).expect("same structure");
        assert!(gap < 1e-9, "{f}: {gap}");
        let (twice, _) = round_trip(&once, &store1);
        assert!(numeric_gap(&once, &twice).unwrap() < 1e-12);
        let refs = |x: &ArticulatedObject| x.parts.iter().map(|p| p.mesh_ref.clone()).collect::<Vec<_>>();
        assert_eq!(refs(&once), refs(&twice));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn export_then_ingest(n in 1usize..7, seed in any::<u64>(), latent in any::<bool>()) {
        let mut o = random_tree(n, seed);
        if latent {
            for (k, p) in o.parts.iter_mut().enumerate() {
                p.shape_latent = Some(vec![k as f64 * 0.1 - 0.3, 1.0 / 3.0]);
            }
        }
        let (back, _) = round_trip(&o, &MeshStore::new());
        prop_assert!(validate_object(&back).is_valid());
        let gap = numeric_gap(&o, &back).expect("same structure");
        prop_assert!(gap < 1e-9, "gap {}", gap);
    }
}
