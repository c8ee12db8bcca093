use crate::error::{Error, Result};
use crate::geometry::{MeshStore, TriMesh};
use crate::math::RigidTransform;
use crate::model::object::{ArticulatedObject, OrientedBox, StateVector};
use crate::scalar::Scalar;

/// Part positions ordered so that every parent precedes its children.
///
/// Fails when the parent links do not form a single tree rooted at `root_id`.
pub fn topological_order<T: Scalar>(object: &ArticulatedObject<T>) -> Result<Vec<usize>> {
    let index = object.index_of_ids()?;
    let n = object.parts.len();
    let root = *index
        .get(&object.root_id)
        .ok_or_else(|| Error::Structure(format!("root id {} not among parts", object.root_id)))?;
    let mut children = vec![Vec::new(); n];
    for (i, p) in object.parts.iter().enumerate() {
        match p.parent_id {
            None if i == root => {}
            None => return Err(Error::Structure(format!("part {} has no parent but is not the root", p.part_id))),
            Some(_) if i == root => {
                return Err(Error::Structure(format!("root part {} has a parent", p.part_id)));
            }
            Some(pid) => {
                let pi = *index
                    .get(&pid)
                    .ok_or_else(|| Error::Structure(format!("part {} references unknown parent {pid}", p.part_id)))?;
                children[pi].push(i);
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    while let Some(i) = stack.pop() {
        if seen[i] {
            continue;
        }
        seen[i] = true;
        order.push(i);
        stack.extend(children[i].iter().rev());
    }
    if order.len() != n {
        let cycle = find_cycle(object).unwrap_or_default();
        return Err(Error::Structure(if cycle.is_empty() {
            "parts unreachable from the root".to_string()
        } else {
            format!("parent cycle through parts {cycle:?}")
        }));
    }
    Ok(order)
}

/// Part ids along a parent cycle, if one exists.
pub fn find_cycle<T: Scalar>(object: &ArticulatedObject<T>) -> Option<Vec<usize>> {
    let parent_of: std::collections::HashMap<usize, Option<usize>> =
        object.parts.iter().map(|p| (p.part_id, p.parent_id)).collect();
    for start in object.parts.iter().map(|p| p.part_id) {
        let mut path = vec![start];
        let mut cur = start;
        while let Some(Some(next)) = parent_of.get(&cur) {
            if let Some(pos) = path.iter().position(|&q| q == *next) {
                let mut cycle = path[pos..].to_vec();
                let min_pos = cycle.iter().enumerate().min_by_key(|(_, v)| **v).map(|(i, _)| i).unwrap_or(0);
                cycle.rotate_left(min_pos);
                return Some(cycle);
            }
            path.push(*next);
            cur = *next;
        }
    }
    None
}

/// World transform of every part (indexed like `object.parts`) at `states`.
///
/// A part's transform is the product of joint transforms along the path from
/// the root; the root maps to the identity.
pub fn forward_kinematics<T: Scalar>(
    object: &ArticulatedObject<T>,
    states: &StateVector<T>,
) -> Result<Vec<RigidTransform<T>>> {
    states.check_len(object.parts.len())?;
    let order = topological_order(object)?;
    let index = object.index_of_ids()?;
    let mut world = vec![RigidTransform::identity(); object.parts.len()];
    for &i in &order {
        let part = &object.parts[i];
        let Some(pid) = part.parent_id else {
            // root state is inert
            continue;
        };
        let parent = world[index[&pid]];
        let local = part.joint.joint_transform(states.0[i])?;
        world[i] = if parent.is_identity() { local } else { parent.compose(&local) };
    }
    Ok(world)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosedPart<T = f64> {
    pub part_id: usize,
    pub transform: RigidTransform<T>,
    pub obb: OrientedBox<T>,
    pub mesh: Option<TriMesh<T>>,
}

impl<T: Scalar> PosedPart<T> {
    /// The posed mesh, or the posed OBB surface for parts without one.
    pub fn surface(&self) -> TriMesh<T> {
        self.mesh.clone().unwrap_or_else(|| self.obb.to_mesh())
    }
}

/// World-space geometry of an object at one state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedInstance<T = f64> {
    pub states: StateVector<T>,
    pub parts: Vec<PosedPart<T>>,
}

impl<T: Scalar> PosedInstance<T> {
    pub fn meshes(&self) -> impl Iterator<Item = &TriMesh<T>> {
        self.parts.iter().filter_map(|p| p.mesh.as_ref())
    }
}

/// Applies forward kinematics to every part's OBB and, when a mesh store is
/// given, to every referenced mesh.
pub fn pose_object<T: Scalar>(
    object: &ArticulatedObject<T>,
    states: &StateVector<T>,
    meshes: Option<&MeshStore<T>>,
) -> Result<PosedInstance<T>> {
    let world = forward_kinematics(object, states)?;
    let parts = object
        .parts
        .iter()
        .zip(&world)
        .map(|(part, t)| {
            let mesh = match (meshes, &part.mesh_ref) {
                (Some(store), Some(r)) => {
                    let m = store.get(r).ok_or_else(|| Error::MissingMesh(r.clone()))?;
                    Some(m.transformed(t))
                }
                _ => None,
            };
            Ok(PosedPart { part_id: part.part_id, transform: *t, obb: part.obb.transformed(t), mesh })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosedInstance { states: states.clone(), parts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Mat3, Vec3};
    use crate::model::joint::JointSpec;
    use crate::model::object::PartNode;
    use crate::fixtures::{chain, unit_cube_part};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn all_fixed_gives_identity() {
        let mut obj = chain(3);
        for p in &mut obj.parts {
            p.joint = JointSpec::fixed();
        }
        let fk = forward_kinematics(&obj, &StateVector::ones(3)).unwrap();
        assert!(fk.iter().all(RigidTransform::is_identity));
    }

    #[test]
    fn single_joint_chain() {
        let obj = chain(2);
        let fk = forward_kinematics(&obj, &StateVector(vec![0.0, 1.0])).unwrap();
        let rz = Mat3::from_axis_angle(&Vec3::unit_z(), FRAC_PI_2);
        assert!(fk[1].rotation.max_abs_diff(&rz) < 1e-15);
    }

    #[test]
    fn two_quarter_turns_make_a_half_turn() {
        let obj = chain(3);
        let fk = forward_kinematics(&obj, &StateVector(vec![0.0, 1.0, 1.0])).unwrap();
        let rz = Mat3::from_axis_angle(&Vec3::unit_z(), PI);
        assert!(fk[2].rotation.max_abs_diff(&rz) < 1e-15);
    }

    #[test]
    fn cycle_is_a_structural_error() {
        let mut obj = chain(3);
        obj.parts[1].parent_id = Some(2);
        let err = forward_kinematics(&obj, &StateVector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::Structure(ref m) if m.contains("cycle")), "{err}");
        assert_eq!(find_cycle(&obj), Some(vec![1, 2]));
    }

    #[test]
    fn state_length_mismatch() {
        assert!(matches!(forward_kinematics(&chain(2), &StateVector::zeros(3)), Err(Error::Shape { .. })));
    }

    #[test]
    fn posing_at_rest_is_bitwise_identity() {
        let (obj, store) = unit_cube_part();
        let posed = pose_object(&obj, &StateVector::zeros(1), Some(&store)).unwrap();
        assert_eq!(posed.parts[0].obb, obj.parts[0].obb);
        assert_eq!(posed.parts[0].mesh.as_ref(), store.get("cube"));
    }

    #[test]
    fn posing_rotates_cube_vertices() {
        let (mut obj, store) = unit_cube_part();
        let mut base: PartNode = obj.parts[0].clone();
        base.mesh_ref = None;
        let mut cube = obj.parts.remove(0);
        cube.part_id = 1;
        cube.parent_id = Some(0);
        cube.joint = JointSpec::revolute(Vec3::zeros(), Vec3::unit_z(), 0.0, FRAC_PI_2).unwrap();
        let obj = ArticulatedObject::new("test", 0, vec![base, cube]);
        let before = obj.clone();
        let posed = pose_object(&obj, &StateVector(vec![0.0, 1.0]), Some(&store)).unwrap();
        assert_eq!(obj, before);
        let mesh = posed.parts[1].mesh.as_ref().unwrap();
        let src = &store["cube"];
        let k = src.vertices.iter().position(|v| *v == Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(mesh.vertices[k].max_abs_diff(&Vec3::new(0.0, 1.0, 0.0)) < 1e-12);
        let c = posed.parts[1].obb.center;
        let expected = posed.parts[1].transform.apply(&obj.parts[1].obb.center);
        assert_eq!(c, expected);
    }

    #[test]
    fn missing_mesh_is_a_lookup_error() {
        let (mut obj, store) = unit_cube_part();
        obj.parts[0].mesh_ref = Some("nope".into());
        assert!(matches!(pose_object(&obj, &StateVector::zeros(1), Some(&store)), Err(Error::MissingMesh(_))));
        assert!(pose_object(&obj, &StateVector::zeros(1), None).is_ok());
    }
}
