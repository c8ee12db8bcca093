//! Flat attribute vectors `b(9) ‖ l(6) ‖ r(4) ‖ s(1) ‖ f(F)` for one part.
//!
//! Joint type, labels and tree links are categorical and travel beside the
//! vector rather than inside it.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::model::joint::{JointSpec, JointType};
use crate::model::object::{OrientedBox, PartNode};
use crate::scalar::Scalar;

/// Length of the fixed part of the attribute vector.
pub const BASE_ATTRIBUTE_DIM: usize = 20;

pub const OBB_OFFSET: usize = 0;
pub const AXIS_ORIGIN_OFFSET: usize = 9;
pub const AXIS_DIRECTION_OFFSET: usize = 12;
pub const RANGE_OFFSET: usize = 15;
pub const STATE_OFFSET: usize = 19;
pub const LATENT_OFFSET: usize = 20;

pub fn attribute_dim(latent_dim: usize) -> usize {
    BASE_ATTRIBUTE_DIM + latent_dim
}

/// Out-of-band data needed to rebuild a part from its attribute vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PartLabels<T = f64> {
    pub part_id: usize,
    pub semantic_label: String,
    pub parent_id: Option<usize>,
    pub mesh_ref: Option<String>,
    pub screw_pitch: T,
}

impl<T: Scalar> PartLabels<T> {
    pub fn of(part: &PartNode<T>) -> Self {
        Self {
            part_id: part.part_id,
            semantic_label: part.semantic_label.clone(),
            parent_id: part.parent_id,
            mesh_ref: part.mesh_ref.clone(),
            screw_pitch: part.joint.screw_pitch,
        }
    }
}

pub fn attributes_to_vector<T: Scalar>(part: &PartNode<T>) -> Vec<T> {
    let mut v = Vec::with_capacity(attribute_dim(part.latent_dim()));
    v.extend_from_slice(&part.obb.center.0);
    v.extend_from_slice(&part.obb.half_extents.0);
    v.extend_from_slice(&part.obb.rotation.0);
    v.extend_from_slice(&part.joint.axis_origin.0);
    v.extend_from_slice(&part.joint.axis_direction.0);
    v.extend_from_slice(&part.joint.range);
    v.push(part.state);
    if let Some(f) = &part.shape_latent {
        v.extend_from_slice(f);
    }
    v
}

/// Inverse of [`attributes_to_vector`]; copies every number verbatim.
///
/// A zero-length latent maps to `shape_latent = None`.
pub fn vector_to_attributes<T: Scalar>(
    v: &[T],
    latent_dim: usize,
    joint_type: JointType,
    labels: &PartLabels<T>,
) -> Result<PartNode<T>> {
    let dim = attribute_dim(latent_dim);
    if v.len() != dim {
        return Err(Error::shape(format!("attribute vector of length {dim}"), v.len()));
    }
    let v3 = |o: usize| Vec3::new(v[o], v[o + 1], v[o + 2]);
    let obb = OrientedBox { center: v3(OBB_OFFSET), half_extents: v3(OBB_OFFSET + 3), rotation: v3(OBB_OFFSET + 6) };
    let joint = JointSpec {
        joint_type,
        axis_origin: v3(AXIS_ORIGIN_OFFSET),
        axis_direction: v3(AXIS_DIRECTION_OFFSET),
        range: [v[RANGE_OFFSET], v[RANGE_OFFSET + 1], v[RANGE_OFFSET + 2], v[RANGE_OFFSET + 3]],
        screw_pitch: labels.screw_pitch,
    };
    Ok(PartNode {
        part_id: labels.part_id,
        semantic_label: labels.semantic_label.clone(),
        obb,
        shape_latent: (latent_dim > 0).then(|| v[LATENT_OFFSET..].to_vec()),
        joint,
        state: v[STATE_OFFSET],
        parent_id: labels.parent_id,
        mesh_ref: labels.mesh_ref.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::chain;

    fn zero_part() -> PartNode {
        PartNode {
            part_id: 0,
            semantic_label: String::new(),
            obb: OrientedBox { center: Vec3::zeros(), half_extents: Vec3::zeros(), rotation: Vec3::zeros() },
            shape_latent: None,
            joint: JointSpec { axis_direction: Vec3::zeros(), ..JointSpec::fixed() },
            state: 0.0,
            parent_id: None,
            mesh_ref: None,
        }
    }

    #[test]
    fn zero_part_is_zero_vector() {
        assert_eq!(attributes_to_vector(&zero_part()), vec![0.0; 20]);
    }

    #[test]
    fn obb_occupies_first_nine_slots() {
        let mut p = zero_part();
        p.obb.center = Vec3::new(1.0, 2.0, 3.0);
        p.obb.half_extents = Vec3::new(4.0, 5.0, 6.0);
        p.obb.rotation = Vec3::new(7.0, 8.0, 9.0);
        let v = attributes_to_vector(&p);
        assert_eq!(&v[..9], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn round_trip_with_latent() {
        let mut obj = chain(3);
        obj.parts[2].shape_latent = Some((0..8).map(|i| i as f64 * 0.1 - 0.3).collect());
        obj.parts[2].state = 0.37;
        let part = &obj.parts[2];
        let v = attributes_to_vector(part);
        assert_eq!(v.len(), 28);
        let back = vector_to_attributes(&v, 8, part.joint.joint_type, &PartLabels::of(part)).unwrap();
        assert_eq!(&back, part);
    }

    #[test]
    fn wrong_length_is_a_shape_error() {
        let p = zero_part();
        assert!(matches!(
            vector_to_attributes(&[0.0; 19], 0, JointType::Fixed, &PartLabels::of(&p)),
            Err(Error::Shape { .. })
        ));
    }
}
