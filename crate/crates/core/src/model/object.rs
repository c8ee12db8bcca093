use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::math::{Mat3, RigidTransform, Vec3};
use crate::model::joint::{check_state, JointSpec};
use crate::scalar::Scalar;

/// Smallest admissible OBB half extent, in meters.
pub const MIN_HALF_EXTENT: f64 = 1e-6;

/// Oriented bounding box: `world = center + R(rotation) · local`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox<T = f64> {
    pub center: Vec3<T>,
    pub half_extents: Vec3<T>,
    /// Axis-angle rotation vector with `|rotation| ≤ π`.
    pub rotation: Vec3<T>,
}

impl<T: Scalar> OrientedBox<T> {
    /// Builds a box, clamping half extents to [`MIN_HALF_EXTENT`] and
    /// canonicalizing the rotation vector.
    pub fn new(center: Vec3<T>, half_extents: Vec3<T>, rotation: Vec3<T>) -> Self {
        let floor = T::lit(MIN_HALF_EXTENT);
        let half_extents = Vec3(half_extents.0.map(|h| if h >= floor { h } else { floor }));
        Self { center, half_extents, rotation: canonical_rotation(&rotation) }
    }

    pub fn axis_aligned(min: Vec3<T>, max: Vec3<T>) -> Self {
        let half = T::lit(0.5);
        Self::new((min + max).scale(half), (max - min).scale(half), Vec3::zeros())
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        Mat3::from_rotation_vector(&self.rotation)
    }

    pub fn corners(&self) -> [Vec3<T>; 8] {
        let r = self.rotation_matrix();
        let h = self.half_extents;
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -h[0] } else { h[0] };
            let sy = if i & 2 == 0 { -h[1] } else { h[1] };
            let sz = if i & 4 == 0 { -h[2] } else { h[2] };
            *c = self.center + r.mul_vec(&Vec3::new(sx, sy, sz));
        }
        out
    }

    /// Whether `p` lies inside the box grown by `tol`.
    pub fn contains(&self, p: &Vec3<T>, tol: T) -> bool {
        let local = self.rotation_matrix().transpose().mul_vec(&(*p - self.center));
        (0..3).all(|k| local[k].abs() <= self.half_extents[k] + tol)
    }

    pub fn volume(&self) -> T {
        T::lit(8.0) * self.half_extents[0] * self.half_extents[1] * self.half_extents[2]
    }

    pub fn transformed(&self, t: &RigidTransform<T>) -> Self {
        if t.is_identity() {
            return self.clone();
        }
        let r = t.rotation.mul_mat(&self.rotation_matrix());
        Self { center: t.apply(&self.center), half_extents: self.half_extents, rotation: r.to_rotation_vector() }
    }

    pub fn cast<U: Scalar>(&self) -> OrientedBox<U> {
        OrientedBox { center: self.center.cast(), half_extents: self.half_extents.cast(), rotation: self.rotation.cast() }
    }
}

fn canonical_rotation<T: Scalar>(rv: &Vec3<T>) -> Vec3<T> {
    if rv.norm() <= T::PI() {
        *rv
    } else {
        Mat3::from_rotation_vector(rv).to_rotation_vector()
    }
}

/// One rigid part with its geometry and the joint attaching it to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct PartNode<T = f64> {
    pub part_id: usize,
    pub semantic_label: String,
    pub obb: OrientedBox<T>,
    pub shape_latent: Option<Vec<T>>,
    pub joint: JointSpec<T>,
    /// Normalized joint position in `[0, 1]`.
    pub state: T,
    /// `None` for the root.
    pub parent_id: Option<usize>,
    pub mesh_ref: Option<String>,
}

impl<T: Scalar> PartNode<T> {
    pub fn latent_dim(&self) -> usize {
        self.shape_latent.as_ref().map_or(0, Vec::len)
    }
}

/// Reversible record of the translate-then-scale normalization applied at
/// ingestion: `canonical = (original - center) * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization<T = f64> {
    pub center: Vec3<T>,
    pub scale: T,
}

impl<T: Scalar> Normalization<T> {
    pub fn identity() -> Self {
        Self { center: Vec3::zeros(), scale: T::one() }
    }

    pub fn apply(&self, p: &Vec3<T>) -> Vec3<T> {
        (*p - self.center).scale(self.scale)
    }

    pub fn invert(&self, p: &Vec3<T>) -> Vec3<T> {
        p.scale(T::one() / self.scale) + self.center
    }
}

/// Kinematic tree of parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticulatedObject<T = f64> {
    pub parts: Vec<PartNode<T>>,
    pub root_id: usize,
    pub category: String,
    pub normalization: Option<Normalization<T>>,
}

impl<T: Scalar> ArticulatedObject<T> {
    pub fn new(category: impl Into<String>, root_id: usize, parts: Vec<PartNode<T>>) -> Self {
        Self { parts, root_id, category: category.into(), normalization: None }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Map from part id to position in `parts`; fails on duplicate ids.
    pub fn index_of_ids(&self) -> Result<HashMap<usize, usize>> {
        let mut map = HashMap::with_capacity(self.parts.len());
        for (i, p) in self.parts.iter().enumerate() {
            if map.insert(p.part_id, i).is_some() {
                return Err(Error::Structure(format!("duplicate part id {}", p.part_id)));
            }
        }
        Ok(map)
    }

    pub fn part(&self, id: usize) -> Option<&PartNode<T>> {
        self.parts.iter().find(|p| p.part_id == id)
    }

    /// The states currently stored on the parts.
    pub fn current_states(&self) -> StateVector<T> {
        StateVector(self.parts.iter().map(|p| p.state).collect())
    }

    pub fn latent_dim(&self) -> usize {
        self.parts.iter().map(PartNode::latent_dim).max().unwrap_or(0)
    }

    /// Copy with every part's stored state replaced.
    pub fn with_states(&self, states: &StateVector<T>) -> Result<Self> {
        states.check_len(self.parts.len())?;
        let mut out = self.clone();
        for (p, &s) in out.parts.iter_mut().zip(&states.0) {
            check_state(s)?;
            p.state = s;
        }
        Ok(out)
    }
}

/// Per-part normalized joint states, indexed by position in `parts`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector<T = f64>(pub Vec<T>);

impl<T: Scalar> StateVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![T::one(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::shape(format!("{n} states"), format!("{} states", self.0.len())))
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}
