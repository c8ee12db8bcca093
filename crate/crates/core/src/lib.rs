//! Articulated objects as kinematic trees of parts.
//!
//! Each part carries an oriented bounding box, an optional shape latent, the
//! joint connecting it to its parent, the joint range and a normalized joint
//! state. On top of that representation the crate provides forward
//! kinematics, state sampling, mesh and point-cloud geometry, connectivity
//! graphs with attention masks and routing embeddings, and the set-level
//! evaluation metrics.
//!
//! Every type is generic over the scalar; the unsuffixed aliases below use
//! `f64`, the `*32` ones `f32`.

pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod graph;
pub mod math;
pub mod metrics;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vec3 = math::Vec3<f64>;
pub type Mat3 = math::Mat3<f64>;
pub type Transform = math::RigidTransform<f64>;
pub type Object = model::ArticulatedObject<f64>;
pub type Part = model::PartNode<f64>;
pub type Joint = model::JointSpec<f64>;
pub type Obb = model::OrientedBox<f64>;
pub type States = model::StateVector<f64>;
pub type Mesh = geometry::TriMesh<f64>;
pub type Cloud = geometry::PointCloud<f64>;

pub type Vec3f32 = math::Vec3<f32>;
pub type Transform32 = math::RigidTransform<f32>;
pub type Object32 = model::ArticulatedObject<f32>;
pub type Mesh32 = geometry::TriMesh<f32>;
pub type Cloud32 = geometry::PointCloud<f32>;
