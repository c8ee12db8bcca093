//! Articulated object representation, kinematic posing and state sampling.

pub mod attributes;
pub mod joint;
pub mod kinematics;
pub mod object;
pub mod sampling;
pub mod shuffle;
pub mod validate;

pub use attributes::{attribute_dim, attributes_to_vector, vector_to_attributes, PartLabels, BASE_ATTRIBUTE_DIM};
pub use joint::{JointSpec, JointType, DEFAULT_SCREW_PITCH};
pub use kinematics::{forward_kinematics, pose_object, topological_order, PosedInstance, PosedPart};
pub use object::{ArticulatedObject, Normalization, OrientedBox, PartNode, StateVector, MIN_HALF_EXTENT};
pub use sampling::{sample_state_vectors, sample_states, SampleStrategy};
pub use shuffle::{invert_permutation, permute_parts, permute_states, shuffle_parts, shuffle_parts_with_permutation};
pub use validate::{validate_object, ValidationReport, Violation, Warning};
