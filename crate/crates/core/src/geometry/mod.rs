//! Meshes, point clouds and the geometric measurements built on them.

pub mod chamfer;
pub mod kdtree;
pub mod mesh;
pub mod obb_fit;
pub mod overlap;
pub mod sampling;
pub mod voxel;

pub use chamfer::{chamfer_distance, chamfer_distance_brute_force, chamfer_with_trees};
pub use kdtree::KdTree;
pub use mesh::{Aabb, MeshStore, PointCloud, TriMesh};
pub use obb_fit::fit_obb;
pub use overlap::{overlap_rate_of_meshes, part_overlap_rate, DEFAULT_POR_RESOLUTION};
pub use sampling::{proportional_allocation, sample_surface_points};
pub use voxel::{voxel_occupancy, VoxelGrid, PARITY_RAY};
