//! Instantiation distance and the set-level metrics built on it.

pub mod instantiation;
pub mod matrix;
pub mod report;
pub mod set;

pub use instantiation::{
    instantiation_distance, instantiation_distance_posed, object_digest, rest_part_clouds, IdConfig, ObjectAsset,
    PosedClouds,
};
pub use matrix::{cache_path, matrix_key, pairwise_distance_matrix, CacheStatus, DistanceMatrix};
pub use report::{evaluate_sets, object_overlap_rate, overlap_profile, Evaluation, MetricsReport, ReportConfig};
pub use set::{coverage, mmd, one_nna, row_argmin};
