//! File formats around the articulated object model: PartNet-Mobility style
//! URDF ingestion and export, the canonical `.akj` object document, Wavefront
//! OBJ meshes and `AKFT` condition-feature files.

pub mod canonical;
pub mod features;
mod fs;
pub mod latent;
pub mod obj;
pub mod urdf;

pub use canonical::{
    load_object, load_object_with_meshes, object_from_str, object_to_string, save_object, save_object_with_meshes, FORMAT_VERSION,
    OBJECT_EXTENSION,
};
pub use features::{decode_features, encode_features, load_features, save_features, FeatureMatrix, FEATURE_MAGIC};
pub use fs::write_atomic;
pub use latent::{pca_shape_latent, PCA_LATENT_DIM};
pub use obj::{load_obj, obj_string, parse_obj, save_obj};
pub use urdf::{export_urdf, normalize, parse_mobility_urdf, parse_mobility_urdf_with, rest_bounds, urdf_string, UrdfOptions, VENDOR_NS};
