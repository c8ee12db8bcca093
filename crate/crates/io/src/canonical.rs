//! The canonical object file: one pretty-printed JSON document per object.
//!
//! Floats are written in their shortest round-trip form, so saving and
//! loading reproduces every numeric field bit for bit.

use std::path::{Path, PathBuf};

use artikit_core::geometry::MeshStore;
use artikit_core::math::Vec3;
use artikit_core::model::validate::AXIS_UNIT_TOL;
use artikit_core::model::{validate_object, ArticulatedObject, JointSpec, JointType, Normalization, OrientedBox, PartNode, MIN_HALF_EXTENT};
use artikit_core::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};

use crate::fs::{read_text, write_atomic};
use crate::obj::{load_obj, save_obj};

pub const FORMAT_VERSION: &str = "1";

/// Extension of canonical object files.
pub const OBJECT_EXTENSION: &str = "akj";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    format_version: String,
    category: String,
    root: usize,
    #[serde(default)]
    normalization: Option<NormalizationDoc>,
    parts: Vec<PartDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizationDoc {
    center: [f64; 3],
    scale: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartDoc {
    id: usize,
    label: String,
    joint: JointDoc,
    obb: ObbDoc,
    state: f64,
    latent: Option<Vec<f64>>,
    mesh: Option<String>,
    parent: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    #[serde(rename = "type")]
    joint_type: JointType,
    origin: [f64; 3],
    direction: [f64; 3],
    range: [f64; 4],
    pitch: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObbDoc {
    center: [f64; 3],
    half_extents: [f64; 3],
    rotation: [f64; 3],
}

fn wide<T: Scalar>(v: &Vec3<T>) -> [f64; 3] {
    v.0.map(|c| c.to_f64_lossy())
}

fn narrow<T: Scalar>(v: [f64; 3]) -> Vec3<T> {
    Vec3(v.map(T::lit))
}

fn to_doc<T: Scalar>(o: &ArticulatedObject<T>) -> ObjectDoc {
    ObjectDoc {
        format_version: FORMAT_VERSION.into(),
        category: o.category.clone(),
        root: o.root_id,
        normalization: o.normalization.as_ref().map(|n| NormalizationDoc { center: wide(&n.center), scale: n.scale.to_f64_lossy() }),
        parts: o
            .parts
            .iter()
            .map(|p| PartDoc {
                id: p.part_id,
                label: p.semantic_label.clone(),
                joint: JointDoc {
                    joint_type: p.joint.joint_type,
                    origin: wide(&p.joint.axis_origin),
                    direction: wide(&p.joint.axis_direction),
                    range: p.joint.range.map(|r| r.to_f64_lossy()),
                    pitch: p.joint.screw_pitch.to_f64_lossy(),
                },
                obb: ObbDoc { center: wide(&p.obb.center), half_extents: wide(&p.obb.half_extents), rotation: wide(&p.obb.rotation) },
                state: p.state.to_f64_lossy(),
                latent: p.shape_latent.as_ref().map(|l| l.iter().map(|v| v.to_f64_lossy()).collect()),
                mesh: p.mesh_ref.clone(),
                parent: p.parent_id,
            })
            .collect(),
    }
}

fn field_error(path: String, msg: impl std::fmt::Display) -> Error {
    Error::parse(format!("{path}: {msg}"))
}

fn check_doc(doc: &ObjectDoc) -> Result<()> {
    if let Some(n) = &doc.normalization {
        if !(n.scale > 0.0 && n.scale.is_finite()) {
            return Err(field_error("normalization.scale".into(), format!("{} is not a positive scale", n.scale)));
        }
    }
    let latent_len = doc.parts.first().and_then(|p| p.latent.as_ref()).map_or(0, Vec::len);
    for (k, p) in doc.parts.iter().enumerate() {
        let at = |f: &str| format!("parts[{k}].{f}");
        if !(0.0..=1.0).contains(&p.state) {
            return Err(field_error(at("state"), format!("{} outside [0, 1]", p.state)));
        }
        let j = &p.joint;
        let norm = j.direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > AXIS_UNIT_TOL {
            return Err(field_error(at("joint.direction"), format!("norm {norm} is not 1")));
        }
        let (active, unused) = match j.joint_type {
            JointType::Fixed => (None, [0, 1, 2, 3].as_slice()),
            JointType::Revolute | JointType::Continuous => (Some(0), [2, 3].as_slice()),
            JointType::Prismatic | JointType::Screw => (Some(2), [0, 1].as_slice()),
        };
        if let Some(a) = active {
            if j.range[a] > j.range[a + 1] {
                return Err(field_error(at("joint.range"), format!("reversed pair [{}, {}]", j.range[a], j.range[a + 1])));
            }
        }
        if unused.iter().any(|&u| j.range[u] != 0.0) {
            return Err(field_error(at("joint.range"), format!("unused entries must be 0 for a {} joint", j.joint_type)));
        }
        if j.joint_type == JointType::Screw && j.pitch == 0.0 {
            return Err(field_error(at("joint.pitch"), "screw pitch must be nonzero"));
        }
        if p.obb.half_extents.iter().any(|&h| h < MIN_HALF_EXTENT) {
            return Err(field_error(at("obb.half_extents"), format!("entries must be at least {MIN_HALF_EXTENT}")));
        }
        if p.latent.as_ref().map_or(0, Vec::len) != latent_len {
            return Err(field_error(at("latent"), format!("length differs from parts[0] ({latent_len})")));
        }
    }
    Ok(())
}

fn from_doc<T: Scalar>(doc: ObjectDoc) -> ArticulatedObject<T> {
    let parts = doc
        .parts
        .into_iter()
        .map(|p| PartNode {
            part_id: p.id,
            semantic_label: p.label,
            // built field by field so nothing is renormalized or clamped
            obb: OrientedBox { center: narrow(p.obb.center), half_extents: narrow(p.obb.half_extents), rotation: narrow(p.obb.rotation) },
            shape_latent: p.latent.map(|l| l.into_iter().map(T::lit).collect()),
            joint: JointSpec {
                joint_type: p.joint.joint_type,
                axis_origin: narrow(p.joint.origin),
                axis_direction: narrow(p.joint.direction),
                range: p.joint.range.map(T::lit),
                screw_pitch: T::lit(p.joint.pitch),
            },
            state: T::lit(p.state),
            parent_id: p.parent,
            mesh_ref: p.mesh,
        })
        .collect();
    let mut o = ArticulatedObject::new(doc.category, doc.root, parts);
    o.normalization = doc.normalization.map(|n| Normalization { center: narrow(n.center), scale: T::lit(n.scale) });
    o
}

pub fn object_to_string<T: Scalar>(o: &ArticulatedObject<T>) -> String {
    let mut s = serde_json::to_string_pretty(&to_doc(o)).expect("object document serializes");
    s.push('\n');
    s
}

/// Parses and validates a canonical document. Schema errors name the
/// offending field, e.g. `parts[2].state`.
pub fn object_from_str<T: Scalar>(text: &str) -> Result<ArticulatedObject<T>> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("object file line {} column {}: {e}", e.line(), e.column())))?;
    match value.get("format_version") {
        Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => {}
        Some(v) => return Err(Error::parse(format!("object file format: unsupported format_version {v}, expected \"{FORMAT_VERSION}\""))),
        None => return Err(Error::parse("object file format: missing format_version")),
    }
    let doc: ObjectDoc = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        field_error(path, e.into_inner())
    })?;
    check_doc(&doc)?;
    let o = from_doc(doc);
    let report = validate_object(&o);
    if !report.is_valid() {
        return Err(Error::Structure(report.to_string().trim_end().replace('\n', "; ")));
    }
    Ok(o)
}

pub fn load_object<T: Scalar>(path: &Path) -> Result<ArticulatedObject<T>> {
    object_from_str(&read_text(path)?).map_err(|e| match e {
        Error::Parse { message, offset, payload } => Error::Parse { message: format!("{}: {message}", path.display()), offset, payload },
        e => e,
    })
}

/// Refuses invalid objects.
pub fn save_object<T: Scalar>(o: &ArticulatedObject<T>, path: &Path) -> Result<()> {
    let report = validate_object(o);
    if !report.is_valid() {
        return Err(Error::Structure(report.to_string().trim_end().replace('\n', "; ")));
    }
    write_atomic(path, object_to_string(o).as_bytes())
}

/// Directory holding the meshes of the object saved at `path`.
pub fn mesh_dir_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "object".into());
    format!("{stem}_meshes")
}

/// Saves `o` and every mesh its parts reference. Meshes go to
/// `<stem>_meshes/part_<id>.obj` and `mesh` fields are rewritten to those
/// relative paths.
pub fn save_object_with_meshes<T: Scalar>(o: &ArticulatedObject<T>, meshes: &MeshStore<T>, path: &Path) -> Result<ArticulatedObject<T>> {
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let sub = mesh_dir_name(path);
    let mut out = o.clone();
    for p in &mut out.parts {
        if let Some(key) = &p.mesh_ref {
            let mesh = meshes.get(key).ok_or_else(|| Error::MissingMesh(key.clone()))?;
            let rel = format!("{sub}/part_{}.obj", p.part_id);
            save_obj(mesh, &dir.join(&rel))?;
            p.mesh_ref = Some(rel);
        }
    }
    save_object(&out, path)?;
    Ok(out)
}

/// Loads an object and the OBJ files its `mesh` fields name, relative to the
/// object file. Store keys are the `mesh` strings.
pub fn load_object_with_meshes<T: Scalar>(path: &Path) -> Result<(ArticulatedObject<T>, MeshStore<T>)> {
    let o = load_object(path)?;
    let dir: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut store = MeshStore::new();
    for p in &o.parts {
        if let Some(key) = &p.mesh_ref {
            if !store.contains_key(key) {
                store.insert(key.clone(), load_obj(&dir.join(key))?);
            }
        }
    }
    Ok((o, store))
}
