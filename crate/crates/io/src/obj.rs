//! Wavefront OBJ: `v` and `f` records only.
//!
//! Faces may use the `v`, `v/vt`, `v//vn` and `v/vt/vn` forms; texture and
//! normal indices are ignored. Polygons are fan-triangulated from their first
//! vertex and negative indices count back from the latest vertex.

use std::fmt::Write as _;
use std::path::Path;

use artikit_core::geometry::TriMesh;
use artikit_core::math::Vec3;
use artikit_core::{Error, Result, Scalar};

use crate::fs::{read_text, write_atomic};

fn line_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::parse(format!("obj line {line}: {msg}"))
}

pub fn parse_obj<T: Scalar>(text: &str) -> Result<TriMesh<T>> {
    let mut vertices = Vec::new();
    // (line, resolved indices) checked once every vertex is known
    let mut polygons: Vec<(usize, Vec<i64>)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut tok = body.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut xyz = [T::zero(); 3];
                for c in &mut xyz {
                    let s = tok.next().ok_or_else(|| line_error(line, "vertex needs three coordinates"))?;
                    let v: f64 = s.parse().map_err(|_| line_error(line, format!("bad coordinate `{s}`")))?;
                    if !v.is_finite() {
                        return Err(line_error(line, format!("non-finite coordinate `{s}`")));
                    }
                    *c = T::lit(v);
                }
                vertices.push(Vec3(xyz));
            }
            Some("f") => {
                let count = vertices.len() as i64;
                let mut idx = Vec::new();
                for t in tok {
                    let head = t.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| line_error(line, format!("bad face index `{t}`")))?;
                    idx.push(match i {
                        0 => return Err(line_error(line, "face index 0")),
                        i if i < 0 => count + i,
                        i => i - 1,
                    });
                }
                if idx.len() < 3 {
                    return Err(line_error(line, format!("face with {} vertices", idx.len())));
                }
                polygons.push((line, idx));
            }
            _ => {}
        }
    }
    let mut faces = Vec::new();
    let mut skipped = 0;
    for (line, idx) in polygons {
        if let Some(&bad) = idx.iter().find(|&&i| i < 0 || i >= vertices.len() as i64) {
            let shown = if bad < 0 { bad } else { bad + 1 };
            return Err(line_error(line, format!("vertex index {shown} out of range (1..={})", vertices.len())));
        }
        for k in 1..idx.len() - 1 {
            let f = [idx[0] as usize, idx[k] as usize, idx[k + 1] as usize];
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                skipped += 1;
                continue;
            }
            faces.push(f);
        }
    }
    if skipped > 0 {
        log::warn!("dropped {skipped} degenerate OBJ triangles");
    }
    TriMesh::new(vertices, faces)
}

pub fn load_obj<T: Scalar>(path: &Path) -> Result<TriMesh<T>> {
    parse_obj(&read_text(path)?)
}

/// OBJ text with coordinates at 17 significant digits, which round-trip `f64`.
pub fn obj_string<T: Scalar>(mesh: &TriMesh<T>) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 72 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        let [x, y, z] = v.0.map(|c| c.to_f64_lossy());
        let _ = writeln!(s, "v {x:.16e} {y:.16e} {z:.16e}");
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_obj<T: Scalar>(mesh: &TriMesh<T>, path: &Path) -> Result<()> {
    write_atomic(path, obj_string(mesh).as_bytes())
}
