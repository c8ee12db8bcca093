use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::math::{RigidTransform, Vec3};
use crate::model::OrientedBox;
use crate::scalar::Scalar;

/// Meshes keyed by the `mesh_ref` strings stored on parts.
pub type MeshStore<T = f64> = BTreeMap<String, TriMesh<T>>;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T = f64> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3<T>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        Some(it.fold(Self::new(first, first), |b, p| Self::new(b.min.component_min(p), b.max.component_max(p))))
    }

    pub fn union(&self, o: &Self) -> Self {
        Self::new(self.min.component_min(&o.min), self.max.component_max(&o.max))
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max).scale(T::lit(0.5))
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Strict containment of another box.
    pub fn strictly_contains(&self, o: &Self) -> bool {
        (0..3).all(|k| self.min[k] < o.min[k] && self.max[k] > o.max[k])
    }

    pub fn padded(&self, margin: T) -> Self {
        let m = Vec3::new(margin, margin, margin);
        Self::new(self.min - m, self.max + m)
    }
}

/// Triangle mesh with vertex positions in meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh<T = f64> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
}

impl<T: Scalar> TriMesh<T> {
    /// Builds a mesh, rejecting out-of-range or repeated face indices.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn check(&self) -> Result<()> {
        for (k, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::Geometry(format!("face {k} references a vertex out of range")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Geometry(format!("face {k} repeats a vertex")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Axis-aligned cuboid from `min` to `max`, 8 vertices and 12 outward-facing triangles.
    pub fn cuboid(min: Vec3<T>, max: Vec3<T>) -> Self {
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min[0] } else { max[0] },
                    if i & 2 == 0 { min[1] } else { max[1] },
                    if i & 4 == 0 { min[2] } else { max[2] },
                )
            })
            .collect();
        let faces = vec![
            [0, 2, 1],
            [1, 2, 3],
            [4, 5, 6],
            [5, 7, 6],
            [0, 1, 4],
            [1, 5, 4],
            [2, 6, 3],
            [3, 6, 7],
            [0, 4, 2],
            [2, 4, 6],
            [1, 3, 5],
            [3, 7, 5],
        ];
        Self { vertices, faces }
    }

    pub fn triangle(&self, k: usize) -> [Vec3<T>; 3] {
        let f = self.faces[k];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn face_area(&self, k: usize) -> T {
        let [a, b, c] = self.triangle(k);
        (b - a).cross(&(c - a)).norm() * T::lit(0.5)
    }

    pub fn surface_area(&self) -> T {
        (0..self.faces.len()).map(|k| self.face_area(k)).sum()
    }

    pub fn aabb(&self) -> Option<Aabb<T>> {
        Aabb::from_points(&self.vertices)
    }

    pub fn transformed(&self, t: &RigidTransform<T>) -> Self {
        if t.is_identity() {
            return self.clone();
        }
        Self { vertices: self.vertices.iter().map(|v| t.apply(v)).collect(), faces: self.faces.clone() }
    }

    /// Every undirected edge is shared by exactly two faces.
    pub fn is_watertight(&self) -> bool {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for f in &self.faces {
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *count.entry((e.0.min(e.1), e.0.max(e.1))).or_default() += 1;
            }
        }
        !count.is_empty() && count.values().all(|&c| c == 2)
    }

    /// Concatenates meshes, offsetting face indices.
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriMesh<T>>) -> Self {
        let mut out = Self::default();
        for m in meshes {
            let base = out.vertices.len();
            out.vertices.extend_from_slice(&m.vertices);
            out.faces.extend(m.faces.iter().map(|f| f.map(|i| i + base)));
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> TriMesh<U> {
        TriMesh { vertices: self.vertices.iter().map(Vec3::cast).collect(), faces: self.faces.clone() }
    }
}

impl<T: Scalar> OrientedBox<T> {
    /// Closed surface of the box.
    pub fn to_mesh(&self) -> TriMesh<T> {
        let h = self.half_extents;
        let local = TriMesh::cuboid(-h, h);
        local.transformed(&RigidTransform::new(self.rotation_matrix(), self.center))
    }
}

/// Unordered point set in meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<T = f64> {
    pub points: Vec<Vec3<T>>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform<T>) -> Self {
        Self { points: self.points.iter().map(|p| t.apply(p)).collect() }
    }
}

impl<T> FromIterator<Vec3<T>> for PointCloud<T> {
    fn from_iter<I: IntoIterator<Item = Vec3<T>>>(iter: I) -> Self {
        Self { points: iter.into_iter().collect() }
    }
}
