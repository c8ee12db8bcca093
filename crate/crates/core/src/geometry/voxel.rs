//! Solid voxelization by ray parity.

use crate::error::{Error, Result};
use crate::geometry::mesh::{Aabb, TriMesh};
use crate::math::Vec3;
use crate::scalar::Scalar;

/// Ray direction for the parity test, tilted off the axes so rays do not run
/// along the faces and edges of axis-aligned geometry.
pub const PARITY_RAY: [f64; 3] = [1.0, 1e-4, 1e-4];

/// Cubic occupancy lattice of `resolution³` cells starting at `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid<T = f64> {
    pub origin: Vec3<T>,
    pub cell_size: T,
    pub resolution: usize,
    /// Indexed by `i + R·(j + R·k)`.
    pub occupancy: Vec<bool>,
    /// False when the source mesh was not closed; parity is then unreliable.
    pub watertight: bool,
}

impl<T: Scalar> VoxelGrid<T> {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3<T> {
        let c = |n: usize| (T::from_usize(n).unwrap_or_else(T::zero) + T::lit(0.5)) * self.cell_size;
        self.origin + Vec3::new(c(i), c(j), c(k))
    }

    pub fn occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.index(i, j, k)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn cell_volume(&self) -> T {
        self.cell_size * self.cell_size * self.cell_size
    }

    pub fn occupied_volume(&self) -> T {
        T::from_usize(self.occupied_count()).unwrap_or_else(T::zero) * self.cell_volume()
    }
}

/// Marks every cell whose center lies inside `mesh`. The lattice is a cube of
/// side `max(bounds extent)` anchored at `bounds.min`.
pub fn voxel_occupancy<T: Scalar>(mesh: &TriMesh<T>, resolution: usize, bounds: &Aabb<T>) -> Result<VoxelGrid<T>> {
    if resolution == 0 {
        return Err(Error::Parameter("voxel resolution must be at least 1".into()));
    }
    mesh.check()?;
    let ext = bounds.extent();
    let side = ext[0].max(ext[1]).max(ext[2]);
    let r = T::from_usize(resolution).unwrap_or_else(T::one);
    let cell_size = side / r;
    if !(cell_size > T::zero()) || !cell_size.is_finite() {
        return Err(Error::Parameter("voxel bounds must have positive finite extent".into()));
    }
    if let Some(mesh_box) = mesh.aabb().filter(|_| !mesh.is_empty()) {
        if !bounds.strictly_contains(&mesh_box) {
            return Err(Error::Parameter("voxel bounds must strictly contain the mesh".into()));
        }
    }
    let mut grid = VoxelGrid {
        origin: bounds.min,
        cell_size,
        resolution,
        occupancy: vec![false; resolution * resolution * resolution],
        watertight: mesh.is_empty() || mesh.is_watertight(),
    };
    if mesh.is_empty() {
        return Ok(grid);
    }
    let dir = Vec3([T::lit(PARITY_RAY[0]), T::lit(PARITY_RAY[1]), T::lit(PARITY_RAY[2])]);
    let tris: Vec<[Vec3<T>; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
    let tri_boxes: Vec<Aabb<T>> = tris.iter().map(|t| Aabb::from_points(t).expect("three vertices")).collect();
    // a ray leaving from inside the lattice drifts at most this far in y and z
    let drift = dir[1] * (side + side);
    let mut candidates = Vec::new();
    for k in 0..resolution {
        for j in 0..resolution {
            let row = grid.cell_center(0, j, k);
            candidates.clear();
            candidates.extend((0..tris.len()).filter(|&f| {
                let b = &tri_boxes[f];
                b.max[1] >= row[1] && b.min[1] <= row[1] + drift && b.max[2] >= row[2] && b.min[2] <= row[2] + drift
            }));
            if candidates.is_empty() {
                continue;
            }
            for i in 0..resolution {
                let p = grid.cell_center(i, j, k);
                let hits = candidates.iter().filter(|&&f| ray_hits_triangle(&p, &dir, &tris[f])).count();
                if hits % 2 == 1 {
                    let idx = grid.index(i, j, k);
                    grid.occupancy[idx] = true;
                }
            }
        }
    }
    Ok(grid)
}

/// Möller–Trumbore test for a hit at positive ray parameter.
fn ray_hits_triangle<T: Scalar>(origin: &Vec3<T>, dir: &Vec3<T>, tri: &[Vec3<T>; 3]) -> bool {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() <= T::epsilon() * e1.norm() * e2.norm() {
        return false;
    }
    let inv = T::one() / det;
    let s = *origin - tri[0];
    let u = s.dot(&p) * inv;
    if u < T::zero() || u > T::one() {
        return false;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < T::zero() || u + v > T::one() {
        return false;
    }
    e2.dot(&q) * inv > T::zero()
}
