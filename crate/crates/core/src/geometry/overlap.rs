use crate::error::{Error, Result};
use crate::geometry::mesh::{Aabb, TriMesh};
use crate::geometry::voxel::voxel_occupancy;
use crate::model::PosedInstance;
use crate::scalar::Scalar;

/// Default lattice resolution for the overlap rate.
pub const DEFAULT_POR_RESOLUTION: usize = 64;

/// Part Overlapping Rate: summed pairwise intersection volume of the parts'
/// voxelized solids over their summed volume. Parts are voxelized on one
/// shared lattice covering the union bounding box padded by 5%. Parts
/// without a mesh contribute their OBB.
pub fn part_overlap_rate<T: Scalar>(posed: &PosedInstance<T>, resolution: usize) -> Result<T> {
    let surfaces: Vec<TriMesh<T>> = posed.parts.iter().map(|p| p.surface()).filter(|m| !m.is_empty()).collect();
    overlap_rate_of_meshes(&surfaces, resolution)
}

pub fn overlap_rate_of_meshes<T: Scalar>(meshes: &[TriMesh<T>], resolution: usize) -> Result<T> {
    let bounds = meshes
        .iter()
        .filter_map(TriMesh::aabb)
        .reduce(|a, b| a.union(&b))
        .ok_or_else(|| Error::Parameter("overlap rate needs at least one part with geometry".into()))?;
    let ext = bounds.extent();
    let side = ext[0].max(ext[1]).max(ext[2]);
    if !(side > T::zero()) {
        return Err(Error::Parameter("part geometry has zero extent".into()));
    }
    let bounds: Aabb<T> = bounds.padded(side * T::lit(0.05));
    let mut counts = vec![0u32; resolution * resolution * resolution];
    for (k, mesh) in meshes.iter().enumerate() {
        let grid = voxel_occupancy(mesh, resolution, &bounds)?;
        if !grid.watertight {
            log::warn!("part {k} is not watertight; occupancy from ray parity may be wrong");
        }
        for (c, &o) in counts.iter_mut().zip(&grid.occupancy) {
            *c += u32::from(o);
        }
    }
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return Ok(T::zero());
    }
    // a cell held by c parts lies in c·(c−1)/2 pairwise intersections
    let pairs: u64 = counts.iter().map(|&c| u64::from(c) * u64::from(c.saturating_sub(1)) / 2).sum();
    Ok(T::lit(pairs as f64 / total as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    fn cube_at(x: f64) -> TriMesh {
        TriMesh::cuboid(Vec3::new(x, 0.0, 0.0), Vec3::new(x + 1.0, 1.0, 1.0))
    }

    #[test]
    fn disjoint_coincident_and_half() {
        assert_eq!(overlap_rate_of_meshes(&[cube_at(0.0), cube_at(2.0)], 64).unwrap(), 0.0);
        let same = overlap_rate_of_meshes(&[cube_at(0.0), cube_at(0.0)], 64).unwrap();
        assert!((same - 0.5).abs() <= 0.02, "{same}");
        let half = overlap_rate_of_meshes(&[cube_at(0.0), cube_at(0.5)], 64).unwrap();
        assert!((half - 0.25).abs() <= 0.02, "{half}");
    }

    #[test]
    fn no_geometry_is_an_error() {
        assert!(overlap_rate_of_meshes::<f64>(&[], 8).is_err());
    }
}
