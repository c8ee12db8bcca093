//! Eight-number shape descriptor standing in for a learned part latent.

use artikit_core::geometry::{sample_surface_points, TriMesh};
use artikit_core::math::{symmetric_eigen, Mat3};
use artikit_core::model::OrientedBox;
use artikit_core::{Result, Scalar};

pub const PCA_LATENT_DIM: usize = 8;

/// Surface points are mapped into the box frame and scaled by the half
/// extents, so every coordinate lies in `[-1, 1]`. The descriptor is
/// `[λ₀, λ₁, λ₂, mean|x|, mean|y|, mean|z|, shell, area ratio]` with `λ` the
/// descending covariance eigenvalues, `shell` the fraction of points with a
/// coordinate beyond 0.9 and the area taken relative to the box surface.
pub fn pca_shape_latent<T: Scalar>(surface: &TriMesh<T>, obb: &OrientedBox<T>, points: usize, seed: u64) -> Result<Vec<T>> {
    let cloud = sample_surface_points(surface, points.max(1), seed)?;
    let rt = obb.rotation_matrix().transpose();
    let local: Vec<[T; 3]> = cloud
        .points
        .iter()
        .map(|p| {
            let q = rt.mul_vec(&(*p - obb.center));
            [0, 1, 2].map(|k| q[k] / obb.half_extents[k])
        })
        .collect();
    let n = T::from_usize(local.len()).expect("point count");
    let mut mean = [T::zero(); 3];
    let mut abs_mean = [T::zero(); 3];
    let mut shell = T::zero();
    for q in &local {
        for k in 0..3 {
            mean[k] += q[k] / n;
            abs_mean[k] += q[k].abs() / n;
        }
        if q.iter().any(|c| c.abs() > T::lit(0.9)) {
            shell += T::one() / n;
        }
    }
    let mut cov = Mat3::<T>::zeros();
    for q in &local {
        for i in 0..3 {
            for j in 0..3 {
                cov.0[i][j] += (q[i] - mean[i]) * (q[j] - mean[j]) / n;
            }
        }
    }
    let (mut eig, _) = symmetric_eigen(&cov);
    eig.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let h = obb.half_extents;
    let box_area = T::lit(8.0) * (h[0] * h[1] + h[1] * h[2] + h[0] * h[2]);
    let mut out = eig.to_vec();
    out.extend_from_slice(&abs_mean);
    out.push(shell);
    out.push(surface.surface_area() / box_area);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use artikit_core::math::Vec3;

    #[test]
    fn box_surface_descriptor() {
        let obb = OrientedBox::axis_aligned(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
        let f: Vec<f64> = pca_shape_latent(&obb.to_mesh(), &obb, 4000, 3).unwrap();
        assert_eq!(f.len(), PCA_LATENT_DIM);
        assert!((f[7] - 1.0).abs() < 1e-12);
        // a point on a cube face has one coordinate at ±1 and two uniform in [-1, 1]
        for k in 0..3 {
            assert!((f[3 + k] - 2.0 / 3.0).abs() < 0.03, "{f:?}");
            assert!((f[k] - 5.0 / 9.0).abs() < 0.03, "{f:?}");
        }
        assert!(f[6] > 0.999);
    }
}
