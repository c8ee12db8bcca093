use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::mesh::{PointCloud, TriMesh};
use crate::scalar::Scalar;

/// Draws `n` points uniformly over the mesh surface: a triangle is picked
/// with probability proportional to its area, then a point inside it by
/// uniform barycentric coordinates.
pub fn sample_surface_points<T: Scalar>(mesh: &TriMesh<T>, n: usize, seed: u64) -> Result<PointCloud<T>> {
    mesh.check()?;
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0f64;
    for k in 0..mesh.faces.len() {
        total += mesh.face_area(k).to_f64_lossy();
        cumulative.push(total);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Geometry("mesh has no face with positive area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(k);
            let r1 = rng.random::<f64>().sqrt();
            let r2 = rng.random::<f64>();
            let (wa, wb, wc) = (T::lit(1.0 - r1), T::lit(r1 * (1.0 - r2)), T::lit(r1 * r2));
            a.scale(wa) + b.scale(wb) + c.scale(wc)
        })
        .collect();
    Ok(points)
}

/// Splits `total` into integer shares proportional to `weights` using the
/// largest-remainder rule; ties go to the lower index.
pub fn proportional_allocation(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !(sum > 0.0) {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut shares: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = shares.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        rj.partial_cmp(&ri).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        shares[i] += 1;
    }
    shares
}
