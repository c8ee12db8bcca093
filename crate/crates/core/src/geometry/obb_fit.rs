//! PCA oriented bounding boxes.
//!
//! Axes are the eigenvectors of the point covariance. When eigenvalues
//! coincide the covariance no longer pins the axes down (a cube's corners
//! have isotropic covariance), so the free directions are resolved by a
//! minimum-area rectangle search over the projected convex hull.

use crate::error::{Error, Result};
use crate::geometry::mesh::PointCloud;
use crate::math::{symmetric_eigen, Mat3, Vec3};
use crate::model::OrientedBox;
use crate::scalar::Scalar;

/// Relative tolerance under which two covariance eigenvalues count as equal.
const EIGEN_DEGENERACY_TOL: f64 = 1e-6;

/// At most this many hull candidates are paired when the covariance is isotropic.
const ISOTROPIC_CANDIDATES: usize = 48;

pub fn fit_obb<T: Scalar>(cloud: &PointCloud<T>) -> Result<OrientedBox<T>> {
    let pts = &cloud.points;
    if pts.is_empty() {
        return Err(Error::Parameter("cannot fit a box to an empty point cloud".into()));
    }
    let n = T::from_usize(pts.len()).unwrap_or_else(T::one);
    let mean = pts.iter().fold(Vec3::zeros(), |acc, p| acc + *p).scale(T::one() / n);
    let mut cov = Mat3::<T>::zeros();
    for p in pts {
        let d = *p - mean;
        for i in 0..3 {
            for j in 0..3 {
                cov.0[i][j] += d[i] * d[j];
            }
        }
    }
    for row in cov.0.iter_mut() {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    let (vals, vecs) = symmetric_eigen(&cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let lam = order.map(|k| vals[k]);
    let mut axes = order.map(|k| vecs.column(k));

    let tol = T::lit(EIGEN_DEGENERACY_TOL) * lam[0].abs().max(T::min_positive_value());
    let eq01 = (lam[0] - lam[1]).abs() <= tol;
    let eq12 = (lam[1] - lam[2]).abs() <= tol;
    let centered: Vec<Vec3<T>> = pts.iter().map(|p| *p - mean).collect();
    if lam[0] > T::zero() {
        if eq01 && eq12 {
            if let Some(a) = isotropic_axes(&centered) {
                axes = a;
            }
        } else if eq01 {
            if let Some((u, v)) = min_area_in_plane(&centered, &axes[2]) {
                axes = [u, v, axes[2]];
            }
        } else if eq12 {
            if let Some((u, v)) = min_area_in_plane(&centered, &axes[0]) {
                axes = [axes[0], u, v];
            }
        }
    }

    let e0 = sign_canonical(axes[0]);
    let e1 = sign_canonical(orthonormalize(axes[1], &e0));
    let e2 = e0.cross(&e1);
    let rot = Mat3::from_columns(e0, e1, e2);

    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for p in pts {
        for (k, e) in [e0, e1, e2].iter().enumerate() {
            let d = e.dot(p);
            lo[k] = lo[k].min(d);
            hi[k] = hi[k].max(d);
        }
    }
    let half = T::lit(0.5);
    let mid = Vec3::new((lo[0] + hi[0]) * half, (lo[1] + hi[1]) * half, (lo[2] + hi[2]) * half);
    let center = rot.mul_vec(&mid);
    let extents = Vec3::new((hi[0] - lo[0]) * half, (hi[1] - lo[1]) * half, (hi[2] - lo[2]) * half);
    Ok(OrientedBox::new(center, extents, rot.to_rotation_vector()))
}

/// Flips `v` so that its largest-magnitude component is positive.
fn sign_canonical<T: Scalar>(v: Vec3<T>) -> Vec3<T> {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < T::zero() {
        -v
    } else {
        v
    }
}

fn orthonormalize<T: Scalar>(v: Vec3<T>, against: &Vec3<T>) -> Vec3<T> {
    let w = v - against.scale(against.dot(&v));
    w.try_normalize(T::lit(1e-12)).unwrap_or_else(|| any_perpendicular(against))
}

fn any_perpendicular<T: Scalar>(n: &Vec3<T>) -> Vec3<T> {
    let pick = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        Vec3::unit_x()
    } else if n[1].abs() <= n[2].abs() {
        Vec3::unit_y()
    } else {
        Vec3::unit_z()
    };
    n.cross(&pick).try_normalize(T::lit(1e-12)).unwrap_or_else(Vec3::unit_x)
}

/// Minimum-area rectangle of the points projected on the plane normal to `normal`.
fn min_area_in_plane<T: Scalar>(pts: &[Vec3<T>], normal: &Vec3<T>) -> Option<(Vec3<T>, Vec3<T>)> {
    min_area_rectangle(pts, normal).map(|(u, v, _)| (u, v))
}

fn min_area_rectangle<T: Scalar>(pts: &[Vec3<T>], normal: &Vec3<T>) -> Option<(Vec3<T>, Vec3<T>, T)> {
    let bu = any_perpendicular(normal);
    let bv = normal.cross(&bu);
    let projected: Vec<[T; 2]> = pts.iter().map(|p| [bu.dot(p), bv.dot(p)]).collect();
    let hull = convex_hull_2d(projected);
    if hull.len() < 3 {
        return None;
    }
    let mut best: Option<(T, T, T)> = None; // (area, cos, sin)
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len <= T::zero() {
            continue;
        }
        let (c, s) = (dx / len, dy / len);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity());
        for q in &hull {
            let u = q[0] * c + q[1] * s;
            let v = -q[0] * s + q[1] * c;
            lo_u = lo_u.min(u);
            hi_u = hi_u.max(u);
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
        let area = (hi_u - lo_u) * (hi_v - lo_v);
        // strict improvement keeps the first minimal edge
        if best.is_none_or(|(ba, _, _)| area < ba * (T::one() - T::lit(1e-12))) {
            best = Some((area, c, s));
        }
    }
    let (area, c, s) = best?;
    let u = bu.scale(c) + bv.scale(s);
    let v = normal.cross(&u);
    Some((u, v, area))
}

/// Isotropic covariance: try every direction between pairs of hull-extreme
/// points as the first axis and keep the smallest resulting box.
fn isotropic_axes<T: Scalar>(pts: &[Vec3<T>]) -> Option<[Vec3<T>; 3]> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[b].norm_squared().partial_cmp(&pts[a].norm_squared()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    idx.truncate(ISOTROPIC_CANDIDATES);
    let mut best: Option<(T, [Vec3<T>; 3])> = None;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let Some(d) = (pts[j] - pts[i]).try_normalize(T::lit(1e-9)) else { continue };
            let Some((u, v, area)) = min_area_rectangle(pts, &d) else { continue };
            let (lo, hi) = pts.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                let t = d.dot(p);
                (lo.min(t), hi.max(t))
            });
            let volume = area * (hi - lo);
            if best.as_ref().is_none_or(|(bv, _)| volume < *bv * (T::one() - T::lit(1e-12))) {
                best = Some((volume, [d, u, v]));
            }
        }
    }
    best.map(|(_, axes)| axes)
}

/// Andrew's monotone chain; returns the hull counter-clockwise without collinear points.
fn convex_hull_2d<T: Scalar>(mut pts: Vec<[T; 2]>) -> Vec<[T; 2]> {
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal).then(a[1].partial_cmp(&b[1]).unwrap_or(std::cmp::Ordering::Equal))
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [T; 2], a: [T; 2], b: [T; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[T; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[T; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}
