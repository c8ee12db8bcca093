use crate::error::{Error, Result};
use crate::geometry::kdtree::KdTree;
use crate::geometry::mesh::PointCloud;
use crate::scalar::Scalar;

/// Mean squared nearest-neighbor distance from every point of `from` to `to`.
pub fn one_sided_chamfer<T: Scalar>(from: &PointCloud<T>, to: &KdTree<T>) -> T {
    let total: T = from.points.iter().map(|p| to.nearest(p).map_or(T::infinity(), |(_, d)| d)).sum();
    total / T::from_usize(from.len()).unwrap_or_else(T::one)
}

/// Symmetric chamfer distance with squared distances and per-cloud means.
pub fn chamfer_distance<T: Scalar>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<T> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Parameter("chamfer distance needs two nonempty clouds".into()));
    }
    Ok(chamfer_with_trees(p, &KdTree::new(&p.points), q, &KdTree::new(&q.points)))
}

/// As [`chamfer_distance`] with prebuilt trees; both clouds must be nonempty.
pub fn chamfer_with_trees<T: Scalar>(p: &PointCloud<T>, p_tree: &KdTree<T>, q: &PointCloud<T>, q_tree: &KdTree<T>) -> T {
    let a = one_sided_chamfer(p, q_tree);
    let b = one_sided_chamfer(q, p_tree);
    // fixed summation order keeps the result symmetric bit for bit
    if a <= b {
        a + b
    } else {
        b + a
    }
}

/// Quadratic reference implementation.
pub fn chamfer_distance_brute_force<T: Scalar>(p: &PointCloud<T>, q: &PointCloud<T>) -> Result<T> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Parameter("chamfer distance needs two nonempty clouds".into()));
    }
    let side = |a: &PointCloud<T>, b: &PointCloud<T>| {
        let total: T = a
            .points
            .iter()
            .map(|x| b.points.iter().map(|y| y.distance_squared(x)).fold(T::infinity(), T::min))
            .sum();
        total / T::from_usize(a.len()).unwrap_or_else(T::one)
    };
    let (a, b) = (side(p, q), side(q, p));
    Ok(if a <= b { a + b } else { b + a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        pts.iter().map(|p| Vec3(*p)).collect()
    }

    #[test]
    fn hand_values() {
        let origin = cloud(&[[0.0, 0.0, 0.0]]);
        assert_eq!(chamfer_distance(&origin, &cloud(&[[1.0, 0.0, 0.0]])).unwrap(), 2.0);
        assert_eq!(chamfer_distance(&cloud(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), &origin).unwrap(), 2.0);
        assert_eq!(chamfer_distance(&origin, &origin).unwrap(), 0.0);
    }

    #[test]
    fn empty_operand() {
        assert!(matches!(chamfer_distance(&PointCloud::default(), &cloud(&[[0.0; 3]])), Err(Error::Parameter(_))));
    }
}
