//! Set-level generation metrics over a distance matrix whose rows are
//! generated objects and whose columns are reference objects.

use crate::error::{Error, Result};
use crate::metrics::matrix::DistanceMatrix;
use crate::scalar::Scalar;

/// Minimum matching distance: mean over reference columns of the column minimum.
pub fn mmd<T: Scalar>(m: &DistanceMatrix<T>) -> Result<T> {
    if m.is_empty() {
        return Err(Error::Parameter("MMD of an empty matrix".into()));
    }
    let total: T = (0..m.cols).map(|j| (0..m.rows).map(|i| m.get(i, j)).fold(T::infinity(), T::min)).sum();
    Ok(total / T::from_usize(m.cols).unwrap_or_else(T::one))
}

/// Column index of the row minimum, lowest index on ties.
pub fn row_argmin<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (j, v) in row.iter().enumerate().skip(1) {
        if *v < row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of reference columns that are the nearest neighbor of some generated row.
pub fn coverage<T: Scalar>(m: &DistanceMatrix<T>) -> Result<T> {
    if m.is_empty() {
        return Err(Error::Parameter("coverage of an empty matrix".into()));
    }
    let mut covered = vec![false; m.cols];
    for i in 0..m.rows {
        covered[row_argmin(m.row(i))] = true;
    }
    let hits = covered.iter().filter(|&&c| c).count();
    Ok(T::lit(hits as f64 / m.cols as f64))
}

/// Leave-one-out 1-nearest-neighbor accuracy over the pooled sets. `gg` and
/// `rr` are the within-set matrices (diagonals ignored), `gr` the cross
/// matrix. A sample whose nearest same-set and opposite-set distances tie is
/// assigned to the opposite set.
pub fn one_nna<T: Scalar>(gg: &DistanceMatrix<T>, gr: &DistanceMatrix<T>, rr: &DistanceMatrix<T>) -> Result<T> {
    let (ng, nr) = (gr.rows, gr.cols);
    if gg.rows != ng || gg.cols != ng || rr.rows != nr || rr.cols != nr {
        return Err(Error::shape(
            format!("gg {ng}x{ng}, rr {nr}x{nr}"),
            format!("gg {}x{}, rr {}x{}", gg.rows, gg.cols, rr.rows, rr.cols),
        ));
    }
    if ng + nr < 2 {
        return Err(Error::Parameter("1-NNA needs at least two samples".into()));
    }
    let nearest = |same: &mut dyn Iterator<Item = T>, other: &mut dyn Iterator<Item = T>| -> bool {
        let s = same.fold(T::infinity(), T::min);
        let o = other.fold(T::infinity(), T::min);
        // true when classified into its own set
        s < o
    };
    let mut correct = 0usize;
    for i in 0..ng {
        let mut same = (0..ng).filter(|&k| k != i).map(|k| gg.get(i, k));
        let mut other = (0..nr).map(|j| gr.get(i, j));
        correct += usize::from(nearest(&mut same, &mut other));
    }
    for j in 0..nr {
        let mut same = (0..nr).filter(|&k| k != j).map(|k| rr.get(j, k));
        let mut other = (0..ng).map(|i| gr.get(i, j));
        correct += usize::from(nearest(&mut same, &mut other));
    }
    Ok(T::lit(correct as f64 / (ng + nr) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DistanceMatrix {
        DistanceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hand_values() {
        assert_eq!(mmd(&m(&[&[1.0, 3.0], &[2.0, 1.0]])).unwrap(), 1.0);
        assert_eq!(coverage(&m(&[&[1.0, 2.0], &[5.0, 4.0]])).unwrap(), 1.0);
        assert_eq!(coverage(&m(&[&[0.0, 2.0, 3.0], &[1.0, 4.0, 4.0]])).unwrap(), 1.0 / 3.0);
        let zero = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(mmd(&zero).unwrap(), 0.0);
        assert_eq!(coverage(&zero).unwrap(), 1.0);
    }

    #[test]
    fn duplicates_give_zero_nna() {
        let d = m(&[&[0.0, 2.0, 3.0], &[2.0, 0.0, 1.0], &[3.0, 1.0, 0.0]]);
        assert_eq!(one_nna(&d, &d, &d).unwrap(), 0.0);
    }

    #[test]
    fn separated_clusters_give_one() {
        let within = m(&[&[0.0, 0.1], &[0.1, 0.0]]);
        let cross = m(&[&[9.0, 9.0], &[9.0, 9.0]]);
        assert_eq!(one_nna(&within, &cross, &within).unwrap(), 1.0);
    }

    #[test]
    fn two_plus_two_by_hand() {
        // g0 → r0 (1 < 2) wrong; g1 → g0 (2 < 3), r0 → r1 (0.5 < 1), r1 → r0 right
        let gg = m(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let gr = m(&[&[1.0, 4.0], &[3.0, 5.0]]);
        let rr = m(&[&[0.0, 0.5], &[0.5, 0.0]]);
        assert_eq!(one_nna(&gg, &gr, &rr).unwrap(), 0.75);
    }

    #[test]
    fn shape_mismatch() {
        let a = m(&[&[0.0]]);
        let b = m(&[&[0.0, 1.0]]);
        assert!(matches!(one_nna(&b, &b, &a), Err(Error::Shape { .. })));
    }
}
