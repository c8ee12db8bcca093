use artikit_core::fixtures::{box_object, random_tree};
use artikit_core::geometry::{chamfer_distance, PointCloud};
use artikit_core::math::Vec3;
use artikit_core::metrics::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DistanceMatrix {
    // small integers half of the time so that ties occur
    let coarse = rng.random::<bool>();
    let rows: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| if coarse { rng.random_range(0..4) as f64 } else { rng.random::<f64>() * 3.0 }).collect())
        .collect();
    DistanceMatrix::from_rows(&rows).unwrap()
}

fn mmd_oracle(m: &DistanceMatrix) -> f64 {
    let mut total = 0.0;
    for j in 0..m.cols {
        let mut best = f64::INFINITY;
        for i in 0..m.rows {
            best = best.min(m.get(i, j));
        }
        total += best;
    }
    total / m.cols as f64
}

fn cov_oracle(m: &DistanceMatrix) -> f64 {
    let hits = (0..m.cols)
        .filter(|&j| {
            (0..m.rows).any(|i| {
                // j is the first column attaining the row minimum
                let v = m.get(i, j);
                (0..m.cols).all(|k| if k < j { m.get(i, k) > v } else { m.get(i, k) >= v })
            })
        })
        .count();
    hits as f64 / m.cols as f64
}

fn nna_oracle(gg: &DistanceMatrix, gr: &DistanceMatrix, rr: &DistanceMatrix) -> f64 {
    let (ng, nr) = (gr.rows, gr.cols);
    let n = ng + nr;
    let d = |a: usize, b: usize| match (a < ng, b < ng) {
        (true, true) => gg.get(a, b),
        (true, false) => gr.get(a, b - ng),
        (false, true) => gr.get(b, a - ng),
        (false, false) => rr.get(a - ng, b - ng),
    };
    let mut correct = 0;
    for a in 0..n {
        let mut same = f64::INFINITY;
        let mut other = f64::INFINITY;
        for b in (0..n).filter(|&b| b != a) {
            if (a < ng) == (b < ng) {
                same = same.min(d(a, b));
            } else {
                other = other.min(d(a, b));
            }
        }
        if same < other {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

fn chamfer_oracle(p: &[Vec3], q: &[Vec3]) -> f64 {
    let side = |a: &[Vec3], b: &[Vec3]| {
        let mut total = 0.0;
        for x in a {
            let mut best = f64::INFINITY;
            for y in b {
                best = best.min(y.distance_squared(x));
            }
            total += best;
        }
        total / a.len() as f64
    };
    let (x, y) = (side(p, q), side(q, p));
    if x <= y {
        x + y
    } else {
        y + x
    }
}

#[test]
fn set_metrics_match_oracles_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let gr = random_matrix(4, 4, &mut rng);
        let mut gg = random_matrix(4, 4, &mut rng);
        let mut rr = random_matrix(4, 4, &mut rng);
        for k in 0..4 {
            gg.data[k * 4 + k] = 0.0;
            rr.data[k * 4 + k] = 0.0;
        }
        assert_eq!(mmd(&gr).unwrap(), mmd_oracle(&gr));
        assert_eq!(coverage(&gr).unwrap(), cov_oracle(&gr));
        assert_eq!(one_nna(&gg, &gr, &rr).unwrap(), nna_oracle(&gg, &gr, &rr));
    }
}

#[test]
fn coverage_and_nna_hand_cases() {
    let m = DistanceMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    assert_eq!(coverage(&m).unwrap(), 0.5);
    let zero = DistanceMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    // indistinguishable sets: every sample ties and counts as misclassified
    assert_eq!(one_nna(&zero, &zero, &zero).unwrap(), 0.0);
    let far = DistanceMatrix::from_rows(&[vec![9.0, 9.0], vec![9.0, 9.0]]).unwrap();
    let near = DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert_eq!(one_nna(&near, &far, &near).unwrap(), 1.0);
}

proptest! {
    #[test]
    fn chamfer_matches_quadratic_oracle(seed in any::<u64>(), n in 1usize..=64, m in 1usize..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cloud = |k: usize| -> Vec<Vec3> {
            (0..k).map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let (p, q) = (cloud(n), cloud(m));
        let d = chamfer_distance(&PointCloud::new(p.clone()), &PointCloud::new(q.clone())).unwrap();
        prop_assert_eq!(d, chamfer_oracle(&p, &q));
    }

    #[test]
    fn adding_generated_rows_never_raises_mmd(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(5, 4, &mut rng);
        let fewer = DistanceMatrix::from_rows(&(0..4).map(|i| m.row(i).to_vec()).collect::<Vec<_>>()).unwrap();
        prop_assert!(mmd(&m).unwrap() <= mmd(&fewer).unwrap());
        let c = coverage(&m).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }
}

fn quick() -> IdConfig {
    IdConfig { m: 4, points_per_object: 512, ..IdConfig::default() }
}

#[test]
fn distance_to_itself_is_zero() {
    for seed in 0..3 {
        let a = ObjectAsset::boxes(random_tree(4, seed));
        assert!(instantiation_distance(&a, &a, &quick()).unwrap() <= 1e-9);
    }
}

#[test]
fn distance_is_symmetric() {
    let cfg = IdConfig { orientations: IdConfig::four_yaw(), ..quick() };
    for seed in 0..20 {
        let a = ObjectAsset::boxes(random_tree(2 + seed as usize % 4, seed));
        let b = ObjectAsset::boxes(random_tree(2 + (seed as usize + 1) % 4, seed + 100));
        let ab = instantiation_distance(&a, &b, &cfg).unwrap();
        let ba = instantiation_distance(&b, &a, &cfg).unwrap();
        assert!((ab - ba).abs() <= 1e-9, "{seed}: {ab} vs {ba}");
    }
}

#[test]
fn static_boxes_are_twice_their_chamfer() {
    let lo = Vec3::new(-0.25, -0.25, -0.25);
    let hi = Vec3::new(0.25, 0.25, 0.25);
    let shift = Vec3::new(1.0, 0.0, 0.0);
    let a = ObjectAsset::boxes(box_object(lo, hi));
    let b = ObjectAsset::boxes(box_object(lo + shift, hi + shift));
    let mut values = Vec::new();
    for m in [1, 3, 4] {
        let cfg = IdConfig { m, ..quick() };
        let ca = rest_part_clouds(&a, cfg.points_per_object, cfg.seed).unwrap().concat_points();
        let cb = rest_part_clouds(&b, cfg.points_per_object, cfg.seed).unwrap().concat_points();
        let expected = 2.0 * chamfer_oracle(&ca, &cb);
        let id = instantiation_distance(&a, &b, &cfg).unwrap();
        assert!((id - expected).abs() <= 1e-9, "M={m}: {id} vs {expected}");
        values.push(id);
    }
    assert!(values.iter().all(|v| (v - values[0]).abs() <= 1e-9));
    // the cubes are 0.5 apart, so every squared nearest distance is at least 0.25
    assert!(values[0] >= 1.0, "{}", values[0]);
}

trait Concat {
    fn concat_points(self) -> Vec<Vec3>;
}

impl Concat for Vec<PointCloud> {
    fn concat_points(self) -> Vec<Vec3> {
        self.into_iter().flat_map(|c| c.points).collect()
    }
}

#[test]
fn cached_matrix_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let gen = vec![ObjectAsset::boxes(random_tree(2, 1)), ObjectAsset::boxes(random_tree(3, 2))];
    let reference = vec![ObjectAsset::boxes(random_tree(2, 3))];
    let cfg = IdConfig { m: 2, points_per_object: 128, ..IdConfig::default() };
    let (first, s1) = pairwise_distance_matrix(&gen, &reference, &cfg, Some(dir.path())).unwrap();
    let (second, s2) = pairwise_distance_matrix(&gen, &reference, &cfg, Some(dir.path())).unwrap();
    assert_eq!((s1, s2), (CacheStatus::Miss, CacheStatus::Hit));
    assert!(first.data.iter().zip(&second.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    let direct = instantiation_distance(&gen[1], &reference[0], &cfg).unwrap();
    assert_eq!(first.get(1, 0), direct);
}
