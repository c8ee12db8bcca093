//! Monte Carlo sampling of joint states over the unit interval.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::object::{ArticulatedObject, StateVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleStrategy {
    /// Independent uniform draws per joint.
    #[default]
    Uniform,
    /// Per-joint jittered strata of width `1/M`, independently permuted per joint.
    Stratified,
    /// All-zero and all-one vectors first, then uniform draws.
    Endpoints,
}

impl FromStr for SampleStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "stratified" => Ok(Self::Stratified),
            "endpoints" => Ok(Self::Endpoints),
            other => Err(Error::Parameter(format!("unknown sampling strategy `{other}`"))),
        }
    }
}

impl fmt::Display for SampleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Stratified => "stratified",
            Self::Endpoints => "endpoints",
        })
    }
}

/// Draws `m` state vectors for `object`, deterministically from `seed`.
pub fn sample_states<T: Scalar>(
    object: &ArticulatedObject<T>,
    m: usize,
    seed: u64,
    strategy: SampleStrategy,
) -> Result<Vec<StateVector<T>>> {
    sample_state_vectors(object.parts.len(), m, seed, strategy)
}

/// As [`sample_states`] for a bare joint count.
pub fn sample_state_vectors<T: Scalar>(
    n: usize,
    m: usize,
    seed: u64,
    strategy: SampleStrategy,
) -> Result<Vec<StateVector<T>>> {
    if m == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng| StateVector((0..n).map(|_| T::lit(rng.random::<f64>())).collect());
    Ok(match strategy {
        SampleStrategy::Uniform => (0..m).map(|_| uniform(&mut rng)).collect(),
        SampleStrategy::Endpoints => {
            let mut out = vec![StateVector::zeros(n)];
            if m > 1 {
                out.push(StateVector::ones(n));
            }
            while out.len() < m {
                out.push(uniform(&mut rng));
            }
            out
        }
        SampleStrategy::Stratified => {
            let mut out = vec![StateVector(vec![T::zero(); n]); m];
            let width = 1.0 / m as f64;
            let mut strata: Vec<usize> = (0..m).collect();
            for j in 0..n {
                strata.shuffle(&mut rng);
                for (sample, &k) in out.iter_mut().zip(&strata) {
                    let v = (k as f64 + rng.random::<f64>()) * width;
                    sample.0[j] = T::lit(v.min(1.0));
                }
            }
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::chain;

    #[test]
    fn endpoints_pair() {
        let s = sample_states(&chain(3), 2, 9, SampleStrategy::Endpoints).unwrap();
        assert_eq!(s, vec![StateVector::zeros(3), StateVector::ones(3)]);
    }

    #[test]
    fn deterministic_per_seed() {
        for strategy in [SampleStrategy::Uniform, SampleStrategy::Stratified, SampleStrategy::Endpoints] {
            let a = sample_states(&chain(4), 17, 3, strategy).unwrap();
            let b = sample_states(&chain(4), 17, 3, strategy).unwrap();
            assert_eq!(a, b);
            let c = sample_states(&chain(4), 17, 4, strategy).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn uniform_mean_is_centered() {
        // σ of the mean of 10⁴ uniforms is 1/sqrt(12·10⁴) ≈ 0.0029; 0.01 is > 3σ
        let s = sample_state_vectors::<f64>(1, 10_000, 0, SampleStrategy::Uniform).unwrap();
        let mean = s.iter().map(|v| v.0[0]).sum::<f64>() / 10_000.0;
        assert!((0.49..=0.51).contains(&mean), "{mean}");
    }

    #[test]
    fn stratified_covers_every_stratum() {
        let m = 20;
        let s = sample_state_vectors::<f64>(3, m, 5, SampleStrategy::Stratified).unwrap();
        for j in 0..3 {
            let mut bins: Vec<usize> = s.iter().map(|v| (v.0[j] * m as f64).floor() as usize).collect();
            bins.sort_unstable();
            assert_eq!(bins, (0..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(matches!(sample_states(&chain(2), 0, 0, SampleStrategy::Uniform), Err(Error::Parameter(_))));
    }
}
