//! Linear beta schedule and the forward noising process.

use artikit_core::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};

use crate::tensor::Matrix;

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule<T = f64> {
    pub steps: usize,
    pub betas: Vec<T>,
    pub alphas: Vec<T>,
    pub alpha_bars: Vec<T>,
}

impl<T: Scalar> NoiseSchedule<T> {
    /// `β_t` for `t ∈ [1, T]`.
    pub fn beta(&self, t: usize) -> T {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> T {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> T {
        self.alpha_bars[t - 1]
    }

    /// Variance of `q(x_{t-1} | x_t, x_0)`; zero at `t = 1`.
    pub fn posterior_variance(&self, t: usize) -> T {
        if t <= 1 {
            return T::zero();
        }
        self.beta(t) * (T::one() - self.alpha_bar(t - 1)) / (T::one() - self.alpha_bar(t))
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps {
            return Err(Error::Range(format!("timestep {t} outside [1, {}]", self.steps)));
        }
        Ok(())
    }
}

impl Default for NoiseSchedule<f64> {
    fn default() -> Self {
        make_noise_schedule(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END).expect("default bounds are valid")
    }
}

pub fn make_noise_schedule<T: Scalar>(steps: usize, beta_start: T, beta_end: T) -> Result<NoiseSchedule<T>> {
    if steps == 0 {
        return Err(Error::Parameter("schedule needs at least one step".into()));
    }
    if !(beta_start > T::zero() && beta_start <= beta_end && beta_end < T::one()) {
        return Err(Error::Parameter(format!("need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")));
    }
    let betas: Vec<T> = if steps == 1 {
        vec![beta_start]
    } else {
        let span = T::from_usize(steps - 1).expect("step count");
        (0..steps).map(|i| beta_start + (beta_end - beta_start) * T::from_usize(i).expect("index") / span).collect()
    };
    let alphas: Vec<T> = betas.iter().map(|&b| T::one() - b).collect();
    let mut acc = T::one();
    let alpha_bars = alphas
        .iter()
        .map(|&a| {
            acc *= a;
            acc
        })
        .collect();
    Ok(NoiseSchedule { steps, betas, alphas, alpha_bars })
}

/// How the clean signal and the noise are mixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// `√ᾱ_t · A0 + √(1 − ᾱ_t) · ε`, `t` an integer step.
    #[default]
    Ddpm,
    /// `t · A0 + (1 − t) · ε`, `t ∈ [0, 1]`.
    Interp,
}

/// Timestep argument of [`forward_noise`]: an integer step in DDPM mode or a
/// fraction in interpolation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timestep<T> {
    Step(usize),
    Fraction(T),
}

pub fn forward_noise<T: Scalar>(
    a0: &Matrix<T>,
    t: Timestep<T>,
    eps: &Matrix<T>,
    sched: &NoiseSchedule<T>,
    mode: NoiseMode,
) -> Result<Matrix<T>> {
    if a0.shape() != eps.shape() {
        return Err(Error::shape(format!("noise of shape {:?}", a0.shape()), format!("{:?}", eps.shape())));
    }
    let (ca, ce) = match (mode, t) {
        (NoiseMode::Ddpm, Timestep::Step(t)) => {
            sched.check_step(t)?;
            let ab = sched.alpha_bar(t);
            (ab.sqrt(), (T::one() - ab).sqrt())
        }
        (NoiseMode::Interp, Timestep::Fraction(f)) => {
            if !(f >= T::zero() && f <= T::one()) {
                return Err(Error::Range(format!("interpolation time {f} outside [0, 1]")));
            }
            (f, T::one() - f)
        }
        (NoiseMode::Ddpm, _) => return Err(Error::Parameter("ddpm noising takes an integer step".into())),
        (NoiseMode::Interp, _) => return Err(Error::Parameter("interp noising takes a fraction in [0, 1]".into())),
    };
    let data = a0.data.iter().zip(&eps.data).map(|(&a, &e)| ca * a + ce * e).collect();
    Ok(Matrix { rows: a0.rows, cols: a0.cols, data })
}
