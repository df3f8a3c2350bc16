//! Confidence intervals for the mean reward of a probed level set, and Monte
//! Carlo checks of the concentration inequalities they rely on.

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcentrationError {
    #[error("confidence interval needs at least one sample")]
    NoSamples,
    #[error("delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("sum {sum} is outside [0, count = {count}]")]
    InvalidSum { sum: f64, count: u64 },
    #[error("sampler support [{0}, {1}] is not a bounded interval")]
    Unbounded(f64, f64),
    #[error("validator needs at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval<F> {
    pub lower: F,
    pub upper: F,
    pub count: u64,
    pub mean: F,
}

impl<F: Float> ConfidenceInterval<F> {
    /// The `[0, 1]` interval used before any sample is taken.
    pub fn unit() -> Self {
        Self {
            lower: F::zero(),
            upper: F::one(),
            count: 0,
            mean: F::zero(),
        }
    }

    pub fn contains(&self, x: F) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn half_width(&self) -> F {
        (self.upper - self.mean).max(self.mean - self.lower)
    }

    fn around(mean: F, half: F, count: u64) -> Self {
        let lower = (mean - half).max(F::zero());
        let upper = (mean + half).min(F::one());
        Self {
            lower,
            upper,
            count,
            mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    FixedLevel,
    AdaptiveLevel,
}

/// How a policy turns `(sum, count)` into an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiScheme {
    pub kind: CiKind,
    pub delta: f64,
    pub scale: f64,
}

impl CiScheme {
    /// Default multiplier of the adaptive radius.
    pub const THEORETICAL_SCALE: f64 = 2.0;
    /// Smaller multiplier that works better in simulation.
    pub const EMPIRICAL_SCALE: f64 = 0.1;

    /// Hoeffding interval at level `1/T^2`.
    pub fn fixed_for_horizon(horizon: u64) -> Self {
        let t = horizon as f64;
        Self {
            kind: CiKind::FixedLevel,
            delta: 1.0 / (t * t),
            scale: 0.5,
        }
    }

    /// Adaptive interval at base level `1/T`.
    pub fn adaptive_for_horizon(horizon: u64, scale: f64) -> Self {
        Self {
            kind: CiKind::AdaptiveLevel,
            delta: 1.0 / horizon as f64,
            scale,
        }
    }

    pub fn validate(&self) -> Result<(), ConcentrationError> {
        check_delta(self.delta)?;
        if self.scale <= 0.0 || !self.scale.is_finite() {
            return Err(ConcentrationError::InvalidScale(self.scale));
        }
        Ok(())
    }

    pub fn interval(
        &self,
        sum: f64,
        count: u64,
    ) -> Result<ConfidenceInterval<f64>, ConcentrationError> {
        match self.kind {
            CiKind::FixedLevel => fixed_ci(sum, count, self.delta),
            CiKind::AdaptiveLevel => adaptive_ci(sum, count, self.delta, self.scale),
        }
    }
}

fn check_delta(delta: f64) -> Result<(), ConcentrationError> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(ConcentrationError::InvalidDelta(delta))
    }
}

fn check_inputs<F: Float>(sum: F, count: u64) -> Result<F, ConcentrationError> {
    if count == 0 {
        return Err(ConcentrationError::NoSamples);
    }
    let n = F::from(count).expect("count fits in float");
    if !(sum >= F::zero() && sum <= n) {
        return Err(ConcentrationError::InvalidSum {
            sum: sum.to_f64().unwrap_or(f64::NAN),
            count,
        });
    }
    Ok(n)
}

/// `sum/count ± sqrt(ln(1/delta) / (2 count))`, clamped to `[0, 1]`.
pub fn fixed_ci<F: Float>(
    sum: F,
    count: u64,
    delta: F,
) -> Result<ConfidenceInterval<F>, ConcentrationError> {
    let n = check_inputs(sum, count)?;
    check_delta(delta.to_f64().unwrap_or(f64::NAN))?;
    let two = F::one() + F::one();
    let half = (-delta.ln() / (two * n)).sqrt();
    Ok(ConfidenceInterval::around(sum / n, half, count))
}

/// `sum/count ± sqrt(scale · ln(8 / (delta · count)) / count)`, clamped to
/// `[0, 1]`. A negative log term is floored at zero.
pub fn adaptive_ci<F: Float>(
    sum: F,
    count: u64,
    delta: F,
    scale: F,
) -> Result<ConfidenceInterval<F>, ConcentrationError> {
    let n = check_inputs(sum, count)?;
    if scale.is_nan() || scale <= F::zero() {
        return Err(ConcentrationError::InvalidScale(
            scale.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if delta.is_nan() || delta <= F::zero() {
        return Err(ConcentrationError::InvalidDelta(
            delta.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let eight = F::from(8.0).expect("8 fits");
    let log_term = (eight / (delta * n)).ln().max(F::zero());
    let half = (scale * log_term / n).sqrt();
    Ok(ConfidenceInterval::around(sum / n, half, count))
}

/// A random variable with known mean and bounded support `[low, high]`.
pub trait BoundedSampler {
    fn support(&self) -> (f64, f64);
    fn mean(&self) -> f64;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Bernoulli(pub f64);

impl BoundedSampler for Bernoulli {
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn mean(&self) -> f64 {
        self.0
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Always returns the same value.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl BoundedSampler for Constant {
    fn support(&self) -> (f64, f64) {
        (self.0, self.0)
    }

    fn mean(&self) -> f64 {
        self.0
    }

    fn sample<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        self.0
    }
}

/// Uniform on `[low, high]`; exercises the general-range radius.
#[derive(Debug, Clone, Copy)]
pub struct Uniform(pub f64, pub f64);

impl BoundedSampler for Uniform {
    fn support(&self) -> (f64, f64) {
        (self.0, self.1)
    }

    fn mean(&self) -> f64 {
        0.5 * (self.0 + self.1)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0 + (self.1 - self.0) * rng.random::<f64>()
    }
}

fn bounded_range<D: BoundedSampler>(dist: &D) -> Result<f64, ConcentrationError> {
    let (lo, hi) = dist.support();
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(hi - lo)
    } else {
        Err(ConcentrationError::Unbounded(lo, hi))
    }
}

pub const MIN_COVERAGE_TRIALS: usize = 1000;

/// Fraction of trials in which the running mean stays within
/// `sqrt(2 (b-a)^2 ln(8/(delta l)) / l)` of the true mean for every prefix
/// length `l = 1..=max_len`. The guarantee is `>= 1 - max_len · delta`.
pub fn validate_uniform_concentration<D: BoundedSampler, R: Rng + ?Sized>(
    dist: &D,
    max_len: usize,
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64, ConcentrationError> {
    let range = bounded_range(dist)?;
    check_delta(delta)?;
    if trials < MIN_COVERAGE_TRIALS {
        return Err(ConcentrationError::TooFewTrials {
            min: MIN_COVERAGE_TRIALS,
            got: trials,
        });
    }
    let mu = dist.mean();
    let radius: Vec<f64> = (1..=max_len)
        .map(|l| {
            let l = l as f64;
            (2.0 * range * range * (8.0 / (delta * l)).ln().max(0.0) / l).sqrt()
        })
        .collect();
    let mut covered = 0usize;
    for _ in 0..trials {
        let mut sum = 0.0;
        let mut ok = true;
        for (l, r) in radius.iter().enumerate() {
            sum += dist.sample(rng);
            if (sum / (l + 1) as f64 - mu).abs() > *r + 1e-12 {
                ok = false;
                break;
            }
        }
        covered += ok as usize;
    }
    Ok(covered as f64 / trials as f64)
}

/// Empirical `Pr[exists i <= n : X_1 + ... + X_i >= i·mu + t]`; Hoeffding's
/// maximal inequality bounds it by `exp(-2 t^2 / (n (b-a)^2))`.
pub fn validate_maximal_inequality<D: BoundedSampler, R: Rng + ?Sized>(
    dist: &D,
    n: usize,
    t: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64, ConcentrationError> {
    bounded_range(dist)?;
    let mu = dist.mean();
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut excess = 0.0;
        for _ in 0..n {
            excess += dist.sample(rng) - mu;
            if excess >= t {
                hits += 1;
                break;
            }
        }
    }
    Ok(hits as f64 / trials.max(1) as f64)
}

/// Hoeffding maximal-inequality bound for variables with range `range`.
pub fn maximal_inequality_bound(n: usize, t: f64, range: f64) -> f64 {
    (-2.0 * t * t / (n as f64 * range * range)).exp()
}

/// Three-sigma Monte Carlo slack for a proportion near `p` over `trials`.
pub fn monte_carlo_slack(p: f64, trials: usize) -> f64 {
    3.0 * (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / trials as f64).sqrt()
}
