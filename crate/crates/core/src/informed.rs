//! Samplers for the augmented space.
//!
//! Configurations are drawn from the informed set: for path length that is
//! the prolate hyperspheroid with foci at the start and goal whose transverse
//! diameter is the current cost bound. Cost bounds are drawn uniformly from
//! the interval of costs-to-come that could still improve the solution.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::space::{cost, Configuration, ConfigurationSpace};

/// Attempts per call before a sampler gives up and reports no sample.
pub const MAX_SAMPLE_ATTEMPTS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("cost estimates must be non-negative, got g={g_hat}, h={h_hat}, c_max={c_max}")]
    NegativeInput { g_hat: f64, h_hat: f64, c_max: f64 },
}

/// How a finite-bound sample is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InformedStrategy {
    /// Sample the hyperspheroid directly and reject points outside the bounds.
    Direct,
    /// Sample the bounds uniformly and reject points outside the hyperspheroid.
    Rejection,
}

/// Uniform sampler over `X_f̂` for a fixed start, goal and bound.
#[derive(Debug, Clone)]
pub struct InformedSampler {
    space: ConfigurationSpace,
    start: Configuration,
    goal: Configuration,
    c_max: f64,
    c_min: f64,
    center: Vec<f64>,
    /// Householder vector mapping the first axis onto the start-goal axis;
    /// `None` when that mapping is the identity.
    householder: Option<Vec<f64>>,
    strategy: InformedStrategy,
}

impl InformedSampler {
    pub fn new(
        space: &ConfigurationSpace,
        start: &Configuration,
        goal: &Configuration,
        c_max: f64,
    ) -> Self {
        let n = space.dimension();
        let c_min = cost(start, goal);
        let center: Vec<f64> = start.iter().zip(goal.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
        let householder = (c_min > 0.0)
            .then(|| {
                let mut v: Vec<f64> = start
                    .iter()
                    .zip(goal.iter())
                    .map(|(a, b)| -(b - a) / c_min)
                    .collect();
                v[0] += 1.0;
                let norm2: f64 = v.iter().map(|x| x * x).sum();
                (norm2 > 1e-24).then(|| {
                    let s = (2.0 / norm2).sqrt();
                    v.iter().map(|x| x * s).collect::<Vec<f64>>()
                })
            })
            .flatten();
        let strategy = if c_max.is_finite() && c_max >= c_min {
            let a = 0.5 * c_max;
            let b = 0.5 * (c_max * c_max - c_min * c_min).max(0.0).sqrt();
            let volume = unit_ball_volume(n) * a * b.powi(n as i32 - 1);
            if volume <= space.volume() {
                InformedStrategy::Direct
            } else {
                InformedStrategy::Rejection
            }
        } else {
            InformedStrategy::Rejection
        };
        InformedSampler {
            space: space.clone(),
            start: start.clone(),
            goal: goal.clone(),
            c_max,
            c_min,
            center,
            householder,
            strategy,
        }
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn strategy(&self) -> InformedStrategy {
        self.strategy
    }

    pub fn with_strategy(mut self, strategy: InformedStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    /// `ĝ(x) + ĥ(x)` measured between the two endpoints.
    pub fn heuristic_cost(&self, x: &[f64]) -> f64 {
        cost(&self.start, x) + cost(x, &self.goal)
    }

    /// One draw from the informed set, or `None` when the set is empty or
    /// every attempt was rejected.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Configuration> {
        if self.c_max == f64::INFINITY {
            return Some(self.space.sample_uniform(rng));
        }
        if !(self.c_max >= self.c_min) {
            return None;
        }
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let x = match self.strategy {
                InformedStrategy::Direct => self.sample_hyperspheroid(rng),
                InformedStrategy::Rejection => self.space.sample_uniform(rng),
            };
            if self.space.contains(&x) && self.heuristic_cost(&x) <= self.c_max {
                return Some(x);
            }
        }
        None
    }

    fn sample_hyperspheroid<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let n = self.center.len();
        let mut y = sample_unit_ball(n, rng);
        let a = 0.5 * self.c_max;
        let b = 0.5 * (self.c_max * self.c_max - self.c_min * self.c_min).max(0.0).sqrt();
        y[0] *= a;
        for v in &mut y[1..] {
            *v *= b;
        }
        if let Some(h) = &self.householder {
            let dot: f64 = h.iter().zip(&y).map(|(p, q)| p * q).sum();
            for (v, hk) in y.iter_mut().zip(h) {
                *v -= dot * hk;
            }
        }
        for (v, c) in y.iter_mut().zip(&self.center) {
            *v += c;
        }
        Configuration::new(y)
    }
}

/// Uniform sample from the closed unit n-ball.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = rng.random::<f64>().powf(1.0 / n as f64) / norm;
        for x in &mut v {
            *x *= r;
        }
        return v;
    }
}

/// Lebesgue measure of the unit n-ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2π/n · V_{n-2}
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        v[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v[n % 2]
}

/// Cost bound for a new sample, uniform on `(ĝ, c_max − ĥ)`.
///
/// Returns `Ok(None)` when the interval is empty and `+∞` when the bound is
/// infinite.
pub fn sample_cost_bound<R: Rng + ?Sized>(
    g_hat: f64,
    h_hat: f64,
    c_max: f64,
    rng: &mut R,
) -> Result<Option<f64>, SamplerError> {
    if g_hat < 0.0 || h_hat < 0.0 || c_max < 0.0 {
        return Err(SamplerError::NegativeInput { g_hat, h_hat, c_max });
    }
    if c_max == f64::INFINITY {
        return Ok(Some(f64::INFINITY));
    }
    let hi = c_max - h_hat;
    if !(hi > g_hat) {
        return Ok(None);
    }
    Ok(Some(rng.random_range(g_hat..hi)))
}

/// Lowered cost bound for a freshly added vertex, uniform on `(ĝ, c_current)`.
/// An empty interval returns `c_current` unchanged.
pub fn resample_lower<R: Rng + ?Sized>(c_current: f64, g_hat: f64, rng: &mut R) -> f64 {
    if g_hat < c_current {
        rng.random_range(g_hat..c_current)
    } else {
        c_current
    }
}
