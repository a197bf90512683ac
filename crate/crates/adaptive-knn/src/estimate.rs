//! Distance definitions, the running per-arm estimator, and the confidence
//! bound functions.
//!
//! Every candidate point is treated as a bandit arm whose unknown mean is
//! the normalized squared distance `d_i = (1/m) * ||x - x_i||^2`. Sampling
//! a uniformly random coordinate `j` and observing `([x_i]_j - [x]_j)^2`
//! gives an unbiased estimate of `d_i` bounded in `[0, 1]`, because all
//! coordinates are normalized into `[-1/2, 1/2]`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for floating-point drift when validating the `l_inf <= 1/2`
/// normalization of generated or round-tripped data.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// An immutable set of `n` points in `m` dimensions, stored row-major.
///
/// All coordinates must satisfy `|c| <= 1/2` so that every squared
/// coordinate difference lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    m: usize,
}

impl Dataset {
    pub fn new(points: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if n < 1 || m < 1 {
            return Err(Error::Config(format!(
                "dataset must have n >= 1 points and m >= 1 dimensions (got n={n}, m={m})"
            )));
        }
        if points.len() != n * m {
            return Err(Error::Dimension {
                expected: n * m,
                got: points.len(),
            });
        }
        for (idx, &c) in points.iter().enumerate() {
            if !c.is_finite() || c.abs() > 0.5 + NORM_TOLERANCE {
                return Err(Error::DataLoad {
                    row: idx / m,
                    col: idx % m,
                    message: format!("coordinate {c} outside [-1/2, 1/2]"),
                });
            }
        }
        Ok(Self { points, n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.m)
    }

    /// Splits off the last row as the query point. Used by the CSV
    /// instance convention where the query is stored as the final row.
    pub fn split_query(mut self) -> Result<(Dataset, Query)> {
        if self.n < 2 {
            return Err(Error::Config(
                "need at least 2 rows to split off a query".into(),
            ));
        }
        let query = Query::new(self.points.split_off((self.n - 1) * self.m))?;
        self.n -= 1;
        Ok((self, query))
    }
}

/// The query point; same normalization contract as [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    coords: Vec<f64>,
}

impl Query {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Config("query must have m >= 1 coordinates".into()));
        }
        for (col, &c) in coords.iter().enumerate() {
            if !c.is_finite() || c.abs() > 0.5 + NORM_TOLERANCE {
                return Err(Error::DataLoad {
                    row: 0,
                    col,
                    message: format!("query coordinate {c} outside [-1/2, 1/2]"),
                });
            }
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn m(&self) -> usize {
        self.coords.len()
    }
}

/// Exact normalized squared distance `(1/m) * sum_j ([xi]_j - [x]_j)^2`.
pub fn exact_distance(x: &[f64], xi: &[f64]) -> Result<f64> {
    if x.len() != xi.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: xi.len(),
        });
    }
    let sum: f64 = x
        .iter()
        .zip(xi.iter())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok(sum / x.len() as f64)
}

/// Which confidence-radius formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceVariant {
    /// Law-of-iterated-logarithm bound with explicit constants:
    /// `alpha(u) = sqrt(2 * beta(u, delta/n) / u)` with
    /// `beta(u, d') = log(1/d') + 3 log log(1/d') + 1.5 log(1 + log u)`.
    Theory,
    /// The benchmark-sweep form
    /// `alpha(u) = C_alpha * sqrt(log(1 + (1 + log u) * n / delta) / u)`.
    /// `C_alpha` scales the whole radius, so sweeping it trades sampling
    /// effort against confidence directly.
    Experimental,
}

/// Confidence-radius configuration shared by all arms of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    pub variant: ConfidenceVariant,
    pub delta: f64,
    pub n: usize,
    pub c_alpha: f64,
}

impl ConfidenceSpec {
    pub fn new(variant: ConfidenceVariant, delta: f64, n: usize, c_alpha: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(c_alpha > 0.0) {
            return Err(Error::Config(format!("c_alpha must be positive, got {c_alpha}")));
        }
        if n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if variant == ConfidenceVariant::Theory {
            // The double logarithm log log(n/delta) must be defined and
            // positive, i.e. delta/n < 1/e. Reject rather than clamp.
            let delta_prime = delta / n as f64;
            if delta_prime >= (-1.0f64).exp() {
                return Err(Error::Config(format!(
                    "theory variant requires delta/n < 1/e, got {delta_prime}"
                )));
            }
        }
        Ok(Self {
            variant,
            delta,
            n,
            c_alpha,
        })
    }
}

/// Confidence radius after `u >= 1` samples.
pub fn alpha_fn(u: u64, spec: &ConfidenceSpec) -> f64 {
    debug_assert!(u >= 1);
    let uf = u as f64;
    let n = spec.n as f64;
    match spec.variant {
        ConfidenceVariant::Theory => {
            let log_inv = (n / spec.delta).ln();
            let beta = log_inv + 3.0 * log_inv.ln() + 1.5 * (1.0 + uf.ln()).ln();
            (2.0 * beta / uf).sqrt()
        }
        ConfidenceVariant::Experimental => {
            let inner = 1.0 + (1.0 + uf.ln()) * n / spec.delta;
            spec.c_alpha * (inner.ln() / uf).sqrt()
        }
    }
}

/// Per-arm running estimate of the normalized squared distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub estimate: f64,
    pub count: u64,
    pub alpha: f64,
    pub exact: bool,
}

impl ArmState {
    /// State after the first sample (initialization step).
    pub fn first_sample(sample_sq_diff: f64, spec: &ConfidenceSpec) -> Self {
        Self {
            estimate: sample_sq_diff,
            count: 1,
            alpha: alpha_fn(1, spec),
            exact: false,
        }
    }

    /// Folds one sampled squared coordinate difference into the running
    /// mean and recomputes the confidence radius.
    pub fn update(&mut self, sample_sq_diff: f64, spec: &ConfidenceSpec) -> Result<()> {
        if self.exact {
            return Err(Error::Logic("update on an exact arm".into()));
        }
        debug_assert!((0.0..=1.0).contains(&sample_sq_diff));
        self.count += 1;
        let t = self.count as f64;
        self.estimate = (t - 1.0) / t * self.estimate + sample_sq_diff / t;
        self.alpha = alpha_fn(self.count, spec);
        Ok(())
    }

    /// Pins the arm to its exact distance and collapses the interval.
    pub fn make_exact(&mut self, exact_distance: f64) {
        self.estimate = exact_distance;
        self.alpha = 0.0;
        self.exact = true;
    }

    pub fn lcb(&self) -> f64 {
        self.estimate - self.alpha
    }

    pub fn ucb(&self) -> f64 {
        self.estimate + self.alpha
    }
}

/// Coordinate sampling regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    WithReplacement,
    WithoutReplacement,
}

/// SplitMix64 step; used to derive independent per-arm and per-trial
/// seeds from a master seed so results do not depend on interleaving.
pub fn derive_seed(state: u64, salt: u64) -> u64 {
    let mut z = state
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(salt.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-arm coordinate sampler with its own RNG stream.
///
/// Without-replacement mode keeps an incrementally shuffled permutation
/// of `[m]`, allocated on first use, so that after `m` draws the running
/// mean equals the exact distance.
#[derive(Debug, Clone)]
pub struct ArmSampler {
    rng: ChaCha8Rng,
    m: usize,
    perm: Option<Vec<u32>>,
    drawn: usize,
}

impl ArmSampler {
    pub fn new(master_seed: u64, arm_index: usize, m: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(derive_seed(master_seed, arm_index as u64)),
            m,
            perm: None,
            drawn: 0,
        }
    }

    /// Draws the next coordinate index for this arm.
    pub fn draw(&mut self, mode: SamplingMode) -> Result<usize> {
        match mode {
            SamplingMode::WithReplacement => Ok(self.rng.random_range(0..self.m)),
            SamplingMode::WithoutReplacement => {
                if self.drawn >= self.m {
                    return Err(Error::SamplerExhausted { m: self.m });
                }
                let perm = self
                    .perm
                    .get_or_insert_with(|| (0..self.m as u32).collect());
                let t = self.drawn;
                let swap_with = t + self.rng.random_range(0..self.m - t);
                perm.swap(t, swap_with);
                self.drawn += 1;
                Ok(perm[t] as usize)
            }
        }
    }
}
