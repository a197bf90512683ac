//! The adaptive k-NN driver: initialization, the LUCB-style iteration
//! loop over the seven-heap bank, the exact-distance fallback, and
//! termination.
//!
//! Each iteration selects the most-uncertain-upward close arm `d1`, the
//! most-uncertain-downward far arm `d2`, and the widest-interval arm `b2`
//! among the mid buffer and `d2`, then samples one coordinate for each of
//! `{d1, b2}`. An arm whose sample count reaches `m` is pinned to its
//! exact distance with zero radius, which guarantees termination. The
//! loop exits once `ucb(d1) <= lcb(d2)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    exact_distance, ArmSampler, ArmState, ConfidenceSpec, Dataset, Query, SamplingMode,
};
use crate::heaps::HeapBank;

/// Parameters of a single adaptive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub h: usize,
    pub delta: f64,
    pub confidence: ConfidenceSpec,
    pub sampling_mode: SamplingMode,
    pub seed: u64,
    pub max_iterations: Option<u64>,
}

/// Everything observable about a completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub result_set: Vec<usize>,
    pub total_coordinate_evals: u64,
    pub iterations: u64,
    pub per_arm_counts: Vec<u64>,
    pub exact_arm_count: usize,
    pub heap_moves: u64,
    pub wall_time_ms: f64,
    pub degenerate: bool,
    pub n: usize,
    pub m: usize,
}

impl RunReport {
    /// Coordinate evaluations as a fraction of the brute-force cost `n*m`.
    pub fn sample_fraction(&self) -> f64 {
        self.total_coordinate_evals as f64 / (self.n as f64 * self.m as f64)
    }

    /// Copy with the wall-clock field zeroed, for byte-reproducible
    /// output files.
    pub fn without_timing(&self) -> RunReport {
        RunReport {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationStatus {
    Continue,
    Terminated,
}

/// In-flight state of one adaptive run; step-level access exists so the
/// iteration loop can be instrumented.
pub struct AdaptiveRun<'a> {
    data: &'a Dataset,
    query: &'a Query,
    cfg: &'a RunConfig,
    arms: Vec<ArmState>,
    samplers: Vec<ArmSampler>,
    bank: HeapBank,
    evals: u64,
    iterations: u64,
    start: Instant,
}

fn validate(data: &Dataset, query: &Query, cfg: &RunConfig) -> Result<()> {
    if query.m() != data.m() {
        return Err(Error::Dimension {
            expected: data.m(),
            got: query.m(),
        });
    }
    if cfg.k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if cfg.confidence.n != data.n() {
        return Err(Error::Config(format!(
            "confidence spec built for n={} but dataset has n={}",
            cfg.confidence.n,
            data.n()
        )));
    }
    if cfg.delta != cfg.confidence.delta {
        return Err(Error::Config(format!(
            "run delta {} disagrees with confidence spec delta {}",
            cfg.delta, cfg.confidence.delta
        )));
    }
    Ok(())
}

impl<'a> AdaptiveRun<'a> {
    /// Initializes by sampling exactly one coordinate per arm and building
    /// the heap bank. Requires `k + h < n`.
    pub fn new(data: &'a Dataset, query: &'a Query, cfg: &'a RunConfig) -> Result<Self> {
        validate(data, query, cfg)?;
        let n = data.n();
        let m = data.m();
        if cfg.k + cfg.h >= n {
            return Err(Error::Config(format!(
                "k + h = {} must be below n = {n}",
                cfg.k + cfg.h
            )));
        }
        let q = query.coords();
        let mut arms = Vec::with_capacity(n);
        let mut samplers = Vec::with_capacity(n);
        for i in 0..n {
            let mut sampler = ArmSampler::new(cfg.seed, i, m);
            let j = sampler.draw(cfg.sampling_mode)?;
            let diff = data.point(i)[j] - q[j];
            arms.push(ArmState::first_sample(diff * diff, &cfg.confidence));
            samplers.push(sampler);
        }
        let bank = HeapBank::build(&arms, cfg.k, cfg.h)?;
        Ok(Self {
            data,
            query,
            cfg,
            arms,
            samplers,
            bank,
            evals: n as u64,
            iterations: 0,
            start: Instant::now(),
        })
    }

    /// Termination test `ucb(d1) <= lcb(d2)` on the current selection.
    pub fn is_terminated(&self) -> bool {
        let d1 = self.bank.peek_d1();
        let d2 = self.bank.peek_d2();
        self.arms[d1].ucb() <= self.arms[d2].lcb()
    }

    fn pull(&mut self, l: usize) -> Result<()> {
        if self.arms[l].exact {
            return Ok(());
        }
        let m = self.data.m() as u64;
        if self.arms[l].count < m {
            let j = self.samplers[l].draw(self.cfg.sampling_mode)?;
            let diff = self.data.point(l)[j] - self.query.coords()[j];
            self.arms[l].update(diff * diff, &self.cfg.confidence)?;
            self.evals += 1;
        }
        if self.arms[l].count >= m {
            match self.cfg.sampling_mode {
                SamplingMode::WithoutReplacement => {
                    // The running mean over a full permutation already
                    // equals the exact distance; no recomputation charge.
                    let d = self.arms[l].estimate;
                    self.arms[l].make_exact(d);
                }
                SamplingMode::WithReplacement => {
                    let d = exact_distance(self.query.coords(), self.data.point(l))?;
                    self.arms[l].make_exact(d);
                    self.evals += m;
                }
            }
        }
        self.bank.update_arm(l, &self.arms[l])
    }

    /// One iteration: select `{d1, b2}`, sample each, restore ordering,
    /// and report whether the termination condition now holds.
    pub fn step(&mut self) -> Result<TerminationStatus> {
        let d1 = self.bank.peek_d1();
        let b2 = self.bank.peek_b2();
        for l in [d1, b2] {
            self.pull(l)?;
        }
        self.bank.restore_ordering();
        self.iterations += 1;
        if self.is_terminated() {
            Ok(TerminationStatus::Terminated)
        } else {
            Ok(TerminationStatus::Continue)
        }
    }

    pub fn total_coordinate_evals(&self) -> u64 {
        self.evals
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn heap_moves(&self) -> u64 {
        self.bank.move_count()
    }

    pub fn into_report(self) -> RunReport {
        RunReport {
            result_set: self.bank.result_set(),
            total_coordinate_evals: self.evals,
            iterations: self.iterations,
            per_arm_counts: self.arms.iter().map(|a| a.count).collect(),
            exact_arm_count: self.arms.iter().filter(|a| a.exact).count(),
            heap_moves: self.bank.move_count(),
            wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
            degenerate: false,
            n: self.data.n(),
            m: self.data.m(),
        }
    }
}

/// Runs the adaptive algorithm to termination.
///
/// When `k + h >= n` the problem is trivial: every index is returned
/// with zero sampling and the report is flagged degenerate.
pub fn run(data: &Dataset, query: &Query, cfg: &RunConfig) -> Result<RunReport> {
    validate(data, query, cfg)?;
    let n = data.n();
    if cfg.k + cfg.h >= n {
        return Ok(RunReport {
            result_set: (0..n).collect(),
            total_coordinate_evals: 0,
            iterations: 0,
            per_arm_counts: vec![0; n],
            exact_arm_count: 0,
            heap_moves: 0,
            wall_time_ms: 0.0,
            degenerate: true,
            n,
            m: data.m(),
        });
    }
    let mut state = AdaptiveRun::new(data, query, cfg)?;
    while !state.is_terminated() {
        if let Some(cap) = cfg.max_iterations {
            if state.iterations >= cap {
                return Err(Error::IterationCap {
                    cap,
                    iterations: state.iterations,
                });
            }
        }
        state.step()?;
    }
    Ok(state.into_report())
}
