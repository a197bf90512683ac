//! Adaptive k-nearest-neighbor search by coordinate sampling.
//!
//! Normalized squared distances are estimated from uniformly sampled
//! coordinates, with per-point confidence intervals driving a bandit-style
//! sampling policy. The algorithm returns a set of `k + h` candidates that,
//! with probability at least `1 - delta`, contains the `k` true nearest
//! neighbors — often after looking at a small fraction of the data.
//!
//! Module map:
//! - [`estimate`]: datasets, distance estimators, confidence intervals,
//!   per-point coordinate samplers.
//! - [`heaps`]: the addressable heap bank that makes each iteration
//!   logarithmic in the number of points.
//! - [`algorithm`]: the adaptive sampling loop itself.
//! - [`oracle`]: brute-force exact baseline and recall.
//! - [`bounds`]: instance-dependent sample-complexity bounds.
//! - [`datagen`]: synthetic instance generators and CSV I/O.
//! - [`harness`]: seeded experiment sweeps and result emission.

pub mod algorithm;
pub mod bounds;
pub mod datagen;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod heaps;
pub mod oracle;

pub use algorithm::{run, RunConfig, RunReport};
pub use bounds::{complexity_report, ComplexityReport, GapProfile};
pub use error::{Error, Result};
pub use estimate::{
    ArmState, ConfidenceSpec, ConfidenceVariant, Dataset, Query, SamplingMode,
};
pub use harness::{run_sweep, EmitFormat, ExperimentSpec, InstanceSource, SweepResult};
pub use oracle::{brute_force, recall, OracleResult};
