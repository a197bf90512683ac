//! Experiment driver: seeded trial sweeps over a grid of `C_alpha`
//! values, recall and sample-fraction statistics, and CSV/JSON emission.
//!
//! Trial seeds derive deterministically from (master seed, grid index,
//! trial index), so parallel and serial execution produce identical
//! results.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{run, RunConfig};
use crate::bounds::SAMPLE_CAP;
use crate::datagen::{generate_coherent, generate_subspace, load_csv, SubspaceSpec};
use crate::error::{Error, Result};
use crate::estimate::{
    ConfidenceSpec, ConfidenceVariant, Dataset, Query, SamplingMode,
};
use crate::oracle::{brute_force, recall};

/// Where the instances of a sweep come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceSource {
    /// Fresh low-rank instance per trial.
    Subspace { n: usize, m: usize, p: usize },
    /// Fresh coherent (hard) instance per trial.
    Coherent { n: usize, m: usize },
    /// Fixed instance from a CSV file; the last row is the query.
    Csv { path: PathBuf, normalize: bool },
}

/// Full description of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: InstanceSource,
    pub c_alpha_grid: Vec<f64>,
    pub trials: usize,
    pub k: usize,
    pub h: usize,
    pub delta: f64,
    pub variant: ConfidenceVariant,
    pub sampling_mode: SamplingMode,
    pub master_seed: u64,
    #[serde(default)]
    pub threads: usize,
    /// Record wall-clock times in emitted files. Off by default so that
    /// repeated invocations produce byte-identical outputs.
    #[serde(default)]
    pub timings: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.c_alpha_grid.is_empty() {
            return Err(Error::Config("C_alpha grid must be nonempty".into()));
        }
        if self.c_alpha_grid.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Config("C_alpha values must be positive".into()));
        }
        Ok(())
    }
}

/// One (C_alpha, trial) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub c_alpha: f64,
    pub trial: usize,
    pub seed: u64,
    pub recall: f64,
    pub sample_fraction: f64,
    pub iterations: u64,
    pub total_coordinate_evals: u64,
    pub wall_time_ms: f64,
}

/// Median and interquartile range of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub c_alpha: f64,
    pub recall_median: f64,
    pub recall_q25: f64,
    pub recall_q75: f64,
    pub fraction_median: f64,
    pub fraction_q25: f64,
    pub fraction_q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<GridSummary>,
}

/// Linear-interpolation percentile of a sorted sample.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn summarize(c_alpha: f64, records: &[&TrialRecord]) -> GridSummary {
    let mut recalls: Vec<f64> = records.iter().map(|r| r.recall).collect();
    let mut fractions: Vec<f64> = records.iter().map(|r| r.sample_fraction).collect();
    recalls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    GridSummary {
        c_alpha,
        recall_median: percentile(&recalls, 0.5),
        recall_q25: percentile(&recalls, 0.25),
        recall_q75: percentile(&recalls, 0.75),
        fraction_median: percentile(&fractions, 0.5),
        fraction_q25: percentile(&fractions, 0.25),
        fraction_q75: percentile(&fractions, 0.75),
    }
}

/// Deterministic per-trial seed from the master seed and grid position.
pub fn trial_seed(master: u64, grid_index: usize, trial: usize) -> u64 {
    use crate::estimate::derive_seed;
    derive_seed(derive_seed(master, grid_index as u64 + 1), trial as u64 + 1)
}

fn run_one_trial(
    spec: &ExperimentSpec,
    shared: Option<&(Dataset, Query)>,
    c_alpha: f64,
    grid_index: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let seed = trial_seed(spec.master_seed, grid_index, trial);
    let owned;
    let (data, query) = match shared {
        Some(pair) => pair,
        None => {
            owned = match &spec.source {
                InstanceSource::Subspace { n, m, p } => generate_subspace(&SubspaceSpec {
                    n: *n,
                    m: *m,
                    p: *p,
                    seed,
                })?,
                InstanceSource::Coherent { n, m } => generate_coherent(*n, *m, seed)?,
                InstanceSource::Csv { .. } => unreachable!("csv source is shared"),
            };
            &owned
        }
    };
    let confidence = ConfidenceSpec::new(spec.variant, spec.delta, data.n(), c_alpha)?;
    let cfg = RunConfig {
        k: spec.k,
        h: spec.h,
        delta: spec.delta,
        confidence,
        sampling_mode: spec.sampling_mode,
        seed,
        max_iterations: None,
    };
    let report = run(data, query, &cfg)?;
    let oracle = brute_force(data, query, spec.k)?;
    Ok(TrialRecord {
        c_alpha,
        trial,
        seed,
        recall: recall(&report.result_set, &oracle.k_set),
        sample_fraction: report.sample_fraction(),
        iterations: report.iterations,
        total_coordinate_evals: report.total_coordinate_evals,
        wall_time_ms: if spec.timings { report.wall_time_ms } else { 0.0 },
    })
}

/// Runs the full (C_alpha x trial) grid, parallel over cells.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let shared: Option<(Dataset, Query)> = match &spec.source {
        InstanceSource::Csv { path, normalize } => {
            let loaded = load_csv(path, *normalize)?;
            Some(loaded.dataset.split_query()?)
        }
        _ => None,
    };

    let cells: Vec<(usize, usize)> = (0..spec.c_alpha_grid.len())
        .flat_map(|g| (0..spec.trials).map(move |t| (g, t)))
        .collect();

    let run_all = || -> Result<Vec<TrialRecord>> {
        cells
            .par_iter()
            .map(|&(g, t)| {
                run_one_trial(spec, shared.as_ref(), spec.c_alpha_grid[g], g, t).map_err(|e| {
                    Error::Config(format!(
                        "trial failed at C_alpha={}, trial={}, seed={}: {e}",
                        spec.c_alpha_grid[g],
                        t,
                        trial_seed(spec.master_seed, g, t)
                    ))
                })
            })
            .collect()
    };

    let records = if spec.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(run_all)?
    } else {
        run_all()?
    };

    // cells are generated grid-major, so records are already ordered by
    // (grid index, trial); par_iter collect preserves that order.
    let summaries = spec
        .c_alpha_grid
        .iter()
        .enumerate()
        .map(|(g, &c)| {
            let group: Vec<&TrialRecord> =
                records[g * spec.trials..(g + 1) * spec.trials].iter().collect();
            summarize(c, &group)
        })
        .collect();

    Ok(SweepResult { records, summaries })
}

/// Output format for sweep results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Csv,
    Json,
}

/// Writes sweep results to a file. CSV holds one row per trial with a
/// fixed column order; JSON mirrors the whole structure including
/// summaries. Floats are written with 17 significant digits.
pub fn emit(results: &SweepResult, format: EmitFormat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        EmitFormat::Csv => {
            writeln!(
                out,
                "c_alpha,trial,seed,recall,sample_fraction,iterations,total_coordinate_evals,wall_time_ms"
            )?;
            for r in &results.records {
                writeln!(
                    out,
                    "{:.16e},{},{},{:.16e},{:.16e},{},{},{:.16e}",
                    r.c_alpha,
                    r.trial,
                    r.seed,
                    r.recall,
                    r.sample_fraction,
                    r.iterations,
                    r.total_coordinate_evals,
                    r.wall_time_ms
                )?;
            }
        }
        EmitFormat::Json => {
            serde_json::to_writer_pretty(&mut out, results)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Upper bound sanity marker re-exported for CLI reporting of capped
/// fixed-point counts.
pub const FIXED_POINT_CAP_SENTINEL: u64 = SAMPLE_CAP;

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            source: InstanceSource::Subspace { n: 30, m: 32, p: 2 },
            c_alpha_grid: vec![1.0],
            trials: 1,
            k: 3,
            h: 2,
            delta: 0.05,
            variant: ConfidenceVariant::Experimental,
            sampling_mode: SamplingMode::WithoutReplacement,
            master_seed: 5,
            threads: 0,
            timings: false,
        }
    }

    #[test]
    fn singleton_sweep_summary_equals_record() {
        let result = run_sweep(&small_spec()).unwrap();
        assert_eq!(result.records.len(), 1);
        assert_eq!(result.summaries.len(), 1);
        let r = &result.records[0];
        let s = &result.summaries[0];
        assert_eq!(s.recall_median, r.recall);
        assert_eq!(s.recall_q25, r.recall);
        assert_eq!(s.fraction_median, r.sample_fraction);
    }

    #[test]
    fn sweep_is_deterministic_and_parallel_equals_serial() {
        let mut spec = small_spec();
        spec.c_alpha_grid = vec![0.25, 1.0];
        spec.trials = 4;
        let serial = run_sweep(&spec).unwrap();
        spec.threads = 4;
        let parallel = run_sweep(&spec).unwrap();
        assert_eq!(
            serde_json::to_vec(&serial).unwrap(),
            serde_json::to_vec(&parallel).unwrap()
        );
    }

    #[test]
    fn recall_improves_across_two_decades_of_c_alpha() {
        let mut spec = small_spec();
        spec.source = InstanceSource::Subspace {
            n: 80,
            m: 512,
            p: 10,
        };
        spec.c_alpha_grid = vec![0.05, 0.5, 5.0];
        spec.trials = 5;
        spec.k = 5;
        spec.h = 3;
        spec.master_seed = 11;
        let result = run_sweep(&spec).unwrap();
        let first = result.summaries.first().unwrap();
        let last = result.summaries.last().unwrap();
        assert!(last.recall_median >= first.recall_median);
        assert_eq!(last.recall_median, 1.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = small_spec();
        spec.trials = 0;
        assert!(run_sweep(&spec).is_err());
        let mut spec = small_spec();
        spec.c_alpha_grid.clear();
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn percentile_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 0.25), 1.75);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_eq!(percentile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn emit_csv_row_count_and_json_round_trip() {
        let mut spec = small_spec();
        spec.c_alpha_grid = vec![0.5, 1.0];
        spec.trials = 3;
        let result = run_sweep(&spec).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("out.csv");
        emit(&result, EmitFormat::Csv, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(text.lines().count(), 2 * 3 + 1);

        let json_path = dir.path().join("out.json");
        emit(&result, EmitFormat::Json, &json_path).unwrap();
        let back: SweepResult =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(back, result);
    }

    #[test]
    fn csv_source_uses_fixed_instance() {
        let (data, query) = generate_subspace(&SubspaceSpec {
            n: 12,
            m: 8,
            p: 2,
            seed: 4,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.csv");
        crate::datagen::write_instance_csv(&data, &query, &path).unwrap();
        let mut spec = small_spec();
        spec.source = InstanceSource::Csv {
            path,
            normalize: false,
        };
        spec.k = 2;
        spec.h = 1;
        spec.trials = 2;
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.records.len(), 2);
        assert!(result.records.iter().all(|r| r.recall >= 0.0));
    }
}
