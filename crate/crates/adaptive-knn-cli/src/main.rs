//! Command-line front end: single runs, experiment sweeps, complexity
//! bounds, and instance generation.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use adaptive_knn::bounds::complexity_report;
use adaptive_knn::datagen::{
    generate_coherent, generate_subspace, load_csv, write_instance_csv, SubspaceSpec,
};
use adaptive_knn::harness::{emit, run_sweep, EmitFormat, ExperimentSpec, InstanceSource};
use adaptive_knn::{
    run, ConfidenceSpec, ConfidenceVariant, GapProfile, RunConfig, SamplingMode,
};

#[derive(Parser)]
#[command(
    name = "adaptive-knn",
    about = "Adaptive k-nearest-neighbor search by coordinate sampling",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Sample coordinates uniformly with replacement.
    WithReplacement,
    /// Sample a fresh random permutation of coordinates per point.
    WithoutReplacement,
}

impl From<ModeArg> for SamplingMode {
    fn from(v: ModeArg) -> Self {
        match v {
            ModeArg::WithReplacement => SamplingMode::WithReplacement,
            ModeArg::WithoutReplacement => SamplingMode::WithoutReplacement,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Law-of-iterated-logarithm bound with the proof constants.
    Theory,
    /// Scaled bound with tunable constant C_alpha.
    Experimental,
}

impl From<VariantArg> for ConfidenceVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Theory => ConfidenceVariant::Theory,
            VariantArg::Experimental => ConfidenceVariant::Experimental,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct AlgoFlags {
    /// Number of nearest neighbors to identify.
    #[arg(long)]
    k: usize,
    /// Slack: the returned set has k + h indices.
    #[arg(long)]
    h: usize,
    /// Failure probability.
    #[arg(long)]
    delta: f64,
    /// Confidence-bound scale for the experimental variant.
    #[arg(long = "c-alpha", default_value_t = 1.0)]
    c_alpha: f64,
    #[arg(long, value_enum, default_value = "experimental")]
    variant: VariantArg,
    #[arg(long = "mode", value_enum, default_value = "with-replacement")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive algorithm once and print a JSON report.
    Run {
        /// Instance CSV; the last row is the query point.
        #[arg(long)]
        data: PathBuf,
        /// Rescale raw CSV coordinates into [-1/2, 1/2] before running.
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        algo: AlgoFlags,
        /// Include wall-clock time in the report (breaks byte-for-byte
        /// reproducibility of the output).
        #[arg(long)]
        timings: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a (C_alpha x trials) sweep and write per-trial records.
    Sweep {
        /// JSON experiment spec; flags below are ignored when given.
        #[arg(long, conflicts_with_all = ["n", "m", "p", "data", "coherent"])]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Subspace dimension of the generated instances.
        #[arg(long)]
        p: Option<usize>,
        /// Use the coherent hard-instance generator instead of subspace.
        #[arg(long)]
        coherent: bool,
        /// Fixed instance CSV instead of a generator.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// Comma-separated grid of C_alpha values.
        #[arg(long = "c-alpha", value_delimiter = ',')]
        c_alpha: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_enum, default_value = "experimental")]
        variant: VariantArg,
        #[arg(long = "mode", value_enum, default_value = "with-replacement")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for trial parallelism; 0 uses the default pool.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Evaluate complexity bounds for a sorted distance profile.
    Bounds {
        /// Text file with one normalized squared distance per line,
        /// sorted ascending.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        h: usize,
        /// Ambient dimension the distances refer to.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long = "c-alpha", default_value_t = 1.0)]
        c_alpha: f64,
        #[arg(long, value_enum, default_value = "experimental")]
        variant: VariantArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic instance and write it as CSV (query last).
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Subspace dimension; omit for the coherent hard instance.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> adaptive_knn::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> adaptive_knn::Result<()> {
    match cli.command {
        Command::Run {
            data,
            normalize,
            algo,
            timings,
            out,
        } => {
            let loaded = load_csv(&data, normalize)?;
            let (dataset, query) = loaded.dataset.split_query()?;
            let confidence =
                ConfidenceSpec::new(algo.variant.into(), algo.delta, dataset.n(), algo.c_alpha)?;
            let cfg = RunConfig {
                k: algo.k,
                h: algo.h,
                delta: algo.delta,
                confidence,
                sampling_mode: algo.mode.into(),
                seed: algo.seed,
                max_iterations: None,
            };
            let report = run(&dataset, &query, &cfg)?;
            let report = if timings { report } else { report.without_timing() };
            emit_json(&report, out.as_ref())
        }
        Command::Sweep {
            config,
            n,
            m,
            p,
            coherent,
            data,
            normalize,
            k,
            h,
            delta,
            c_alpha,
            trials,
            variant,
            mode,
            seed,
            threads,
            timings,
            out,
            format,
        } => {
            let spec = match config {
                Some(path) => serde_json::from_str::<ExperimentSpec>(&fs::read_to_string(path)?)?,
                None => {
                    let missing = |flag: &str| {
                        adaptive_knn::Error::Config(format!(
                            "--{flag} is required when no --config file is given"
                        ))
                    };
                    let source = if let Some(path) = data {
                        InstanceSource::Csv { path, normalize }
                    } else if coherent {
                        InstanceSource::Coherent {
                            n: n.ok_or_else(|| missing("n"))?,
                            m: m.ok_or_else(|| missing("m"))?,
                        }
                    } else {
                        InstanceSource::Subspace {
                            n: n.ok_or_else(|| missing("n"))?,
                            m: m.ok_or_else(|| missing("m"))?,
                            p: p.ok_or_else(|| missing("p"))?,
                        }
                    };
                    ExperimentSpec {
                        source,
                        c_alpha_grid: if c_alpha.is_empty() { vec![1.0] } else { c_alpha },
                        trials,
                        k: k.ok_or_else(|| missing("k"))?,
                        h: h.ok_or_else(|| missing("h"))?,
                        delta: delta.ok_or_else(|| missing("delta"))?,
                        variant: variant.into(),
                        sampling_mode: mode.into(),
                        master_seed: seed,
                        threads,
                        timings,
                    }
                }
            };
            let result = run_sweep(&spec)?;
            let format = match format {
                FormatArg::Csv => EmitFormat::Csv,
                FormatArg::Json => EmitFormat::Json,
            };
            emit(&result, format, &out)
        }
        Command::Bounds {
            data,
            k,
            h,
            m,
            delta,
            c_alpha,
            variant,
            out,
        } => {
            let text = fs::read_to_string(&data)?;
            let mut distances = Vec::new();
            for (row, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let v: f64 = line.parse().map_err(|_| adaptive_knn::Error::DataLoad {
                    row: row + 1,
                    col: 1,
                    message: format!("not a number: {line:?}"),
                })?;
                distances.push(v);
            }
            let profile = GapProfile::new(distances, k, h, m)?;
            let spec = ConfidenceSpec::new(variant.into(), delta, profile.n(), c_alpha)?;
            let report = complexity_report(&profile, delta, &spec)?;
            emit_json(&report, out.as_ref())
        }
        Command::Gen { n, m, p, seed, out } => {
            let (dataset, query) = match p {
                Some(p) => generate_subspace(&SubspaceSpec { n, m, p, seed })?,
                None => generate_coherent(n, m, seed)?,
            };
            write_instance_csv(&dataset, &query, &out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version surface as Err but are not failures.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
