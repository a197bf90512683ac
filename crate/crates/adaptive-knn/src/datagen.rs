//! Synthetic instance generators and CSV ingestion.
//!
//! The subspace generator draws points `x = c * Q * y` with `Q` an i.i.d.
//! Gaussian matrix normalized to unit-norm columns and `y` uniform on the
//! unit sphere; `c` is the single largest scalar keeping the whole
//! instance (dataset plus query) inside the `l_inf <= 1/2` ball. The
//! coherent generator is the adversarial counterpart where all points
//! live on one coordinate axis, making per-coordinate sampling maximally
//! uninformative.
//!
//! CSV convention: one point per row, comma-separated decimal floats; the
//! last row of a generated instance file is the query.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Dataset, Query};

/// Parameters of the low-rank subspace generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub seed: u64,
}

impl SubspaceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("subspace generator requires n >= 2".into()));
        }
        if self.p < 1 || self.p > self.m {
            return Err(Error::Config(format!(
                "subspace generator requires 1 <= p <= m (p={}, m={})",
                self.p, self.m
            )));
        }
        Ok(())
    }
}

/// Standard normal via the Marsaglia polar method.
fn next_gaussian(rng: &mut ChaCha12Rng, spare: &mut Option<f64>) -> f64 {
    if let Some(v) = spare.take() {
        return v;
    }
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            *spare = Some(v * f);
            return u * f;
        }
    }
}

/// Draws a dataset of `n` points plus one query, all lying in a random
/// `p`-dimensional subspace of `R^m`, normalized by a single global scale
/// so the largest absolute coordinate is exactly 1/2.
pub fn generate_subspace(spec: &SubspaceSpec) -> Result<(Dataset, Query)> {
    spec.validate()?;
    let (n, m, p) = (spec.n, spec.m, spec.p);
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut spare = None;

    // Q: m x p Gaussian, columns normalized to unit l2 norm.
    let mut q = vec![0.0f64; m * p];
    for v in q.iter_mut() {
        *v = next_gaussian(&mut rng, &mut spare);
    }
    for col in 0..p {
        let norm: f64 = (0..m).map(|r| q[r * p + col] * q[r * p + col]).sum::<f64>().sqrt();
        for r in 0..m {
            q[r * p + col] /= norm;
        }
    }

    // n + 1 coefficient vectors uniform on the unit sphere in R^p; the
    // last one becomes the query.
    let mut points = vec![0.0f64; (n + 1) * m];
    let mut y = vec![0.0f64; p];
    for i in 0..=n {
        loop {
            let mut norm_sq = 0.0;
            for v in y.iter_mut() {
                *v = next_gaussian(&mut rng, &mut spare);
                norm_sq += *v * *v;
            }
            if norm_sq > 0.0 {
                let norm = norm_sq.sqrt();
                for v in y.iter_mut() {
                    *v /= norm;
                }
                break;
            }
        }
        let row = &mut points[i * m..(i + 1) * m];
        for (r, out) in row.iter_mut().enumerate() {
            *out = (0..p).map(|c| q[r * p + c] * y[c]).sum();
        }
    }

    // Global scale: largest c with max |coordinate| <= 1/2 over the
    // whole instance, query included.
    let max_abs = points.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let c = 0.5 / max_abs;
    for v in points.iter_mut() {
        *v *= c;
    }

    let query = Query::new(points.split_off(n * m))?;
    let data = Dataset::new(points, n, m)?;
    Ok((data, query))
}

/// Coherent (hard) instance: every point is zero except its first
/// coordinate, which carries a distinct evenly spaced value in
/// `[-1/2, 1/2]` under a seed-permuted assignment. The last grid value
/// in the permuted order becomes the query.
pub fn generate_coherent(n: usize, m: usize, seed: u64) -> Result<(Dataset, Query)> {
    if n < 2 || m < 1 {
        return Err(Error::Config(format!(
            "coherent generator requires n >= 2 and m >= 1 (n={n}, m={m})"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..=n).map(|t| -0.5 + t as f64 / n as f64).collect();
    // Fisher-Yates under the seeded stream.
    for t in (1..values.len()).rev() {
        let s = rng.random_range(0..=t);
        values.swap(t, s);
    }
    let mut points = vec![0.0f64; n * m];
    for i in 0..n {
        points[i * m] = values[i];
    }
    let mut query_coords = vec![0.0f64; m];
    query_coords[0] = values[n];
    let data = Dataset::new(points, n, m)?;
    let query = Query::new(query_coords)?;
    Ok((data, query))
}

/// Affine transform applied to a dataset during normalized ingestion:
/// `normalized = (raw - offset) * scale - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTransform {
    pub offset: f64,
    pub scale: f64,
}

/// A dataset loaded from CSV, with the normalization transform when one
/// was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub transform: Option<NormalizeTransform>,
}

fn parse_rows(path: &Path) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        let mut bad_cell: Option<usize> = None;
        for (col, field) in record.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    bad_cell = Some(col);
                    break;
                }
            }
        }
        if let Some(col) = bad_cell {
            // A non-numeric first row is a header; anywhere else it is an
            // error.
            if row_idx == 0 {
                continue;
            }
            return Err(Error::DataLoad {
                row: row_idx,
                col,
                message: format!("non-numeric cell '{}'", &record[col]),
            });
        }
        if rows.is_empty() {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::DataLoad {
                row: row_idx,
                col: row.len().min(width),
                message: format!("ragged row: expected {width} columns, got {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() || width == 0 {
        return Err(Error::DataLoad {
            row: 0,
            col: 0,
            message: "empty CSV".into(),
        });
    }
    Ok((rows, width))
}

/// Loads a rectangular numeric CSV as a dataset.
///
/// With `normalize` the global value range is affinely mapped onto
/// `[-1/2, 1/2]`; otherwise the data must already satisfy the
/// normalization contract.
pub fn load_csv(path: &Path, normalize: bool) -> Result<LoadedDataset> {
    let (mut rows, width) = parse_rows(path)?;
    let n = rows.len();
    let mut transform = None;
    if normalize {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &rows {
            for &v in row {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                // A constant dataset maps to the origin.
                *v = if scale == 0.0 {
                    0.0
                } else {
                    (*v - lo) * scale - 0.5
                };
            }
        }
        transform = Some(NormalizeTransform { offset: lo, scale });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let dataset = Dataset::new(flat, n, width).map_err(|e| match e {
        Error::DataLoad { row, col, message } => Error::DataLoad {
            row,
            col,
            message: format!("{message} (pass normalize to rescale)"),
        },
        other => other,
    })?;
    Ok(LoadedDataset { dataset, transform })
}

/// Writes the normalization sidecar next to a CSV file.
pub fn write_meta_sidecar(csv_path: &Path, transform: &NormalizeTransform) -> Result<()> {
    let meta_path = csv_path.with_extension("meta.json");
    let file = File::create(meta_path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), transform)?;
    Ok(())
}

fn write_row(out: &mut impl Write, row: &[f64]) -> std::io::Result<()> {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.write_all(b",")?;
        }
        // 17 significant digits: exact f64 round trip.
        write!(out, "{v:.16e}")?;
    }
    out.write_all(b"\n")
}

/// Writes an instance as CSV, query as the final row.
pub fn write_instance_csv(data: &Dataset, query: &Query, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in data.rows() {
        write_row(&mut out, row)?;
    }
    write_row(&mut out, query.coords())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::exact_distance;

    #[test]
    fn subspace_p1_points_are_collinear() {
        let spec = SubspaceSpec {
            n: 5,
            m: 8,
            p: 1,
            seed: 3,
        };
        let (data, query) = generate_subspace(&spec).unwrap();
        // Every point is a scalar multiple of the query direction.
        let q = query.coords();
        let qn: f64 = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        for row in data.rows() {
            let rn: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = row.iter().zip(q).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - rn * qn).abs() < 1e-9);
        }
    }

    #[test]
    fn subspace_max_coordinate_is_half() {
        let spec = SubspaceSpec {
            n: 40,
            m: 64,
            p: 4,
            seed: 11,
        };
        let (data, query) = generate_subspace(&spec).unwrap();
        let max_abs = data
            .rows()
            .flatten()
            .chain(query.coords())
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        assert!(max_abs <= 0.5 && max_abs >= 0.5 - 1e-12);
    }

    #[test]
    fn subspace_numerical_rank_is_p() {
        let spec = SubspaceSpec {
            n: 100,
            m: 256,
            p: 10,
            seed: 7,
        };
        let (data, query) = generate_subspace(&spec).unwrap();
        let mut rows: Vec<f64> = data.rows().flatten().copied().collect();
        rows.extend_from_slice(query.coords());
        let mat = nalgebra::DMatrix::from_row_slice(101, 256, &rows);
        let svd = mat.svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * smax)
            .count();
        assert_eq!(rank, 10);
    }

    #[test]
    fn subspace_is_deterministic_under_seed() {
        let spec = SubspaceSpec {
            n: 10,
            m: 16,
            p: 3,
            seed: 99,
        };
        assert_eq!(generate_subspace(&spec).unwrap(), generate_subspace(&spec).unwrap());
    }

    #[test]
    fn coherent_distances_bounded_by_inverse_m() {
        let (data, query) = generate_coherent(20, 64, 5).unwrap();
        for row in data.rows() {
            let d = exact_distance(query.coords(), row).unwrap();
            assert!(d <= 1.0 / 64.0 + 1e-15);
            assert!(d > 0.0);
        }
    }

    #[test]
    fn coherent_values_are_distinct() {
        let (data, query) = generate_coherent(30, 4, 8).unwrap();
        let mut firsts: Vec<f64> = data.rows().map(|r| r[0]).collect();
        firsts.push(query.coords()[0]);
        firsts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in firsts.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn load_single_row_without_normalize() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        std::fs::write(&path, "0,0,0\n").unwrap();
        let loaded = load_csv(&path, false).unwrap();
        assert_eq!(loaded.dataset.n(), 1);
        assert_eq!(loaded.dataset.m(), 3);
        assert!(loaded.transform.is_none());
    }

    #[test]
    fn load_normalize_attains_both_extremes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("unit.csv");
        std::fs::write(&path, "0.0,0.25\n1.0,0.5\n").unwrap();
        let loaded = load_csv(&path, true).unwrap();
        let vals: Vec<f64> = loaded.dataset.rows().flatten().copied().collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(lo, -0.5);
        assert_eq!(hi, 0.5);
        let t = loaded.transform.unwrap();
        assert_eq!(t.offset, 0.0);
        assert_eq!(t.scale, 1.0);
    }

    #[test]
    fn load_rejects_unnormalized_without_flag() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.csv");
        std::fs::write(&path, "0.1,0.2\n0.9,0.1\n").unwrap();
        assert!(matches!(
            load_csv(&path, false),
            Err(Error::DataLoad { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn load_reports_ragged_and_non_numeric_locations() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = dir.path().join("ragged.csv");
        std::fs::write(&ragged, "0.1,0.2\n0.3\n").unwrap();
        assert!(matches!(
            load_csv(&ragged, false),
            Err(Error::DataLoad { row: 1, .. })
        ));
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "0.1,0.2\n0.3,oops\n").unwrap();
        assert!(matches!(
            load_csv(&bad, false),
            Err(Error::DataLoad { row: 1, col: 1, .. })
        ));
    }

    #[test]
    fn header_row_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hdr.csv");
        std::fs::write(&path, "x,y\n0.1,0.2\n-0.3,0.4\n").unwrap();
        let loaded = load_csv(&path, false).unwrap();
        assert_eq!(loaded.dataset.n(), 2);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let spec = SubspaceSpec {
            n: 8,
            m: 12,
            p: 2,
            seed: 21,
        };
        let (data, query) = generate_subspace(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.csv");
        write_instance_csv(&data, &query, &path).unwrap();
        let loaded = load_csv(&path, false).unwrap();
        let (data2, query2) = loaded.dataset.split_query().unwrap();
        assert_eq!(data, data2);
        assert_eq!(query, query2);
    }

    #[test]
    fn meta_sidecar_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("d.csv");
        let t = NormalizeTransform {
            offset: 3.25,
            scale: 0.125,
        };
        write_meta_sidecar(&csv_path, &t).unwrap();
        let text = std::fs::read_to_string(dir.path().join("d.meta.json")).unwrap();
        let back: NormalizeTransform = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }
}
