//! Brute-force exact k-NN baseline: the correctness oracle and the
//! naive-cost yardstick.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{exact_distance, Dataset, Query};

/// Exact distances and ordering for all points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Permutation of `[n]` sorted by (exact distance, index).
    pub sorted_indices: Vec<usize>,
    /// The first `k` indices of `sorted_indices`.
    pub k_set: Vec<usize>,
    /// Exact normalized squared distance per point, in point-index order.
    pub distances: Vec<f64>,
}

/// Computes all `n` exact distances and sorts with index tie-breaking.
pub fn brute_force(data: &Dataset, query: &Query, k: usize) -> Result<OracleResult> {
    let n = data.n();
    if k < 1 || k > n {
        return Err(Error::Config(format!("k = {k} out of range [1, {n}]")));
    }
    let distances: Vec<f64> = data
        .rows()
        .map(|row| exact_distance(query.coords(), row))
        .collect::<Result<_>>()?;
    let mut sorted_indices: Vec<usize> = (0..n).collect();
    sorted_indices.sort_by(|&a, &b| {
        distances[a]
            .partial_cmp(&distances[b])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let k_set = sorted_indices[..k].to_vec();
    Ok(OracleResult {
        sorted_indices,
        k_set,
        distances,
    })
}

/// Fraction of the true k nearest neighbors present in the returned set.
pub fn recall(returned: &[usize], oracle_k: &[usize]) -> f64 {
    if oracle_k.is_empty() {
        return 1.0;
    }
    let hits = oracle_k.iter().filter(|i| returned.contains(i)).count();
    hits as f64 / oracle_k.len() as f64
}
