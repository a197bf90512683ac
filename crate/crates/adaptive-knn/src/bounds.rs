//! Numeric evaluation of the instance-dependent complexity formulas:
//! the gap-based upper score, the change-of-measure lower bound, and the
//! fixed-point sample counts `T_bar` with their closed-form cap.
//!
//! The upper score drops the hidden constant and logarithmic factors, so
//! it is a ranking diagnostic for how hard an instance is, not an
//! absolute sample predictor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{alpha_fn, ConfidenceSpec};

/// Sentinel returned by [`min_samples_for_gap`] when no sample count up
/// to this cap shrinks the radius below the target.
pub const SAMPLE_CAP: u64 = 1_000_000_000;

/// Sorted exact distances of one instance plus its size parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub sorted_distances: Vec<f64>,
    pub k: usize,
    pub h: usize,
    pub m: usize,
}

impl GapProfile {
    pub fn new(sorted_distances: Vec<f64>, k: usize, h: usize, m: usize) -> Result<Self> {
        let n = sorted_distances.len();
        if k < 1 || k + h >= n {
            return Err(Error::Config(format!(
                "gap profile requires 1 <= k and k + h < n (k={k}, h={h}, n={n})"
            )));
        }
        if m < 1 {
            return Err(Error::Config("m must be positive".into()));
        }
        for w in sorted_distances.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Config("distances must be nondecreasing".into()));
            }
        }
        if sorted_distances
            .iter()
            .any(|&d| !(0.0..=1.0).contains(&d))
        {
            return Err(Error::Config("distances must lie in [0,1]".into()));
        }
        Ok(Self {
            sorted_distances,
            k,
            h,
            m,
        })
    }

    pub fn n(&self) -> usize {
        self.sorted_distances.len()
    }

    /// 1-indexed sorted distance, matching the formulas' conventions.
    fn d(&self, i: usize) -> f64 {
        self.sorted_distances[i - 1]
    }
}

/// `min(gap^-2, m)` with a zero gap mapping to the m-cap.
fn capped_inv_sq(gap: f64, m: usize) -> f64 {
    let g = gap.abs();
    if g == 0.0 {
        return m as f64;
    }
    (1.0 / (g * g)).min(m as f64)
}

/// Bracketed sum of the upper complexity score:
/// `sum_{i<=k} min(D_{i,k+1+h}^-2, m) + sum_{i>=k+1+h} min(D_{k,i}^-2, m)
///  + h * min(D_{k,k+1+h}^-2, m)`.
pub fn upper_score(profile: &GapProfile) -> f64 {
    let (k, h, m, n) = (profile.k, profile.h, profile.m, profile.n());
    let boundary = profile.d(k + 1 + h);
    let d_k = profile.d(k);
    let mut score = 0.0;
    for i in 1..=k {
        score += capped_inv_sq(profile.d(i) - boundary, m);
    }
    for i in (k + 1 + h)..=n {
        score += capped_inv_sq(d_k - profile.d(i), m);
    }
    score += h as f64 * capped_inv_sq(d_k - boundary, m);
    score
}

/// Lower bound on expected sample complexity. `vacuous` is set when a
/// zero gap appears inside either sum, in which case the value is the
/// infinity sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    pub vacuous: bool,
}

/// `c' * (sum_{i<=k-h} D_{i,k+1+h}^-2 + sum_{i>=k+1+h} D_{k-h,i}^-2)` with
/// `c' = log(1/(2 delta)) * min_{l in {k-h, k+1+h}} d_l (1 - d_l)`.
///
/// Defined only for `h < k` and `delta` in `(0, 0.14]`.
pub fn lower_bound(profile: &GapProfile, delta: f64) -> Result<LowerBound> {
    if profile.h >= profile.k {
        return Err(Error::Domain(format!(
            "lower bound requires h < k (k={}, h={})",
            profile.k, profile.h
        )));
    }
    if !(delta > 0.0 && delta <= 0.14) {
        return Err(Error::Domain(format!(
            "lower bound requires delta in (0, 0.14], got {delta}"
        )));
    }
    let (k, h, n) = (profile.k, profile.h, profile.n());
    let d_lo = profile.d(k - h);
    let d_hi = profile.d(k + 1 + h);
    let variance = (d_lo * (1.0 - d_lo)).min(d_hi * (1.0 - d_hi));
    let c_prime = (1.0 / (2.0 * delta)).ln() * variance;

    let mut sum = 0.0;
    let mut vacuous = false;
    for i in 1..=(k - h) {
        let gap = (profile.d(i) - d_hi).abs();
        if gap == 0.0 {
            vacuous = true;
        } else {
            sum += 1.0 / (gap * gap);
        }
    }
    for i in (k + 1 + h)..=n {
        let gap = (d_lo - profile.d(i)).abs();
        if gap == 0.0 {
            vacuous = true;
        } else {
            sum += 1.0 / (gap * gap);
        }
    }
    if vacuous {
        return Ok(LowerBound {
            value: f64::INFINITY,
            vacuous: true,
        });
    }
    Ok(LowerBound {
        value: c_prime * sum,
        vacuous: false,
    })
}

/// Smallest integer `u >= 1` with `alpha(u) <= gap / 8`, or [`SAMPLE_CAP`]
/// if none exists below the cap.
///
/// The radius is not globally monotone for tiny `u`, so the search first
/// doubles until the radius has decreased three consecutive times while
/// below target, then binary-searches the final bracket.
pub fn min_samples_for_gap(gap: f64, spec: &ConfidenceSpec) -> Result<u64> {
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("gap must be positive, got {gap}")));
    }
    let target = gap / 8.0;
    if alpha_fn(1, spec) <= target {
        return Ok(1);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    let mut prev = alpha_fn(1, spec);
    let mut decreases = 0u32;
    loop {
        let a = alpha_fn(hi, spec);
        if a < prev {
            decreases += 1;
        } else {
            decreases = 0;
        }
        if a <= target && decreases >= 3 {
            break;
        }
        if hi >= SAMPLE_CAP {
            if a <= target {
                break;
            }
            return Ok(SAMPLE_CAP);
        }
        prev = a;
        lo = hi;
        hi = (hi * 2).min(SAMPLE_CAP);
    }
    // alpha is decreasing on [lo, hi]; find the first u with alpha <= target.
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if alpha_fn(mid, spec) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The per-arm gap `Delta_i` of the fixed-point analysis: distance to the
/// relevant side of the (k, k+1+h) boundary.
pub fn arm_gap(profile: &GapProfile, i: usize) -> f64 {
    let (k, h) = (profile.k, profile.h);
    let d_hi = profile.d(k + 1 + h);
    let d_k = profile.d(k);
    if i <= k {
        d_hi - profile.d(i)
    } else if i >= k + 1 + h {
        profile.d(i) - d_k
    } else {
        d_hi - d_k
    }
}

/// Closed-form cap on the fixed-point count: for `c2 = 128 / (1 - 2 /
/// log(1.12 * 32)) + 1`,
/// `T_bar <= (c2 / gap^2) * log(125 * (n / delta) * log(1.12 * 128 / gap^2))`.
pub fn fixed_point_cap(gap: f64, n: usize, delta: f64) -> f64 {
    let c2 = 128.0 / (1.0 - 2.0 / (1.12f64 * 32.0).ln()) + 1.0;
    let inner = 125.0 * (n as f64 / delta) * (1.12 * 128.0 / (gap * gap)).ln();
    c2 / (gap * gap) * inner.ln()
}

/// Combined evaluation of all complexity formulas on one gap profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub upper_score: f64,
    pub lower_bound: f64,
    pub lower_bound_vacuous: bool,
    pub per_arm_fixed_points: Vec<u64>,
    pub fact2_bound_ok: bool,
}

pub fn complexity_report(
    profile: &GapProfile,
    delta: f64,
    spec: &ConfidenceSpec,
) -> Result<ComplexityReport> {
    let upper = upper_score(profile);
    let lower = if profile.h < profile.k && delta > 0.0 && delta <= 0.14 {
        lower_bound(profile, delta)?
    } else {
        LowerBound {
            value: f64::NAN,
            vacuous: true,
        }
    };
    let n = profile.n();
    let mut per_arm = Vec::with_capacity(n);
    let mut cap_ok = true;
    for i in 1..=n {
        let gap = arm_gap(profile, i);
        if gap <= 0.0 {
            per_arm.push(SAMPLE_CAP);
            continue;
        }
        let t_bar = min_samples_for_gap(gap, spec)?;
        if t_bar != SAMPLE_CAP && (t_bar as f64) > fixed_point_cap(gap, spec.n, spec.delta) {
            cap_ok = false;
        }
        per_arm.push(t_bar);
    }
    Ok(ComplexityReport {
        upper_score: upper,
        lower_bound: lower.value,
        lower_bound_vacuous: lower.vacuous,
        per_arm_fixed_points: per_arm,
        fact2_bound_ok: cap_ok,
    })
}

/// Raw upper score at approximation `2h` next to the lower bound at `h`,
/// for inspecting how the two formulas relate. No pass/fail ratio is
/// asserted because the hidden constant is unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRelation {
    pub upper_at_2h: f64,
    pub lower_at_h: f64,
    pub lower_vacuous: bool,
}

pub fn bound_relation_check(profile: &GapProfile, delta: f64) -> Result<BoundRelation> {
    let doubled = GapProfile::new(
        profile.sorted_distances.clone(),
        profile.k,
        2 * profile.h,
        profile.m,
    )?;
    let upper = upper_score(&doubled);
    let lower = lower_bound(profile, delta)?;
    Ok(BoundRelation {
        upper_at_2h: upper,
        lower_at_h: lower.value,
        lower_vacuous: lower.vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::ConfidenceVariant;

    fn theory_spec(n: usize, delta: f64) -> ConfidenceSpec {
        ConfidenceSpec::new(ConfidenceVariant::Theory, delta, n, 1.0).unwrap()
    }

    #[test]
    fn upper_score_all_equal_caps_at_nm() {
        let p = GapProfile::new(vec![0.3; 10], 2, 3, 50).unwrap();
        assert_eq!(upper_score(&p), (10 * 50) as f64);
    }

    #[test]
    fn upper_score_hand_value() {
        let p = GapProfile::new(vec![0.1, 0.2, 0.5, 0.9], 1, 1, 1_000_000).unwrap();
        let got = upper_score(&p);
        assert!((got - 20.3125).abs() / 20.3125 < 1e-12, "got {got}");
    }

    #[test]
    fn upper_score_m_one_equals_n() {
        let p = GapProfile::new(vec![0.1, 0.2, 0.5, 0.9], 1, 1, 1).unwrap();
        assert_eq!(upper_score(&p), 4.0);
    }

    #[test]
    fn upper_score_never_exceeds_nm() {
        let p = GapProfile::new(vec![0.0, 0.0, 0.1, 0.1, 0.1, 0.4], 2, 1, 7).unwrap();
        assert!(upper_score(&p) <= (6 * 7) as f64);
    }

    #[test]
    fn lower_bound_hand_value() {
        let p = GapProfile::new(vec![0.2, 0.3, 0.4, 0.6], 2, 1, 100).unwrap();
        let got = lower_bound(&p, 0.1).unwrap();
        let expected = 0.16 * 5.0f64.ln() * 12.5;
        assert!(!got.vacuous);
        assert!((got.value - expected).abs() / expected < 1e-12, "got {got:?}");
    }

    #[test]
    fn lower_bound_zero_variance_endpoint() {
        let p = GapProfile::new(vec![0.0, 0.0, 0.0, 0.5], 2, 1, 100).unwrap();
        // d_{k-h} = d_1 = 0 -> variance factor 0 -> bound 0.
        let got = lower_bound(&p, 0.1).unwrap();
        assert!(!got.vacuous);
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn lower_bound_domain_errors() {
        let p = GapProfile::new(vec![0.1, 0.2, 0.3, 0.4, 0.5], 2, 2, 10).unwrap();
        assert!(lower_bound(&p, 0.1).is_err()); // h >= k
        let p = GapProfile::new(vec![0.1, 0.2, 0.3, 0.4, 0.5], 2, 1, 10).unwrap();
        assert!(lower_bound(&p, 0.2).is_err()); // delta > 0.14
    }

    #[test]
    fn lower_bound_gap_halving_quadruples_sum() {
        // Contract all distances halfway toward 0.5: every gap halves, so
        // the inverse-square sum (bound divided by c') quadruples.
        let delta = 0.1f64;
        let contract = |d: f64| 0.5 + (d - 0.5) / 2.0;
        let base_d = vec![0.1, 0.3, 0.4, 0.5, 0.9];
        let half_d: Vec<f64> = base_d.iter().map(|&d| contract(d)).collect();
        let base = GapProfile::new(base_d.clone(), 2, 1, 100).unwrap();
        let halved = GapProfile::new(half_d.clone(), 2, 1, 100).unwrap();
        let c_prime = |d: &[f64]| -> f64 {
            // k - h = 1, k + 1 + h = 4 (1-indexed).
            (1.0 / (2.0 * delta)).ln() * (d[0] * (1.0 - d[0])).min(d[3] * (1.0 - d[3]))
        };
        let sum0 = lower_bound(&base, delta).unwrap().value / c_prime(&base_d);
        let sum1 = lower_bound(&halved, delta).unwrap().value / c_prime(&half_d);
        assert!((sum1 / sum0 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_tied_instance_is_vacuous() {
        let p = GapProfile::new(vec![0.3; 6], 2, 1, 10).unwrap();
        let got = lower_bound(&p, 0.1).unwrap();
        assert!(got.vacuous);
        assert!(got.value.is_infinite());
    }

    #[test]
    fn min_samples_huge_gap_is_one() {
        // Experimental with tiny C_alpha gives alpha(1) < 2/8.
        let spec = ConfidenceSpec::new(ConfidenceVariant::Experimental, 0.5, 2, 1e-4).unwrap();
        assert!(alpha_fn(1, &spec) <= 0.25);
        assert_eq!(min_samples_for_gap(2.0, &spec).unwrap(), 1);
    }

    #[test]
    fn min_samples_monotone_in_gap() {
        let spec = theory_spec(1000, 0.001);
        let mut last = 0u64;
        let mut gap = 2.0;
        while gap > 1e-3 {
            let u = min_samples_for_gap(gap, &spec).unwrap();
            assert!(u >= last, "u({gap}) = {u} < previous {last}");
            last = u;
            gap *= 0.7;
        }
    }

    #[test]
    fn min_samples_definitional_sandwich() {
        let spec = theory_spec(1000, 0.001);
        for &gap in &[2.0, 1.0, 0.5, 0.1, 0.03, 0.01] {
            let u = min_samples_for_gap(gap, &spec).unwrap();
            assert!(alpha_fn(u, &spec) <= gap / 8.0);
            if u >= 2 {
                assert!(alpha_fn(u - 1, &spec) > gap / 8.0);
            }
        }
    }

    #[test]
    fn min_samples_rejects_nonpositive_gap() {
        let spec = theory_spec(100, 0.01);
        assert!(min_samples_for_gap(0.0, &spec).is_err());
        assert!(min_samples_for_gap(-0.2, &spec).is_err());
    }

    #[test]
    fn fixed_point_cap_holds_on_grid() {
        let n = 1000;
        let delta = 0.001;
        let spec = theory_spec(n, delta);
        for t in 0..50 {
            let gap = 0.01 * (200.0f64).powf(t as f64 / 49.0); // 0.01 .. 2.0
            let u = min_samples_for_gap(gap, &spec).unwrap();
            let cap = fixed_point_cap(gap, n, delta);
            assert!(
                (u as f64) <= cap,
                "gap {gap}: u = {u} exceeds cap {cap}"
            );
        }
    }

    #[test]
    fn bound_relation_finite_on_matched_instance() {
        // d_{k-h} = d_k so the matching regime applies.
        let p = GapProfile::new(vec![0.2, 0.2, 0.2, 0.5, 0.6, 0.7, 0.8], 3, 1, 100).unwrap();
        let r = bound_relation_check(&p, 0.1).unwrap();
        assert!(r.upper_at_2h.is_finite() && r.upper_at_2h >= 0.0);
        assert!(r.lower_at_h.is_finite() && r.lower_at_h >= 0.0);

        // Degenerate all-equal instance: upper caps at n*m, lower vacuous.
        let p = GapProfile::new(vec![0.3; 7], 3, 1, 100).unwrap();
        let r = bound_relation_check(&p, 0.1).unwrap();
        assert_eq!(r.upper_at_2h, 700.0);
        assert!(r.lower_vacuous);
    }

    #[test]
    fn complexity_report_end_to_end() {
        let spec = theory_spec(6, 0.01);
        let p = GapProfile::new(vec![0.1, 0.15, 0.2, 0.5, 0.6, 0.9], 2, 1, 64).unwrap();
        let r = complexity_report(&p, 0.01, &spec).unwrap();
        assert_eq!(r.per_arm_fixed_points.len(), 6);
        assert!(r.fact2_bound_ok);
        assert!(r.upper_score > 0.0);
        assert!(r.lower_bound >= 0.0);
    }
}
