//! Wilcoxon signed-rank test over paired differences. Exact enumeration
//! for small samples, normal approximation with tie and continuity
//! corrections otherwise.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest n_effective for which the exact null distribution is
/// enumerated. 2^25 sign assignments fit comfortably in the DP below.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W+, W-), the reported test statistic.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided p-value, the default reported everywhere.
    pub p_value: f64,
    pub p_one_sided: f64,
    /// Differences remaining after zeros are dropped.
    pub n_effective: usize,
    pub method: Method,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WilcoxonError {
    #[error("all differences are zero; the signed-rank test is undefined")]
    Degenerate,
}

/// Runs the test, choosing the exact method for n_effective <= 25 and the
/// normal approximation above that.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<WilcoxonResult, WilcoxonError> {
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let method = if nonzero.len() <= EXACT_LIMIT {
        Method::Exact
    } else {
        Method::NormalApprox
    };
    wilcoxon_with_method(differences, method)
}

/// Same test with the method pinned; exposed so the two p-value paths can
/// be compared on identical inputs.
pub fn wilcoxon_with_method(
    differences: &[f64],
    method: Method,
) -> Result<WilcoxonResult, WilcoxonError> {
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Err(WilcoxonError::Degenerate);
    }

    let ranks = average_ranks(&nonzero);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    let p_one_sided = match method {
        Method::Exact => exact_cdf(&ranks, w),
        Method::NormalApprox => {
            let mean = total / 2.0;
            let var = normal_variance(&nonzero);
            if var <= 0.0 {
                return Err(WilcoxonError::Degenerate);
            }
            // Continuity correction: W = min side never exceeds the mean,
            // so the half step always moves toward it.
            let z = (w - mean + 0.5) / var.sqrt();
            Normal::standard().cdf(z)
        }
    };
    // The null distribution is symmetric about its mean even under ties,
    // so the two-sided p is the doubled lower tail.
    let p_value = (2.0 * p_one_sided).min(1.0);

    Ok(WilcoxonResult {
        w,
        w_plus,
        w_minus,
        p_value,
        p_one_sided,
        n_effective: n,
        method,
    })
}

// Ranks of |d|, 1-based, tied values sharing the average of the ranks
// they span.
fn average_ranks(diffs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j (0-based) share ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

// P(S <= w) where S is the rank sum of one sign under the null. Ranks are
// doubled to integers (ties give half-integer average ranks), then a DP
// counts assignments per achievable doubled sum.
fn exact_cdf(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let threshold = (2.0 * w).round() as usize;
    let tail: u64 = counts[..=threshold.min(total)].iter().sum();
    tail as f64 / (1u64 << ranks.len()) as f64
}

// n(n+1)(2n+1)/24 minus the tie correction sum(t^3 - t)/48 over groups of
// tied absolute differences.
fn normal_variance(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let mut abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < abs.len() {
        let mut j = i;
        while j + 1 < abs.len() && abs[j + 1] == abs[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0
}
