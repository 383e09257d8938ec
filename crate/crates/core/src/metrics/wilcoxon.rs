use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::rank::average_ranks;
use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_LIMIT: usize = 25;

/// Minimum number of pairs accepted by the test.
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_LIMIT`] non-zero differences, normal otherwise.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonDecision {
    /// Every difference is zero.
    NoDecision,
    NotSignificant,
    Significant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonReport {
    /// Pairs with a non-zero difference.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// min(W+, W-).
    pub statistic: f64,
    /// Two-sided p-value; `None` without a decision.
    pub p_value: Option<f64>,
    /// One-sided p-value for x > y.
    pub p_greater: Option<f64>,
    /// One-sided p-value for x < y.
    pub p_less: Option<f64>,
    /// Method actually used; `None` without a decision.
    pub method: Option<WilcoxonMethod>,
    pub alpha: f64,
    pub decision: WilcoxonDecision,
}

/// Paired two-sided signed-rank test of `x - y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alpha: f64) -> Result<WilcoxonReport> {
    wilcoxon_signed_rank_with(x, y, alpha, WilcoxonMethod::Auto)
}

pub fn wilcoxon_signed_rank_with(
    x: &[f64],
    y: &[f64],
    alpha: f64,
    method: WilcoxonMethod,
) -> Result<WilcoxonReport> {
    if x.len() != y.len() || x.len() < MIN_PAIRS {
        return Err(Error::contract(format!(
            "signed-rank test needs two equal-length samples of at least {MIN_PAIRS} (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::contract("signed-rank test samples must be finite"));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonReport {
            n,
            w_plus: 0.0,
            w_minus: 0.0,
            statistic: 0.0,
            p_value: None,
            p_greater: None,
            p_less: None,
            method: None,
            alpha,
            decision: WilcoxonDecision::NoDecision,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let method = match method {
        WilcoxonMethod::Auto if n <= EXACT_LIMIT => WilcoxonMethod::Exact,
        WilcoxonMethod::Auto => WilcoxonMethod::Normal,
        m => m,
    };
    let (p_greater, p_less) = match method {
        WilcoxonMethod::Exact => exact_tails(&ranks, w_plus),
        _ => normal_tails(&ranks, w_plus),
    };
    let p_value = (2.0 * p_greater.min(p_less)).min(1.0);
    Ok(WilcoxonReport {
        n,
        w_plus,
        w_minus,
        statistic: w_plus.min(w_minus),
        p_value: Some(p_value),
        p_greater: Some(p_greater),
        p_less: Some(p_less),
        method: Some(method),
        alpha,
        decision: if p_value < alpha {
            WilcoxonDecision::Significant
        } else {
            WilcoxonDecision::NotSignificant
        },
    })
}

/// P(W+ >= observed) and P(W+ <= observed) under the null, enumerating all
/// sign assignments of the (possibly tied) ranks. Ranks are doubled so that
/// average ranks are integers.
fn exact_tails(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    // counts[s]: number of sign vectors with doubled W+ = s (as f64 to avoid
    // overflow for n up to the exact limit and beyond)
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let observed = (w_plus * 2.0).round() as usize;
    let upper: f64 = counts[observed..].iter().sum();
    let lower: f64 = counts[..=observed].iter().sum();
    (upper / all, lower / all)
}

/// Normal approximation with tie and continuity corrections.
fn normal_tails(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return (1.0, 1.0);
    }
    let sd = variance.sqrt();
    let z = Normal::standard();
    let p_greater = z.sf((w_plus - mean - 0.5) / sd);
    let p_less = z.cdf((w_plus - mean + 0.5) / sd);
    (p_greater.min(1.0), p_less.min(1.0))
}
