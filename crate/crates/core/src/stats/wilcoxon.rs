use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::special::normal_sf;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest effective sample size for which the exact null distribution is used
/// by default.
pub const EXACT_MAX_N: usize = 25;
/// Hard limit for the exact route: the sign-assignment count must fit in `u64`.
const EXACT_LIMIT: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    /// Every paired difference was zero.
    NoTest,
}

/// Exact two-sided p-value as a count of sign assignments at least as extreme
/// as the observed one, out of `2^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactP {
    pub extreme: u64,
    pub total: u64,
}

impl ExactP {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.extreme, self.total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult<S> {
    pub n_effective: usize,
    /// Sum of signed ranks.
    pub w: S,
    pub t_plus: S,
    pub t_minus: S,
    pub p_value: S,
    pub method: WilcoxonMethod,
    pub exact: Option<ExactP>,
    pub z: Option<S>,
}

/// Mid-ranks of `|d|` doubled so that tied ranks stay integral.
pub(crate) fn doubled_abs_ranks<S: Scalar>(diffs: &[S]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp_scalar(&diffs[b].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // positions start+1 ..= end share the average rank (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = doubled;
        }
        start = end;
    }
    ranks
}

trait TotalCmp {
    fn total_cmp_scalar(&self, other: &Self) -> std::cmp::Ordering;
}

impl<S: Scalar> TotalCmp for S {
    fn total_cmp_scalar(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Number of sign assignments for which `|sum of signed doubled ranks|` is at
/// least `observed_abs`.
fn exact_tail(doubled_ranks: &[u64], observed_abs: u64) -> ExactP {
    let total_sum: u64 = doubled_ranks.iter().sum();
    // counts[v] = assignments whose positive doubled ranks sum to v
    let mut counts = vec![0u64; total_sum as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for v in (0..=reach).rev() {
            if counts[v] != 0 {
                counts[v + r] += counts[v];
            }
        }
        reach += r;
    }
    let extreme = counts
        .iter()
        .enumerate()
        .filter(|&(v, _)| (2 * v as i64 - total_sum as i64).unsigned_abs() >= observed_abs)
        .map(|(_, &c)| c)
        .sum();
    ExactP {
        extreme,
        total: 1u64 << doubled_ranks.len(),
    }
}

/// Two-sided Wilcoxon signed-rank test on paired samples, using the exact
/// null distribution up to [`EXACT_MAX_N`] nonzero differences.
pub fn wilcoxon_signed_rank<S: Scalar>(a: &[S], b: &[S]) -> Result<WilcoxonResult<S>> {
    wilcoxon_signed_rank_with(a, b, EXACT_MAX_N)
}

/// As [`wilcoxon_signed_rank`] with an explicit exact-route cutoff.
pub fn wilcoxon_signed_rank_with<S: Scalar>(
    a: &[S],
    b: &[S],
    exact_max_n: usize,
) -> Result<WilcoxonResult<S>> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Domain("paired samples are empty".into()));
    }
    let diffs: Vec<S> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x - y)
        .filter(|d| *d != S::zero())
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("non-finite paired difference".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n_effective: 0,
            w: S::zero(),
            t_plus: S::zero(),
            t_minus: S::zero(),
            p_value: S::one(),
            method: WilcoxonMethod::NoTest,
            exact: None,
            z: None,
        });
    }
    let ranks = doubled_abs_ranks(&diffs);
    let plus2: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > S::zero())
        .map(|(_, &r)| r)
        .sum();
    let total2: u64 = ranks.iter().sum();
    let minus2 = total2 - plus2;
    let w2 = plus2 as i64 - minus2 as i64;
    let half = S::lit(0.5);
    let t_plus = S::lit(plus2 as f64) * half;
    let t_minus = S::lit(minus2 as f64) * half;
    let w = S::lit(w2 as f64) * half;

    if n <= exact_max_n.min(EXACT_LIMIT) {
        let exact = exact_tail(&ranks, w2.unsigned_abs());
        let p = S::lit(exact.extreme as f64) / S::lit(exact.total as f64);
        return Ok(WilcoxonResult {
            n_effective: n,
            w,
            t_plus,
            t_minus,
            p_value: p.min(S::one()),
            method: WilcoxonMethod::Exact,
            exact: Some(exact),
            z: None,
        });
    }
    // Var(W) = sum of squared mid-ranks, which already carries the tie correction
    let var: S = ranks
        .iter()
        .map(|&r| {
            let r = S::lit(r as f64) * half;
            r * r
        })
        .sum();
    let z = ((w.abs() - S::one()).max(S::zero())) / var.sqrt();
    let p = (S::lit(2.0) * normal_sf(z)).min(S::one());
    Ok(WilcoxonResult {
        n_effective: n,
        w,
        t_plus,
        t_minus,
        p_value: p,
        method: WilcoxonMethod::NormalApprox,
        exact: None,
        z: Some(z),
    })
}
