use serde::{Deserialize, Serialize};

use super::anova::{anova_oneway, check_groups};
use super::studentized::{studentized_range_cdf, studentized_range_quantile};
use super::StatConfig;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair<S> {
    /// Group indices with `i < j`.
    pub i: usize,
    pub j: usize,
    pub mean_diff: S,
    pub q: S,
    pub p_value: S,
    /// Significant at the configured alpha.
    pub significant: bool,
    pub significant_05: bool,
    pub significant_01: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult<S> {
    pub k: usize,
    pub df_within: usize,
    pub ms_within: S,
    pub alpha: S,
    pub q_critical: S,
    pub q_critical_05: S,
    pub q_critical_01: S,
    pub pairs: Vec<TukeyPair<S>>,
}

impl<S: Scalar> TukeyResult<S> {
    pub fn pair(&self, i: usize, j: usize) -> Option<&TukeyPair<S>> {
        let (i, j) = (i.min(j), i.max(j));
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

/// Tukey's honest significant difference over all group pairs. Unequal group
/// sizes use the Tukey–Kramer standard error.
pub fn tukey_hsd<S: Scalar, G: AsRef<[S]>>(
    groups: &[G],
    config: &StatConfig,
) -> Result<TukeyResult<S>> {
    check_groups(groups)?;
    let anova = anova_oneway(groups)?;
    let k = groups.len();
    let df = S::from_usize_lossy(anova.df_within);
    let alpha = S::lit(config.alpha);
    let q_critical = studentized_range_quantile(alpha, k, df)?;
    let at = |level: f64| {
        if config.alpha == level {
            Ok(q_critical)
        } else {
            studentized_range_quantile(S::lit(level), k, df)
        }
    };
    let q_critical_05 = at(0.05)?;
    let q_critical_01 = at(0.01)?;
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = anova.group_means[i] - anova.group_means[j];
            let inv_n = S::one() / S::from_usize_lossy(anova.group_sizes[i])
                + S::one() / S::from_usize_lossy(anova.group_sizes[j]);
            let se = (anova.ms_within * S::lit(0.5) * inv_n).sqrt();
            let q = if diff == S::zero() {
                S::zero()
            } else {
                diff.abs() / se
            };
            let p_value = if q.is_infinite() {
                S::zero()
            } else {
                (S::one() - studentized_range_cdf(q, k, df)?).max(S::zero())
            };
            pairs.push(TukeyPair {
                i,
                j,
                mean_diff: diff,
                q,
                p_value,
                significant: q > q_critical,
                significant_05: q > q_critical_05,
                significant_01: q > q_critical_01,
            });
        }
    }
    Ok(TukeyResult {
        k,
        df_within: anova.df_within,
        ms_within: anova.ms_within,
        alpha,
        q_critical,
        q_critical_05,
        q_critical_01,
        pairs,
    })
}
