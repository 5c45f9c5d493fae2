use serde::{Deserialize, Serialize};

use super::fdist::f_sf;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult<S> {
    pub f: S,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: S,
    pub eta_squared: S,
    pub ss_between: S,
    pub ss_within: S,
    pub ss_total: S,
    pub ms_between: S,
    pub ms_within: S,
    pub group_means: Vec<S>,
    pub group_sizes: Vec<usize>,
}

fn mean<S: Scalar>(xs: &[S]) -> S {
    xs.iter().copied().sum::<S>() / S::from_usize_lossy(xs.len())
}

/// Validates group shapes shared by ANOVA and Tukey: at least two groups of
/// at least two values each.
pub(crate) fn check_groups<S: Scalar, G: AsRef<[S]>>(groups: &[G]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some((i, g)) = groups
        .iter()
        .enumerate()
        .find(|(_, g)| g.as_ref().len() < 2)
    {
        return Err(Error::Domain(format!(
            "group {i} has {} value(s); each group needs at least 2",
            g.as_ref().len()
        )));
    }
    if groups
        .iter()
        .flat_map(|g| g.as_ref().iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::Domain("non-finite value in groups".into()));
    }
    Ok(())
}

/// One-way analysis of variance with the `η²` effect size.
///
/// When every group has zero spread the F statistic is 0 for equal means and
/// infinite otherwise.
pub fn anova_oneway<S: Scalar, G: AsRef<[S]>>(groups: &[G]) -> Result<AnovaResult<S>> {
    check_groups(groups)?;
    let all: Vec<S> = groups
        .iter()
        .flat_map(|g| g.as_ref().iter().copied())
        .collect();
    let n = all.len();
    let k = groups.len();
    let grand = mean(&all);
    let group_means: Vec<S> = groups.iter().map(|g| mean(g.as_ref())).collect();
    let ss_total: S = all.iter().map(|&x| (x - grand) * (x - grand)).sum();
    let ss_between: S = groups
        .iter()
        .zip(&group_means)
        .map(|(g, &m)| S::from_usize_lossy(g.as_ref().len()) * (m - grand) * (m - grand))
        .sum();
    let ss_within: S = groups
        .iter()
        .zip(&group_means)
        .map(|(g, &m)| g.as_ref().iter().map(|&x| (x - m) * (x - m)).sum::<S>())
        .sum();
    let df_between = k - 1;
    let df_within = n - k;
    let ms_between = ss_between / S::from_usize_lossy(df_between);
    let ms_within = ss_within / S::from_usize_lossy(df_within);
    let (f, p_value) = if ss_within == S::zero() {
        if ss_between == S::zero() {
            (S::zero(), S::one())
        } else {
            (S::infinity(), S::zero())
        }
    } else {
        let f = ms_between / ms_within;
        let p = f_sf(
            f,
            S::from_usize_lossy(df_between),
            S::from_usize_lossy(df_within),
        )?;
        (f, p)
    };
    let eta_squared = if ss_total == S::zero() {
        S::zero()
    } else {
        ss_between / ss_total
    };
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p_value,
        eta_squared,
        ss_between,
        ss_within,
        ss_total,
        ms_between,
        ms_within,
        group_means,
        group_sizes: groups.iter().map(|g| g.as_ref().len()).collect(),
    })
}
