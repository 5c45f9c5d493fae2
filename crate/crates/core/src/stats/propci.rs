use serde::{Deserialize, Serialize};

use super::special::normal_quantile;
use super::{CiRule, StatConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Difference of two proportions with an adjusted-Wald interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropDiffCI<S> {
    /// `|p̂_a − p̂_b|` on the raw sample proportions.
    pub p_diff: S,
    /// Signed adjusted difference `p̃_a − p̃_b` at the interval center.
    pub diff: S,
    pub lower: S,
    pub upper: S,
    pub significant: bool,
    pub rule: CiRule,
}

/// Adjusted-Wald (one added success and failure per sample) confidence
/// interval for `p_a − p_b` at level `1 − alpha`.
///
/// Significance follows `config.ci_rule`: [`CiRule::PDiff`] flags
/// `p_diff > alpha`; [`CiRule::Conventional`] flags an interval excluding 0.
pub fn prop_diff_ci<S: Scalar>(
    successes_a: u64,
    trials_a: u64,
    successes_b: u64,
    trials_b: u64,
    config: &StatConfig,
) -> Result<PropDiffCI<S>> {
    if trials_a == 0 || trials_b == 0 || successes_a > trials_a || successes_b > trials_b {
        return Err(Error::Domain(format!(
            "invalid counts {successes_a}/{trials_a} vs {successes_b}/{trials_b}"
        )));
    }
    config.validate()?;
    let s = |v: u64| S::lit(v as f64);
    let two = S::lit(2.0);
    let raw_a = s(successes_a) / s(trials_a);
    let raw_b = s(successes_b) / s(trials_b);
    let na = s(trials_a) + two;
    let nb = s(trials_b) + two;
    let pa = (s(successes_a) + S::one()) / na;
    let pb = (s(successes_b) + S::one()) / nb;
    let diff = pa - pb;
    let se = (pa * (S::one() - pa) / na + pb * (S::one() - pb) / nb).sqrt();
    let z = normal_quantile(S::one() - S::lit(config.alpha) / two)?;
    let lower = diff - z * se;
    let upper = diff + z * se;
    let p_diff = (raw_a - raw_b).abs();
    let significant = match config.ci_rule {
        CiRule::PDiff => p_diff > S::lit(config.alpha),
        CiRule::Conventional => lower > S::zero() || upper < S::zero(),
    };
    Ok(PropDiffCI {
        p_diff,
        diff,
        lower,
        upper,
        significant,
        rule: config.ci_rule,
    })
}
