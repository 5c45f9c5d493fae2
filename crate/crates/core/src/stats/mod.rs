//! Statistical tests used by the reports.

pub mod anova;
pub mod fdist;
pub mod propci;
pub mod rank;
pub mod special;
pub mod studentized;
pub mod tukey;
pub mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use anova::{anova_oneway, AnovaResult};
pub use fdist::{f_cdf, f_critical, f_sf};
pub use propci::{prop_diff_ci, PropDiffCI};
pub use rank::{average_ranks, pearson, spearman};
pub use studentized::{studentized_range_cdf, studentized_range_quantile};
pub use tukey::{tukey_hsd, TukeyPair, TukeyResult};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, ExactP, WilcoxonMethod, WilcoxonResult,
};

/// How a proportion-difference interval is turned into a significance flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiRule {
    /// Significant when the raw difference exceeds alpha.
    #[default]
    PDiff,
    /// Significant when the interval excludes zero.
    Conventional,
}

impl std::str::FromStr for CiRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_diff" | "pdiff" => Ok(Self::PDiff),
            "conventional" => Ok(Self::Conventional),
            other => Err(Error::Config(format!("unknown ci rule '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatConfig {
    pub alpha: f64,
    pub ci_rule: CiRule,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            ci_rule: CiRule::PDiff,
        }
    }
}

impl StatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}
