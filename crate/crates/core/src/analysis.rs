//! The `analyze` report: corpus analytics plus the statistical battery over
//! filter rates.
//!
//! * `anova` and `tukey` compare intensity levels, each level's sample being
//!   the per-category filter rates at that level.
//! * `wilcoxon` compares adjacent intensity levels, paired by user (each
//!   user's filter rate at both levels).
//! * `proportion_cis` compares every category pair within each intensity
//!   level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::report::{filter_counts_by_category_intensity, CorpusReport, FilterCounts};
use crate::corpus::{Category, Intensity, SurveySet};
use crate::error::Result;
use crate::stats::{
    anova_oneway, prop_diff_ci, tukey_hsd, wilcoxon_signed_rank, AnovaResult, PropDiffCI,
    TukeyResult, WilcoxonResult,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaSection {
    /// Intensity level of each group, in group order.
    pub levels: Vec<u8>,
    #[serde(flatten)]
    pub result: AnovaResult<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeySection {
    pub levels: Vec<u8>,
    #[serde(flatten)]
    pub result: TukeyResult<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonSection {
    pub first_level: u8,
    pub second_level: u8,
    /// Users with responses at both levels.
    pub n_users: usize,
    #[serde(flatten)]
    pub result: WilcoxonResult<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionRow {
    pub intensity: u8,
    pub category_a: Category,
    pub category_b: Category,
    pub filtered_a: usize,
    pub total_a: usize,
    pub filtered_b: usize,
    pub total_b: usize,
    #[serde(flatten)]
    pub ci: PropDiffCI<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: RunConfig,
    #[serde(flatten)]
    pub corpus: CorpusReport,
    pub anova: Option<AnovaSection>,
    pub tukey: Option<TukeySection>,
    pub wilcoxon: Vec<WilcoxonSection>,
    pub proportion_cis: Vec<ProportionRow>,
    /// Why a section is empty or partial.
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-category filter rates grouped by intensity level. Levels with fewer
/// than two categories are left out.
pub fn rate_groups(survey: &SurveySet) -> (Vec<u8>, Vec<Vec<f64>>) {
    let cells = filter_counts_by_category_intensity(survey);
    Intensity::all()
        .filter_map(|level| {
            let rates: Vec<f64> = cells
                .values()
                .filter_map(|row| row.get(&level))
                .map(FilterCounts::rate)
                .collect();
            (rates.len() >= 2).then_some((level.level(), rates))
        })
        .unzip()
}

fn user_level_rates(survey: &SurveySet) -> BTreeMap<&str, BTreeMap<u8, FilterCounts>> {
    let mut by_user: BTreeMap<&str, BTreeMap<u8, FilterCounts>> = BTreeMap::new();
    for r in survey.responses() {
        if survey.response_category(r).is_some() {
            by_user
                .entry(r.user_id.as_str())
                .or_default()
                .entry(r.intensity.level())
                .or_default()
                .add(r.filter);
        }
    }
    by_user
}

pub fn analyze(survey: &SurveySet, config: &RunConfig) -> Result<AnalysisReport> {
    config.stats.validate()?;
    let mut notes = Vec::new();

    let (levels, groups) = rate_groups(survey);
    let (anova, tukey) = if groups.len() >= 2 {
        let a = anova_oneway(&groups)?;
        let t = tukey_hsd(&groups, &config.stats)?;
        (
            Some(AnovaSection {
                levels: levels.clone(),
                result: a,
            }),
            Some(TukeySection { levels, result: t }),
        )
    } else {
        notes.push(format!(
            "anova/tukey: need two intensity levels with at least two category rates, found {}",
            groups.len()
        ));
        (None, None)
    };

    let by_user = user_level_rates(survey);
    let mut wilcoxon = Vec::new();
    for lo in Intensity::MIN..Intensity::MAX {
        let hi = lo + 1;
        let (a, b): (Vec<f64>, Vec<f64>) = by_user
            .values()
            .filter_map(|m| Some((m.get(&lo)?.rate(), m.get(&hi)?.rate())))
            .unzip();
        if a.is_empty() {
            notes.push(format!("wilcoxon {lo} vs {hi}: no user rated both levels"));
            continue;
        }
        wilcoxon.push(WilcoxonSection {
            first_level: lo,
            second_level: hi,
            n_users: a.len(),
            result: wilcoxon_signed_rank(&a, &b)?,
        });
    }

    let cells = filter_counts_by_category_intensity(survey);
    let mut proportion_cis = Vec::new();
    for level in Intensity::all() {
        let present: Vec<(Category, FilterCounts)> = cells
            .iter()
            .filter_map(|(&c, row)| row.get(&level).map(|&n| (c, n)))
            .collect();
        for (i, &(ca, na)) in present.iter().enumerate() {
            for &(cb, nb) in &present[i + 1..] {
                proportion_cis.push(ProportionRow {
                    intensity: level.level(),
                    category_a: ca,
                    category_b: cb,
                    filtered_a: na.filtered,
                    total_a: na.total,
                    filtered_b: nb.filtered,
                    total_b: nb.total,
                    ci: prop_diff_ci(
                        na.filtered as u64,
                        na.total as u64,
                        nb.filtered as u64,
                        nb.total as u64,
                        &config.stats,
                    )?,
                });
            }
        }
    }

    Ok(AnalysisReport {
        config: config.clone(),
        corpus: CorpusReport::build(survey),
        anova,
        tukey,
        wilcoxon,
        proportion_cis,
        notes,
    })
}
