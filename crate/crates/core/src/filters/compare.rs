use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    agreement, cross_validate, general_predictions, majority_baseline, train_general_with,
    usable_responses, AnalyzedCorpus, DEFAULT_FOLDS,
};
use crate::corpus::SurveySet;
use crate::error::Result;
use crate::learners::{LearnerConfig, LearnerKind};
use crate::stats::{spearman, wilcoxon_signed_rank, WilcoxonResult};
use crate::textfeat::FeatureConfig;

/// Everything that determines an evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub folds: usize,
    pub general_learner: LearnerKind,
    pub learners: Vec<LearnerKind>,
    pub features: FeatureConfig,
    pub learner: LearnerConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            folds: DEFAULT_FOLDS,
            general_learner: LearnerKind::Nb,
            learners: LearnerKind::ALL.to_vec(),
            features: FeatureConfig::default(),
            learner: LearnerConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    Majority,
    General,
    User(LearnerKind),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Majority => f.write_str("majority"),
            Regime::General => f.write_str("general"),
            Regime::User(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserEval {
    pub user_id: String,
    pub n_responses: usize,
    pub n_filtered: usize,
    pub accuracy_general: f64,
    /// Cross-validated accuracy of each user-adapted learner.
    pub accuracy_user: BTreeMap<LearnerKind, f64>,
    pub accuracy_majority: f64,
}

impl UserEval {
    pub fn accuracy(&self, regime: Regime) -> Option<f64> {
        match regime {
            Regime::Majority => Some(self.accuracy_majority),
            Regime::General => Some(self.accuracy_general),
            Regime::User(k) => self.accuracy_user.get(&k).copied(),
        }
    }

    /// `|filter rate − 0.5|`, computed on integers so equal rates compare equal.
    pub fn filter_rate_distance(&self) -> f64 {
        let n = self.n_responses as i64;
        (2 * self.n_filtered as i64 - n).unsigned_abs() as f64 / (2 * n) as f64
    }
}

/// Paired comparison of two regimes over all evaluated users. Wins are
/// counted from the first regime's side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub first: String,
    pub second: String,
    pub win: usize,
    pub lose: usize,
    pub tie: usize,
    pub mean_first: f64,
    pub mean_second: f64,
    pub wilcoxon: WilcoxonResult<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub user_id: String,
    pub reason: String,
}

/// Spearman correlation of `|filter rate − 0.5|` with each regime's
/// accuracy; `None` when either side is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VShape {
    pub majority: Option<f64>,
    pub general: Option<f64>,
    pub user: BTreeMap<LearnerKind, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub general_training_messages: usize,
    /// Sorted by `n_filtered`, then user id.
    pub users: Vec<UserEval>,
    pub mean_accuracy: BTreeMap<String, f64>,
    pub comparisons: Vec<RegimeComparison>,
    pub v_shape: VShape,
    pub excluded: Vec<Exclusion>,
}

impl EvalReport {
    pub fn regimes(&self) -> Vec<Regime> {
        let mut r = vec![Regime::Majority, Regime::General];
        r.extend(self.config.learners.iter().map(|&k| Regime::User(k)));
        r
    }

    pub fn comparison(&self, first: Regime, second: Regime) -> Option<&RegimeComparison> {
        let (a, b) = (first.to_string(), second.to_string());
        self.comparisons
            .iter()
            .find(|c| c.first == a && c.second == b)
    }

    pub fn accuracies(&self, regime: Regime) -> Vec<f64> {
        self.users
            .iter()
            .filter_map(|u| u.accuracy(regime))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Win/lose/tie counts of `a` against `b`, compared exactly.
pub fn win_lose_tie(a: &[f64], b: &[f64]) -> (usize, usize, usize) {
    a.iter().zip(b).fold((0, 0, 0), |(w, l, t), (x, y)| {
        if x > y {
            (w + 1, l, t)
        } else if x < y {
            (w, l + 1, t)
        } else {
            (w, l, t + 1)
        }
    })
}

/// Per-user seed: the run seed mixed with an FNV-1a hash of the user id, so a
/// user's result does not depend on who else is in the survey.
pub fn user_seed(seed: u64, user_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in user_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn v_shape(users: &[UserEval], learners: &[LearnerKind]) -> VShape {
    let distance: Vec<f64> = users.iter().map(UserEval::filter_rate_distance).collect();
    let corr = |regime| {
        let acc: Vec<f64> = users.iter().filter_map(|u| u.accuracy(regime)).collect();
        if acc.len() == distance.len() {
            spearman(&distance, &acc)
        } else {
            None
        }
    };
    VShape {
        majority: corr(Regime::Majority),
        general: corr(Regime::General),
        user: learners
            .iter()
            .map(|&k| (k, corr(Regime::User(k))))
            .collect(),
    }
}

pub fn compare_regimes(survey: &SurveySet, config: &EvalConfig) -> Result<EvalReport> {
    let corpus = AnalyzedCorpus::new(survey, &config.features);
    compare_regimes_with(survey, &corpus, config)
}

/// Evaluates the general filter, each user-adapted learner and the majority
/// baseline for every user with at least two codable responses.
pub fn compare_regimes_with(
    survey: &SurveySet,
    corpus: &AnalyzedCorpus,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let general = train_general_with(
        survey,
        corpus,
        config.general_learner,
        config.seed,
        &config.features,
        &config.learner,
    )?;
    let predictions = general_predictions(&general, corpus, survey.messages().len());

    let mut excluded = Vec::new();
    let mut eligible = Vec::new();
    for user in survey.user_ids() {
        let items = usable_responses(survey, user);
        if items.len() < 2 {
            excluded.push(Exclusion {
                user_id: user.to_string(),
                reason: format!("{} codable responses (need 2)", items.len()),
            });
        } else {
            eligible.push((user.to_string(), items));
        }
    }

    let users: Vec<UserEval> = eligible
        .par_iter()
        .map(|(user, items)| -> Result<UserEval> {
            let labels: Vec<bool> = items.iter().map(|&(_, y)| y).collect();
            let docs: Vec<&[String]> = items.iter().map(|&(i, _)| corpus.tokens(i)).collect();
            let seed = user_seed(config.seed, user);
            let mut accuracy_user = BTreeMap::new();
            for &kind in &config.learners {
                let cv = cross_validate(
                    &docs,
                    &labels,
                    kind,
                    config.folds,
                    seed,
                    &config.features,
                    &config.learner,
                )?;
                accuracy_user.insert(kind, cv.mean_accuracy);
            }
            Ok(UserEval {
                user_id: user.clone(),
                n_responses: items.len(),
                n_filtered: labels.iter().filter(|&&y| y).count(),
                accuracy_general: agreement(items, &predictions).unwrap_or(0.0),
                accuracy_user,
                accuracy_majority: majority_baseline(&labels)?.accuracy,
            })
        })
        .collect::<Result<_>>()?;
    let mut users = users;
    users.sort_by(|a, b| {
        a.n_filtered
            .cmp(&b.n_filtered)
            .then_with(|| a.user_id.cmp(&b.user_id))
    });

    let mut report = EvalReport {
        config: config.clone(),
        general_training_messages: general.training_messages,
        v_shape: v_shape(&users, &config.learners),
        users,
        mean_accuracy: BTreeMap::new(),
        comparisons: Vec::new(),
        excluded,
    };
    let regimes = report.regimes();
    for &r in &regimes {
        let acc = report.accuracies(r);
        if !acc.is_empty() {
            report
                .mean_accuracy
                .insert(r.to_string(), acc.iter().sum::<f64>() / acc.len() as f64);
        }
    }
    if !report.users.is_empty() {
        for (i, &a) in regimes.iter().enumerate() {
            for &b in &regimes[i + 1..] {
                let (xa, xb) = (report.accuracies(a), report.accuracies(b));
                let (win, lose, tie) = win_lose_tie(&xa, &xb);
                report.comparisons.push(RegimeComparison {
                    first: a.to_string(),
                    second: b.to_string(),
                    win,
                    lose,
                    tie,
                    mean_first: report.mean_accuracy[&a.to_string()],
                    mean_second: report.mean_accuracy[&b.to_string()],
                    wilcoxon: wilcoxon_signed_rank(&xa, &xb)?,
                });
            }
        }
    }
    Ok(report)
}

/// Per-user rows as CSV. Learners that were not evaluated leave their
/// column empty.
pub fn write_rows_csv(report: &EvalReport, w: impl Write) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let io = |e: csv::Error| crate::Error::Io {
        path: "<csv>".into(),
        source: e.into(),
    };
    out.write_record([
        "user_id",
        "n_filtered",
        "acc_general",
        "acc_nb",
        "acc_svm",
        "acc_rf",
        "acc_majority",
    ])
    .map_err(io)?;
    for u in &report.users {
        let learner = |k| {
            u.accuracy_user
                .get(&k)
                .map(f64::to_string)
                .unwrap_or_default()
        };
        out.write_record([
            u.user_id.clone(),
            u.n_filtered.to_string(),
            u.accuracy_general.to_string(),
            learner(LearnerKind::Nb),
            learner(LearnerKind::Svm),
            learner(LearnerKind::Rf),
            u.accuracy_majority.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| crate::Error::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::voted;
    use super::*;
    use crate::stats::WilcoxonMethod;

    #[test]
    fn five_user_hand_fixture() {
        let a = [0.9, 0.5, 0.2, 0.7, 0.3];
        let b = [0.8, 0.5, 0.4, 0.6, 0.3];
        assert_eq!(win_lose_tie(&a, &b), (2, 1, 2));
    }

    #[test]
    fn self_comparison_is_all_ties() {
        let a = [0.9, 0.5, 0.2];
        assert_eq!(win_lose_tie(&a, &a), (0, 0, 3));
        let w = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(w.method, WilcoxonMethod::NoTest);
    }

    #[test]
    fn seeds_depend_on_user_and_run() {
        assert_ne!(user_seed(1, "a"), user_seed(1, "b"));
        assert_ne!(user_seed(1, "a"), user_seed(2, "a"));
        assert_eq!(user_seed(7, "x"), user_seed(7, "x"));
    }

    fn small_survey() -> SurveySet {
        let texts: Vec<String> = (0..12)
            .map(|i| {
                if i % 2 == 0 {
                    format!("awful insult t{i}")
                } else {
                    format!("sunny picnic t{i}")
                }
            })
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        // u0 filters the insults, u1 filters everything, u2..u4 follow u0
        let votes: Vec<Vec<bool>> = (0..12)
            .map(|i| vec![i % 2 == 0, true, i % 2 == 0, i % 2 == 0, i % 3 == 0])
            .collect();
        let vr: Vec<&[bool]> = votes.iter().map(Vec::as_slice).collect();
        voted(&refs, &vr)
    }

    #[test]
    fn report_shape_and_determinism() {
        let s = small_survey();
        let cfg = EvalConfig {
            seed: 4,
            folds: 3,
            ..EvalConfig::default()
        };
        let r = compare_regimes(&s, &cfg).unwrap();
        assert_eq!(r.users.len(), 5);
        assert!(r
            .users
            .windows(2)
            .all(|w| w[0].n_filtered <= w[1].n_filtered));
        // 5 regimes → 10 pairs, each accounting for every user
        assert_eq!(r.comparisons.len(), 10);
        for c in &r.comparisons {
            assert_eq!(c.win + c.lose + c.tie, 5);
        }
        let u1 = r.users.iter().find(|u| u.user_id == "u1").unwrap();
        assert_eq!(u1.accuracy_majority, 1.0);
        assert!(u1.accuracy_user.values().all(|&a| a == 1.0));
        assert_eq!(r.v_shape.majority, Some(1.0));
        assert_eq!(
            r.to_json().unwrap(),
            compare_regimes(&s, &cfg).unwrap().to_json().unwrap()
        );

        let mut csv = Vec::new();
        write_rows_csv(&r, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(
            text.starts_with("user_id,n_filtered,acc_general,acc_nb,acc_svm,acc_rf,acc_majority\n")
        );
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn users_with_one_response_are_excluded() {
        let mut votes: Vec<Vec<bool>> = vec![vec![true; 5]; 3];
        votes.push(vec![true; 6]);
        let vr: Vec<&[bool]> = votes.iter().map(Vec::as_slice).collect();
        let s = voted(&["a b", "c d", "e f", "g h"], &vr);
        let r = compare_regimes(&s, &EvalConfig::default()).unwrap();
        assert_eq!(r.excluded.len(), 1);
        assert_eq!(r.excluded[0].user_id, "u5");
        assert_eq!(r.users.len(), 5);
    }
}
