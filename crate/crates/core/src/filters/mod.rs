//! The three filtering regimes: a population-wide general filter, per-user
//! adapted filters, and the per-user majority baseline.

mod compare;
mod cv;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SurveySet;
use crate::error::{Error, Result};
use crate::learners::{
    fit, BinaryClassifier, ClassifierModel, LearnerConfig, LearnerKind, SparseVec, TrainingSet,
};
use crate::textfeat::{build_vocabulary, vectorize, FeatureConfig, FeatureMode, Vocabulary};

pub use compare::{
    compare_regimes, compare_regimes_with, user_seed, v_shape, win_lose_tie, write_rows_csv,
    EvalConfig, EvalReport, Exclusion, Regime, RegimeComparison, UserEval, VShape,
};
pub use cv::{cross_validate, cross_validate_user, fold_assignment, CvResult, FoldPlan};

pub const DEFAULT_FOLDS: usize = 10;

/// Token lists for every message of a survey, analyzed once.
#[derive(Clone, Debug)]
pub struct AnalyzedCorpus {
    tokens: Vec<Vec<String>>,
}

impl AnalyzedCorpus {
    pub fn new(survey: &SurveySet, features: &FeatureConfig) -> Self {
        AnalyzedCorpus {
            tokens: survey
                .messages()
                .iter()
                .map(|m| features.analyze(&m.text))
                .collect(),
        }
    }

    pub fn tokens(&self, message_index: usize) -> &[String] {
        &self.tokens[message_index]
    }
}

/// A user's responses on codable messages as `(message index, filter)`.
pub fn usable_responses(survey: &SurveySet, user_id: &str) -> Vec<(usize, bool)> {
    survey
        .user_responses(user_id)
        .into_iter()
        .filter_map(|r| {
            let i = survey.message_position(&r.message_id)?;
            survey.messages()[i].category()?;
            Some((i, r.filter))
        })
        .collect()
}

/// Classifier trained on population-majority filter labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralFilter {
    pub classifier: ClassifierModel,
    pub vocabulary: Vocabulary,
    pub features: FeatureConfig,
    pub mode: FeatureMode,
    pub training_messages: usize,
}

impl GeneralFilter {
    pub fn vectorize_tokens(&self, tokens: &[String]) -> SparseVec {
        vectorize(tokens, &self.vocabulary, self.mode)
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> bool {
        self.classifier.predict(&self.vectorize_tokens(tokens))
    }

    pub fn predict_text(&self, text: &str) -> bool {
        self.predict_tokens(&self.features.analyze(text))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let filter: GeneralFilter = serde_json::from_str(s)?;
        // re-check the embedded model version
        ClassifierModel::from_json(&serde_json::to_string(&filter.classifier)?)?;
        Ok(filter)
    }
}

/// Codable messages with exactly `raters_per_message` responses, labeled by
/// the majority of their filter votes (ties, possible only for even rater
/// counts, resolve to `false`).
pub fn general_labels(survey: &SurveySet) -> Vec<(usize, bool)> {
    survey
        .messages()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.category().is_some())
        .filter_map(|(i, _)| {
            let votes: Vec<bool> = survey.responses_for_message(i).map(|r| r.filter).collect();
            if votes.len() != survey.raters_per_message {
                return None;
            }
            let yes = votes.iter().filter(|&&v| v).count();
            Some((i, 2 * yes > votes.len()))
        })
        .collect()
}

pub fn train_general(
    survey: &SurveySet,
    kind: LearnerKind,
    seed: u64,
    features: &FeatureConfig,
    learner: &LearnerConfig,
) -> Result<GeneralFilter> {
    let corpus = AnalyzedCorpus::new(survey, features);
    train_general_with(survey, &corpus, kind, seed, features, learner)
}

pub fn train_general_with(
    survey: &SurveySet,
    corpus: &AnalyzedCorpus,
    kind: LearnerKind,
    seed: u64,
    features: &FeatureConfig,
    learner: &LearnerConfig,
) -> Result<GeneralFilter> {
    let labeled = general_labels(survey);
    if labeled.is_empty() {
        return Err(Error::NoEligibleMessages(survey.raters_per_message));
    }
    let docs: Vec<&[String]> = labeled.iter().map(|&(i, _)| corpus.tokens(i)).collect();
    let vocabulary = build_vocabulary(&docs, features.min_df);
    let mode = features.mode.unwrap_or(kind.default_features());
    let vectors = docs
        .iter()
        .map(|d| vectorize(d, &vocabulary, mode))
        .collect();
    let labels = labeled.iter().map(|&(_, y)| y).collect();
    let training = TrainingSet::new(vectors, labels, vocabulary.len())?;
    let classifier = fit(kind, &training, seed, learner)?;
    Ok(GeneralFilter {
        classifier,
        vocabulary,
        features: features.clone(),
        mode,
        training_messages: labeled.len(),
    })
}

/// Per-message predictions of the general filter, indexed like the survey's
/// messages.
pub(crate) fn general_predictions(
    filter: &GeneralFilter,
    corpus: &AnalyzedCorpus,
    n: usize,
) -> Vec<bool> {
    (0..n)
        .map(|i| filter.predict_tokens(corpus.tokens(i)))
        .collect()
}

/// Fraction of each user's codable responses on which the general filter
/// agrees with the user's own choice. Users without codable responses are
/// omitted.
pub fn evaluate_general_per_user(
    filter: &GeneralFilter,
    survey: &SurveySet,
) -> BTreeMap<String, f64> {
    let corpus = AnalyzedCorpus::new(survey, &filter.features);
    let predictions = general_predictions(filter, &corpus, survey.messages().len());
    survey
        .user_ids()
        .filter_map(|u| {
            let items = usable_responses(survey, u);
            agreement(&items, &predictions).map(|a| (u.to_string(), a))
        })
        .collect()
}

pub(crate) fn agreement(items: &[(usize, bool)], predictions: &[bool]) -> Option<f64> {
    if items.is_empty() {
        return None;
    }
    let hits = items.iter().filter(|&&(i, y)| predictions[i] == y).count();
    Some(hits as f64 / items.len() as f64)
}

/// Modal-choice predictor for one user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub predicted: bool,
    pub accuracy: f64,
}

/// Predicts the user's more frequent choice; a tie predicts `false`.
pub fn majority_baseline(labels: &[bool]) -> Result<Baseline> {
    if labels.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let yes = labels.iter().filter(|&&y| y).count();
    let no = labels.len() - yes;
    let predicted = yes > no;
    Ok(Baseline {
        predicted,
        accuracy: yes.max(no) as f64 / labels.len() as f64,
    })
}
