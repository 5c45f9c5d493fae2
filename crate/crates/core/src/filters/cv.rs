use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{usable_responses, AnalyzedCorpus};
use crate::corpus::SurveySet;
use crate::error::{Error, Result};
use crate::learners::{accuracy, fit, LearnerConfig, LearnerKind, TrainingSet};
use crate::textfeat::{build_vocabulary, vectorize, FeatureConfig};

/// Fold membership for each example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: usize,
    pub stratified: bool,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Deterministic fold assignment. Stratifies when both classes have at least
/// as many members as folds; otherwise falls back to plain folding. With
/// fewer examples than `k`, every example gets its own fold.
pub fn fold_assignment(labels: &[bool], k: usize, seed: u64) -> FoldPlan {
    let n = labels.len();
    let folds = k.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let yes = labels.iter().filter(|&&y| y).count();
    let stratified = yes >= folds && n - yes >= folds;
    let groups: Vec<Vec<usize>> = if stratified {
        [false, true]
            .iter()
            .map(|&class| (0..n).filter(|&i| labels[i] == class).collect())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    let mut assignment = vec![0; n];
    let mut counter = 0;
    for mut group in groups {
        group.shuffle(&mut rng);
        for i in group {
            assignment[i] = counter % folds;
            counter += 1;
        }
    }
    FoldPlan {
        folds,
        stratified,
        assignment,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub fold_sizes: Vec<usize>,
    pub stratified: bool,
}

/// k-fold cross-validated accuracy. Each fold builds its vocabulary from its
/// own training part.
pub fn cross_validate<D: AsRef<[String]>>(
    docs: &[D],
    labels: &[bool],
    kind: LearnerKind,
    k: usize,
    seed: u64,
    features: &FeatureConfig,
    learner: &LearnerConfig,
) -> Result<CvResult> {
    if docs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            vectors: docs.len(),
            labels: labels.len(),
        });
    }
    if labels.len() < 2 {
        return Err(Error::TooFewResponses {
            needed: 2,
            got: labels.len(),
        });
    }
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let plan = fold_assignment(labels, k, seed);
    let mode = features.mode.unwrap_or(kind.default_features());
    let mut fold_accuracies = Vec::with_capacity(plan.folds);
    for fold in 0..plan.folds {
        let (train, test): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| plan.assignment[i] != fold);
        let train_docs: Vec<&[String]> = train.iter().map(|&i| docs[i].as_ref()).collect();
        let vocab = build_vocabulary(&train_docs, features.min_df);
        let set = |idx: &[usize]| {
            TrainingSet::new(
                idx.iter()
                    .map(|&i| vectorize(docs[i].as_ref(), &vocab, mode))
                    .collect(),
                idx.iter().map(|&i| labels[i]).collect(),
                vocab.len(),
            )
        };
        let model = fit(kind, &set(&train)?, seed.wrapping_add(fold as u64), learner)?;
        fold_accuracies.push(accuracy(&model, &set(&test)?)?);
    }
    Ok(CvResult {
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64,
        fold_accuracies,
        fold_sizes: plan.fold_sizes(),
        stratified: plan.stratified,
    })
}

/// Cross-validates a user-adapted filter on one user's codable responses.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate_user(
    survey: &SurveySet,
    corpus: &AnalyzedCorpus,
    user_id: &str,
    kind: LearnerKind,
    k: usize,
    seed: u64,
    features: &FeatureConfig,
    learner: &LearnerConfig,
) -> Result<CvResult> {
    let items = usable_responses(survey, user_id);
    let docs: Vec<&[String]> = items.iter().map(|&(i, _)| corpus.tokens(i)).collect();
    let labels: Vec<bool> = items.iter().map(|&(_, y)| y).collect();
    cross_validate(&docs, &labels, kind, k, seed, features, learner)
}
