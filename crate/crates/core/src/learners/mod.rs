//! Binary filter/no-filter classifiers under a common fit/predict contract.
//!
//! Every tie rule resolves to `false` (keep the message visible).

mod forest;
mod naive_bayes;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textfeat::{FeatureMode, SparseVector};

pub use forest::{RandomForest, Tree, TreeNode};
pub use naive_bayes::NaiveBayes;
pub use svm::LinearSvm;

/// Feature vectors consumed by the learners.
pub type SparseVec = SparseVector<f64>;

/// Serialization format version for [`ClassifierModel`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Nb,
    Svm,
    Rf,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::Nb, LearnerKind::Svm, LearnerKind::Rf];

    /// Default feature weighting for this learner.
    pub fn default_features(self) -> FeatureMode {
        match self {
            LearnerKind::Svm => FeatureMode::Tfidf,
            LearnerKind::Nb | LearnerKind::Rf => FeatureMode::Counts,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Nb => "nb",
            LearnerKind::Svm => "svm",
            LearnerKind::Rf => "rf",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(LearnerKind::Nb),
            "svm" => Ok(LearnerKind::Svm),
            "rf" => Ok(LearnerKind::Rf),
            other => Err(Error::Config(format!(
                "unknown learner `{other}` (nb|svm|rf)"
            ))),
        }
    }
}

/// Hyperparameters for all three learners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Laplace smoothing for Naive Bayes.
    pub nb_alpha: f64,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub rf_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(V))`.
    pub rf_max_features: Option<usize>,
    pub rf_bootstrap: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            nb_alpha: 1.0,
            svm_lambda: 1e-4,
            svm_epochs: 100,
            rf_trees: 100,
            rf_max_features: None,
            rf_bootstrap: true,
        }
    }
}

/// Labeled vectors over a vocabulary of `dimension` terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    vectors: Vec<SparseVec>,
    labels: Vec<bool>,
    dimension: usize,
}

impl TrainingSet {
    pub fn new(vectors: Vec<SparseVec>, labels: Vec<bool>, dimension: usize) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::LengthMismatch {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        let needed = vectors
            .iter()
            .filter_map(SparseVec::max_index)
            .max()
            .map_or(0, |i| i + 1);
        Ok(TrainingSet {
            vectors,
            labels,
            dimension: dimension.max(needed),
        })
    }

    pub fn vectors(&self) -> &[SparseVec] {
        &self.vectors
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn single_class(&self) -> Option<bool> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&l| l == first).then_some(first)
    }
}

/// Anything that maps a feature vector to a filter decision.
pub trait BinaryClassifier {
    fn predict(&self, x: &SparseVec) -> bool;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predictor {
    /// Emitted when training data holds a single class.
    Constant {
        label: bool,
    },
    NaiveBayes(NaiveBayes),
    LinearSvm(LinearSvm),
    RandomForest(RandomForest),
}

impl BinaryClassifier for Predictor {
    fn predict(&self, x: &SparseVec) -> bool {
        match self {
            Predictor::Constant { label } => *label,
            Predictor::NaiveBayes(m) => m.predict(x),
            Predictor::LinearSvm(m) => m.predict(x),
            Predictor::RandomForest(m) => m.predict(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub version: u32,
    pub kind: LearnerKind,
    pub training_seed: u64,
    pub predictor: Predictor,
}

impl ClassifierModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ClassifierModel = serde_json::from_str(s)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        Ok(model)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.predictor, Predictor::Constant { .. })
    }
}

impl BinaryClassifier for ClassifierModel {
    fn predict(&self, x: &SparseVec) -> bool {
        self.predictor.predict(x)
    }
}

/// Trains a deterministic model for `(kind, training, seed)`.
pub fn fit(
    kind: LearnerKind,
    training: &TrainingSet,
    seed: u64,
    config: &LearnerConfig,
) -> Result<ClassifierModel> {
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let predictor = match training.single_class() {
        Some(label) => Predictor::Constant { label },
        None => match kind {
            LearnerKind::Nb => Predictor::NaiveBayes(NaiveBayes::fit(training, config.nb_alpha)),
            LearnerKind::Svm => Predictor::LinearSvm(
                LinearSvm::fit(training, config.svm_lambda, config.svm_epochs, seed).0,
            ),
            LearnerKind::Rf => Predictor::RandomForest(RandomForest::fit(training, config, seed)),
        },
    };
    Ok(ClassifierModel {
        version: MODEL_FORMAT_VERSION,
        kind,
        training_seed: seed,
        predictor,
    })
}

/// Fraction of `test` examples the model labels correctly.
pub fn accuracy(model: &impl BinaryClassifier, test: &TrainingSet) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let correct = test
        .vectors()
        .iter()
        .zip(test.labels())
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVec {
        SparseVec::from_pairs(pairs.to_vec())
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let t = TrainingSet::new(vec![], vec![], 3).unwrap();
        for kind in LearnerKind::ALL {
            assert!(matches!(
                fit(kind, &t, 0, &LearnerConfig::default()),
                Err(Error::EmptyTrainingSet)
            ));
        }
        assert!(TrainingSet::new(vec![sv(&[])], vec![], 1).is_err());
    }

    #[test]
    fn single_class_gives_constant_predictor() {
        let t =
            TrainingSet::new(vec![sv(&[(0, 1.0)]), sv(&[(1, 2.0)])], vec![true, true], 2).unwrap();
        for kind in LearnerKind::ALL {
            let m = fit(kind, &t, 1, &LearnerConfig::default()).unwrap();
            assert!(m.is_constant());
            assert!(m.predict(&sv(&[])));
            assert!(m.predict(&sv(&[(7, 3.0)])));
        }
        let f = TrainingSet::new(vec![sv(&[(0, 1.0)])], vec![false], 1).unwrap();
        let rf = fit(LearnerKind::Rf, &f, 1, &LearnerConfig::default()).unwrap();
        assert!(!rf.predict(&sv(&[(0, 1.0)])));
    }

    #[test]
    fn accuracy_examples() {
        let xs: Vec<_> = (0..10).map(|i| sv(&[(0, i as f64 + 1.0)])).collect();
        let labels: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let test = TrainingSet::new(xs.clone(), labels, 1).unwrap();
        let never = Predictor::Constant { label: false };
        let always = Predictor::Constant { label: true };
        assert_eq!(accuracy(&never, &test).unwrap(), 0.7);

        let all_false = TrainingSet::new(xs, vec![false; 10], 1).unwrap();
        assert_eq!(accuracy(&always, &all_false).unwrap(), 0.0);
        assert_eq!(accuracy(&never, &all_false).unwrap(), 1.0);

        let empty = TrainingSet::new(vec![], vec![], 1).unwrap();
        assert!(matches!(accuracy(&never, &empty), Err(Error::EmptyTestSet)));
    }

    #[test]
    fn learner_kind_parsing() {
        assert_eq!("SVM".parse::<LearnerKind>().unwrap(), LearnerKind::Svm);
        assert!("knn".parse::<LearnerKind>().is_err());
        assert_eq!(LearnerKind::Svm.default_features(), FeatureMode::Tfidf);
    }

    #[test]
    fn rejects_unknown_model_version() {
        let m = ClassifierModel {
            version: 99,
            kind: LearnerKind::Nb,
            training_seed: 0,
            predictor: Predictor::Constant { label: true },
        };
        assert!(ClassifierModel::from_json(&m.to_json().unwrap()).is_err());
    }
}
