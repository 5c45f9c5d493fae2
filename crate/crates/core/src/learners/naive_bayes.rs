use serde::{Deserialize, Serialize};

use super::{BinaryClassifier, SparseVec, TrainingSet};

/// Multinomial Naive Bayes over term counts with additive smoothing.
///
/// Index 0 of each array is the no-filter class, index 1 the filter class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub class_log_prior: [f64; 2],
    pub feature_log_prob: [Vec<f64>; 2],
}

impl NaiveBayes {
    pub fn fit(training: &TrainingSet, alpha: f64) -> Self {
        let dim = training.dimension();
        let mut doc_count = [0usize; 2];
        let mut term_count = [vec![0.0; dim], vec![0.0; dim]];
        for (x, &y) in training.vectors().iter().zip(training.labels()) {
            let c = y as usize;
            doc_count[c] += 1;
            for &(i, w) in x.entries() {
                term_count[c][i] += w;
            }
        }
        let n = training.len() as f64;
        let class_log_prior = doc_count.map(|d| (d as f64 / n).ln());
        let feature_log_prob = term_count.map(|counts| {
            let total: f64 = counts.iter().sum::<f64>() + alpha * dim as f64;
            counts.iter().map(|&c| ((c + alpha) / total).ln()).collect()
        });
        NaiveBayes {
            class_log_prior,
            feature_log_prob,
        }
    }

    /// Unnormalized joint log-likelihood `ln P(c) + sum_t x_t ln P(t|c)` per class.
    /// Terms outside the training vocabulary are ignored.
    pub fn joint_log_likelihood(&self, x: &SparseVec) -> [f64; 2] {
        [0, 1].map(|c| self.class_log_prior[c] + x.dot(&self.feature_log_prob[c]))
    }
}

impl BinaryClassifier for NaiveBayes {
    fn predict(&self, x: &SparseVec) -> bool {
        let [no, yes] = self.joint_log_likelihood(x);
        yes > no
    }
}
