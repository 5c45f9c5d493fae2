use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryClassifier, LearnerConfig, SparseVec, TrainingSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: bool,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Gini decision tree stored as a node arena rooted at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl BinaryClassifier for Tree {
    fn predict(&self, x: &SparseVec) -> bool {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { label } => return label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

/// Bagged Gini trees; prediction is a majority vote with ties to `false`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    pub fn fit(training: &TrainingSet, config: &LearnerConfig, seed: u64) -> Self {
        let n = training.len();
        let dim = training.dimension();
        let max_features = config
            .rf_max_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..config.rf_trees.max(1))
            .map(|_| {
                let mut tree_rng = ChaCha8Rng::seed_from_u64(rng.gen());
                let sample: Vec<usize> = if config.rf_bootstrap {
                    (0..n).map(|_| tree_rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut builder = TreeBuilder {
                    training,
                    max_features,
                    rng: tree_rng,
                    nodes: Vec::new(),
                };
                builder.grow(sample);
                Tree {
                    nodes: builder.nodes,
                }
            })
            .collect();
        RandomForest { trees }
    }
}

impl BinaryClassifier for RandomForest {
    fn predict(&self, x: &SparseVec) -> bool {
        let yes = self.trees.iter().filter(|t| t.predict(x)).count();
        2 * yes > self.trees.len()
    }
}

struct TreeBuilder<'a> {
    training: &'a TrainingSet,
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    fn label(&self, i: usize) -> bool {
        self.training.labels()[i]
    }

    /// Grows the subtree for `samples` and returns its node index.
    fn grow(&mut self, samples: Vec<usize>) -> usize {
        let at = self.nodes.len();
        let pos = samples.iter().filter(|&&i| self.label(i)).count();
        self.nodes.push(TreeNode::Leaf {
            label: 2 * pos > samples.len(),
        });
        if samples.len() < 2 || pos == 0 || pos == samples.len() {
            return at;
        }
        let Some(best) = self.best_split(&samples) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.training.vectors()[i].get(best.feature) <= best.threshold);
        let l = self.grow(left);
        let r = self.grow(right);
        self.nodes[at] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        at
    }

    /// Draws features in random order among those that vary within the node
    /// and evaluates the first `max_features` of them.
    fn best_split(&mut self, samples: &[usize]) -> Option<Candidate> {
        let vectors = self.training.vectors();
        let mut present: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in samples {
            for &(f, _) in vectors[i].entries() {
                *present.entry(f).or_insert(0) += 1;
            }
        }
        let mut varying: Vec<usize> = present
            .iter()
            .filter(|&(&f, &count)| {
                count < samples.len() || {
                    let first = vectors[samples[0]].get(f);
                    samples.iter().any(|&i| vectors[i].get(f) != first)
                }
            })
            .map(|(&f, _)| f)
            .collect();
        varying.shuffle(&mut self.rng);
        varying.truncate(self.max_features);

        let total_pos = samples.iter().filter(|&&i| self.label(i)).count();
        let n = samples.len();
        let mut best: Option<Candidate> = None;
        for feature in varying {
            let mut col: Vec<(f64, bool)> = samples
                .iter()
                .map(|&i| (vectors[i].get(feature), self.label(i)))
                .collect();
            col.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += col[k - 1].1 as usize;
                if col[k - 1].0 == col[k].0 {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (n - k) as f64 * gini(total_pos - left_pos, n - k))
                    / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Candidate {
                        impurity,
                        feature,
                        threshold: 0.5 * (col[k - 1].0 + col[k].0),
                    });
                }
            }
        }
        best
    }
}
