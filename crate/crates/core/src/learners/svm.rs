use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryClassifier, SparseVec, TrainingSet};

/// Linear SVM trained by stochastic subgradient descent on the
/// L2-regularized hinge loss, step size `1/(lambda * t)`.
///
/// The bias is handled as the weight of a constant feature, so it is
/// regularized together with `weights`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    /// Returns the model and the regularized hinge objective after each epoch.
    pub fn fit(training: &TrainingSet, lambda: f64, epochs: usize, seed: u64) -> (Self, Vec<f64>) {
        let n = training.len();
        let ys: Vec<f64> = training
            .labels()
            .iter()
            .map(|&l| if l { 1.0 } else { -1.0 })
            .collect();
        // w = scale * v; shrinking only touches `scale`
        let mut v = vec![0.0; training.dimension()];
        let mut v_bias = 0.0;
        let mut scale = 1.0;
        let mut v_sq = 0.0;
        let radius_sq = 1.0 / lambda;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut objectives = Vec::with_capacity(epochs);
        let mut t = 0u64;
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let x = &training.vectors()[i];
                let margin = ys[i] * scale * (x.dot(&v) + v_bias);
                let shrink = 1.0 - eta * lambda;
                if shrink <= 0.0 {
                    v.iter_mut().for_each(|w| *w = 0.0);
                    v_bias = 0.0;
                    v_sq = 0.0;
                    scale = 1.0;
                } else {
                    scale *= shrink;
                }
                if margin < 1.0 {
                    let step = eta * ys[i] / scale;
                    for &(j, xj) in x.entries() {
                        v_sq += 2.0 * step * xj * v[j] + step * step * xj * xj;
                        v[j] += step * xj;
                    }
                    v_sq += 2.0 * step * v_bias + step * step;
                    v_bias += step;
                }
                let w_sq = scale * scale * v_sq;
                if w_sq > radius_sq {
                    scale *= (radius_sq / w_sq).sqrt();
                }
                // keep the scale away from underflow
                if scale < 1e-100 {
                    v.iter_mut().for_each(|w| *w *= scale);
                    v_bias *= scale;
                    v_sq *= scale * scale;
                    scale = 1.0;
                }
            }
            let model = Self::materialize(&v, v_bias, scale);
            objectives.push(model.objective(training, lambda));
        }
        (Self::materialize(&v, v_bias, scale), objectives)
    }

    fn materialize(v: &[f64], v_bias: f64, scale: f64) -> Self {
        LinearSvm {
            weights: v.iter().map(|w| w * scale).collect(),
            bias: v_bias * scale,
        }
    }

    pub fn decision(&self, x: &SparseVec) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// `lambda/2 * |(w, b)|^2 + mean hinge loss`.
    pub fn objective(&self, training: &TrainingSet, lambda: f64) -> f64 {
        let reg = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        let hinge: f64 = training
            .vectors()
            .iter()
            .zip(training.labels())
            .map(|(x, &l)| {
                let y = if l { 1.0 } else { -1.0 };
                (1.0 - y * self.decision(x)).max(0.0)
            })
            .sum();
        0.5 * lambda * reg + hinge / training.len() as f64
    }
}

impl BinaryClassifier for LinearSvm {
    fn predict(&self, x: &SparseVec) -> bool {
        self.decision(x) > 0.0
    }
}
