//! Multinomial logistic regression shared by the event and belief classifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `classes × dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the relative loss change drops below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            l2: 1e-4,
            learning_rate: 0.05,
            max_epochs: 3000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// Weighted training rows. Duplicate rows can be collapsed into one weighted row.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<usize>,
    pub w: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            ..Default::default()
        }
    }

    pub fn push(&mut self, x: &[f64], y: usize, w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.x.extend_from_slice(x);
        self.y.push(y);
        self.w.push(w);
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

impl SoftmaxModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        SoftmaxModel {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.dim + feature]
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let w = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn log_probs(&self, x: &[f64]) -> Vec<f64> {
        let z = self.logits(x);
        let lse = log_sum_exp(&z);
        z.into_iter().map(|v| v - lse).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    /// Weighted mean cross-entropy plus `l2/2 · ‖W‖²`, and its gradient
    /// laid out as `[weights..., bias...]`.
    pub fn loss_and_grad(&self, data: &Dataset, l2: f64) -> (f64, Vec<f64>) {
        let nw = self.weights.len();
        let mut grad = vec![0.0; nw + self.classes];
        let total_w: f64 = data.w.iter().sum();
        let mut loss = 0.0;
        if total_w > 0.0 {
            for i in 0..data.len() {
                let x = data.row(i);
                let lp = self.log_probs(x);
                let wi = data.w[i] / total_w;
                loss -= wi * lp[data.y[i]];
                for c in 0..self.classes {
                    let g = wi * (lp[c].exp() - if c == data.y[i] { 1.0 } else { 0.0 });
                    let row = &mut grad[c * self.dim..(c + 1) * self.dim];
                    for (r, xv) in row.iter_mut().zip(x) {
                        *r += g * xv;
                    }
                    grad[nw + c] += g;
                }
            }
        }
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        loss += 0.5 * l2 * sq;
        for (g, w) in grad[..nw].iter_mut().zip(&self.weights) {
            *g += l2 * w;
        }
        (loss, grad)
    }

    /// Full-batch Adam on the weighted cross-entropy. Returns the final loss.
    pub fn train(&mut self, data: &Dataset, params: &TrainParams) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for w in &mut self.weights {
            *w = rng.gen_range(-1e-3..1e-3);
        }
        let n = self.weights.len() + self.bias.len();
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut m = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut prev = f64::INFINITY;
        let mut loss = f64::INFINITY;
        for epoch in 1..=params.max_epochs {
            let (l, g) = self.loss_and_grad(data, params.l2);
            loss = l;
            if prev.is_finite() && ((prev - l).abs() / prev.abs().max(1e-12)) < params.tolerance {
                break;
            }
            prev = l;
            let bc1 = 1.0 - b1.powi(epoch as i32);
            let bc2 = 1.0 - b2.powi(epoch as i32);
            let nw = self.weights.len();
            for k in 0..n {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let step = params.learning_rate * (m[k] / bc1) / ((v[k] / bc2).sqrt() + eps);
                if k < nw {
                    self.weights[k] -= step;
                } else {
                    self.bias[k - nw] -= step;
                }
            }
        }
        loss
    }

    pub fn params_mut(&mut self, k: usize) -> &mut f64 {
        let nw = self.weights.len();
        if k < nw {
            &mut self.weights[k]
        } else {
            &mut self.bias[k - nw]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_instance(seed: u64) -> (SoftmaxModel, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (classes, dim) = (3, 5);
        let mut m = SoftmaxModel::zeros(classes, dim);
        for w in m.weights.iter_mut().chain(m.bias.iter_mut()) {
            *w = rng.gen_range(-1.0..1.0);
        }
        let mut d = Dataset::new(dim);
        for _ in 0..20 {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            d.push(&x, rng.gen_range(0..classes), rng.gen_range(0.5..2.0));
        }
        (m, d)
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..10 {
            let (model, data) = random_instance(seed);
            let l2 = 0.01;
            let (_, g) = model.loss_and_grad(&data, l2);
            let h = 1e-6;
            for k in 0..g.len() {
                let mut plus = model.clone();
                *plus.params_mut(k) += h;
                let mut minus = model.clone();
                *minus.params_mut(k) -= h;
                let fd = (plus.loss_and_grad(&data, l2).0 - minus.loss_and_grad(&data, l2).0)
                    / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-5, "k={k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = SoftmaxModel::zeros(4, 3);
        for lp in m.log_probs(&[1.0, -2.0, 0.5]) {
            assert!((lp - 0.25f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn separable_three_class_toy() {
        let mut d = Dataset::new(2);
        for i in 0..10 {
            let j = i as f64 * 0.05;
            d.push(&[1.0 + j, 0.0], 0, 1.0);
            d.push(&[-1.0 - j, 1.0], 1, 1.0);
            d.push(&[-1.0 - j, -1.0], 2, 1.0);
        }
        let mut m = SoftmaxModel::zeros(3, 2);
        m.train(&d, &TrainParams::default());
        let acc = (0..d.len())
            .filter(|&i| {
                let lp = m.log_probs(d.row(i));
                let best = (0..3).max_by(|&a, &b| lp[a].total_cmp(&lp[b])).unwrap();
                best == d.y[i]
            })
            .count();
        assert_eq!(acc, d.len());
    }
}
