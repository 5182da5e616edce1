use super::EventLabel;
use crate::error::{Error, Result};
use crate::features::TraceAnalysis;
use crate::softmax::{Dataset, SoftmaxModel, TrainParams};
use serde::{Deserialize, Serialize};

/// Softmax over the three event labels on standardized span features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventClassifier {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub model: SoftmaxModel,
}

impl EventClassifier {
    /// Untrained classifier that assigns every label equal probability.
    pub fn uniform(dim: usize) -> Self {
        EventClassifier {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            model: SoftmaxModel::zeros(3, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Fits on weighted `(features, label)` examples; every label must appear.
    pub fn fit(examples: &[(Vec<f64>, EventLabel, f64)], params: &TrainParams) -> Result<Self> {
        let dim = examples.first().ok_or(Error::EmptyCorpus)?.0.len();
        for l in EventLabel::ALL {
            if !examples.iter().any(|e| e.1 == l && e.2 > 0.0) {
                return Err(Error::MissingLabel(l.name().into()));
            }
        }
        let total: f64 = examples.iter().map(|e| e.2).sum();
        let mut mean = vec![0.0; dim];
        for (x, _, w) in examples {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(x) {
                *m += w * v / total;
            }
        }
        let mut var = vec![0.0; dim];
        for (x, _, w) in examples {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += w * (v - m) * (v - m) / total;
            }
        }
        let scale = var
            .iter()
            .map(|v| if v.sqrt() > 1e-9 { 1.0 / v.sqrt() } else { 0.0 })
            .collect();
        let mut clf = EventClassifier {
            mean,
            scale,
            model: SoftmaxModel::zeros(3, dim),
        };
        let mut data = Dataset::new(dim);
        for (x, l, w) in examples {
            data.push(&clf.standardize(x), l.index(), *w);
        }
        clf.model.train(&data, params);
        Ok(clf)
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) * s)
            .collect()
    }

    pub fn log_probs(&self, x: &[f64]) -> Result<[f64; 3]> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let lp = self.model.log_probs(&self.standardize(x));
        Ok([lp[0], lp[1], lp[2]])
    }

    pub fn predict(&self, x: &[f64]) -> Result<EventLabel> {
        let lp = self.log_probs(x)?;
        let best = (0..3).fold(0, |b, i| if lp[i] > lp[b] { i } else { b });
        Ok(EventLabel::ALL[best])
    }
}

/// `log p(e | Γ_e, Γ_s)` for the span `[start, end)` of an analyzed trace.
pub fn event_log_likelihood(
    clf: &EventClassifier,
    analysis: &TraceAnalysis,
    start: usize,
    end: usize,
) -> Result<[f64; 3]> {
    if start >= end || end > analysis.num_frames {
        return Err(Error::Inconsistent(format!(
            "span [{start}, {end}) outside a trace of {} frames",
            analysis.num_frames
        )));
    }
    clf.log_probs(&analysis.pooled_span(start, end))
}
