use super::{GridSpec, ParamSets};
use crate::beliefs::{BeliefModel, MindId, BELIEF_FEATURE_DIM};
use crate::error::{Error, Result};
use crate::events::{EventClassifier, EventLabel, EventPriors};
use crate::features::{FrameFeatures, Perception, GRAPH_STAT_DIM};
use crate::segments::SegmentParams;
use serde::{Deserialize, Serialize};

pub const MODEL_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParams {
    /// Entries kept per round.
    pub n: usize,
    /// Most segments merged into one proposed event.
    pub m: usize,
}

impl Default for BeamParams {
    fn default() -> Self {
        BeamParams { n: 5, m: 3 }
    }
}

/// Feature dimensions the classifiers were trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureManifest {
    pub joints: usize,
    pub event_dim: usize,
    pub belief_dim: usize,
}

impl FeatureManifest {
    pub fn new(joints: usize) -> Self {
        FeatureManifest {
            joints,
            event_dim: FrameFeatures::pooled_dim(joints) + GRAPH_STAT_DIM,
            belief_dim: BELIEF_FEATURE_DIM,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Losses {
    /// Frame-level event misclassification rate.
    pub l1: f64,
    /// One minus the mean over minds of the belief macro F1.
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParserModel {
    pub schema: u32,
    pub labels: Vec<String>,
    pub manifest: FeatureManifest,
    pub perception: Perception,
    pub segment: SegmentParams,
    pub beam: BeamParams,
    pub event_priors: EventPriors,
    pub classifier: EventClassifier,
    pub belief: BeliefModel,
    pub params: ParamSets,
    pub grid: GridSpec,
    pub losses: Losses,
}

fn normalized(v: impl IntoIterator<Item = f64>) -> bool {
    let mut s = 0.0;
    for x in v {
        if !(x.is_finite() && x >= 0.0) {
            return false;
        }
        s += x;
    }
    (s - 1.0).abs() < 1e-9
}

impl ParserModel {
    /// Structural checks applied to every model read from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Model(m.to_string()));
        if self.schema != MODEL_SCHEMA {
            return bad(&format!("unsupported schema {}", self.schema));
        }
        let names: Vec<&str> = EventLabel::ALL.iter().map(|l| l.name()).collect();
        if self.labels != names {
            return bad("label order differs");
        }
        if self.manifest != FeatureManifest::new(self.manifest.joints) {
            return bad("feature manifest is inconsistent");
        }
        let c = &self.classifier;
        let dim = self.manifest.event_dim;
        if c.mean.len() != dim
            || c.scale.len() != dim
            || c.model.classes != 3
            || c.model.dim != dim
            || c.model.weights.len() != 3 * dim
            || c.model.bias.len() != 3
            || !c.model.is_finite()
            || c.mean.iter().chain(&c.scale).any(|v| !v.is_finite())
        {
            return bad("event classifier does not match the manifest");
        }
        let lik = &self.belief.likelihood.models;
        if lik.len() != MindId::ALL.len()
            || lik.iter().any(|m| {
                m.classes != 4
                    || m.dim != BELIEF_FEATURE_DIM
                    || m.weights.len() != 4 * BELIEF_FEATURE_DIM
                    || m.bias.len() != 4
                    || !m.is_finite()
            })
        {
            return bad("belief likelihood does not match the manifest");
        }
        let p = &self.event_priors;
        if !p.trans.iter().all(|r| normalized(r.iter().copied()))
            || !normalized((0..3).flat_map(|a| (a..3).map(move |b| p.occ[a][b])))
            || (0..3).any(|a| (0..3).any(|b| p.occ[a][b] != p.occ[b][a] || p.occ[a][b] <= 0.0))
            || p.trans.iter().flatten().any(|&v| v <= 0.0)
        {
            return bad("event priors are not normalized");
        }
        let tabs = &self.belief.prior.tables;
        if tabs.len() != 15 {
            return bad("belief prior needs one table per mind and label");
        }
        for t in tabs {
            if !normalized(t.marginal) || !t.trans.iter().all(|r| normalized(r.iter().copied())) {
                return bad("belief prior is not normalized");
            }
            for (p, row) in t.trans.iter().enumerate() {
                for (n, &v) in row.iter().enumerate() {
                    let legal = crate::beliefs::table_transition_legal(
                        crate::beliefs::BeliefDelta::ALL[p],
                        crate::beliefs::BeliefDelta::ALL[n],
                    );
                    if !legal && v != 0.0 {
                        return bad("belief prior puts mass on an illegal transition");
                    }
                }
            }
        }
        let s = &self.segment;
        if s.window < 2 || s.min_len < 2 || s.window < s.min_len || s.k == 0 || !(s.tau.is_finite() && s.tau >= 0.0) {
            return bad("segment parameters are invalid");
        }
        if self.beam.n == 0 || self.beam.m == 0 {
            return bad("beam parameters must be positive");
        }
        let pr = &self.perception;
        let vals = [pr.gaze_half_angle_deg, pr.gaze_range, pr.pointing_half_angle_deg, pr.pointing_range];
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("perception parameters must be positive");
        }
        self.params.validate().map_err(|e| Error::Model(e.to_string()))
    }
}

pub fn write_model(model: &ParserModel) -> Result<String> {
    let mut s = serde_json::to_string_pretty(model).map_err(|e| Error::Model(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn read_model(text: &str) -> Result<ParserModel> {
    let m: ParserModel = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    m.validate()?;
    Ok(m)
}
