use super::evidence::{Evidence, History};
use super::{BeliefDelta, MindId};
use crate::events::EventLabel;
use crate::softmax::{Dataset, SoftmaxModel, TrainParams};
use serde::{Deserialize, Serialize};

/// Event one-hot (3), evidence flags (4), last non-null delta one-hot
/// (none/occur/disappear/update), has-occurred, tracked.
pub const BELIEF_FEATURE_DIM: usize = 13;

pub fn encode_features(label: EventLabel, ev: &Evidence, h: &History) -> [f64; BELIEF_FEATURE_DIM] {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let mut f = [0.0; BELIEF_FEATURE_DIM];
    f[label.index()] = 1.0;
    f[3] = b(ev.edge);
    f[4] = b(ev.observed);
    f[5] = b(ev.moved);
    f[6] = b(ev.missing);
    let last = match h.last_non_null {
        None => 0,
        Some(BeliefDelta::Occur) => 1,
        Some(BeliefDelta::Disappear) => 2,
        Some(BeliefDelta::Update) | Some(BeliefDelta::Null) => 3,
    };
    f[7 + last] = 1.0;
    f[11] = b(h.has_occurred);
    f[12] = b(h.tracked);
    f
}

/// One softmax over the four deltas per mind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefLikelihood {
    pub models: Vec<SoftmaxModel>,
}

impl BeliefLikelihood {
    pub fn zeros() -> Self {
        BeliefLikelihood {
            models: vec![SoftmaxModel::zeros(4, BELIEF_FEATURE_DIM); MindId::ALL.len()],
        }
    }

    /// Trains each mind on its own weighted examples; targets are delta codes.
    pub fn fit(data: &[Dataset], params: &TrainParams) -> Self {
        let mut lik = BeliefLikelihood::zeros();
        for (m, d) in lik.models.iter_mut().zip(data) {
            if !d.is_empty() {
                m.train(d, params);
            }
        }
        lik
    }

    pub fn log_probs(&self, mind: MindId, features: &[f64]) -> [f64; 4] {
        let lp = self.models[mind.index()].log_probs(features);
        [lp[0], lp[1], lp[2], lp[3]]
    }

    /// How much an attention edge raises each non-null logit over null.
    pub fn edge_margin(&self, mind: MindId) -> [f64; 3] {
        let m = &self.models[mind.index()];
        let null = m.weight(BeliefDelta::Null.code(), 3);
        [0, 1, 2].map(|c| m.weight(c, 3) - null)
    }
}

/// `log p(Δ | g, e, history)` for one (mind, object) at one frame.
pub fn belief_log_likelihood(
    lik: &BeliefLikelihood,
    mind: MindId,
    label: EventLabel,
    evidence: &Evidence,
    history: &History,
) -> [f64; 4] {
    lik.log_probs(mind, &encode_features(label, evidence, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let lik = BeliefLikelihood::zeros();
        let lp = belief_log_likelihood(
            &lik,
            MindId::M12,
            EventLabel::AttentionFollowing,
            &Evidence::default(),
            &History::start(false),
        );
        for v in lp {
            assert!((v - 0.25f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn encoding_layout() {
        let ev = Evidence {
            edge: true,
            observed: true,
            moved: false,
            missing: false,
        };
        let h = History::start(true).after(BeliefDelta::Update);
        let f = encode_features(EventLabel::JointAttention, &ev, &h);
        assert_eq!(
            f,
            [0., 0., 1., 1., 1., 0., 0., 0., 0., 0., 1., 0., 1.]
        );
    }

    /// Reference forward pass written out by hand for committed weights.
    #[test]
    fn committed_weights_forward_pass() {
        let mut lik = BeliefLikelihood::zeros();
        let m = &mut lik.models[MindId::M1.index()];
        // occur logit: 2·edge + 1.5·observed - 3·tracked ; null bias 1
        m.weights[3] = 2.0;
        m.weights[4] = 1.5;
        m.weights[12] = -3.0;
        m.bias[3] = 1.0;
        let ev = Evidence { edge: true, observed: true, moved: false, missing: false };
        let lp = belief_log_likelihood(&lik, MindId::M1, EventLabel::NoCommunication, &ev, &History::start(false));
        let logits = [3.5f64, 0.0, 0.0, 1.0];
        let z = logits.iter().map(|v| v.exp()).sum::<f64>().ln();
        for (a, l) in lp.iter().zip(logits) {
            assert!((a - (l - z)).abs() < 1e-12);
        }
        let total: f64 = lp.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
