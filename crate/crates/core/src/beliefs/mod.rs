//! Five-minds belief state machine, belief-dynamics prior and likelihood,
//! and exact per-chain MAP inference.

mod evidence;
mod inference;
mod likelihood;
mod prior;

pub use evidence::{
    graph_edge, Evidence, EvidenceTracker, History, MindView, ObservationStep, UPDATE_EPS,
};
pub use inference::{
    chain_posteriors, hist_from_index, hist_index, infer_belief_dynamics, infer_chain, path_score,
    ChainInput, ChainPotentials, ChainResult, ChainScoring, HIST_STATES,
};
pub use likelihood::{
    belief_log_likelihood, encode_features, BeliefLikelihood, BELIEF_FEATURE_DIM,
};
pub use prior::{fit_belief_prior, BeliefPrior, BeliefPriorTables};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// One of the five minds: each agent's own mind, each agent's estimate of
/// the other's mind, and the common mind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MindId {
    #[serde(rename = "m1")]
    M1,
    #[serde(rename = "m2")]
    M2,
    #[serde(rename = "m12")]
    M12,
    #[serde(rename = "m21")]
    M21,
    #[serde(rename = "mc")]
    Mc,
}

impl MindId {
    pub const ALL: [MindId; 5] = [MindId::M1, MindId::M2, MindId::M12, MindId::M21, MindId::Mc];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MindId::M1 => "m1",
            MindId::M2 => "m2",
            MindId::M12 => "m12",
            MindId::M21 => "m21",
            MindId::Mc => "mc",
        }
    }
}

impl fmt::Display for MindId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MindId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MindId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::format(0, format!("unknown mind `{s}`")))
    }
}

/// Per-object belief change, with the integer coding 0..=3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeliefDelta {
    Occur = 0,
    Disappear = 1,
    Update = 2,
    Null = 3,
}

impl BeliefDelta {
    pub const ALL: [BeliefDelta; 4] = [
        BeliefDelta::Occur,
        BeliefDelta::Disappear,
        BeliefDelta::Update,
        BeliefDelta::Null,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(c: usize) -> Option<Self> {
        BeliefDelta::ALL.get(c).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BeliefDelta::Occur => "occur",
            BeliefDelta::Disappear => "disappear",
            BeliefDelta::Update => "update",
            BeliefDelta::Null => "null",
        }
    }

    /// Whether the delta may be applied to an object with the given tracking status.
    pub fn legal_from(self, tracked: bool) -> bool {
        match self {
            BeliefDelta::Occur => !tracked,
            BeliefDelta::Disappear | BeliefDelta::Update => tracked,
            BeliefDelta::Null => true,
        }
    }

    /// Tracking status after applying this delta.
    pub fn tracked_after(self, tracked: bool) -> bool {
        match self {
            BeliefDelta::Occur | BeliefDelta::Update => true,
            BeliefDelta::Disappear => false,
            BeliefDelta::Null => tracked,
        }
    }
}

impl fmt::Display for BeliefDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BeliefDelta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BeliefDelta::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::format(0, format!("unknown belief delta `{s}`")))
    }
}

/// Whether `next` may directly follow `prev` in the 4×4 transition table.
/// Transitions out of `null` depend on tracking status and are not decided here.
pub fn table_transition_legal(prev: BeliefDelta, next: BeliefDelta) -> bool {
    use BeliefDelta::*;
    !matches!(
        (prev, next),
        (Occur, Occur) | (Update, Occur) | (Disappear, Update) | (Disappear, Disappear)
    )
}

/// Checks a full delta sequence against the tracking state machine.
pub fn sequence_is_legal(initially_tracked: bool, seq: &[BeliefDelta]) -> bool {
    let mut tracked = initially_tracked;
    for &d in seq {
        if !d.legal_from(tracked) {
            return false;
        }
        tracked = d.tracked_after(tracked);
    }
    true
}

/// A single mind: the objects it tracks and their believed location.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MindState {
    pub beliefs: BTreeMap<u32, Vec3>,
}

impl MindState {
    pub fn is_tracked(&self, object_id: u32) -> bool {
        self.beliefs.contains_key(&object_id)
    }

    pub fn location(&self, object_id: u32) -> Option<Vec3> {
        self.beliefs.get(&object_id).copied()
    }
}

/// Applies one belief change, enforcing the tracking state machine.
pub fn apply_delta(
    state: &MindState,
    object_id: u32,
    delta: BeliefDelta,
    new_attribute: Option<Vec3>,
) -> Result<MindState> {
    let tracked = state.is_tracked(object_id);
    if !delta.legal_from(tracked) {
        return Err(Error::IllegalDelta(format!(
            "{delta} on {} object {object_id}",
            if tracked { "tracked" } else { "untracked" }
        )));
    }
    let mut next = state.clone();
    match delta {
        BeliefDelta::Occur | BeliefDelta::Update => {
            let loc = new_attribute.ok_or_else(|| {
                Error::IllegalDelta(format!("{delta} on object {object_id} without attribute"))
            })?;
            next.beliefs.insert(object_id, loc);
        }
        BeliefDelta::Disappear => {
            next.beliefs.remove(&object_id);
        }
        BeliefDelta::Null => {}
    }
    Ok(next)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiveMinds {
    pub minds: [MindState; 5],
}

impl FiveMinds {
    pub fn mind(&self, m: MindId) -> &MindState {
        &self.minds[m.index()]
    }

    pub fn mind_mut(&mut self, m: MindId) -> &mut MindState {
        &mut self.minds[m.index()]
    }
}

/// Dense table of belief deltas indexed by (mind, object slot, frame).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub num_frames: usize,
    pub object_ids: Vec<u32>,
    data: Vec<BeliefDelta>,
}

impl DeltaTable {
    pub fn new(num_frames: usize, object_ids: Vec<u32>) -> Self {
        let n = MindId::ALL.len() * object_ids.len() * num_frames;
        DeltaTable {
            num_frames,
            object_ids,
            data: vec![BeliefDelta::Null; n],
        }
    }

    fn offset(&self, m: MindId, slot: usize, t: usize) -> usize {
        (m.index() * self.object_ids.len() + slot) * self.num_frames + t
    }

    pub fn get(&self, m: MindId, slot: usize, t: usize) -> BeliefDelta {
        self.data[self.offset(m, slot, t)]
    }

    pub fn set(&mut self, m: MindId, slot: usize, t: usize, d: BeliefDelta) {
        let o = self.offset(m, slot, t);
        self.data[o] = d;
    }

    pub fn chain(&self, m: MindId, slot: usize) -> &[BeliefDelta] {
        let o = self.offset(m, slot, 0);
        &self.data[o..o + self.num_frames]
    }

    pub fn chain_mut(&mut self, m: MindId, slot: usize) -> &mut [BeliefDelta] {
        let o = self.offset(m, slot, 0);
        let n = self.num_frames;
        &mut self.data[o..o + n]
    }

    pub fn slot_of(&self, object_id: u32) -> Option<usize> {
        self.object_ids.iter().position(|&id| id == object_id)
    }

    /// All non-null entries as (mind, frame, object id, delta), in key order.
    pub fn non_null(&self) -> Vec<(MindId, usize, u32, BeliefDelta)> {
        let mut out = Vec::new();
        for m in MindId::ALL {
            for (slot, &id) in self.object_ids.iter().enumerate() {
                for (t, &d) in self.chain(m, slot).iter().enumerate() {
                    if d != BeliefDelta::Null {
                        out.push((m, t, id, d));
                    }
                }
            }
        }
        out.sort_by_key(|&(m, t, id, _)| (m, t, id));
        out
    }

    pub fn count(&self, m: MindId, d: BeliefDelta) -> usize {
        (0..self.object_ids.len())
            .map(|s| self.chain(m, s).iter().filter(|&&x| x == d).count())
            .sum()
    }

    /// Checks every chain against the state machine, starting untracked.
    pub fn is_legal(&self) -> bool {
        MindId::ALL.iter().all(|&m| {
            (0..self.object_ids.len()).all(|s| sequence_is_legal(false, self.chain(m, s)))
        })
    }
}

/// Prior and likelihood parameters of the belief layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefModel {
    pub prior: BeliefPrior,
    pub likelihood: BeliefLikelihood,
    /// Apply the marginal `p(Δ_t | e)` only at the first frame of an event.
    #[serde(default)]
    pub marginal_first_frame_only: bool,
}

impl BeliefModel {
    pub fn uniform(alpha: f64) -> Self {
        BeliefModel {
            prior: BeliefPrior::uniform(alpha),
            likelihood: BeliefLikelihood::zeros(),
            marginal_first_frame_only: false,
        }
    }
}
