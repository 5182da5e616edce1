//! Symbolic two-agent world traces, scripted scenarios, and the simulator
//! that produces traces together with their ground-truth belief dynamics.

mod corpus;
pub(crate) mod io;
mod scenario;
mod sim;
mod truth;

pub use corpus::{generate_corpus, random_scenario, Corpus, CorpusConfig, LabeledTrace};
pub use io::{
    read_ground_truth, read_trace, write_ground_truth, write_trace, GroundTruthHeader, TraceHeader,
};
pub use scenario::{ScenarioSpec, ScriptedEvent, MAX_OBJECTS};
pub use sim::{simulate, Layout};
pub use truth::{derive_ground_truth_beliefs, GroundTruth};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const JOINT_HEAD: usize = 0;
pub const JOINT_LEFT_HAND: usize = 1;
pub const JOINT_RIGHT_HAND: usize = 2;
pub const JOINT_TORSO: usize = 3;
pub const JOINT_LEFT_FOOT: usize = 4;
pub const JOINT_RIGHT_FOOT: usize = 5;
/// Named joints; configurations may add more.
pub const MIN_JOINTS: usize = 6;

const UNIT_TOL: f64 = 1e-9;

/// Closed set of object categories, serialized as its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Category(u8);

impl Category {
    pub const NAMES: [&'static str; 8] =
        ["cup", "book", "ball", "teddy", "bottle", "phone", "keys", "box"];

    pub fn new(id: u8) -> Option<Self> {
        ((id as usize) < Self::NAMES.len()).then_some(Category(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self.0 as usize]
    }
}

impl TryFrom<u8> for Category {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Category::new(v).ok_or_else(|| format!("unknown object category {v}"))
    }
}

impl From<Category> for u8 {
    fn from(c: Category) -> u8 {
        c.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    #[serde(rename = "pos")]
    pub position: Vec3,
    pub pose: Vec<Vec3>,
    pub gaze: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointing: Option<Vec3>,
}

impl AgentState {
    pub fn head(&self) -> Vec3 {
        self.pose[JOINT_HEAD]
    }

    pub fn left_hand(&self) -> Vec3 {
        self.pose[JOINT_LEFT_HAND]
    }

    pub fn right_hand(&self) -> Vec3 {
        self.pose[JOINT_RIGHT_HAND]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectState {
    #[serde(rename = "pos")]
    pub position: Vec3,
    #[serde(rename = "cat")]
    pub category: Category,
    #[serde(rename = "id")]
    pub object_id: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub t: usize,
    pub agents: [AgentState; 2],
    pub objects: Vec<ObjectState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldTrace {
    pub frame_rate: f64,
    /// Furniture boxes that block lines of sight.
    pub occluders: Vec<Aabb>,
    pub frames: Vec<Frame>,
}

impl WorldTrace {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn joints(&self) -> usize {
        self.frames.first().map_or(MIN_JOINTS, |f| f.agents[0].pose.len())
    }

    pub fn object_ids(&self) -> Vec<u32> {
        self.frames
            .first()
            .map(|f| f.objects.iter().map(|o| o.object_id).collect())
            .unwrap_or_default()
    }

    /// Checks contiguity, unit gaze/pointing, finiteness, a fixed joint count
    /// and a fixed object roster ordered by id.
    pub fn validate(&self) -> Result<()> {
        let bad = |t: usize, msg: String| Error::Trace(format!("frame {t}: {msg}"));
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::Trace(format!("bad frame rate {}", self.frame_rate)));
        }
        if self.occluders.iter().any(|b| !b.is_valid()) {
            return Err(Error::Trace("malformed occluder box".into()));
        }
        let joints = self.joints();
        if joints < MIN_JOINTS {
            return Err(Error::Trace(format!(
                "pose has {joints} joints, need at least {MIN_JOINTS}"
            )));
        }
        let roster = self.object_ids();
        for (i, f) in self.frames.iter().enumerate() {
            if f.t != i {
                return Err(bad(i, format!("timestamp {} out of sequence", f.t)));
            }
            for (k, a) in f.agents.iter().enumerate() {
                if a.pose.len() != joints {
                    return Err(bad(i, format!("agent {k} has {} joints", a.pose.len())));
                }
                if !a.position.is_finite() || a.pose.iter().any(|j| !j.is_finite()) {
                    return Err(bad(i, format!("agent {k} has non-finite coordinates")));
                }
                if !a.gaze.is_finite() || (a.gaze.norm() - 1.0).abs() > UNIT_TOL {
                    return Err(bad(i, format!("agent {k} gaze is not a unit vector")));
                }
                if let Some(p) = a.pointing {
                    if !p.is_finite() || (p.norm() - 1.0).abs() > UNIT_TOL {
                        return Err(bad(i, format!("agent {k} pointing is not a unit vector")));
                    }
                }
            }
            let mut seen = BTreeSet::new();
            for o in &f.objects {
                if !o.position.is_finite() {
                    return Err(bad(i, format!("object {} has non-finite position", o.object_id)));
                }
                if !seen.insert(o.object_id) {
                    return Err(bad(i, format!("duplicate object id {}", o.object_id)));
                }
            }
            if f.objects.len() != roster.len()
                || f.objects.iter().zip(&roster).any(|(o, &id)| o.object_id != id)
            {
                return Err(bad(i, "object roster differs from frame 0".into()));
            }
            if f.objects.windows(2).any(|w| w[0].object_id >= w[1].object_id) {
                return Err(bad(i, "objects not ordered by id".into()));
            }
        }
        Ok(())
    }
}
