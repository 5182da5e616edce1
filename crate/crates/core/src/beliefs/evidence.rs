//! Observation rules shared by ground-truth derivation and the evidence
//! features of the belief likelihood.

use super::{BeliefDelta, FiveMinds, MindId};
use crate::events::EventLabel;
use crate::features::{AttentionGraph, Entity, FramePercepts};
use crate::geom::{Aabb, Vec3};
use crate::world::Frame;

/// Minimum displacement (meters) that counts as a location change.
pub const UPDATE_EPS: f64 = 0.05;

/// Binary cues for one (mind, object) at one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Evidence {
    /// The attention graph carries the edges this mind is built from.
    pub edge: bool,
    pub observed: bool,
    /// Observed away from the location held so far.
    pub moved: bool,
    /// Not observed although the held location is in view.
    pub missing: bool,
}

/// What a chain has done so far inside the current event.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct History {
    pub last_non_null: Option<BeliefDelta>,
    pub has_occurred: bool,
    pub tracked: bool,
}

impl History {
    pub fn start(tracked: bool) -> Self {
        History {
            last_non_null: None,
            has_occurred: false,
            tracked,
        }
    }

    pub fn after(self, d: BeliefDelta) -> Self {
        if d == BeliefDelta::Null {
            return self;
        }
        History {
            last_non_null: Some(d),
            has_occurred: self.has_occurred || d == BeliefDelta::Occur,
            tracked: d.tracked_after(self.tracked),
        }
    }
}

/// Per-frame visibility seen through the lens of one mind.
pub struct MindView<'a> {
    pub percepts: &'a FramePercepts,
    pub occluders: &'a [Aabb],
    /// Mutual gaze has happened since the current event began.
    pub mutual: bool,
}

impl MindView<'_> {
    pub fn observes_object(&self, mind: MindId, slot: usize) -> bool {
        let p = self.percepts;
        match mind {
            MindId::M1 => p.sees_object[0][slot],
            MindId::M2 => p.sees_object[1][slot],
            MindId::M12 => p.sees_agent[0] && p.sees_object[1][slot],
            MindId::M21 => p.sees_agent[1] && p.sees_object[0][slot],
            MindId::Mc => self.mutual && p.sees_object[0][slot] && p.sees_object[1][slot],
        }
    }

    pub fn views_location(&self, mind: MindId, loc: Vec3) -> bool {
        let p = self.percepts;
        let v = |a: usize| p.views_location(a, loc, self.occluders);
        match mind {
            MindId::M1 => v(0),
            MindId::M2 => v(1),
            MindId::M12 => p.sees_agent[0] && v(1),
            MindId::M21 => p.sees_agent[1] && v(0),
            MindId::Mc => self.mutual && v(0) && v(1),
        }
    }
}

pub fn graph_edge(graph: &AttentionGraph, mind: MindId, object_id: u32, mutual: bool) -> bool {
    let o = Entity::Object(object_id);
    match mind {
        MindId::M1 => graph.has_edge(0, o),
        MindId::M2 => graph.has_edge(1, o),
        MindId::M12 => graph.has_edge(0, Entity::Agent(1)) && graph.has_edge(1, o),
        MindId::M21 => graph.has_edge(1, Entity::Agent(0)) && graph.has_edge(0, o),
        MindId::Mc => mutual && graph.has_edge(0, o) && graph.has_edge(1, o),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservationStep {
    pub evidence: Evidence,
    /// Delta prescribed by the observation rules.
    pub delta: BeliefDelta,
}

/// Runs the observation rules frame by frame, holding one believed location
/// per (mind, object).
#[derive(Clone, Debug)]
pub struct EvidenceTracker {
    object_ids: Vec<u32>,
    locs: Vec<Option<Vec3>>,
    mutual: bool,
    common_open: bool,
    gate_common: bool,
}

impl EvidenceTracker {
    /// With `gate_common`, the common mind only changes during Joint Attention.
    pub fn new(object_ids: Vec<u32>, gate_common: bool) -> Self {
        let n = object_ids.len() * MindId::ALL.len();
        EvidenceTracker {
            object_ids,
            locs: vec![None; n],
            mutual: false,
            common_open: true,
            gate_common,
        }
    }

    pub fn begin_event(&mut self, label: EventLabel) {
        self.mutual = false;
        self.common_open = !self.gate_common || label == EventLabel::JointAttention;
    }

    fn idx(&self, m: MindId, slot: usize) -> usize {
        m.index() * self.object_ids.len() + slot
    }

    pub fn is_tracked(&self, m: MindId, slot: usize) -> bool {
        self.locs[self.idx(m, slot)].is_some()
    }

    /// Advances one frame; steps are ordered mind-major, then object slot.
    pub fn step(
        &mut self,
        frame: &Frame,
        percepts: &FramePercepts,
        graph: &AttentionGraph,
        occluders: &[Aabb],
    ) -> Vec<ObservationStep> {
        self.mutual |= percepts.mutual_gaze();
        let view = MindView {
            percepts,
            occluders,
            mutual: self.mutual,
        };
        let mut out = Vec::with_capacity(self.locs.len());
        for m in MindId::ALL {
            for (slot, obj) in frame.objects.iter().enumerate() {
                let i = self.idx(m, slot);
                let held = self.locs[i];
                let observed = view.observes_object(m, slot);
                let moved = matches!(held, Some(l) if observed && l.distance(obj.position) > UPDATE_EPS);
                let missing = matches!(held, Some(l) if !observed && view.views_location(m, l));
                let evidence = Evidence {
                    edge: graph_edge(graph, m, obj.object_id, self.mutual),
                    observed,
                    moved,
                    missing,
                };
                let delta = if m == MindId::Mc && !self.common_open {
                    BeliefDelta::Null
                } else if held.is_none() && observed {
                    BeliefDelta::Occur
                } else if moved {
                    BeliefDelta::Update
                } else if missing {
                    BeliefDelta::Disappear
                } else {
                    BeliefDelta::Null
                };
                match delta {
                    BeliefDelta::Occur | BeliefDelta::Update => self.locs[i] = Some(obj.position),
                    BeliefDelta::Disappear => self.locs[i] = None,
                    BeliefDelta::Null => {}
                }
                out.push(ObservationStep { evidence, delta });
            }
        }
        out
    }

    pub fn snapshot(&self) -> FiveMinds {
        let mut minds = FiveMinds::default();
        for m in MindId::ALL {
            for (slot, &id) in self.object_ids.iter().enumerate() {
                if let Some(l) = self.locs[self.idx(m, slot)] {
                    minds.mind_mut(m).beliefs.insert(id, l);
                }
            }
        }
        minds
    }
}
