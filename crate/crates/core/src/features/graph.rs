use super::{Entity, FrameFeatures, FramePercepts};
use crate::world::Frame;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Gaze,
    Pointing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttentionEdge {
    pub source: u8,
    pub target: Entity,
    pub channel: Channel,
}

/// Directed attention from agents to entities in one frame.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionGraph {
    pub nodes: Vec<Entity>,
    pub edges: Vec<AttentionEdge>,
}

/// Length of [`AttentionGraph::summary_stats`].
pub const GRAPH_STAT_DIM: usize = 8;

pub fn build_attention_graph(frame: &Frame, features: &FrameFeatures) -> AttentionGraph {
    let mut nodes = vec![Entity::Agent(0), Entity::Agent(1)];
    nodes.extend(frame.objects.iter().map(|o| Entity::Object(o.object_id)));
    let mut edges = Vec::new();
    for (i, u) in features.unary.iter().enumerate() {
        if let Some(t) = u.gaze_target {
            edges.push(AttentionEdge {
                source: i as u8,
                target: t,
                channel: Channel::Gaze,
            });
        }
        if let Some(t) = u.pointing_target {
            edges.push(AttentionEdge {
                source: i as u8,
                target: t,
                channel: Channel::Pointing,
            });
        }
    }
    edges.retain(|e| e.target != Entity::Agent(e.source));
    AttentionGraph { nodes, edges }
}

impl AttentionGraph {
    pub fn has_edge(&self, source: usize, target: Entity) -> bool {
        self.edges
            .iter()
            .any(|e| e.source as usize == source && e.target == target)
    }

    pub fn gaze_target(&self, source: usize) -> Option<Entity> {
        self.edges
            .iter()
            .find(|e| e.source as usize == source && e.channel == Channel::Gaze)
            .map(|e| e.target)
    }

    pub fn mutual_gaze(&self) -> bool {
        self.gaze_target(0) == Some(Entity::Agent(1)) && self.gaze_target(1) == Some(Entity::Agent(0))
    }

    pub fn shared_target(&self) -> bool {
        matches!(
            (self.gaze_target(0), self.gaze_target(1)),
            (Some(Entity::Object(a)), Some(Entity::Object(b))) if a == b
        )
    }

    /// Frame-level indicators pooled by the event classifier:
    /// agent 1 → object, agent 2 → object, 1 → 2, 2 → 1, mutual gaze,
    /// shared object target, any pointing, and gaze following (one agent
    /// looks at the other while the other looks at an object).
    pub fn summary_stats(&self, percepts: &FramePercepts) -> [f64; GRAPH_STAT_DIM] {
        let g0 = self.gaze_target(0);
        let g1 = self.gaze_target(1);
        let is_obj = |g: Option<Entity>| matches!(g, Some(Entity::Object(_)));
        let follow = (g0 == Some(Entity::Agent(1)) && is_obj(g1))
            || (g1 == Some(Entity::Agent(0)) && is_obj(g0));
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        [
            b(is_obj(g0)),
            b(is_obj(g1)),
            b(g0 == Some(Entity::Agent(1))),
            b(g1 == Some(Entity::Agent(0))),
            b(percepts.mutual_gaze()),
            b(self.shared_target()),
            b(self.edges.iter().any(|e| e.channel == Channel::Pointing)),
            b(follow),
        ]
    }
}
