//! Per-frame unary and pairwise features, attention graphs, and the wavelet
//! summaries used to compare temporal windows.

mod dump;
mod graph;
pub(crate) mod wavelet;

pub use dump::{decode_feature_dump, encode_feature_dump, FeatureDump, DUMP_MAGIC, DUMP_VERSION};
pub use graph::{build_attention_graph, AttentionEdge, AttentionGraph, Channel, GRAPH_STAT_DIM};
pub use wavelet::{haar_forward, haar_inverse, resample_dyadic, wavelet_summary, SegmentSummary};

use crate::error::{Error, Result};
use crate::geom::{angle_between, line_of_sight, Aabb, Cone, Vec3};
use crate::world::{Frame, WorldTrace, JOINT_LEFT_HAND, JOINT_RIGHT_HAND};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Attention geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perception {
    /// Gaze cone half-angle in degrees.
    pub gaze_half_angle_deg: f64,
    /// Gaze range in meters.
    pub gaze_range: f64,
    pub pointing_half_angle_deg: f64,
    pub pointing_range: f64,
}

impl Default for Perception {
    fn default() -> Self {
        Perception {
            gaze_half_angle_deg: 15.0,
            gaze_range: 4.0,
            pointing_half_angle_deg: 10.0,
            pointing_range: 4.0,
        }
    }
}

/// A node of the attention graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Entity {
    Agent(u8),
    Object(u32),
}

impl Entity {
    /// Agents take ids 0 and 1, objects follow at `2 + object_id`.
    pub fn id(self) -> u64 {
        match self {
            Entity::Agent(a) => a as u64,
            Entity::Object(o) => 2 + o as u64,
        }
    }
}

/// Cone membership and visibility facts of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePercepts {
    pub cones: [Cone; 2],
    pub pointing_cones: [Option<Cone>; 2],
    /// `sees_object[agent][slot]`: inside the gaze cone with a clear line of sight.
    pub sees_object: [Vec<bool>; 2],
    pub object_offset: [Vec<Option<f64>>; 2],
    /// Agent sees the other agent's head.
    pub sees_agent: [bool; 2],
    pub gaze_target: [Option<(Entity, f64)>; 2],
    pub pointing_target: [Option<Entity>; 2],
}

impl FramePercepts {
    pub fn compute(frame: &Frame, occluders: &[Aabb], p: &Perception) -> Self {
        let gaze_half = p.gaze_half_angle_deg.to_radians();
        let point_half = p.pointing_half_angle_deg.to_radians();
        let heads = [frame.agents[0].head(), frame.agents[1].head()];
        let cones = [0, 1].map(|i| Cone {
            apex: heads[i],
            axis: frame.agents[i].gaze,
            half_angle: gaze_half,
            range: p.gaze_range,
        });
        let pointing_cones = [0, 1].map(|i| {
            frame.agents[i].pointing.map(|dir| Cone {
                apex: frame.agents[i].right_hand(),
                axis: dir,
                half_angle: point_half,
                range: p.pointing_range,
            })
        });
        let mut sees_object = [Vec::new(), Vec::new()];
        let mut object_offset = [Vec::new(), Vec::new()];
        let mut sees_agent = [false; 2];
        let mut gaze_target = [None, None];
        let mut pointing_target = [None, None];
        for i in 0..2 {
            let other = 1 - i;
            // candidates: (entity, angular offset, distance)
            let mut cands: Vec<(Entity, f64, f64)> = Vec::new();
            for obj in &frame.objects {
                let off = cones[i].offset_of(obj.position).filter(|_| {
                    line_of_sight(heads[i], obj.position, occluders)
                });
                sees_object[i].push(off.is_some());
                object_offset[i].push(off);
                if let Some(a) = off {
                    cands.push((Entity::Object(obj.object_id), a, heads[i].distance(obj.position)));
                }
            }
            if let Some(a) = cones[i]
                .offset_of(heads[other])
                .filter(|_| line_of_sight(heads[i], heads[other], occluders))
            {
                sees_agent[i] = true;
                cands.push((Entity::Agent(other as u8), a, heads[i].distance(heads[other])));
            }
            gaze_target[i] = pick_target(&cands).map(|c| (c.0, c.1));

            if let Some(pc) = pointing_cones[i] {
                let mut pc_cands = Vec::new();
                for obj in &frame.objects {
                    if let Some(a) = pc.offset_of(obj.position) {
                        pc_cands.push((Entity::Object(obj.object_id), a, pc.apex.distance(obj.position)));
                    }
                }
                if let Some(a) = pc.offset_of(heads[other]) {
                    pc_cands.push((Entity::Agent(other as u8), a, pc.apex.distance(heads[other])));
                }
                pointing_target[i] = pick_target(&pc_cands).map(|c| c.0);
            }
        }
        FramePercepts {
            cones,
            pointing_cones,
            sees_object,
            object_offset,
            sees_agent,
            gaze_target,
            pointing_target,
        }
    }

    pub fn mutual_gaze(&self) -> bool {
        self.sees_agent[0] && self.sees_agent[1]
    }

    /// Whether `agent` would see a point at `loc` (cone plus line of sight).
    pub fn views_location(&self, agent: usize, loc: Vec3, occluders: &[Aabb]) -> bool {
        self.cones[agent].offset_of(loc).is_some()
            && line_of_sight(self.cones[agent].apex, loc, occluders)
    }
}

/// Angularly nearest candidate; ties go to the closer entity, then the lower id.
fn pick_target(cands: &[(Entity, f64, f64)]) -> Option<(Entity, f64, f64)> {
    cands.iter().copied().min_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.2.total_cmp(&b.2))
            .then(a.0.id().cmp(&b.0.id()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentUnary {
    /// Joint positions relative to the agent position, flattened.
    pub pose: Vec<f64>,
    /// Per object slot (ordered by object id): left-hand then right-hand distance.
    pub hand_object: Vec<f64>,
    pub gaze_target: Option<Entity>,
    /// Angle between gaze and the direction to the target; π without a target.
    pub gaze_offset: f64,
    pub pointing_target: Option<Entity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairwise {
    /// Joint-wise offsets, agent 2 minus agent 1, flattened.
    pub pose_offset: Vec<f64>,
    /// Angle between the two gaze directions.
    pub gaze_angle: f64,
    /// (L1,L2), (L1,R2), (R1,L2), (R1,R2) hand-to-hand distances.
    pub hand_distances: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    pub object_ids: Vec<u32>,
    pub unary: [AgentUnary; 2],
    pub pairwise: Pairwise,
}

/// Cap on hand-object distance in the object-count-invariant encoding.
const FAR_DISTANCE: f64 = 5.0;

impl FrameFeatures {
    pub fn dim_for(joints: usize, objects: usize) -> usize {
        2 * (joints * 3 + 2 * objects + objects + 2 + 1) + joints * 3 + 1 + 4
    }

    pub fn dim(&self) -> usize {
        FrameFeatures::dim_for(self.unary[0].pose.len() / 3, self.object_ids.len())
    }

    /// Flat feature vector; object slots ordered by object id.
    pub fn to_vector(&self) -> Vec<f64> {
        let n = self.object_ids.len();
        let mut v = Vec::with_capacity(self.dim());
        for (i, u) in self.unary.iter().enumerate() {
            v.extend_from_slice(&u.pose);
            v.extend_from_slice(&u.hand_object);
            let mut onehot = vec![0.0; n + 2];
            match u.gaze_target {
                None => onehot[0] = 1.0,
                Some(Entity::Agent(a)) if a as usize != i => onehot[1] = 1.0,
                Some(Entity::Agent(_)) => onehot[0] = 1.0,
                Some(Entity::Object(id)) => {
                    if let Some(s) = self.object_ids.iter().position(|&o| o == id) {
                        onehot[2 + s] = 1.0;
                    }
                }
            }
            v.extend_from_slice(&onehot);
            v.push(u.gaze_offset);
        }
        v.extend_from_slice(&self.pairwise.pose_offset);
        v.push(self.pairwise.gaze_angle);
        v.extend_from_slice(&self.pairwise.hand_distances);
        v
    }

    pub fn pooled_dim(joints: usize) -> usize {
        2 * (joints * 3 + 1 + 3 + 1) + joints * 3 + 1 + 4
    }

    /// Encoding independent of the object count: nearest hand-object
    /// distance and the kind of gaze target replace the per-object slots.
    pub fn pooled_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for u in &self.unary {
            v.extend_from_slice(&u.pose);
            let nearest = u
                .hand_object
                .iter()
                .copied()
                .fold(FAR_DISTANCE, f64::min);
            v.push(nearest);
            let kind = match u.gaze_target {
                None => 0,
                Some(Entity::Agent(_)) => 1,
                Some(Entity::Object(_)) => 2,
            };
            let mut onehot = [0.0; 3];
            onehot[kind] = 1.0;
            v.extend_from_slice(&onehot);
            v.push(u.gaze_offset);
        }
        v.extend_from_slice(&self.pairwise.pose_offset);
        v.push(self.pairwise.gaze_angle);
        v.extend_from_slice(&self.pairwise.hand_distances);
        v
    }
}

pub fn extract_frame_features(frame: &Frame, percepts: &FramePercepts) -> FrameFeatures {
    let object_ids: Vec<u32> = frame.objects.iter().map(|o| o.object_id).collect();
    let unary = [0, 1].map(|i| {
        let a = &frame.agents[i];
        let pose = a
            .pose
            .iter()
            .flat_map(|j| (*j - a.position).to_array())
            .collect();
        let (lh, rh) = (a.pose[JOINT_LEFT_HAND], a.pose[JOINT_RIGHT_HAND]);
        let hand_object = frame
            .objects
            .iter()
            .flat_map(|o| [lh.distance(o.position), rh.distance(o.position)])
            .collect();
        let (gaze_target, gaze_offset) = match percepts.gaze_target[i] {
            Some((e, off)) => (Some(e), off),
            None => (None, PI),
        };
        AgentUnary {
            pose,
            hand_object,
            gaze_target,
            gaze_offset,
            pointing_target: percepts.pointing_target[i],
        }
    });
    let (a, b) = (&frame.agents[0], &frame.agents[1]);
    let pose_offset = a
        .pose
        .iter()
        .zip(&b.pose)
        .flat_map(|(ja, jb)| (*jb - *ja).to_array())
        .collect();
    let hands_a = [a.pose[JOINT_LEFT_HAND], a.pose[JOINT_RIGHT_HAND]];
    let hands_b = [b.pose[JOINT_LEFT_HAND], b.pose[JOINT_RIGHT_HAND]];
    let hand_distances = [
        hands_a[0].distance(hands_b[0]),
        hands_a[0].distance(hands_b[1]),
        hands_a[1].distance(hands_b[0]),
        hands_a[1].distance(hands_b[1]),
    ];
    FrameFeatures {
        object_ids,
        unary,
        pairwise: Pairwise {
            pose_offset,
            gaze_angle: angle_between(a.gaze, b.gaze),
            hand_distances,
        },
    }
}

/// Euclidean distance; rejects vectors of different length.
pub fn feature_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(l2(a, b))
}

pub(crate) fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Row-major `T × dim` matrix of per-frame feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStream {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FeatureStream {
    pub fn new(dim: usize) -> Self {
        FeatureStream {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut s = FeatureStream::new(dim);
        for r in rows {
            s.push(r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self, start: usize, end: usize) -> &[f64] {
        &self.data[start * self.dim..end * self.dim]
    }

    /// Distance between consecutive frames `t` and `t + 1`.
    pub fn step_distance(&self, t: usize) -> f64 {
        l2(self.row(t), self.row(t + 1))
    }
}

/// Prefix sums for O(dim) span means.
#[derive(Clone, Debug)]
pub struct PrefixMeans {
    dim: usize,
    prefix: Vec<f64>,
}

impl PrefixMeans {
    pub fn new(stream: &FeatureStream) -> Self {
        let dim = stream.dim;
        let mut prefix = vec![0.0; dim];
        for t in 0..stream.len() {
            let base = t * dim;
            for k in 0..dim {
                let v = prefix[base + k] + stream.data[base + k];
                prefix.push(v);
            }
        }
        PrefixMeans { dim, prefix }
    }

    pub fn mean(&self, start: usize, end: usize) -> Vec<f64> {
        let n = (end - start) as f64;
        (0..self.dim)
            .map(|k| (self.prefix[end * self.dim + k] - self.prefix[start * self.dim + k]) / n)
            .collect()
    }
}

/// Everything the parser needs from a trace, computed once.
#[derive(Clone, Debug)]
pub struct TraceAnalysis {
    pub num_frames: usize,
    pub object_ids: Vec<u32>,
    pub joints: usize,
    pub percepts: Vec<FramePercepts>,
    pub graphs: Vec<AttentionGraph>,
    /// Full per-frame feature vectors.
    pub stream: FeatureStream,
    /// Object-count-invariant vectors followed by graph statistics.
    pooled: PrefixMeans,
    pub pooled_dim: usize,
}

impl TraceAnalysis {
    pub fn new(trace: &WorldTrace, perception: &Perception) -> Result<Self> {
        trace.validate()?;
        let joints = trace.joints();
        let object_ids = trace.object_ids();
        let dim = FrameFeatures::dim_for(joints, object_ids.len());
        let pooled_dim = FrameFeatures::pooled_dim(joints) + GRAPH_STAT_DIM;
        let mut stream = FeatureStream::new(dim);
        let mut pooled_rows = FeatureStream::new(pooled_dim);
        let mut percepts = Vec::with_capacity(trace.frames.len());
        let mut graphs = Vec::with_capacity(trace.frames.len());
        for frame in &trace.frames {
            let p = FramePercepts::compute(frame, &trace.occluders, perception);
            let f = extract_frame_features(frame, &p);
            let g = build_attention_graph(frame, &f);
            stream.push(&f.to_vector())?;
            let mut pv = f.pooled_vector();
            pv.extend_from_slice(&g.summary_stats(&p));
            pooled_rows.push(&pv)?;
            percepts.push(p);
            graphs.push(g);
        }
        Ok(TraceAnalysis {
            num_frames: trace.frames.len(),
            object_ids,
            joints,
            percepts,
            graphs,
            stream,
            pooled: PrefixMeans::new(&pooled_rows),
            pooled_dim,
        })
    }

    /// Mean pooled features plus graph statistics over `[start, end)`.
    pub fn pooled_span(&self, start: usize, end: usize) -> Vec<f64> {
        self.pooled.mean(start, end)
    }
}
