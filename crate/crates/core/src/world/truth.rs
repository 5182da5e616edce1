use super::WorldTrace;
use crate::beliefs::{DeltaTable, EvidenceTracker, FiveMinds, MindId};
use crate::error::{Error, Result};
use crate::events::{spans_partition, EventSpan};
use crate::features::{build_attention_graph, extract_frame_features, FramePercepts, Perception};

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub events: Vec<EventSpan>,
    pub deltas: DeltaTable,
    /// Belief state after each frame; empty when loaded from a file.
    pub mind_states: Vec<FiveMinds>,
}

/// Applies the observation rules to every frame, with the common mind
/// confined to Joint Attention spans.
pub fn derive_ground_truth_beliefs(
    trace: &WorldTrace,
    events: &[EventSpan],
    perception: &Perception,
) -> Result<GroundTruth> {
    trace.validate()?;
    if !spans_partition(events, trace.len()) {
        return Err(Error::Trace("events do not partition the trace".into()));
    }
    let ids = trace.object_ids();
    let n = ids.len();
    let mut deltas = DeltaTable::new(trace.len(), ids.clone());
    let mut tracker = EvidenceTracker::new(ids, true);
    let mut mind_states = Vec::with_capacity(trace.len());
    for span in events {
        tracker.begin_event(span.label);
        for t in span.start..span.end {
            let frame = &trace.frames[t];
            let p = FramePercepts::compute(frame, &trace.occluders, perception);
            let g = build_attention_graph(frame, &extract_frame_features(frame, &p));
            let steps = tracker.step(frame, &p, &g, &trace.occluders);
            for (k, s) in steps.iter().enumerate() {
                deltas.set(MindId::ALL[k / n.max(1)], k % n.max(1), t, s.delta);
            }
            mind_states.push(tracker.snapshot());
        }
    }
    Ok(GroundTruth {
        events: events.to_vec(),
        deltas,
        mind_states,
    })
}
