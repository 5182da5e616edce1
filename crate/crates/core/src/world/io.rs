//! Line-delimited JSON readers and writers for traces and ground truth.
//!
//! A trace file opens with one header record (frame rate and occluder boxes)
//! followed by one frame record per line. A ground-truth file opens with a
//! header naming the frame count, object roster and event spans, followed by
//! one record per non-null belief delta.

use super::{Frame, GroundTruth, WorldTrace};
use crate::beliefs::{BeliefDelta, DeltaTable, MindId};
use crate::error::{Error, Result};
use crate::events::{spans_partition, EventSpan};
use crate::geom::Aabb;
use serde::{Deserialize, Serialize};

const TRACE_FORMAT: &str = "fmp-trace";
const GT_FORMAT: &str = "fmp-truth";
pub(crate) const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub frame_rate: f64,
    pub occluders: Vec<Aabb>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthHeader {
    pub format: String,
    pub version: u32,
    pub num_frames: usize,
    pub object_ids: Vec<u32>,
    pub events: Vec<EventSpan>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaRecord {
    mind: MindId,
    frame: usize,
    object_id: u32,
    delta: BeliefDelta,
}

pub(crate) fn json_line<T: Serialize>(out: &mut String, v: &T) {
    out.push_str(&serde_json::to_string(v).expect("record serializes"));
    out.push('\n');
}

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn check_format(line: usize, format: &str, version: u32, want: &str) -> Result<()> {
    if format != want {
        return Err(Error::format(line, format!("expected a `{want}` file, found `{format}`")));
    }
    if version != VERSION {
        return Err(Error::format(line, format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn write_trace(trace: &WorldTrace) -> String {
    let mut out = String::new();
    json_line(
        &mut out,
        &TraceHeader {
            format: TRACE_FORMAT.into(),
            version: VERSION,
            frame_rate: trace.frame_rate,
            occluders: trace.occluders.clone(),
        },
    );
    for f in &trace.frames {
        json_line(&mut out, f);
    }
    out
}

pub fn read_trace(text: &str) -> Result<WorldTrace> {
    let mut lines = records(text);
    let (hl, head) = lines.next().ok_or_else(|| Error::format(1, "missing trace header"))?;
    let header: TraceHeader =
        serde_json::from_str(head).map_err(|e| Error::format(hl, e))?;
    check_format(hl, &header.format, header.version, TRACE_FORMAT)?;
    let mut frames = Vec::new();
    for (n, l) in lines {
        let f: Frame = serde_json::from_str(l).map_err(|e| Error::format(n, e))?;
        frames.push(f);
    }
    let trace = WorldTrace {
        frame_rate: header.frame_rate,
        occluders: header.occluders,
        frames,
    };
    trace.validate()?;
    Ok(trace)
}

pub fn write_ground_truth(gt: &GroundTruth) -> String {
    let mut out = String::new();
    json_line(
        &mut out,
        &GroundTruthHeader {
            format: GT_FORMAT.into(),
            version: VERSION,
            num_frames: gt.deltas.num_frames,
            object_ids: gt.deltas.object_ids.clone(),
            events: gt.events.clone(),
        },
    );
    for (mind, frame, object_id, delta) in gt.deltas.non_null() {
        json_line(
            &mut out,
            &DeltaRecord {
                mind,
                frame,
                object_id,
                delta,
            },
        );
    }
    out
}

/// Loads events and deltas; per-frame mind states are not stored in the file.
pub fn read_ground_truth(text: &str) -> Result<GroundTruth> {
    let mut lines = records(text);
    let (hl, head) = lines
        .next()
        .ok_or_else(|| Error::format(1, "missing ground-truth header"))?;
    let h: GroundTruthHeader = serde_json::from_str(head).map_err(|e| Error::format(hl, e))?;
    check_format(hl, &h.format, h.version, GT_FORMAT)?;
    if !spans_partition(&h.events, h.num_frames) {
        return Err(Error::format(hl, "events do not partition the frames"));
    }
    if h.object_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::format(hl, "object ids must be strictly increasing"));
    }
    let cells = h
        .num_frames
        .checked_mul(h.object_ids.len().max(1) * MindId::ALL.len());
    if cells.is_none_or(|c| c > 1 << 28) {
        return Err(Error::format(hl, "table too large"));
    }
    let mut deltas = DeltaTable::new(h.num_frames, h.object_ids);
    for (n, l) in lines {
        let r: DeltaRecord = serde_json::from_str(l).map_err(|e| Error::format(n, e))?;
        let slot = deltas
            .slot_of(r.object_id)
            .ok_or_else(|| Error::format(n, format!("unknown object {}", r.object_id)))?;
        if r.frame >= h.num_frames {
            return Err(Error::format(n, format!("frame {} out of range", r.frame)));
        }
        if r.delta == BeliefDelta::Null {
            return Err(Error::format(n, "null deltas are implicit"));
        }
        if deltas.get(r.mind, slot, r.frame) != BeliefDelta::Null {
            return Err(Error::format(n, "duplicate record"));
        }
        deltas.set(r.mind, slot, r.frame, r.delta);
    }
    if !deltas.is_legal() {
        return Err(Error::IllegalDelta("ground truth violates the state machine".into()));
    }
    Ok(GroundTruth {
        events: h.events,
        deltas,
        mind_states: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{simulate, ScenarioSpec};

    fn demo() -> ScenarioSpec {
        ScenarioSpec::from_toml(
            r#"
seed = 3
object_count = 2
[[events]]
kind = "JointAttention"
duration = 30
[[events]]
kind = "NoCommunication"
duration = 20
"#,
        )
        .unwrap()
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let (trace, gt) = simulate(&demo()).unwrap();
        let text = write_trace(&trace);
        let back = read_trace(&text).unwrap();
        assert_eq!(back, trace);
        assert_eq!(write_trace(&back), text);
        let gtext = write_ground_truth(&gt);
        let gback = read_ground_truth(&gtext).unwrap();
        assert_eq!(gback.deltas, gt.deltas);
        assert_eq!(gback.events, gt.events);
        assert_eq!(write_ground_truth(&gback), gtext);
    }

    #[test]
    fn rejects_malformed_records() {
        let (trace, _) = simulate(&demo()).unwrap();
        let text = write_trace(&trace);
        assert!(read_trace("").is_err());
        assert!(read_trace(&text.replacen("fmp-trace", "other", 1)).is_err());
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(1, 2);
        assert!(read_trace(&lines.join("\n")).is_err());
        let extra = text.replacen("\"t\":0,", "\"t\":0,\"bogus\":1,", 1);
        assert!(matches!(read_trace(&extra), Err(Error::Format { line: 2, .. })));
        let gt_head = r#"{"format":"fmp-truth","version":1,"num_frames":4,"object_ids":[0],"events":[{"label":"NoCommunication","start":0,"end":4}]}"#;
        assert!(read_ground_truth(gt_head).is_ok());
        let bad = format!("{gt_head}\n{{\"mind\":\"m1\",\"frame\":9,\"object_id\":0,\"delta\":\"occur\"}}");
        assert!(read_ground_truth(&bad).is_err());
        let illegal = format!("{gt_head}\n{{\"mind\":\"m1\",\"frame\":1,\"object_id\":0,\"delta\":\"update\"}}");
        assert!(matches!(read_ground_truth(&illegal), Err(Error::IllegalDelta(_))));
    }
}
