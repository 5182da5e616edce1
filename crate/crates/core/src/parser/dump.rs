//! Text renderings of a parse: a sectioned dump and a belief record file.

use super::{EventWeights, ParseGraph};
use crate::beliefs::{BeliefDelta, DeltaTable, MindId};
use crate::error::{Error, Result};
use crate::events::{spans_partition, EventSpan};
use crate::world::io::{check_format, json_line, records, VERSION};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const BELIEF_FORMAT: &str = "fmp-beliefs";

/// Sections in fixed order: parse, segments, events, beliefs, energy,
/// parameters. Beliefs list non-null deltas with their log-posterior.
pub fn write_parse_dump(pg: &ParseGraph) -> String {
    let mut out = String::new();
    let ids: Vec<String> = pg.object_ids.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(out, "[parse]");
    let _ = writeln!(out, "frames = {}", pg.num_frames);
    let _ = writeln!(out, "objects = [{}]", ids.join(", "));
    let _ = writeln!(out, "\n[segments]");
    for (s, e) in &pg.segments {
        let _ = writeln!(out, "{s} {e}");
    }
    let _ = writeln!(out, "\n[events]");
    for e in &pg.events {
        let _ = writeln!(
            out,
            "{} {} {} segments {}..{}",
            e.label.name(),
            e.start,
            e.end,
            e.first_segment,
            e.end_segment
        );
    }
    let _ = writeln!(out, "\n[beliefs]");
    for (m, t, id, d) in pg.beliefs.non_null() {
        let slot = pg.beliefs.slot_of(id).expect("listed object");
        let p = pg.posterior(m, slot, t)[d.code()];
        let _ = writeln!(out, "{} {t} {id} {} {}", m.name(), d.name(), p.ln());
    }
    let _ = writeln!(out, "\n[energy]");
    for (name, v) in crate::parser::EnergyBreakdown::NAMES.iter().zip(pg.energy.terms()) {
        let _ = writeln!(out, "{name} = {v}");
    }
    let _ = writeln!(out, "total = {}", pg.energy.total);
    let _ = writeln!(out, "\n[parameters]");
    for (name, v) in EventWeights::NAMES.iter().zip(pg.params.events.to_array()) {
        let _ = writeln!(out, "{name} = {v}");
    }
    let _ = writeln!(out, "be_prior = {}", pg.params.beliefs.be_prior);
    let _ = writeln!(out, "be_lik = {}", pg.params.beliefs.be_lik);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefHeader {
    pub format: String,
    pub version: u32,
    pub num_frames: usize,
    pub object_ids: Vec<u32>,
    pub events: Vec<EventSpan>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeliefRecord {
    mind: MindId,
    frame: usize,
    object_id: u32,
    delta: BeliefDelta,
    log_posterior: f64,
}

/// Predicted events and non-null deltas, one JSON record per line.
pub fn write_belief_output(pg: &ParseGraph) -> String {
    let mut out = String::new();
    json_line(
        &mut out,
        &BeliefHeader {
            format: BELIEF_FORMAT.into(),
            version: VERSION,
            num_frames: pg.num_frames,
            object_ids: pg.object_ids.clone(),
            events: pg.spans(),
        },
    );
    for (mind, frame, object_id, delta) in pg.beliefs.non_null() {
        let slot = pg.beliefs.slot_of(object_id).expect("listed object");
        json_line(
            &mut out,
            &BeliefRecord {
                mind,
                frame,
                object_id,
                delta,
                log_posterior: pg.posterior(mind, slot, frame)[delta.code()].ln(),
            },
        );
    }
    out
}

/// Reads a belief file back into its events and delta table.
pub fn read_belief_output(text: &str) -> Result<(Vec<EventSpan>, DeltaTable)> {
    let mut lines = records(text);
    let (hl, head) = lines.next().ok_or_else(|| Error::format(1, "missing belief header"))?;
    let h: BeliefHeader = serde_json::from_str(head).map_err(|e| Error::format(hl, e))?;
    check_format(hl, &h.format, h.version, BELIEF_FORMAT)?;
    if !spans_partition(&h.events, h.num_frames) {
        return Err(Error::format(hl, "events do not partition the frames"));
    }
    if h.object_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::format(hl, "object ids must be strictly increasing"));
    }
    let cells = h.num_frames.checked_mul(h.object_ids.len().max(1) * MindId::ALL.len());
    if cells.is_none_or(|c| c > 1 << 28) {
        return Err(Error::format(hl, "table too large"));
    }
    let mut deltas = DeltaTable::new(h.num_frames, h.object_ids);
    for (n, l) in lines {
        let r: BeliefRecord = serde_json::from_str(l).map_err(|e| Error::format(n, e))?;
        let slot = deltas
            .slot_of(r.object_id)
            .ok_or_else(|| Error::format(n, format!("unknown object {}", r.object_id)))?;
        if r.frame >= h.num_frames {
            return Err(Error::format(n, format!("frame {} out of range", r.frame)));
        }
        if r.delta == BeliefDelta::Null {
            return Err(Error::format(n, "null deltas are implicit"));
        }
        if !(r.log_posterior <= 0.0) {
            return Err(Error::format(n, "log-posterior must be at most 0"));
        }
        if deltas.get(r.mind, slot, r.frame) != BeliefDelta::Null {
            return Err(Error::format(n, "duplicate record"));
        }
        deltas.set(r.mind, slot, r.frame, r.delta);
    }
    if !deltas.is_legal() {
        return Err(Error::IllegalDelta("belief output violates the state machine".into()));
    }
    Ok((h.events, deltas))
}
