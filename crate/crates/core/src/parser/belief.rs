use super::BeliefWeights;
use crate::beliefs::{
    chain_posteriors, encode_features, hist_from_index, hist_index, infer_chain, BeliefDelta, BeliefLikelihood,
    BeliefModel, ChainInput, ChainScoring, DeltaTable, Evidence, EvidenceTracker, History, MindId, HIST_STATES,
};
use crate::error::{Error, Result};
use crate::events::{spans_partition, EventLabel, EventSpan};
use crate::features::TraceAnalysis;
use crate::world::WorldTrace;

/// Evidence for every (frame, mind, object slot).
#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceGrid {
    pub num_frames: usize,
    pub objects: usize,
    pub object_ids: Vec<u32>,
    data: Vec<Evidence>,
}

impl EvidenceGrid {
    pub fn get(&self, t: usize, m: MindId, slot: usize) -> Evidence {
        self.data[(t * MindId::ALL.len() + m.index()) * self.objects + slot]
    }
}

/// Runs the observation rules along `spans`; the common mind only moves
/// inside Joint Attention and mutual gaze is reset at every event start.
pub fn collect_evidence(trace: &WorldTrace, analysis: &TraceAnalysis, spans: &[EventSpan]) -> Result<EvidenceGrid> {
    let n = trace.frames.len();
    if !spans_partition(spans, n) || analysis.num_frames != n {
        return Err(Error::Inconsistent("event spans do not partition the trace".into()));
    }
    let objects = analysis.object_ids.len();
    let mut tracker = EvidenceTracker::new(analysis.object_ids.clone(), true);
    let mut data = Vec::with_capacity(n * MindId::ALL.len() * objects);
    for span in spans {
        tracker.begin_event(span.label);
        for t in span.start..span.end {
            let steps = tracker.step(&trace.frames[t], &analysis.percepts[t], &analysis.graphs[t], &trace.occluders);
            data.extend(steps.into_iter().map(|s| s.evidence));
        }
    }
    Ok(EvidenceGrid {
        num_frames: n,
        objects,
        object_ids: analysis.object_ids.clone(),
        data,
    })
}

pub fn evidence_code(ev: &Evidence) -> usize {
    ev.edge as usize | (ev.observed as usize) << 1 | (ev.moved as usize) << 2 | (ev.missing as usize) << 3
}

fn evidence_from_code(c: usize) -> Evidence {
    Evidence {
        edge: c & 1 != 0,
        observed: c & 2 != 0,
        moved: c & 4 != 0,
        missing: c & 8 != 0,
    }
}

/// The belief likelihood tabulated over its finite input space:
/// mind × label × evidence code × history state.
#[derive(Clone, Debug)]
pub struct LikelihoodTable {
    data: Vec<[f64; 4]>,
}

impl LikelihoodTable {
    pub fn new(lik: &BeliefLikelihood) -> Self {
        let mut data = Vec::with_capacity(5 * 3 * 16 * HIST_STATES);
        for m in MindId::ALL {
            for label in EventLabel::ALL {
                for code in 0..16 {
                    let ev = evidence_from_code(code);
                    for h in 0..HIST_STATES {
                        data.push(lik.log_probs(m, &encode_features(label, &ev, &hist_from_index(h))));
                    }
                }
            }
        }
        LikelihoodTable { data }
    }

    pub fn get(&self, m: MindId, label: EventLabel, code: usize, hist: usize) -> &[f64; 4] {
        &self.data[((m.index() * 3 + label.index()) * 16 + code) * HIST_STATES + hist]
    }

    fn potentials(&self, grid: &EvidenceGrid, m: MindId, slot: usize, span: &EventSpan) -> Vec<[[f64; 4]; HIST_STATES]> {
        (span.start..span.end)
            .map(|t| {
                let code = evidence_code(&grid.get(t, m, slot));
                std::array::from_fn(|h| *self.get(m, span.label, code, h))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefDecode {
    pub deltas: DeltaTable,
    /// Laid out like `deltas`; empty unless requested.
    pub posteriors: Vec<[f64; 4]>,
    /// Sum of the weighted chain scores.
    pub score: f64,
}

/// MAP decoding of every (mind, object) chain, event by event. Tracking
/// status carries over from one event to the next.
pub fn decode_beliefs(
    grid: &EvidenceGrid,
    spans: &[EventSpan],
    model: &BeliefModel,
    table: &LikelihoodTable,
    w: &BeliefWeights,
    posteriors: bool,
) -> BeliefDecode {
    let n = grid.objects;
    let len = grid.num_frames;
    let mut deltas = DeltaTable::new(len, grid.object_ids.clone());
    let mut post = if posteriors {
        vec![[0.0; 4]; MindId::ALL.len() * n * len]
    } else {
        Vec::new()
    };
    let sc = ChainScoring {
        be_prior: w.be_prior,
        be_lik: w.be_lik,
        marginal_first_frame_only: model.marginal_first_frame_only,
    };
    let mut score = 0.0;
    for m in MindId::ALL {
        for slot in 0..n {
            let mut tracked = false;
            for span in spans {
                let pot = table.potentials(grid, m, slot, span);
                let input = ChainInput {
                    potentials: &pot,
                    prior: model.prior.tables(m, span.label),
                    initially_tracked: tracked,
                };
                let r = infer_chain(&input, &sc);
                deltas.chain_mut(m, slot)[span.start..span.end].copy_from_slice(&r.deltas);
                if posteriors {
                    let base = (m.index() * n + slot) * len;
                    for (i, p) in chain_posteriors(&input, &sc).into_iter().enumerate() {
                        post[base + span.start + i] = p;
                    }
                }
                tracked = r.final_tracked(tracked);
                score += r.score;
            }
        }
    }
    BeliefDecode {
        deltas,
        posteriors: post,
        score,
    }
}

/// Unweighted belief terms of a delta table under `spans`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BeliefTerms {
    /// Sum over events and chains of the prior log-probability.
    pub prior_log: f64,
    /// Mean over events of the per-frame log-likelihood summed over chains.
    pub lik_mean: f64,
}

pub fn belief_terms(
    grid: &EvidenceGrid,
    spans: &[EventSpan],
    deltas: &DeltaTable,
    model: &BeliefModel,
    table: &LikelihoodTable,
) -> Result<BeliefTerms> {
    let n = grid.objects;
    if deltas.num_frames != grid.num_frames || deltas.object_ids != grid.object_ids {
        return Err(Error::Inconsistent("belief table does not match the evidence".into()));
    }
    let mut tracked = vec![false; MindId::ALL.len() * n];
    let mut terms = BeliefTerms::default();
    if spans.is_empty() {
        return Ok(terms);
    }
    for span in spans {
        let mut lik = 0.0;
        for m in MindId::ALL {
            let tables = model.prior.tables(m, span.label);
            for slot in 0..n {
                let mut h = History::start(tracked[m.index() * n + slot]);
                let mut prev: Option<BeliefDelta> = None;
                for t in span.start..span.end {
                    let d = deltas.get(m, slot, t);
                    if !d.legal_from(h.tracked) {
                        return Err(Error::IllegalDelta(format!("{d} at frame {t} for {}", m.name())));
                    }
                    if t == span.start || !model.marginal_first_frame_only {
                        terms.prior_log += tables.marginal[d.code()].ln();
                    }
                    if let Some(p) = prev {
                        terms.prior_log += tables.trans[p.code()][d.code()].ln();
                    }
                    let code = evidence_code(&grid.get(t, m, slot));
                    lik += table.get(m, span.label, code, hist_index(h))[d.code()];
                    h = h.after(d);
                    prev = Some(d);
                }
                tracked[m.index() * n + slot] = h.tracked;
            }
        }
        terms.lik_mean += lik / span.len() as f64;
    }
    terms.lik_mean /= spans.len() as f64;
    Ok(terms)
}
