//! Joint parsing of events and belief dynamics, and learning the weights.

mod belief;
mod dump;
mod model;
mod search;
mod train;

pub use belief::{
    belief_terms, collect_evidence, decode_beliefs, evidence_code, BeliefDecode, BeliefTerms, EvidenceGrid,
    LikelihoodTable,
};
pub use dump::{read_belief_output, write_belief_output, write_parse_dump, BeliefHeader};
pub use model::{read_model, write_model, BeamParams, FeatureManifest, Losses, ParserModel, MODEL_SCHEMA};
pub use search::{
    beam_search_events, event_energy, exhaustive_parse, Accumulator, EventTerms, Proposal, SearchResult, SpanCache,
    EXHAUSTIVE_LIMIT,
};
pub use train::{
    belief_datasets, classifier_examples, fit, frame_error, theta1_grid, theta2_grid, GridSpec, TrainConfig,
    TrainReport,
};

use crate::beliefs::{DeltaTable, MindId};
use crate::error::{Error, Result};
use crate::events::{spans_partition, EventLabel, EventSpan};
use crate::features::TraceAnalysis;
use crate::segments::propose_segments;
use crate::world::WorldTrace;
use serde::{Deserialize, Serialize};

/// Weights of the event-level energy terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventWeights {
    /// Number of events per frame.
    pub aggr: f64,
    pub evt_trans: f64,
    pub evt_occ: f64,
    pub comp_within: f64,
    pub comp_trans: f64,
    pub comp_occ: f64,
    /// Negative classifier log-probability.
    pub evt_lik: f64,
}

impl EventWeights {
    pub const NAMES: [&'static str; 7] =
        ["aggr", "evt_trans", "evt_occ", "comp_within", "comp_trans", "comp_occ", "evt_lik"];

    pub fn from_array(v: [f64; 7]) -> Self {
        EventWeights {
            aggr: v[0],
            evt_trans: v[1],
            evt_occ: v[2],
            comp_within: v[3],
            comp_trans: v[4],
            comp_occ: v[5],
            evt_lik: v[6],
        }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.aggr,
            self.evt_trans,
            self.evt_occ,
            self.comp_within,
            self.comp_trans,
            self.comp_occ,
            self.evt_lik,
        ]
    }
}

/// Weights of the belief-dynamics terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefWeights {
    pub be_prior: f64,
    pub be_lik: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSets {
    pub events: EventWeights,
    pub beliefs: BeliefWeights,
}

impl Default for ParamSets {
    fn default() -> Self {
        ParamSets {
            events: EventWeights::from_array([1.0; 7]),
            beliefs: BeliefWeights {
                be_prior: 1.0,
                be_lik: 1.0,
            },
        }
    }
}

impl ParamSets {
    pub fn validate(&self) -> Result<()> {
        let all = self.events.to_array().into_iter().chain([self.beliefs.be_prior, self.beliefs.be_lik]);
        for v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Inconsistent(format!("weight {v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub label: EventLabel,
    pub start: usize,
    pub end: usize,
    /// Segments `[first_segment, end_segment)` the event is composed of.
    pub first_segment: usize,
    pub end_segment: usize,
}

impl Event {
    pub fn span(&self) -> EventSpan {
        EventSpan {
            label: self.label,
            start: self.start,
            end: self.end,
        }
    }
}

/// Signed energy contributions; `total` is their sum in field order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub aggr: f64,
    pub evt_trans: f64,
    pub evt_occ: f64,
    pub be_prior: f64,
    pub comp_within: f64,
    pub comp_trans: f64,
    pub comp_occ: f64,
    pub evt_lik: f64,
    pub be_lik: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub const NAMES: [&'static str; 9] = [
        "aggr",
        "evt_trans",
        "evt_occ",
        "be_prior",
        "comp_within",
        "comp_trans",
        "comp_occ",
        "evt_lik",
        "be_lik",
    ];

    pub fn new(ev: &EventTerms, be: &BeliefTerms, w: &BeliefWeights) -> Self {
        let mut b = EnergyBreakdown {
            aggr: ev.aggr,
            evt_trans: ev.evt_trans,
            evt_occ: ev.evt_occ,
            be_prior: -w.be_prior * be.prior_log,
            comp_within: ev.comp_within,
            comp_trans: ev.comp_trans,
            comp_occ: ev.comp_occ,
            evt_lik: ev.evt_lik,
            be_lik: -w.be_lik * be.lik_mean,
            total: 0.0,
        };
        b.total = b.terms().iter().sum();
        b
    }

    pub fn terms(&self) -> [f64; 9] {
        [
            self.aggr,
            self.evt_trans,
            self.evt_occ,
            self.be_prior,
            self.comp_within,
            self.comp_trans,
            self.comp_occ,
            self.evt_lik,
            self.be_lik,
        ]
    }
}

/// Parse of one trace: segments, events, the belief layer and its energy.
/// Frames, entities and attention graphs live in the trace analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseGraph {
    pub num_frames: usize,
    pub object_ids: Vec<u32>,
    pub segments: Vec<(usize, usize)>,
    pub events: Vec<Event>,
    pub beliefs: DeltaTable,
    /// Posterior marginals over the four deltas, laid out like `beliefs`.
    pub posteriors: Vec<[f64; 4]>,
    pub energy: EnergyBreakdown,
    pub params: ParamSets,
}

impl ParseGraph {
    pub fn spans(&self) -> Vec<EventSpan> {
        self.events.iter().map(Event::span).collect()
    }

    pub fn posterior(&self, m: MindId, slot: usize, t: usize) -> [f64; 4] {
        self.posteriors[(m.index() * self.object_ids.len() + slot) * self.num_frames + t]
    }

    /// Checks the layer invariants: events partition the trace along segment
    /// boundaries and the belief layer is legal and sized to the trace.
    pub fn check(&self) -> Result<()> {
        let spans = self.spans();
        if !spans_partition(&spans, self.num_frames) {
            return Err(Error::Inconsistent("events do not partition the trace".into()));
        }
        for e in &self.events {
            let ok = e.first_segment < e.end_segment
                && e.end_segment <= self.segments.len()
                && self.segments[e.first_segment].0 == e.start
                && self.segments[e.end_segment - 1].1 == e.end;
            if !ok {
                return Err(Error::Inconsistent("event does not align with its segments".into()));
            }
        }
        if self.beliefs.num_frames != self.num_frames || self.beliefs.object_ids != self.object_ids {
            return Err(Error::Inconsistent("belief layer does not match the trace".into()));
        }
        if !self.beliefs.is_legal() {
            return Err(Error::IllegalDelta("belief layer violates the state machine".into()));
        }
        Ok(())
    }
}

/// Per-trace inputs that do not depend on the weights.
pub struct ParseContext<'a> {
    pub trace: &'a WorldTrace,
    pub analysis: TraceAnalysis,
    pub segments: Vec<(usize, usize)>,
    pub cache: SpanCache,
}

impl<'a> ParseContext<'a> {
    pub fn new(trace: &'a WorldTrace, model: &ParserModel) -> Result<Self> {
        let analysis = TraceAnalysis::new(trace, &model.perception)?;
        Self::with_analysis(trace, analysis, model)
    }

    pub fn with_analysis(trace: &'a WorldTrace, analysis: TraceAnalysis, model: &ParserModel) -> Result<Self> {
        let segments: Vec<(usize, usize)> = propose_segments(&analysis.stream, &model.segment)?
            .iter()
            .map(|s| (s.start, s.end))
            .collect();
        let cache = SpanCache::new(&analysis, &segments, model.beam.m, &model.classifier, model.segment.k)?;
        Ok(ParseContext {
            trace,
            analysis,
            segments,
            cache,
        })
    }

    pub fn events_from(&self, found: &[Proposal]) -> Vec<Event> {
        found
            .iter()
            .map(|p| {
                let (start, end) = self.cache.frames(p.first, p.count);
                Event {
                    label: p.label,
                    start,
                    end,
                    first_segment: p.first,
                    end_segment: p.first + p.count,
                }
            })
            .collect()
    }

    pub fn search(&self, model: &ParserModel, w: &EventWeights) -> Vec<Event> {
        let r = beam_search_events(&self.cache, &model.event_priors, w, model.beam.n, model.beam.m);
        self.events_from(&r.events)
    }

    /// Decodes beliefs under `events` and assembles the parse graph.
    pub fn assemble(&self, model: &ParserModel, params: &ParamSets, events: Vec<Event>) -> Result<ParseGraph> {
        let spans: Vec<EventSpan> = events.iter().map(Event::span).collect();
        let grid = collect_evidence(self.trace, &self.analysis, &spans)?;
        let table = LikelihoodTable::new(&model.belief.likelihood);
        let dec = decode_beliefs(&grid, &spans, &model.belief, &table, &params.beliefs, true);
        let mut pg = ParseGraph {
            num_frames: self.analysis.num_frames,
            object_ids: self.analysis.object_ids.clone(),
            segments: self.segments.clone(),
            events,
            beliefs: dec.deltas,
            posteriors: dec.posteriors,
            energy: EnergyBreakdown::default(),
            params: *params,
        };
        pg.check()?;
        pg.energy = self.energy_with(&pg, model, params, &grid, &table)?;
        Ok(pg)
    }

    pub fn parse(&self, model: &ParserModel, params: &ParamSets) -> Result<ParseGraph> {
        params.validate()?;
        let events = self.search(model, &params.events);
        self.assemble(model, params, events)
    }

    fn energy_with(
        &self,
        pg: &ParseGraph,
        model: &ParserModel,
        params: &ParamSets,
        grid: &EvidenceGrid,
        table: &LikelihoodTable,
    ) -> Result<EnergyBreakdown> {
        let seq: Vec<Proposal> = pg
            .events
            .iter()
            .map(|e| Proposal {
                first: e.first_segment,
                count: e.end_segment - e.first_segment,
                label: e.label,
            })
            .collect();
        if seq.iter().any(|p| p.count > self.cache.width) {
            return Err(Error::Inconsistent(format!(
                "event spans more than {} segments",
                self.cache.width
            )));
        }
        let ev = event_energy(&seq, &self.cache, &model.event_priors, &params.events);
        let be = belief_terms(grid, &pg.spans(), &pg.beliefs, &model.belief, table)?;
        Ok(EnergyBreakdown::new(&ev, &be, &params.beliefs))
    }

    /// Energy of an arbitrary parse graph over this context's segments.
    pub fn total_energy(&self, pg: &ParseGraph, model: &ParserModel, params: &ParamSets) -> Result<EnergyBreakdown> {
        pg.check()?;
        if pg.segments != self.segments {
            return Err(Error::Inconsistent("parse graph segments differ from the proposals".into()));
        }
        let grid = collect_evidence(self.trace, &self.analysis, &pg.spans())?;
        let table = LikelihoodTable::new(&model.belief.likelihood);
        self.energy_with(pg, model, params, &grid, &table)
    }
}

/// Full pipeline with the model's fitted weights.
pub fn parse(trace: &WorldTrace, model: &ParserModel) -> Result<ParseGraph> {
    ParseContext::new(trace, model)?.parse(model, &model.params)
}
