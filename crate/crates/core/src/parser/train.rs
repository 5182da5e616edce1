use super::{
    collect_evidence, decode_beliefs, model::FeatureManifest, BeamParams, BeliefWeights, EventWeights, Losses,
    LikelihoodTable, ParamSets, ParseContext, ParserModel, MODEL_SCHEMA,
};
use crate::beliefs::{
    encode_features, fit_belief_prior, BeliefLikelihood, BeliefModel, EvidenceTracker, History, MindId,
    BELIEF_FEATURE_DIM,
};
use crate::error::{Error, Result};
use crate::eval::MetricsAccumulator;
use crate::events::{fit_priors, frame_labels, EventClassifier, EventLabel, EventSpan};
use crate::features::{Perception, TraceAnalysis};
use crate::segments::{median_window_distance, propose_segments, SegmentParams};
use crate::softmax::{Dataset, TrainParams};
use crate::world::{GroundTruth, WorldTrace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Candidate values for each event-level weight.
    pub theta1_values: Vec<f64>,
    pub theta2_values: Vec<f64>,
    /// Event-level combinations beyond this are sub-sampled.
    pub max_theta1: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        let v = vec![0.0, 0.1, 0.5, 1.0, 2.0, 5.0];
        GridSpec {
            theta1_values: v.clone(),
            theta2_values: v,
            max_theta1: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub perception: Perception,
    pub segment: SegmentParams,
    /// Replace `segment.tau` by the median adjacent-window distance of the corpus.
    pub tau_from_corpus: bool,
    pub beam: BeamParams,
    pub event_alpha: f64,
    pub belief_alpha: f64,
    pub classifier: TrainParams,
    pub belief: TrainParams,
    pub marginal_first_frame_only: bool,
    /// Reweight belief examples so every delta class carries equal total weight.
    pub class_balance: bool,
    pub grid: GridSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            perception: Perception::default(),
            segment: SegmentParams::default(),
            tau_from_corpus: true,
            beam: BeamParams::default(),
            event_alpha: 1.0,
            belief_alpha: 1.0,
            classifier: TrainParams::default(),
            belief: TrainParams::default(),
            marginal_first_frame_only: false,
            class_balance: true,
            grid: GridSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub traces: usize,
    pub frames: usize,
    pub tau: f64,
    pub theta1_candidates: usize,
    pub theta2_candidates: usize,
    pub params: ParamSets,
    pub losses: Losses,
}

/// Every combination of the seven event weights in lexicographic grid order,
/// sub-sampled without replacement (order kept) when it exceeds the cap.
pub fn theta1_grid(spec: &GridSpec) -> Result<Vec<EventWeights>> {
    let v = &spec.theta1_values;
    if v.is_empty() || spec.max_theta1 == 0 {
        return Err(Error::EmptyGrid);
    }
    check_values(v)?;
    let total = v
        .len()
        .checked_pow(7)
        .ok_or_else(|| Error::Inconsistent("event weight grid too large".into()))?;
    let idx: Vec<usize> = if total <= spec.max_theta1 {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut s = rand::seq::index::sample(&mut rng, total, spec.max_theta1).into_vec();
        s.sort_unstable();
        s
    };
    Ok(idx
        .into_iter()
        .map(|mut i| {
            let mut w = [0.0; 7];
            for slot in w.iter_mut().rev() {
                *slot = v[i % v.len()];
                i /= v.len();
            }
            EventWeights::from_array(w)
        })
        .collect())
}

pub fn theta2_grid(spec: &GridSpec) -> Result<Vec<BeliefWeights>> {
    let v = &spec.theta2_values;
    if v.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_values(v)?;
    Ok(v.iter()
        .flat_map(|&a| v.iter().map(move |&b| BeliefWeights { be_prior: a, be_lik: b }))
        .collect())
}

fn check_values(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Inconsistent("grid values must be finite and non-negative".into()));
    }
    Ok(())
}

/// Misclassified frames and total frames.
pub fn frame_error(predicted: &[EventSpan], truth: &[EventSpan], num_frames: usize) -> (usize, usize) {
    let p = frame_labels(predicted, num_frames);
    let t = frame_labels(truth, num_frames);
    (p.iter().zip(&t).filter(|(a, b)| a != b).count(), num_frames)
}

/// Classifier examples: every ground-truth event, plus every run of up to
/// `width` proposed segments under its majority label, weighted by purity.
pub fn classifier_examples(
    analysis: &TraceAnalysis,
    segments: &[(usize, usize)],
    truth: &[EventSpan],
    width: usize,
) -> Vec<(Vec<f64>, EventLabel, f64)> {
    let mut out: Vec<(Vec<f64>, EventLabel, f64)> = truth
        .iter()
        .map(|e| (analysis.pooled_span(e.start, e.end), e.label, 1.0))
        .collect();
    let labels = frame_labels(truth, analysis.num_frames);
    for i in 0..segments.len() {
        for w in 1..=width.min(segments.len() - i) {
            let (start, end) = (segments[i].0, segments[i + w - 1].1);
            let mut counts = [0usize; 3];
            for l in labels[start..end].iter().flatten() {
                counts[l.index()] += 1;
            }
            let best = (0..3).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
            let purity = counts[best] as f64 / (end - start) as f64;
            out.push((analysis.pooled_span(start, end), EventLabel::ALL[best], purity));
        }
    }
    out
}

/// Per-mind likelihood examples from ground truth, with identical rows
/// collapsed into one weighted row. With `balance`, each delta class present
/// gets the same total weight.
pub fn belief_datasets(items: &[(&WorldTrace, &TraceAnalysis, &GroundTruth)], balance: bool) -> Vec<Dataset> {
    let mut counts: Vec<BTreeMap<(u16, usize), f64>> = vec![BTreeMap::new(); MindId::ALL.len()];
    for (trace, analysis, truth) in items {
        let n = analysis.object_ids.len();
        let mut tracker = EvidenceTracker::new(analysis.object_ids.clone(), true);
        let mut tracked = vec![false; MindId::ALL.len() * n];
        for span in &truth.events {
            tracker.begin_event(span.label);
            let mut hist: Vec<History> = tracked.iter().map(|&t| History::start(t)).collect();
            for t in span.start..span.end {
                let steps = tracker.step(&trace.frames[t], &analysis.percepts[t], &analysis.graphs[t], &trace.occluders);
                for (k, st) in steps.iter().enumerate() {
                    let m = MindId::ALL[k / n];
                    let d = truth.deltas.get(m, k % n, t);
                    let f = encode_features(span.label, &st.evidence, &hist[k]);
                    let key = f.iter().enumerate().fold(0u16, |a, (i, &v)| a | ((v as u16) << i));
                    *counts[m.index()].entry((key, d.code())).or_default() += 1.0;
                    hist[k] = hist[k].after(d);
                }
            }
            for (tr, h) in tracked.iter_mut().zip(&hist) {
                *tr = h.tracked;
            }
        }
    }
    counts
        .into_iter()
        .map(|c| {
            let mut class_total = [0.0; 4];
            for (&(_, y), w) in &c {
                class_total[y] += w;
            }
            let total: f64 = class_total.iter().sum();
            let present = class_total.iter().filter(|&&v| v > 0.0).count() as f64;
            let mut d = Dataset::new(BELIEF_FEATURE_DIM);
            for ((key, y), w) in c {
                let w = if balance { w * total / (present * class_total[y]) } else { w };
                let x: Vec<f64> = (0..BELIEF_FEATURE_DIM).map(|i| ((key >> i) & 1) as f64).collect();
                d.push(&x, y, w);
            }
            d
        })
        .collect()
}

/// Fits priors and classifiers on ground truth, then grid-searches the event
/// weights against frame labels and the belief weights against deltas.
pub fn fit(corpus: &[(&WorldTrace, &GroundTruth)], cfg: &TrainConfig) -> Result<(ParserModel, TrainReport)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let theta1 = theta1_grid(&cfg.grid)?;
    let theta2 = theta2_grid(&cfg.grid)?;
    if cfg.beam.n == 0 || cfg.beam.m == 0 {
        return Err(Error::Inconsistent("beam width and merge span must be positive".into()));
    }
    let analyses: Vec<TraceAnalysis> = corpus
        .par_iter()
        .map(|(trace, _)| TraceAnalysis::new(trace, &cfg.perception))
        .collect::<Result<_>>()?;
    let joints = analyses[0].joints;
    if analyses.iter().any(|a| a.joints != joints) {
        return Err(Error::Inconsistent("training traces differ in joint count".into()));
    }
    let mut segment = cfg.segment;
    if cfg.tau_from_corpus {
        let streams: Vec<_> = analyses.iter().map(|a| &a.stream).collect();
        segment.tau = median_window_distance(&streams, &segment)?;
    }

    let sequences: Vec<Vec<EventLabel>> = corpus
        .iter()
        .map(|(_, t)| t.events.iter().map(|e| e.label).collect())
        .collect();
    let event_priors = fit_priors(&sequences, cfg.event_alpha)?;
    let segs: Vec<Vec<(usize, usize)>> = analyses
        .par_iter()
        .map(|a| {
            propose_segments(&a.stream, &segment).map(|v| v.iter().map(|s| (s.start, s.end)).collect())
        })
        .collect::<Result<_>>()?;
    let mut examples = Vec::new();
    for ((a, s), (_, truth)) in analyses.iter().zip(&segs).zip(corpus) {
        examples.extend(classifier_examples(a, s, &truth.events, cfg.beam.m));
    }
    let classifier = EventClassifier::fit(&examples, &cfg.classifier)?;

    let pairs: Vec<_> = corpus.iter().map(|(_, t)| (&t.deltas, t.events.as_slice())).collect();
    let prior = fit_belief_prior(&pairs, cfg.belief_alpha)?;
    let items: Vec<_> = corpus.iter().zip(&analyses).map(|((tr, gt), a)| (*tr, a, *gt)).collect();
    let likelihood = BeliefLikelihood::fit(&belief_datasets(&items, cfg.class_balance), &cfg.belief);

    let mut model = ParserModel {
        schema: MODEL_SCHEMA,
        labels: EventLabel::ALL.iter().map(|l| l.name().to_string()).collect(),
        manifest: FeatureManifest::new(joints),
        perception: cfg.perception,
        segment,
        beam: cfg.beam,
        event_priors,
        classifier,
        belief: BeliefModel {
            prior,
            likelihood,
            marginal_first_frame_only: cfg.marginal_first_frame_only,
        },
        params: ParamSets::default(),
        grid: cfg.grid.clone(),
        losses: Losses::default(),
    };

    let contexts: Vec<ParseContext> = corpus
        .par_iter()
        .zip(analyses)
        .map(|((trace, _), a)| ParseContext::with_analysis(trace, a, &model))
        .collect::<Result<_>>()?;
    let frames: usize = contexts.iter().map(|c| c.analysis.num_frames).sum();
    log::info!(
        "{} traces, {frames} frames, tau {:.4}; searching {} event and {} belief weight sets",
        corpus.len(),
        segment.tau,
        theta1.len(),
        theta2.len()
    );

    let l1s: Vec<f64> = theta1
        .par_iter()
        .map(|w| {
            let mut wrong = 0;
            for (ctx, (_, truth)) in contexts.iter().zip(corpus) {
                let spans: Vec<EventSpan> = ctx.search(&model, w).iter().map(|e| e.span()).collect();
                wrong += frame_error(&spans, &truth.events, ctx.analysis.num_frames).0;
            }
            wrong as f64 / frames as f64
        })
        .collect();
    let best1 = argmin(&l1s);
    model.params.events = theta1[best1];
    log::info!("event weights {:?}, frame error {:.4}", theta1[best1].to_array(), l1s[best1]);

    let predicted: Vec<Vec<EventSpan>> = contexts
        .par_iter()
        .map(|ctx| ctx.search(&model, &model.params.events).iter().map(|e| e.span()).collect())
        .collect();
    let grids = contexts
        .par_iter()
        .zip(&predicted)
        .map(|(ctx, spans)| collect_evidence(ctx.trace, &ctx.analysis, spans))
        .collect::<Result<Vec<_>>>()?;
    let table = LikelihoodTable::new(&model.belief.likelihood);
    let l2s: Vec<f64> = theta2
        .par_iter()
        .map(|w| {
            let mut acc = MetricsAccumulator::default();
            for ((g, spans), (_, truth)) in grids.iter().zip(&predicted).zip(corpus) {
                let dec = decode_beliefs(g, spans, &model.belief, &table, w, false);
                acc.add(&dec.deltas, &truth.deltas)?;
            }
            Ok(1.0 - acc.report().avg_f1)
        })
        .collect::<Result<_>>()?;
    let best2 = argmin(&l2s);
    model.params.beliefs = theta2[best2];
    log::info!("belief weights {:?}, one minus macro F1 {:.4}", theta2[best2], l2s[best2]);
    model.losses = Losses {
        l1: l1s[best1],
        l2: l2s[best2],
    };
    let report = TrainReport {
        traces: corpus.len(),
        frames,
        tau: segment.tau,
        theta1_candidates: theta1.len(),
        theta2_candidates: theta2.len(),
        params: model.params,
        losses: model.losses,
    };
    Ok((model, report))
}

/// First index of the minimum.
fn argmin(v: &[f64]) -> usize {
    (1..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}
