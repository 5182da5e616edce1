use super::{EventLabel, EventPriors, EventSpan};
use crate::error::Result;
use crate::features::{l2, wavelet_summary, FeatureStream, SegmentSummary};

/// `λ1 · N_e / T`.
pub fn aggregation_energy(num_events: usize, trace_length: usize, lambda1: f64) -> f64 {
    if trace_length == 0 {
        return 0.0;
    }
    lambda1 * num_events as f64 / trace_length as f64
}

/// Unweighted event-prior terms; each is 0 when its pair set is empty.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EventPriorTerms {
    /// Mean `-log p_trans` over consecutive pairs.
    pub trans: f64,
    /// Mean `-log p_occ` over unordered pairs.
    pub occ: f64,
}

pub fn event_prior_terms(labels: &[EventLabel], priors: &EventPriors) -> EventPriorTerms {
    let mut terms = EventPriorTerms::default();
    if labels.len() < 2 {
        return terms;
    }
    let mut sum = 0.0;
    for w in labels.windows(2) {
        sum += -priors.trans(w[0], w[1]).ln();
    }
    terms.trans = sum / (labels.len() - 1) as f64;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            sum += -priors.occ(labels[i], labels[j]).ln();
            n += 1;
        }
    }
    terms.occ = sum / n as f64;
    terms
}

pub fn event_prior_energy(labels: &[EventLabel], priors: &EventPriors, lambda2: f64, lambda3: f64) -> f64 {
    let t = event_prior_terms(labels, priors);
    lambda2 * t.trans + lambda3 * t.occ
}

/// Unweighted composition terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompositionTerms {
    /// Mean over events of the per-frame mean successive-frame distance.
    pub within: f64,
    /// Mean summary distance over consecutive event pairs.
    pub trans: f64,
    /// Mean summary distance over all unordered event pairs.
    pub occ: f64,
}

/// Sum of successive-frame distances inside `[start, end)`, divided by its length.
pub fn within_event_distance(stream: &FeatureStream, start: usize, end: usize) -> f64 {
    let mut sum = 0.0;
    for t in start..end.saturating_sub(1) {
        sum += stream.step_distance(t);
    }
    sum / (end - start) as f64
}

pub fn composition_terms(
    events: &[EventSpan],
    stream: &FeatureStream,
    k: usize,
) -> Result<CompositionTerms> {
    let mut terms = CompositionTerms::default();
    if events.is_empty() {
        return Ok(terms);
    }
    let mut within = 0.0;
    for e in events {
        within += within_event_distance(stream, e.start, e.end);
    }
    terms.within = within / events.len() as f64;
    let psi: Vec<SegmentSummary> = events
        .iter()
        .map(|e| wavelet_summary(stream.rows(e.start, e.end), stream.dim, k))
        .collect::<Result<_>>()?;
    if events.len() > 1 {
        let mut sum = 0.0;
        for w in psi.windows(2) {
            sum += l2(&w[0].coeffs, &w[1].coeffs);
        }
        terms.trans = sum / (events.len() - 1) as f64;
        let mut sum = 0.0;
        let mut n = 0usize;
        for i in 0..psi.len() {
            for j in i + 1..psi.len() {
                sum += l2(&psi[i].coeffs, &psi[j].coeffs);
                n += 1;
            }
        }
        terms.occ = sum / n as f64;
    }
    Ok(terms)
}

pub fn composition_energy(
    events: &[EventSpan],
    stream: &FeatureStream,
    k: usize,
    lambda5: f64,
    lambda6: f64,
    lambda7: f64,
) -> Result<f64> {
    let t = composition_terms(events, stream, k)?;
    Ok(lambda5 * t.within - lambda6 * t.trans - lambda7 * t.occ)
}
