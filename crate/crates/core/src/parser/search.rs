//! Event-level search: per-span caches, the incremental energy accumulator
//! shared by beam and exhaustive search, and both searches.

use super::EventWeights;
use crate::error::{Error, Result};
use crate::events::{event_log_likelihood, within_event_distance, EventClassifier, EventLabel, EventPriors};
use crate::features::{l2, wavelet::summary_unchecked, TraceAnalysis};
use std::cmp::Ordering;

/// Largest segment count `exhaustive_parse` accepts.
pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Clone, Debug)]
struct SpanStats {
    within: f64,
    loglik: [f64; 3],
}

/// Everything the event energy needs about each candidate span, where a span
/// is a run of `1..=width` consecutive segments. Independent of the weights.
#[derive(Clone, Debug)]
pub struct SpanCache {
    pub num_frames: usize,
    /// Segment boundaries, `bounds[0] = 0` and `bounds[S] = T`.
    pub bounds: Vec<usize>,
    pub width: usize,
    stats: Vec<SpanStats>,
    /// Summary distance between every pair of cached spans.
    dist: Vec<f64>,
}

impl SpanCache {
    pub fn new(
        analysis: &TraceAnalysis,
        segments: &[(usize, usize)],
        width: usize,
        classifier: &EventClassifier,
        k: usize,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyStream);
        }
        let mut bounds = vec![0];
        for &(s, e) in segments {
            if s != *bounds.last().unwrap() || e <= s {
                return Err(Error::Inconsistent("segments do not partition the trace".into()));
            }
            bounds.push(e);
        }
        if *bounds.last().unwrap() != analysis.num_frames {
            return Err(Error::Inconsistent("segments do not cover the trace".into()));
        }
        let nseg = segments.len();
        let width = width.clamp(1, nseg);
        let stream = &analysis.stream;
        let mut stats = Vec::with_capacity(nseg * width);
        let mut psi = Vec::with_capacity(nseg * width);
        for i in 0..nseg {
            for w in 1..=width {
                let (start, end) = (bounds[i], bounds[(i + w).min(nseg)]);
                if i + w > nseg {
                    stats.push(SpanStats { within: 0.0, loglik: [0.0; 3] });
                    psi.push(Vec::new());
                    continue;
                }
                stats.push(SpanStats {
                    within: within_event_distance(stream, start, end),
                    loglik: event_log_likelihood(classifier, analysis, start, end)?,
                });
                psi.push(if end - start >= 2 {
                    summary_unchecked(stream.rows(start, end), stream.dim, k).coeffs
                } else {
                    return Err(Error::WindowTooShort(end - start));
                });
            }
        }
        let n = psi.len();
        let mut dist = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                if psi[a].is_empty() || psi[b].is_empty() {
                    continue;
                }
                let d = l2(&psi[a], &psi[b]);
                dist[a * n + b] = d;
                dist[b * n + a] = d;
            }
        }
        Ok(SpanCache {
            num_frames: analysis.num_frames,
            bounds,
            width,
            stats,
            dist,
        })
    }

    /// Builds a cache from precomputed span statistics, given per span as
    /// `(within, log-likelihoods, summary)` in `span_id` order.
    pub fn from_stats(bounds: Vec<usize>, width: usize, spans: Vec<(f64, [f64; 3], Vec<f64>)>) -> Result<Self> {
        let nseg = bounds.len().saturating_sub(1);
        if nseg == 0 || bounds[0] != 0 || bounds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Inconsistent("bad segment bounds".into()));
        }
        if width == 0 || width > nseg || spans.len() != nseg * width {
            return Err(Error::Inconsistent("span statistics do not match bounds".into()));
        }
        let n = spans.len();
        let mut dist = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let d = l2(&spans[a].2, &spans[b].2);
                dist[a * n + b] = d;
                dist[b * n + a] = d;
            }
        }
        Ok(SpanCache {
            num_frames: *bounds.last().unwrap(),
            bounds,
            width,
            stats: spans
                .into_iter()
                .map(|(within, loglik, _)| SpanStats { within, loglik })
                .collect(),
            dist,
        })
    }

    pub fn num_segments(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Id of the span starting at segment `first` and covering `count` segments.
    pub fn span_id(&self, first: usize, count: usize) -> usize {
        debug_assert!(count >= 1 && count <= self.width && first + count <= self.num_segments());
        first * self.width + count - 1
    }

    pub fn frames(&self, first: usize, count: usize) -> (usize, usize) {
        (self.bounds[first], self.bounds[first + count])
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.stats.len() + b]
    }
}

/// One event of a search state: segments `[first, first + count)` under `label`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Proposal {
    pub first: usize,
    pub count: usize,
    pub label: EventLabel,
}

/// Running sums of the unweighted event-energy terms. Beam search, exhaustive
/// search and `event_energy` all fold events through `push` in sequence order,
/// so equal sequences get bit-identical energies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub events: usize,
    pub prior_trans: f64,
    pub prior_occ: f64,
    pub within: f64,
    pub comp_trans: f64,
    pub comp_occ: f64,
    pub loglik: f64,
}

/// The seven weighted event-level terms in breakdown order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EventTerms {
    pub aggr: f64,
    pub evt_trans: f64,
    pub evt_occ: f64,
    pub comp_within: f64,
    pub comp_trans: f64,
    pub comp_occ: f64,
    pub evt_lik: f64,
}

impl EventTerms {
    pub fn sum(&self) -> f64 {
        self.aggr + self.evt_trans + self.evt_occ + self.comp_within + self.comp_trans + self.comp_occ + self.evt_lik
    }
}

impl Accumulator {
    pub fn push(&mut self, prev: &[Proposal], next: Proposal, cache: &SpanCache, priors: &EventPriors) {
        let id = cache.span_id(next.first, next.count);
        let st = &cache.stats[id];
        if let Some(last) = prev.last() {
            self.prior_trans += -priors.trans(last.label, next.label).ln();
            self.comp_trans += cache.distance(cache.span_id(last.first, last.count), id);
        }
        for p in prev {
            self.prior_occ += -priors.occ(p.label, next.label).ln();
            self.comp_occ += cache.distance(cache.span_id(p.first, p.count), id);
        }
        self.within += st.within;
        self.loglik += st.loglik[next.label.index()];
        self.events += 1;
    }

    pub fn terms(&self, w: &EventWeights, num_frames: usize) -> EventTerms {
        let n = self.events as f64;
        let mut t = EventTerms::default();
        if self.events == 0 {
            return t;
        }
        t.aggr = w.aggr * n / num_frames as f64;
        t.comp_within = w.comp_within * self.within / n;
        t.evt_lik = -w.evt_lik * self.loglik / n;
        if self.events > 1 {
            let pairs = n * (n - 1.0) / 2.0;
            t.evt_trans = w.evt_trans * self.prior_trans / (n - 1.0);
            t.evt_occ = w.evt_occ * self.prior_occ / pairs;
            t.comp_trans = -w.comp_trans * self.comp_trans / (n - 1.0);
            t.comp_occ = -w.comp_occ * self.comp_occ / pairs;
        }
        t
    }
}

/// Event-level energy of a complete or partial sequence.
pub fn event_energy(seq: &[Proposal], cache: &SpanCache, priors: &EventPriors, w: &EventWeights) -> EventTerms {
    let mut acc = Accumulator::default();
    for i in 0..seq.len() {
        acc.push(&seq[..i], seq[i], cache, priors);
    }
    acc.terms(w, cache.num_frames)
}

#[derive(Clone, Debug)]
struct Entry {
    seq: Vec<Proposal>,
    consumed: usize,
    acc: Accumulator,
    energy: f64,
}

/// Lower energy first, then fewer events, then labels, then boundaries.
fn rank(a: &Entry, b: &Entry) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then(a.seq.len().cmp(&b.seq.len()))
        .then_with(|| {
            let la = a.seq.iter().map(|p| p.label.index());
            la.cmp(b.seq.iter().map(|p| p.label.index()))
        })
        .then_with(|| {
            let ea = a.seq.iter().map(|p| p.first + p.count);
            ea.cmp(b.seq.iter().map(|p| p.first + p.count))
        })
}

/// Search outcome: the chosen sequence and its weighted event terms.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub events: Vec<Proposal>,
    pub terms: EventTerms,
    pub energy: f64,
}

impl SearchResult {
    fn from_entry(e: Entry, w: &EventWeights, num_frames: usize) -> Self {
        let terms = e.acc.terms(w, num_frames);
        SearchResult {
            events: e.seq,
            terms,
            energy: e.energy,
        }
    }
}

fn extend(e: &Entry, p: Proposal, cache: &SpanCache, priors: &EventPriors, w: &EventWeights) -> Entry {
    let mut acc = e.acc.clone();
    acc.push(&e.seq, p, cache, priors);
    let mut seq = e.seq.clone();
    seq.push(p);
    Entry {
        energy: acc.terms(w, cache.num_frames).sum(),
        consumed: p.first + p.count,
        seq,
        acc,
    }
}

/// Beam search over segment merges: each entry proposes its next event from
/// the next `1..=m` unconsumed segments under every label, and the `n` best
/// entries survive each round. Stops once no entry can extend.
pub fn beam_search_events(
    cache: &SpanCache,
    priors: &EventPriors,
    w: &EventWeights,
    n: usize,
    m: usize,
) -> SearchResult {
    let nseg = cache.num_segments();
    let m = m.clamp(1, cache.width);
    let n = n.max(1);
    let mut beam = vec![Entry {
        seq: Vec::new(),
        consumed: 0,
        acc: Accumulator::default(),
        energy: 0.0,
    }];
    loop {
        let mut next = Vec::with_capacity(beam.len() * m * 3);
        let mut grew = false;
        for e in &beam {
            if e.consumed == nseg {
                next.push(e.clone());
                continue;
            }
            for count in 1..=m.min(nseg - e.consumed) {
                for label in EventLabel::ALL {
                    let p = Proposal { first: e.consumed, count, label };
                    next.push(extend(e, p, cache, priors, w));
                    grew = true;
                }
            }
        }
        if !grew {
            let best = beam.into_iter().min_by(rank).expect("beam never empties");
            return SearchResult::from_entry(best, w, cache.num_frames);
        }
        next.sort_by(rank);
        next.truncate(n);
        beam = next;
    }
}

/// Enumerates every composition of the segments into contiguous events under
/// every labeling and returns the minimum with the beam's tie-breaking.
pub fn exhaustive_parse(cache: &SpanCache, priors: &EventPriors, w: &EventWeights) -> Result<SearchResult> {
    let nseg = cache.num_segments();
    if nseg > EXHAUSTIVE_LIMIT {
        return Err(Error::TooManySegments {
            got: nseg,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    if cache.width < nseg {
        return Err(Error::Inconsistent(format!(
            "span cache width {} below segment count {nseg}",
            cache.width
        )));
    }
    fn go(
        e: &Entry,
        nseg: usize,
        cache: &SpanCache,
        priors: &EventPriors,
        w: &EventWeights,
        best: &mut Option<Entry>,
    ) {
        if e.consumed == nseg {
            if best.as_ref().is_none_or(|b| rank(e, b) == Ordering::Less) {
                *best = Some(e.clone());
            }
            return;
        }
        for count in 1..=nseg - e.consumed {
            for label in EventLabel::ALL {
                let p = Proposal { first: e.consumed, count, label };
                go(&extend(e, p, cache, priors, w), nseg, cache, priors, w, best);
            }
        }
    }
    let root = Entry {
        seq: Vec::new(),
        consumed: 0,
        acc: Accumulator::default(),
        energy: 0.0,
    };
    let mut best = None;
    go(&root, nseg, cache, priors, w, &mut best);
    Ok(SearchResult::from_entry(best.expect("at least one parse"), w, cache.num_frames))
}
