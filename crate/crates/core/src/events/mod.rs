//! Communication-event labels, frequency priors, the event classifier and
//! the event-level energy terms.

mod classifier;
mod energy;

pub use classifier::{event_log_likelihood, EventClassifier};
pub use energy::{
    aggregation_energy, composition_energy, composition_terms, event_prior_energy,
    event_prior_terms, within_event_distance, CompositionTerms, EventPriorTerms,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventLabel {
    NoCommunication = 0,
    AttentionFollowing = 1,
    JointAttention = 2,
}

impl EventLabel {
    pub const ALL: [EventLabel; 3] = [
        EventLabel::NoCommunication,
        EventLabel::AttentionFollowing,
        EventLabel::JointAttention,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        EventLabel::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EventLabel::NoCommunication => "NoCommunication",
            EventLabel::AttentionFollowing => "AttentionFollowing",
            EventLabel::JointAttention => "JointAttention",
        }
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EventLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::format(0, format!("unknown event label `{s}`")))
    }
}

/// A labeled half-open frame interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSpan {
    pub label: EventLabel,
    pub start: usize,
    pub end: usize,
}

impl EventSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: usize) -> bool {
        (self.start..self.end).contains(&t)
    }
}

/// Whether the spans are sorted, non-empty, disjoint and cover `[0, len)`.
pub fn spans_partition(spans: &[EventSpan], len: usize) -> bool {
    let mut cursor = 0;
    for s in spans {
        if s.start != cursor || s.end <= s.start {
            return false;
        }
        cursor = s.end;
    }
    cursor == len
}

/// Per-frame label lookup for a partition.
pub fn frame_labels(spans: &[EventSpan], len: usize) -> Vec<Option<EventLabel>> {
    let mut out = vec![None; len];
    for s in spans {
        for slot in out.iter_mut().take(s.end.min(len)).skip(s.start) {
            *slot = Some(s.label);
        }
    }
    out
}

/// Transition and co-occurrence priors over event labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventPriors {
    /// Row-stochastic `trans[from][to]`.
    pub trans: [[f64; 3]; 3],
    /// Symmetric; the upper triangle including the diagonal sums to 1.
    pub occ: [[f64; 3]; 3],
    pub alpha: f64,
}

/// Raw consecutive-pair and unordered-pair counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PriorCounts {
    pub trans: [[f64; 3]; 3],
    /// Indexed `[min][max]`; the lower triangle stays zero.
    pub occ: [[f64; 3]; 3],
}

pub fn count_event_pairs(sequences: &[Vec<EventLabel>]) -> PriorCounts {
    let mut c = PriorCounts::default();
    for seq in sequences {
        for w in seq.windows(2) {
            c.trans[w[0].index()][w[1].index()] += 1.0;
        }
        for i in 0..seq.len() {
            for j in i + 1..seq.len() {
                let (a, b) = (seq[i].index(), seq[j].index());
                c.occ[a.min(b)][a.max(b)] += 1.0;
            }
        }
    }
    c
}

/// Fits Laplace-smoothed transition and co-occurrence priors.
pub fn fit_priors(sequences: &[Vec<EventLabel>], alpha: f64) -> Result<EventPriors> {
    if sequences.is_empty() || sequences.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let counts = count_event_pairs(sequences);
    let mut trans = [[0.0; 3]; 3];
    for (row, crow) in trans.iter_mut().zip(&counts.trans) {
        let total: f64 = crow.iter().map(|c| c + alpha).sum();
        for (p, c) in row.iter_mut().zip(crow) {
            *p = (c + alpha) / total;
        }
    }
    let mut total = 0.0;
    for a in 0..3 {
        for b in a..3 {
            total += counts.occ[a][b] + alpha;
        }
    }
    let mut occ = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let p = (counts.occ[a][b] + alpha) / total;
            occ[a][b] = p;
            occ[b][a] = p;
        }
    }
    Ok(EventPriors { trans, occ, alpha })
}

impl EventPriors {
    pub fn uniform() -> Self {
        EventPriors {
            trans: [[1.0 / 3.0; 3]; 3],
            occ: [[1.0 / 6.0; 3]; 3],
            alpha: 1.0,
        }
    }

    pub fn trans(&self, from: EventLabel, to: EventLabel) -> f64 {
        self.trans[from.index()][to.index()]
    }

    pub fn occ(&self, a: EventLabel, b: EventLabel) -> f64 {
        self.occ[a.index()][b.index()]
    }
}
