//! Exact MAP decoding of one (mind, object) delta chain within an event.
//!
//! The likelihood conditions on the chain's history, so the Viterbi state is
//! the current delta together with the history it leaves behind. Scores are
//! accumulated left to right, one step at a time, so any path's score is
//! reproduced bit for bit by folding its steps in order.

use super::evidence::History;
use super::prior::BeliefPriorTables;
use super::BeliefDelta;
use crate::softmax::log_sum_exp;

/// Distinct histories reachable inside an event.
pub const HIST_STATES: usize = 7;

pub fn hist_index(h: History) -> usize {
    use BeliefDelta::*;
    match (h.last_non_null, h.has_occurred, h.tracked) {
        (None, _, false) => 0,
        (None, _, true) => 1,
        (Some(Occur), _, _) => 2,
        (Some(Disappear), false, _) => 3,
        (Some(Disappear), true, _) => 4,
        (Some(Update) | Some(Null), false, _) => 5,
        (Some(Update) | Some(Null), true, _) => 6,
    }
}

pub fn hist_from_index(i: usize) -> History {
    use BeliefDelta::*;
    let (last, occ, tracked) = match i {
        0 => (None, false, false),
        1 => (None, false, true),
        2 => (Some(Occur), true, true),
        3 => (Some(Disappear), false, false),
        4 => (Some(Disappear), true, false),
        5 => (Some(Update), false, true),
        _ => (Some(Update), true, true),
    };
    History {
        last_non_null: last,
        has_occurred: occ,
        tracked,
    }
}

/// Per frame, per history state, log-likelihood of each delta code.
pub type ChainPotentials = Vec<[[f64; 4]; HIST_STATES]>;

#[derive(Clone, Copy, Debug)]
pub struct ChainInput<'a> {
    pub potentials: &'a [[[f64; 4]; HIST_STATES]],
    pub prior: &'a BeliefPriorTables,
    pub initially_tracked: bool,
}

/// Weights of the belief terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainScoring {
    pub be_prior: f64,
    pub be_lik: f64,
    pub marginal_first_frame_only: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    pub deltas: Vec<BeliefDelta>,
    pub score: f64,
}

impl ChainResult {
    pub fn final_tracked(&self, initially: bool) -> bool {
        self.deltas.iter().fold(initially, |t, d| d.tracked_after(t))
    }
}

/// Log prior cells; `None` marks zero mass.
struct LogPrior {
    trans: [[Option<f64>; 4]; 4],
    marginal: [Option<f64>; 4],
}

impl LogPrior {
    fn new(p: &BeliefPriorTables) -> Self {
        let ln = |v: f64| if v > 0.0 { Some(v.ln()) } else { None };
        LogPrior {
            trans: p.trans.map(|row| row.map(ln)),
            marginal: p.marginal.map(ln),
        }
    }
}

/// Score of choosing `next` at frame `t`, or `None` when the choice is
/// illegal or has zero prior mass.
fn step(
    input: &ChainInput,
    lp: &LogPrior,
    sc: &ChainScoring,
    t: usize,
    prev: Option<BeliefDelta>,
    hist: History,
    next: BeliefDelta,
) -> Option<f64> {
    if !next.legal_from(hist.tracked) {
        return None;
    }
    let mut log_prior = 0.0;
    if t == 0 || !sc.marginal_first_frame_only {
        log_prior += lp.marginal[next.code()]?;
    }
    if let Some(p) = prev {
        log_prior += lp.trans[p.code()][next.code()]?;
    }
    let lik = sc.be_lik * input.potentials[t][hist_index(hist)][next.code()];
    let pri = sc.be_prior * log_prior;
    Some(lik + pri)
}

/// Score of a full sequence, `None` if any step is illegal.
pub fn path_score(input: &ChainInput, sc: &ChainScoring, seq: &[BeliefDelta]) -> Option<f64> {
    let lp = LogPrior::new(input.prior);
    let mut hist = History::start(input.initially_tracked);
    let mut prev = None;
    let mut score = 0.0;
    for (t, &d) in seq.iter().enumerate() {
        score += step(input, &lp, sc, t, prev, hist, d)?;
        hist = hist.after(d);
        prev = Some(d);
    }
    Some(score)
}

const STATES: usize = 4 * HIST_STATES;

fn state_of(d: BeliefDelta, h: History) -> usize {
    d.code() * HIST_STATES + hist_index(h)
}

/// Viterbi decoding. Ties prefer the smaller delta code.
pub fn infer_chain(input: &ChainInput, sc: &ChainScoring) -> ChainResult {
    let len = input.potentials.len();
    if len == 0 {
        return ChainResult {
            deltas: Vec::new(),
            score: 0.0,
        };
    }
    let lp = LogPrior::new(input.prior);
    let h0 = History::start(input.initially_tracked);
    let mut v = [f64::NEG_INFINITY; STATES];
    let mut back = vec![[usize::MAX; STATES]; len];
    for d in BeliefDelta::ALL {
        if let Some(s) = step(input, &lp, sc, 0, None, h0, d) {
            v[state_of(d, h0.after(d))] = s;
        }
    }
    for t in 1..len {
        let mut nv = [f64::NEG_INFINITY; STATES];
        for (ps, &pv) in v.iter().enumerate() {
            if pv == f64::NEG_INFINITY {
                continue;
            }
            let pd = BeliefDelta::ALL[ps / HIST_STATES];
            let h = hist_from_index(ps % HIST_STATES);
            for d in BeliefDelta::ALL {
                if let Some(s) = step(input, &lp, sc, t, Some(pd), h, d) {
                    let ns = state_of(d, h.after(d));
                    let cand = pv + s;
                    if cand > nv[ns] {
                        nv[ns] = cand;
                        back[t][ns] = ps;
                    }
                }
            }
        }
        v = nv;
    }
    let mut best = 0;
    for s in 1..STATES {
        if v[s] > v[best] {
            best = s;
        }
    }
    let score = v[best];
    let mut deltas = vec![BeliefDelta::Null; len];
    let mut s = best;
    for t in (0..len).rev() {
        deltas[t] = BeliefDelta::ALL[s / HIST_STATES];
        if t > 0 {
            s = back[t][s];
        }
    }
    ChainResult { deltas, score }
}

/// Decodes independent chains.
pub fn infer_belief_dynamics(inputs: &[ChainInput], sc: &ChainScoring) -> Vec<ChainResult> {
    inputs.iter().map(|i| infer_chain(i, sc)).collect()
}

/// Per-frame posterior marginals over the four deltas, treating the chain
/// score as an unnormalized log-probability.
pub fn chain_posteriors(input: &ChainInput, sc: &ChainScoring) -> Vec<[f64; 4]> {
    let len = input.potentials.len();
    if len == 0 {
        return Vec::new();
    }
    let lp = LogPrior::new(input.prior);
    let h0 = History::start(input.initially_tracked);
    let ninf = f64::NEG_INFINITY;
    let mut alpha = vec![[ninf; STATES]; len];
    for d in BeliefDelta::ALL {
        if let Some(s) = step(input, &lp, sc, 0, None, h0, d) {
            alpha[0][state_of(d, h0.after(d))] = s;
        }
    }
    // transitions are recomputed in the backward pass rather than stored
    let succ = |t: usize, ps: usize| -> Vec<(usize, f64)> {
        let pd = BeliefDelta::ALL[ps / HIST_STATES];
        let h = hist_from_index(ps % HIST_STATES);
        BeliefDelta::ALL
            .iter()
            .filter_map(|&d| step(input, &lp, sc, t, Some(pd), h, d).map(|s| (state_of(d, h.after(d)), s)))
            .collect()
    };
    for t in 1..len {
        let mut acc: Vec<Vec<f64>> = vec![Vec::new(); STATES];
        for ps in 0..STATES {
            if alpha[t - 1][ps] == ninf {
                continue;
            }
            for (ns, s) in succ(t, ps) {
                acc[ns].push(alpha[t - 1][ps] + s);
            }
        }
        for ns in 0..STATES {
            if !acc[ns].is_empty() {
                alpha[t][ns] = log_sum_exp(&acc[ns]);
            }
        }
    }
    let mut beta = vec![[ninf; STATES]; len];
    beta[len - 1] = [0.0; STATES];
    for t in (0..len - 1).rev() {
        for ps in 0..STATES {
            if alpha[t][ps] == ninf {
                continue;
            }
            let terms: Vec<f64> = succ(t + 1, ps)
                .into_iter()
                .filter(|(ns, _)| beta[t + 1][*ns] > ninf)
                .map(|(ns, s)| s + beta[t + 1][ns])
                .collect();
            if !terms.is_empty() {
                beta[t][ps] = log_sum_exp(&terms);
            }
        }
    }
    let z = log_sum_exp(&alpha[len - 1]);
    (0..len)
        .map(|t| {
            let mut out = [0.0; 4];
            for s in 0..STATES {
                if alpha[t][s] > ninf && beta[t][s] > ninf {
                    out[s / HIST_STATES] += (alpha[t][s] + beta[t][s] - z).exp();
                }
            }
            out
        })
        .collect()
}
