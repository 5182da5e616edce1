use super::{table_transition_legal, BeliefDelta, DeltaTable, MindId};
use crate::error::{Error, Result};
use crate::events::{EventLabel, EventSpan};
use serde::{Deserialize, Serialize};

/// `p(Δ_t | Δ_{t-1}, e)` and `p(Δ_t | e)` for one (mind, event label).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefPriorTables {
    /// `trans[prev][next]`, zero on illegal cells.
    pub trans: [[f64; 4]; 4],
    pub marginal: [f64; 4],
}

impl BeliefPriorTables {
    fn from_counts(trans_counts: &[[f64; 4]; 4], marg_counts: &[f64; 4], alpha: f64) -> Self {
        let mut trans = [[0.0; 4]; 4];
        for (p, row) in trans.iter_mut().enumerate() {
            let legal: Vec<usize> = (0..4)
                .filter(|&n| table_transition_legal(BeliefDelta::ALL[p], BeliefDelta::ALL[n]))
                .collect();
            let total: f64 = legal.iter().map(|&n| trans_counts[p][n] + alpha).sum();
            for &n in &legal {
                row[n] = if total > 0.0 {
                    (trans_counts[p][n] + alpha) / total
                } else {
                    1.0 / legal.len() as f64
                };
            }
        }
        let total: f64 = marg_counts.iter().map(|c| c + alpha).sum();
        let marginal = marg_counts.map(|c| if total > 0.0 { (c + alpha) / total } else { 0.25 });
        BeliefPriorTables { trans, marginal }
    }
}

/// Prior tables per mind and event label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefPrior {
    pub alpha: f64,
    /// Indexed `mind * 3 + label`.
    pub tables: Vec<BeliefPriorTables>,
}

impl BeliefPrior {
    pub fn uniform(alpha: f64) -> Self {
        let t = BeliefPriorTables::from_counts(&[[0.0; 4]; 4], &[0.0; 4], 1.0);
        BeliefPrior {
            alpha,
            tables: vec![t; MindId::ALL.len() * EventLabel::ALL.len()],
        }
    }

    pub fn tables(&self, mind: MindId, label: EventLabel) -> &BeliefPriorTables {
        &self.tables[mind.index() * 3 + label.index()]
    }

    pub fn tables_mut(&mut self, mind: MindId, label: EventLabel) -> &mut BeliefPriorTables {
        &mut self.tables[mind.index() * 3 + label.index()]
    }
}

/// Counts marginals at every frame and transitions between consecutive
/// frames of the same event, then smooths over the legal support.
pub fn fit_belief_prior(corpus: &[(&DeltaTable, &[EventSpan])], alpha: f64) -> Result<BeliefPrior> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = MindId::ALL.len() * EventLabel::ALL.len();
    let mut trans = vec![[[0.0; 4]; 4]; n];
    let mut marg = vec![[0.0; 4]; n];
    for (table, spans) in corpus {
        if !table.is_legal() {
            return Err(Error::IllegalDelta("training labels violate the state machine".into()));
        }
        for m in MindId::ALL {
            for slot in 0..table.object_ids.len() {
                let chain = table.chain(m, slot);
                for span in spans.iter() {
                    let k = m.index() * 3 + span.label.index();
                    for t in span.start..span.end.min(chain.len()) {
                        let d = chain[t];
                        marg[k][d.code()] += 1.0;
                        if t > span.start {
                            let p = chain[t - 1];
                            if !table_transition_legal(p, d) {
                                return Err(Error::IllegalDelta(format!("{p} followed by {d}")));
                            }
                            trans[k][p.code()][d.code()] += 1.0;
                        }
                    }
                }
            }
        }
    }
    Ok(BeliefPrior {
        alpha,
        tables: (0..n)
            .map(|k| BeliefPriorTables::from_counts(&trans[k], &marg[k], alpha))
            .collect(),
    })
}
