use super::scenario::{ScenarioSpec, ScriptedEvent, MAX_OBJECTS, MIN_FALSE_BELIEF_FRAMES};
use super::{simulate, GroundTruth, WorldTrace, MIN_JOINTS};
use crate::error::{Error, Result};
use crate::events::EventLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shape of a randomly scripted corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub seed: u64,
    pub train: usize,
    pub test: usize,
    pub object_count: usize,
    pub joints: usize,
    pub min_events: usize,
    pub max_events: usize,
    pub min_duration: usize,
    pub max_duration: usize,
    /// Chance that a long enough No Communication event hosts a false belief.
    pub false_belief_rate: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 2024,
            train: 62,
            test: 26,
            object_count: 5,
            joints: MIN_JOINTS,
            min_events: 4,
            max_events: 7,
            min_duration: 50,
            max_duration: 120,
            false_belief_rate: 0.3,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(format!("corpus: {m}")));
        if self.train == 0 {
            return bad("train split is empty");
        }
        if self.min_events == 0 || self.min_events > self.max_events {
            return bad("event count range is empty");
        }
        if self.min_duration < 10 || self.min_duration > self.max_duration {
            return bad("duration range must start at 10 frames or more");
        }
        if self.object_count == 0 || self.object_count > MAX_OBJECTS {
            return bad("object_count out of range");
        }
        if !(0.0..=1.0).contains(&self.false_belief_rate) {
            return bad("false_belief_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LabeledTrace {
    pub spec: ScenarioSpec,
    pub trace: WorldTrace,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub train: Vec<LabeledTrace>,
    pub test: Vec<LabeledTrace>,
}

/// A random event script; false beliefs never reuse a hidden object.
pub fn random_scenario(seed: u64, cfg: &CorpusConfig) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(cfg.min_events..=cfg.max_events);
    let mut hidden = vec![false; cfg.object_count];
    let events = (0..n)
        .map(|_| {
            let kind = EventLabel::ALL[rng.gen_range(0..3)];
            let duration = rng.gen_range(cfg.min_duration..=cfg.max_duration);
            let mut ev = ScriptedEvent {
                kind,
                duration,
                objects: Vec::new(),
                false_belief: None,
                leader: None,
                start: None,
            };
            let roll: f64 = rng.gen();
            if kind == EventLabel::NoCommunication
                && duration >= MIN_FALSE_BELIEF_FRAMES
                && roll < cfg.false_belief_rate
            {
                let free: Vec<u32> = (0..cfg.object_count as u32)
                    .filter(|&o| !hidden[o as usize])
                    .collect();
                if free.len() > 1 {
                    let o = free[rng.gen_range(0..free.len())];
                    hidden[o as usize] = true;
                    ev.objects = vec![o];
                    ev.false_belief = Some(rng.gen_range(1..=2));
                }
            }
            ev
        })
        .collect();
    ScenarioSpec {
        seed: rng.gen_range(0..1u64 << 48),
        object_count: cfg.object_count,
        joints: cfg.joints,
        frame_rate: 25.0,
        min_segment: 10,
        room: ScenarioSpec::default_room(),
        events,
    }
}

pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.train + cfg.test)
        .map(|_| rng.gen_range(0..1u64 << 48))
        .collect();
    let mut all = seeds
        .par_iter()
        .map(|&s| {
            let spec = random_scenario(s, cfg);
            let (trace, truth) = simulate(&spec)?;
            Ok(LabeledTrace { spec, trace, truth })
        })
        .collect::<Result<Vec<_>>>()?;
    let test = all.split_off(cfg.train);
    Ok(Corpus { train: all, test })
}
