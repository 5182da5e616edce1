use fmp_core::parser::TrainConfig;
use fmp_core::world::CorpusConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// One TOML file holding a block per subcommand. Relative paths resolve
/// against the directory of the file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// When set, replaces every seed below.
    pub seed: Option<u64>,
    pub simulate: SimulateConfig,
    pub train: TrainSection,
    pub parse: ParseSection,
    pub eval: EvalSection,
    pub keyframes: KeyframeSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Scripted scenarios to render instead of a random corpus.
    pub scenarios: Vec<PathBuf>,
    pub corpus: CorpusConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// Directory holding `<id>.trace.jsonl` and `<id>.truth.jsonl` pairs.
    pub corpus: PathBuf,
    pub fit: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            corpus: PathBuf::from("out/train"),
            fit: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParseSection {
    pub model: PathBuf,
    /// A trace file or a directory of them.
    pub traces: PathBuf,
}

impl Default for ParseSection {
    fn default() -> Self {
        ParseSection {
            model: PathBuf::from("out/model.json"),
            traces: PathBuf::from("out/test"),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub truth: PathBuf,
    /// Belief outputs named `<id>.beliefs.jsonl`.
    pub predictions: PathBuf,
    pub chance_seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            truth: PathBuf::from("out/test"),
            predictions: PathBuf::from("out"),
            chance_seed: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyframeSection {
    pub model: PathBuf,
    pub traces: PathBuf,
    pub k: usize,
    /// Suppression radius in frames.
    pub w: usize,
}

impl Default for KeyframeSection {
    fn default() -> Self {
        KeyframeSection {
            model: PathBuf::from("out/model.json"),
            traces: PathBuf::from("out/test"),
            k: 10,
            w: 10,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Rebases relative paths onto `base` and pushes the seed override down.
    pub fn finish(mut self, base: &Path, seed: Option<u64>) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.simulate.scenarios.iter_mut().for_each(fix);
        fix(&mut self.train.corpus);
        fix(&mut self.parse.model);
        fix(&mut self.parse.traces);
        fix(&mut self.eval.truth);
        fix(&mut self.eval.predictions);
        fix(&mut self.keyframes.model);
        fix(&mut self.keyframes.traces);
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.simulate.corpus.seed = s;
            let fit = &mut self.train.fit;
            fit.grid.seed = s;
            fit.classifier.seed = s;
            fit.belief.seed = s;
            self.eval.chance_seed = s;
        }
        self
    }
}
