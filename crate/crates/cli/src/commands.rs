use crate::config::RunConfig;
use crate::{Failure, OrExit, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL, EXIT_MODEL};
use anyhow::anyhow;
use fmp_core::eval::{
    chance_baseline, format_report, keyframe_scores, keyframe_svg, select_keyframes, write_keyframe_list,
    MetricsAccumulator,
};
use fmp_core::parser::{self, read_belief_output, read_model, write_belief_output, write_model, write_parse_dump, ParserModel};
use fmp_core::world::{
    generate_corpus, read_ground_truth, read_trace, simulate as run_scenario, write_ground_truth, write_trace,
    GroundTruth, LabeledTrace, ScenarioSpec, WorldTrace,
};
use fmp_core::Error;
use log::info;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};

const TRACE_EXT: &str = ".trace.jsonl";
const TRUTH_EXT: &str = ".truth.jsonl";
const BELIEF_EXT: &str = ".beliefs.jsonl";

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Scenario(_) | Error::EmptyGrid => EXIT_CONFIG,
        Error::Model(_) => EXIT_MODEL,
        Error::Trace(_)
        | Error::Format { .. }
        | Error::EmptyCorpus
        | Error::MissingLabel(_)
        | Error::KeyMismatch(_)
        | Error::IllegalDelta(_)
        | Error::EmptyStream
        | Error::StreamTooShort { .. }
        | Error::Io(_) => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

fn fail(what: impl std::fmt::Display, e: Error) -> Failure {
    Failure {
        code: exit_code(&e),
        error: anyhow!("{what}: {e}"),
    }
}

fn read(path: &Path, code: u8) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| anyhow!("reading {}: {e}", path.display()))
        .or_exit(code)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| anyhow!("creating {}: {e}", dir.display()))
            .or_exit(EXIT_DATA)?;
    }
    fs::write(path, contents)
        .map_err(|e| anyhow!("writing {}: {e}", path.display()))
        .or_exit(EXIT_DATA)
}

/// `(id, path)` for every file under `path` ending in `ext`, sorted by id;
/// a file path is taken as is.
fn list(path: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>, Failure> {
    let id_of = |p: &Path| {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        name.strip_suffix(ext).map(str::to_string)
    };
    if path.is_file() {
        let id = id_of(path).unwrap_or_else(|| path.file_stem().unwrap().to_string_lossy().into_owned());
        return Ok(vec![(id, path.to_path_buf())]);
    }
    let entries = fs::read_dir(path)
        .map_err(|e| anyhow!("listing {}: {e}", path.display()))
        .or_exit(EXIT_DATA)?;
    let mut out = Vec::new();
    for entry in entries {
        let p = entry.or_exit(EXIT_DATA)?.path();
        if let Some(id) = id_of(&p) {
            out.push((id, p));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(anyhow!("no *{ext} files in {}", path.display())).or_exit(EXIT_DATA);
    }
    Ok(out)
}

fn load_trace(path: &Path) -> Result<WorldTrace, Failure> {
    read_trace(&read(path, EXIT_DATA)?).map_err(|e| fail(path.display(), e))
}

fn load_model(path: &Path) -> Result<ParserModel, Failure> {
    read_model(&read(path, EXIT_MODEL)?).map_err(|e| Failure {
        code: EXIT_MODEL,
        error: anyhow!("{}: {e}", path.display()),
    })
}

fn write_labeled(dir: &Path, id: &str, l: &LabeledTrace) -> Result<(), Failure> {
    write(&dir.join(format!("{id}{TRACE_EXT}")), &write_trace(&l.trace))?;
    write(&dir.join(format!("{id}{TRUTH_EXT}")), &write_ground_truth(&l.truth))?;
    write(&dir.join(format!("{id}.scenario.toml")), &l.spec.to_toml())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let sim = &cfg.simulate;
    if sim.scenarios.is_empty() {
        let corpus = generate_corpus(&sim.corpus).map_err(|e| fail("corpus", e))?;
        for (split, items) in [("train", &corpus.train), ("test", &corpus.test)] {
            for (i, l) in items.iter().enumerate() {
                write_labeled(&out.join(split), &format!("{i:03}"), l)?;
            }
        }
        let manifest = toml::to_string(&sim.corpus).or_exit(EXIT_INTERNAL)?;
        write(&out.join("corpus.toml"), &manifest)?;
        info!("simulated {} train and {} test traces", corpus.train.len(), corpus.test.len());
        return Ok(());
    }
    let mut specs = Vec::new();
    for p in &sim.scenarios {
        let mut spec = ScenarioSpec::from_toml(&read(p, EXIT_CONFIG)?).map_err(|e| fail(p.display(), e))?;
        if let Some(s) = cfg.seed {
            spec.seed = s;
        }
        let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if specs.iter().any(|(other, _)| *other == id) {
            return Err(anyhow!("two scenarios share the name {id}")).or_exit(EXIT_CONFIG);
        }
        specs.push((id, spec));
    }
    let rendered: Vec<(WorldTrace, GroundTruth)> = specs
        .par_iter()
        .map(|(id, spec)| run_scenario(spec).map_err(|e| fail(id, e)))
        .collect::<Result<_, _>>()?;
    for ((id, spec), (trace, truth)) in specs.into_iter().zip(rendered) {
        write_labeled(out, &id, &LabeledTrace { spec, trace, truth })?;
    }
    Ok(())
}

fn load_labeled(dir: &Path) -> Result<Vec<(String, WorldTrace, GroundTruth)>, Failure> {
    let files = list(dir, TRACE_EXT)?;
    files
        .par_iter()
        .map(|(id, p)| {
            let trace = load_trace(p)?;
            let tp = p.with_file_name(format!("{id}{TRUTH_EXT}"));
            let truth = read_ground_truth(&read(&tp, EXIT_DATA)?).map_err(|e| fail(tp.display(), e))?;
            if truth.deltas.num_frames != trace.len() || truth.deltas.object_ids != trace.object_ids() {
                return Err(anyhow!("{}: ground truth does not match its trace", tp.display())).or_exit(EXIT_DATA);
            }
            Ok((id.clone(), trace, truth))
        })
        .collect()
}

pub fn train(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let fit = &cfg.train.fit;
    if fit.beam.n == 0 || fit.beam.m == 0 {
        return Err(anyhow!("beam n and m must be positive")).or_exit(EXIT_CONFIG);
    }
    let corpus = load_labeled(&cfg.train.corpus)?;
    let items: Vec<_> = corpus.iter().map(|(_, t, g)| (t, g)).collect();
    let (model, report) = parser::fit(&items, fit).map_err(|e| fail("training", e))?;
    let text = write_model(&model).map_err(|e| fail("model", e))?;
    write(&out.join("model.json"), &text)?;
    let report = toml::to_string(&report).or_exit(EXIT_INTERNAL)?;
    write(&out.join("train_report.toml"), &report)?;
    info!("trained on {} traces", corpus.len());
    Ok(())
}

fn parse_all(model: &ParserModel, traces: &Path) -> Result<Vec<(String, parser::ParseGraph)>, Failure> {
    let files = list(traces, TRACE_EXT)?;
    files
        .par_iter()
        .map(|(id, p)| {
            let trace = load_trace(p)?;
            let pg = parser::parse(&trace, model).map_err(|e| fail(p.display(), e))?;
            Ok((id.clone(), pg))
        })
        .collect()
}

pub fn parse(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let model = load_model(&cfg.parse.model)?;
    for (id, pg) in parse_all(&model, &cfg.parse.traces)? {
        write(&out.join(format!("{id}.parse.txt")), &write_parse_dump(&pg))?;
        write(&out.join(format!("{id}{BELIEF_EXT}")), &write_belief_output(&pg))?;
    }
    Ok(())
}

/// Belief predictions; a ground-truth file also counts as a prediction.
fn load_prediction(path: &Path) -> Result<fmp_core::beliefs::DeltaTable, Failure> {
    let text = read(path, EXIT_DATA)?;
    match read_belief_output(&text) {
        Ok((_, d)) => Ok(d),
        Err(e) => match read_ground_truth(&text) {
            Ok(g) => Ok(g.deltas),
            Err(_) => Err(fail(path.display(), e)),
        },
    }
}

pub fn eval(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let ev = &cfg.eval;
    let mut ours = MetricsAccumulator::default();
    let mut chance = MetricsAccumulator::default();
    let files = list(&ev.truth, TRUTH_EXT)?;
    for (i, (id, p)) in files.iter().enumerate() {
        let truth = read_ground_truth(&read(p, EXIT_DATA)?).map_err(|e| fail(p.display(), e))?;
        let pred = load_prediction(&ev.predictions.join(format!("{id}{BELIEF_EXT}")))?;
        ours.add(&pred, &truth.deltas).map_err(|e| fail(id, e))?;
        let c = chance_baseline(truth.deltas.num_frames, &truth.deltas.object_ids, ev.chance_seed.wrapping_add(i as u64));
        chance.add(&c, &truth.deltas).map_err(|e| fail(id, e))?;
    }
    let (ours, chance) = (ours.report(), chance.report());
    let mut text = format!("traces = {}\n\n", files.len());
    text.push_str(&format_report(&[("ours", &ours), ("chance", &chance)]));
    write(&out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn keyframes(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let kf = &cfg.keyframes;
    if kf.k == 0 {
        return Err(anyhow!("keyframes.k must be at least 1")).or_exit(EXIT_CONFIG);
    }
    let model = load_model(&kf.model)?;
    for (id, pg) in parse_all(&model, &kf.traces)? {
        let scores = keyframe_scores(&pg.posteriors, pg.num_frames);
        let sel = select_keyframes(&scores, kf.k, kf.w).map_err(|e| fail(&id, e))?;
        if sel.short {
            log::warn!("{id}: only {} keyframes survive suppression", sel.frames.len());
        }
        write(&out.join(format!("{id}.keyframes.txt")), &write_keyframe_list(&sel.frames))?;
        write(&out.join(format!("{id}.scores.svg")), &keyframe_svg(&scores, &sel.frames))?;
    }
    Ok(())
}
