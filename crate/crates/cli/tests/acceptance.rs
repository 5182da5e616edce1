//! Acceptance suite. Runs as a plain binary and prints one line per criterion.

mod common;

use common::*;
use fmp_core::beliefs::{
    infer_belief_dynamics, path_score, sequence_is_legal, BeliefDelta, BeliefPriorTables, ChainInput, ChainScoring,
    MindId, HIST_STATES,
};
use fmp_core::eval::{chance_baseline, keyframe_scores, select_keyframes, top_fraction, MetricsAccumulator};
use fmp_core::events::{EventLabel, EventPriors};
use fmp_core::parser::{
    beam_search_events, exhaustive_parse, parse, read_model, EventWeights, LikelihoodTable, ParseContext, ParseGraph,
    ParserModel, SpanCache,
};
use fmp_core::softmax::{Dataset, SoftmaxModel};
use fmp_core::world::{read_ground_truth, read_trace, simulate, GroundTruth, ScenarioSpec, ScriptedEvent, WorldTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn random_priors(rng: &mut ChaCha8Rng) -> EventPriors {
    let mut p = EventPriors::uniform();
    for row in &mut p.trans {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = v.iter().sum();
        for (c, x) in row.iter_mut().zip(&v) {
            *c = x / s;
        }
    }
    let mut occ = [[0.0; 3]; 3];
    let mut s = 0.0;
    for a in 0..3 {
        for b in a..3 {
            occ[a][b] = rng.gen_range(0.05..1.0);
            s += occ[a][b];
        }
    }
    for a in 0..3 {
        for b in a..3 {
            occ[a][b] /= s;
            occ[b][a] = occ[a][b];
        }
    }
    p.occ = occ;
    p
}

fn random_cache(rng: &mut ChaCha8Rng, nseg: usize) -> SpanCache {
    let mut bounds = vec![0];
    for _ in 0..nseg {
        let last = *bounds.last().unwrap();
        bounds.push(last + rng.gen_range(10..30));
    }
    let spans = (0..nseg * nseg)
        .map(|_| {
            let within = rng.gen_range(0.0..2.0);
            let ll = [(); 3].map(|_| -rng.gen_range(0.0..4.0));
            let psi: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            (within, ll, psi)
        })
        .collect();
    SpanCache::from_stats(bounds, nseg, spans).unwrap()
}

fn c1_beam_exact() -> Outcome {
    const N: usize = 1 << 16;
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut equal, mut narrow_equal) = (0, 0);
    for _ in 0..100 {
        let nseg = rng.gen_range(1..=8);
        let cache = random_cache(&mut rng, nseg);
        let priors = random_priors(&mut rng);
        let w = EventWeights::from_array([(); 7].map(|_| rng.gen_range(0.0..3.0)));
        let ex = exhaustive_parse(&cache, &priors, &w).unwrap();
        let beam = beam_search_events(&cache, &priors, &w, N, nseg);
        if beam.energy == ex.energy && beam.events == ex.events {
            equal += 1;
        }
        if beam_search_events(&cache, &priors, &w, 96, nseg).energy == ex.energy {
            narrow_equal += 1;
        }
    }
    let el = t0.elapsed();
    outcome(
        equal == 100 && el < Duration::from_secs(60),
        format!("{equal}/100 equal at n={N}, m=segments ({narrow_equal}/100 at n=96), {el:.1?}"),
    )
}

fn random_chain_prior(rng: &mut ChaCha8Rng) -> BeliefPriorTables {
    let mut t = BeliefPriorTables {
        trans: [[0.0; 4]; 4],
        marginal: [0.0; 4],
    };
    for p in 0..4 {
        let legal: Vec<usize> = (0..4)
            .filter(|&n| fmp_core::beliefs::table_transition_legal(BeliefDelta::ALL[p], BeliefDelta::ALL[n]))
            .collect();
        let v: Vec<f64> = legal.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = v.iter().sum();
        for (&n, x) in legal.iter().zip(&v) {
            t.trans[p][n] = x / s;
        }
    }
    let v: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    for (m, x) in t.marginal.iter_mut().zip(&v) {
        *m = x / s;
    }
    t
}

fn c2_viterbi_exact() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut equal = 0;
    let mut legal_paths = 0usize;
    for _ in 0..100 {
        let len = rng.gen_range(1..=8);
        let potentials: Vec<[[f64; 4]; HIST_STATES]> = (0..len)
            .map(|_| [(); HIST_STATES].map(|_| [(); 4].map(|_| -rng.gen_range(0.0..5.0))))
            .collect();
        let prior = random_chain_prior(&mut rng);
        let input = ChainInput {
            potentials: &potentials,
            prior: &prior,
            initially_tracked: rng.gen_bool(0.5),
        };
        let sc = ChainScoring {
            be_prior: rng.gen_range(0.0..3.0),
            be_lik: rng.gen_range(0.0..3.0),
            marginal_first_frame_only: rng.gen_bool(0.5),
        };
        let got = &infer_belief_dynamics(&[input], &sc)[0];
        let mut best: Option<(f64, Vec<BeliefDelta>)> = None;
        for code in 0..4usize.pow(len as u32) {
            let seq: Vec<BeliefDelta> = (0..len).map(|i| BeliefDelta::ALL[(code >> (2 * i)) & 3]).collect();
            if !sequence_is_legal(input.initially_tracked, &seq) {
                continue;
            }
            legal_paths += 1;
            if let Some(s) = path_score(&input, &sc, &seq) {
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, seq));
                }
            }
        }
        let (score, seq) = best.expect("a legal path exists");
        if got.score == score && got.deltas == seq {
            equal += 1;
        }
    }
    outcome(equal == 100, format!("{equal}/100 chains match over {legal_paths} legal paths"))
}

struct Run {
    model: ParserModel,
    tests: Vec<(String, WorldTrace, GroundTruth)>,
    parses: Vec<ParseGraph>,
    report: String,
    elapsed: Duration,
}

fn read_report_avg(report: &str, section: &str, row: &str) -> f64 {
    let mut lines = report.lines().skip_while(|l| *l != section);
    let line = lines.find(|l| l.starts_with(row)).expect("report row");
    line.split_whitespace().last().unwrap().parse().unwrap()
}

/// Runs simulate, train, parse and eval through the CLI on one thread, then
/// reloads the model and reparses the test split in-process.
fn full_run(dir: &Path) -> Run {
    let cfg_dir = dir.join("configs");
    fs::create_dir_all(&cfg_dir).unwrap();
    fs::copy(repo().join("configs/default.toml"), cfg_dir.join("default.toml")).unwrap();
    let t0 = Instant::now();
    for (cmd, out) in [("simulate", "out"), ("train", "out"), ("parse", "out"), ("eval", "out")] {
        ok(dir, &[cmd, "--config", "configs/default.toml", "--jobs", "1", "--out", out]);
    }
    let elapsed = t0.elapsed();
    let model = read_model(&fs::read_to_string(dir.join("out/model.json")).unwrap()).unwrap();
    let mut tests = Vec::new();
    let mut ids: Vec<String> = fs::read_dir(dir.join("out/test"))
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            name.strip_suffix(".trace.jsonl").map(str::to_string)
        })
        .collect();
    ids.sort();
    for id in ids {
        let trace = read_trace(&fs::read_to_string(dir.join(format!("out/test/{id}.trace.jsonl"))).unwrap()).unwrap();
        let truth =
            read_ground_truth(&fs::read_to_string(dir.join(format!("out/test/{id}.truth.jsonl"))).unwrap()).unwrap();
        tests.push((id, trace, truth));
    }
    let parses = tests.iter().map(|(_, t, _)| parse(t, &model).unwrap()).collect();
    let report = fs::read_to_string(dir.join("out/report.txt")).unwrap();
    Run {
        model,
        tests,
        parses,
        report,
        elapsed,
    }
}

fn c3_legality(run: &Run) -> Outcome {
    let mut frames = 0;
    let mut illegal = 0;
    for pg in &run.parses {
        frames += pg.num_frames;
        for m in MindId::ALL {
            for slot in 0..pg.object_ids.len() {
                let chain = pg.beliefs.chain(m, slot);
                let mut tracked = false;
                for d in chain {
                    if !d.legal_from(tracked) {
                        illegal += 1;
                    }
                    tracked = d.tracked_after(tracked);
                }
            }
        }
    }
    outcome(
        frames >= 10_000 && illegal == 0,
        format!("{illegal} illegal transitions over {frames} parsed frames"),
    )
}

fn c4_chance(run: &Run) -> Outcome {
    let mut acc = MetricsAccumulator::default();
    let mut keys = 0;
    for (i, (_, _, truth)) in run.tests.iter().enumerate() {
        let d = &truth.deltas;
        keys += d.num_frames * d.object_ids.len() * MindId::ALL.len();
        acc.add(&chance_baseline(d.num_frames, &d.object_ids, 2024 + i as u64), d).unwrap();
    }
    let r = acc.report();
    outcome(
        keys >= 10_000 && (r.avg_precision - 0.25).abs() <= 0.02 && r.avg_f1 < 0.20,
        format!("precision {:.4}, F1 {:.4} over {keys} keys", r.avg_precision, r.avg_f1),
    )
}

fn c5_learning(run: &Run) -> Outcome {
    let ours = read_report_avg(&run.report, "Macro F1", "ours");
    let chance = read_report_avg(&run.report, "Macro F1", "chance");
    outcome(
        ours >= chance + 0.15 && run.elapsed < Duration::from_secs(600),
        format!(
            "macro F1 {ours:.3} vs chance {chance:.3} (gap {:.3}), single-threaded run {:.1?}",
            ours - chance,
            run.elapsed
        ),
    )
}

fn c6_common_gating(run: &Run) -> Outcome {
    let (mut inside, mut all) = (0, 0);
    for pg in &run.parses {
        for (m, t, _, _) in pg.beliefs.non_null() {
            if m != MindId::Mc {
                continue;
            }
            all += 1;
            if pg
                .events
                .iter()
                .any(|e| e.label == EventLabel::JointAttention && e.start <= t && t < e.end)
            {
                inside += 1;
            }
        }
    }
    let rate = if all == 0 { 1.0 } else { inside as f64 / all as f64 };
    outcome(
        all > 0 && rate >= 0.99,
        format!("{inside}/{all} non-null common-mind deltas inside predicted Joint Attention"),
    )
}

/// Hide and discovery frames of the hidden object: per mind, the first
/// disappear at or after the false-belief event starts; hide is the earliest
/// of these and discovery the latest.
fn hide_and_discovery(spec: &ScenarioSpec, truth: &GroundTruth) -> (usize, usize) {
    let spans = spec.spans();
    let (i, ev) = spec.events.iter().enumerate().find(|(_, e)| e.false_belief.is_some()).unwrap();
    let o = ev.objects[0];
    let slot = truth.deltas.slot_of(o).unwrap();
    let firsts: Vec<usize> = MindId::ALL
        .iter()
        .filter_map(|&m| {
            truth.deltas.chain(m, slot)[spans[i].start..]
                .iter()
                .position(|d| *d == BeliefDelta::Disappear)
                .map(|p| p + spans[i].start)
        })
        .collect();
    (*firsts.iter().min().unwrap(), *firsts.iter().max().unwrap())
}

fn c7_keyframes(run: &Run) -> Outcome {
    let (mut hit, mut total) = (0, 0);
    for (pg, (_, _, truth)) in run.parses.iter().zip(&run.tests) {
        let top = top_fraction(&keyframe_scores(&pg.posteriors, pg.num_frames), 0.15);
        for (_, t, _, d) in truth.deltas.non_null() {
            if matches!(d, BeliefDelta::Occur | BeliefDelta::Disappear) {
                total += 1;
                hit += top[t] as usize;
            }
        }
    }
    let rate = hit as f64 / total.max(1) as f64;
    let mut demos = Vec::new();
    let mut demos_ok = true;
    let mut entries: Vec<_> = fs::read_dir(repo().join("configs/demo")).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        let spec = ScenarioSpec::from_toml(&fs::read_to_string(&p).unwrap()).unwrap();
        if !spec.events.iter().any(|e| e.false_belief.is_some()) {
            continue;
        }
        let (trace, truth) = simulate(&spec).unwrap();
        let pg = parse(&trace, &run.model).unwrap();
        let sel = select_keyframes(&keyframe_scores(&pg.posteriors, pg.num_frames), 10, 10).unwrap();
        let (hide, found) = hide_and_discovery(&spec, &truth);
        let ok = sel.frames.contains(&hide) && sel.frames.contains(&found);
        demos_ok &= ok;
        demos.push(format!(
            "{} hide {hide} discovery {found} {}",
            p.file_stem().unwrap().to_string_lossy(),
            if ok { "kept" } else { "missed" }
        ));
    }
    outcome(
        rate >= 0.8 && demos_ok && !demos.is_empty(),
        format!("{hit}/{total} change moments in top 15% ({:.1}%); {}", 100.0 * rate, demos.join(", ")),
    )
}

fn gradient_check() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let classes = rng.gen_range(2..=4);
        let dim = rng.gen_range(1..=6);
        let mut m = SoftmaxModel::zeros(classes, dim);
        for w in m.weights.iter_mut().chain(m.bias.iter_mut()) {
            *w = rng.gen_range(-1.0..1.0);
        }
        let mut data = Dataset::new(dim);
        for _ in 0..rng.gen_range(1..20) {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            data.push(&x, rng.gen_range(0..classes), rng.gen_range(0.1..3.0));
        }
        let l2 = rng.gen_range(0.0..0.1);
        let (_, grad) = m.loss_and_grad(&data, l2);
        let h = 1e-6;
        for (k, g) in grad.iter().enumerate() {
            let orig = *m.params_mut(k);
            *m.params_mut(k) = orig + h;
            let up = m.loss_and_grad(&data, l2).0;
            *m.params_mut(k) = orig - h;
            let down = m.loss_and_grad(&data, l2).0;
            *m.params_mut(k) = orig;
            worst = worst.max((g - (up - down) / (2.0 * h)).abs());
        }
    }
    worst
}

fn normalization_error(run: &Run) -> f64 {
    let mut worst = 0.0f64;
    let mut check = |v: &mut dyn Iterator<Item = f64>| {
        worst = worst.max((v.sum::<f64>() - 1.0).abs());
    };
    let m = &run.model;
    for row in &m.event_priors.trans {
        check(&mut row.iter().copied());
    }
    check(&mut (0..3).flat_map(|a| (a..3).map(move |b| m.event_priors.occ[a][b])));
    for t in &m.belief.prior.tables {
        check(&mut t.marginal.iter().copied());
        for row in &t.trans {
            check(&mut row.iter().copied());
        }
    }
    let table = LikelihoodTable::new(&m.belief.likelihood);
    for mind in MindId::ALL {
        for label in EventLabel::ALL {
            for code in 0..16 {
                for hist in 0..HIST_STATES {
                    check(&mut table.get(mind, label, code, hist).iter().map(|v| v.exp()));
                }
            }
        }
    }
    for ((_, trace, _), pg) in run.tests.iter().zip(&run.parses) {
        let ctx = ParseContext::new(trace, m).unwrap();
        for e in &pg.events {
            let lp = m.classifier.log_probs(&ctx.analysis.pooled_span(e.start, e.end)).unwrap();
            check(&mut lp.iter().map(|v| v.exp()));
        }
        for p in &pg.posteriors {
            check(&mut p.iter().copied());
        }
    }
    worst
}

fn c8_hygiene(run: &Run) -> Outcome {
    let grad = gradient_check();
    let norm = normalization_error(run);
    let mut energy = 0.0f64;
    for ((_, trace, _), pg) in run.tests.iter().zip(&run.parses) {
        let sum: f64 = pg.energy.terms().iter().sum();
        energy = energy.max((sum - pg.energy.total).abs());
        let ctx = ParseContext::new(trace, &run.model).unwrap();
        let again = ctx.total_energy(pg, &run.model, &pg.params).unwrap();
        energy = energy.max((again.total - pg.energy.total).abs());
    }
    outcome(
        grad <= 1e-5 && norm <= 1e-9 && energy <= 1e-9,
        format!("gradient gap {grad:.2e}, normalization gap {norm:.2e}, energy gap {energy:.2e}"),
    )
}

fn c9_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_pipeline(a.path(), "1");
    small_pipeline(b.path(), "4");
    let same = digests(a.path()) == digests(b.path());
    let committed = fs::read_to_string(golden_path("digests.txt")).unwrap_or_default();
    let listing = digest_listing(a.path());
    let files = listing.lines().count();
    outcome(
        same && committed == listing,
        format!(
            "{files} artifacts, reruns {}, golden digests {}",
            if same { "identical" } else { "differ" },
            if committed == listing { "match" } else { "differ" }
        ),
    )
}

fn c10_performance(run: &Run) -> Outcome {
    let kinds = [
        EventLabel::NoCommunication,
        EventLabel::JointAttention,
        EventLabel::AttentionFollowing,
        EventLabel::JointAttention,
    ];
    let events: Vec<ScriptedEvent> = (0..20)
        .map(|i| ScriptedEvent {
            kind: kinds[i % 4],
            duration: 100,
            objects: if i == 8 { vec![3] } else { Vec::new() },
            false_belief: (i == 8).then_some(1),
            leader: None,
            start: None,
        })
        .collect();
    let spec = ScenarioSpec {
        seed: 1010,
        object_count: 5,
        joints: fmp_core::world::MIN_JOINTS,
        frame_rate: 25.0,
        min_segment: 10,
        room: ScenarioSpec::default_room(),
        events,
    };
    let (trace, _) = simulate(&spec).unwrap();
    let (pg, el) = single_thread(|| {
        let t0 = Instant::now();
        let pg = parse(&trace, &run.model).unwrap();
        (pg, t0.elapsed())
    });
    outcome(
        trace.len() == 2000 && pg.object_ids.len() == 5 && el < Duration::from_secs(5),
        format!("{} frames, {} objects parsed in {el:.2?}", trace.len(), pg.object_ids.len()),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut results = vec![
        ("1 beam search equals exhaustive search", c1_beam_exact()),
        ("2 Viterbi equals exhaustive enumeration", c2_viterbi_exact()),
    ];
    let run = full_run(dir.path());
    results.push(("3 state-machine legality", c3_legality(&run)));
    results.push(("4 chance baseline", c4_chance(&run)));
    results.push(("5 learning beats chance", c5_learning(&run)));
    results.push(("6 common-mind gating", c6_common_gating(&run)));
    results.push(("7 keyframe fidelity", c7_keyframes(&run)));
    results.push(("8 numerical hygiene", c8_hygiene(&run)));
    results.push(("9 CLI determinism", c9_determinism()));
    results.push(("10 parse performance", c10_performance(&run)));
    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
