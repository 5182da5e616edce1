//! Macro metrics over belief deltas, the chance baseline and keyframes.

use crate::beliefs::{BeliefDelta, DeltaTable, MindId};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Confusion counts indexed `[truth][prediction]` by delta code.
pub type Confusion = [[u64; 4]; 4];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MindMetrics {
    pub mind: MindId,
    pub confusion: Confusion,
    pub classes: [ClassScores; 4],
    pub precision: f64,
    pub f1: f64,
}

impl MindMetrics {
    pub fn from_confusion(mind: MindId, confusion: Confusion) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let classes: [ClassScores; 4] = std::array::from_fn(|c| {
            let tp = confusion[c][c];
            let predicted: u64 = (0..4).map(|t| confusion[t][c]).sum();
            let actual: u64 = confusion[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores { precision, recall, f1 }
        });
        // classes absent from both truth and predictions do not count
        let present: Vec<usize> = (0..4)
            .filter(|&c| confusion[c].iter().sum::<u64>() + (0..4).map(|t| confusion[t][c]).sum::<u64>() > 0)
            .collect();
        let mean = |f: fn(&ClassScores) -> f64| {
            let n = present.len().max(1) as f64;
            present.iter().map(|&c| f(&classes[c])).sum::<f64>() / n
        };
        MindMetrics {
            mind,
            confusion,
            precision: mean(|c| c.precision),
            f1: mean(|c| c.f1),
            classes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub minds: Vec<MindMetrics>,
    pub avg_precision: f64,
    pub avg_f1: f64,
}

/// Pools confusion counts over any number of aligned prediction tables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsAccumulator {
    confusion: [Confusion; 5],
}

impl MetricsAccumulator {
    pub fn add(&mut self, predicted: &DeltaTable, truth: &DeltaTable) -> Result<()> {
        if predicted.num_frames != truth.num_frames || predicted.object_ids != truth.object_ids {
            return Err(Error::KeyMismatch(format!(
                "prediction covers {} frames of objects {:?}, truth {} frames of {:?}",
                predicted.num_frames, predicted.object_ids, truth.num_frames, truth.object_ids
            )));
        }
        for m in MindId::ALL {
            let conf = &mut self.confusion[m.index()];
            for slot in 0..truth.object_ids.len() {
                for (p, t) in predicted.chain(m, slot).iter().zip(truth.chain(m, slot)) {
                    conf[t.code()][p.code()] += 1;
                }
            }
        }
        Ok(())
    }

    pub fn report(&self) -> MetricsReport {
        let minds: Vec<MindMetrics> = MindId::ALL
            .iter()
            .map(|&m| MindMetrics::from_confusion(m, self.confusion[m.index()]))
            .collect();
        MetricsReport {
            avg_precision: minds.iter().map(|m| m.precision).sum::<f64>() / 5.0,
            avg_f1: minds.iter().map(|m| m.f1).sum::<f64>() / 5.0,
            minds,
        }
    }
}

/// Per-mind macro precision and F1 over every (frame, object) key.
pub fn macro_metrics(predicted: &DeltaTable, truth: &DeltaTable) -> Result<MetricsReport> {
    let mut acc = MetricsAccumulator::default();
    acc.add(predicted, truth)?;
    Ok(acc.report())
}

/// Uniformly random deltas over the same keys, ignoring legality.
pub fn chance_baseline(num_frames: usize, object_ids: &[u32], seed: u64) -> DeltaTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = DeltaTable::new(num_frames, object_ids.to_vec());
    for m in MindId::ALL {
        for slot in 0..object_ids.len() {
            for d in t.chain_mut(m, slot) {
                *d = BeliefDelta::ALL[rng.gen_range(0..4)];
            }
        }
    }
    t
}

/// Rows are methods, columns the five minds plus their average.
pub fn format_report(rows: &[(&str, &MetricsReport)]) -> String {
    let mut out = String::new();
    for (title, pick) in [("Macro precision", 0), ("Macro F1", 1)] {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<12}", "method");
        for m in MindId::ALL {
            let _ = write!(out, "{:>8}", m.name());
        }
        let _ = writeln!(out, "{:>8}", "avg");
        for (name, r) in rows {
            let _ = write!(out, "{name:<12}");
            for m in &r.minds {
                let _ = write!(out, "{:>8.3}", if pick == 0 { m.precision } else { m.f1 });
            }
            let _ = writeln!(out, "{:>8.3}", if pick == 0 { r.avg_precision } else { r.avg_f1 });
        }
        let _ = writeln!(out);
    }
    out
}

/// Per frame, the summed posterior mass of occur and disappear over every
/// mind and object. `posteriors` is laid out like a `DeltaTable`.
pub fn keyframe_scores(posteriors: &[[f64; 4]], num_frames: usize) -> Vec<f64> {
    let mut s = vec![0.0; num_frames];
    if num_frames == 0 {
        return s;
    }
    for chain in posteriors.chunks(num_frames) {
        for (v, p) in s.iter_mut().zip(chain) {
            *v += p[BeliefDelta::Occur.code()] + p[BeliefDelta::Disappear.code()];
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyframeSelection {
    /// Selected frames in selection order.
    pub frames: Vec<usize>,
    /// Fewer than `k` frames survived suppression.
    pub short: bool,
}

/// Greedy top-`k` with non-maximum suppression: once a frame is chosen, every
/// frame closer than `w` is dropped. Ties go to the earlier frame.
pub fn select_keyframes(scores: &[f64], k: usize, w: usize) -> Result<KeyframeSelection> {
    if k == 0 {
        return Err(Error::Inconsistent("keyframe count must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut frames: Vec<usize> = Vec::with_capacity(k);
    for t in order {
        if frames.len() == k {
            break;
        }
        if frames.iter().all(|&f| f.abs_diff(t) >= w.max(1)) {
            frames.push(t);
        }
    }
    Ok(KeyframeSelection {
        short: frames.len() < k,
        frames,
    })
}

/// Frames whose score is at least the `q`-quantile from the top, e.g. the
/// top 15% for `q = 0.15`. Always keeps at least one frame.
pub fn top_fraction(scores: &[f64], q: f64) -> Vec<bool> {
    let n = scores.len();
    let keep = ((n as f64 * q).ceil() as usize).clamp(1.min(n), n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut mask = vec![false; n];
    for &t in &order[..keep] {
        mask[t] = true;
    }
    mask
}

/// Score timeline as a standalone SVG, keyframes marked in red.
pub fn keyframe_svg(scores: &[f64], keyframes: &[usize]) -> String {
    let (w, h, pad) = (800.0, 240.0, 30.0);
    let max = scores.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let n = scores.len().max(1) as f64;
    let x = |t: usize| pad + (w - 2.0 * pad) * t as f64 / n;
    let bar = (w - 2.0 * pad) / n;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (t, &s) in scores.iter().enumerate() {
        let bh = (h - 2.0 * pad) * s / max;
        let fill = if keyframes.contains(&t) { "#c0392b" } else { "#34495e" };
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
            x(t),
            h - pad - bh,
            bar.max(0.5),
            bh
        );
    }
    let _ = writeln!(
        out,
        r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(
        out,
        r#"<text x="{pad}" y="18" font-family="sans-serif" font-size="12">keyframe score, max {max:.3}</text>"#
    );
    out.push_str("</svg>\n");
    out
}

/// One frame index per line.
pub fn write_keyframe_list(frames: &[usize]) -> String {
    frames.iter().map(|f| format!("{f}\n")).collect()
}
