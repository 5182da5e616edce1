//! Interactive segment proposals by agglomerative merging of fixed windows.

use crate::error::{Error, Result};
use crate::features::{l2, wavelet::summary_unchecked, FeatureStream, SegmentSummary};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentParams {
    /// Initial window length in frames.
    pub window: usize,
    pub min_len: usize,
    /// Merge threshold on the distance between wavelet summaries.
    pub tau: f64,
    /// Haar coefficients kept per channel.
    pub k: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            window: 10,
            min_len: 10,
            tau: 1.0,
            k: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub summary: SegmentSummary,
    pub mean_step_distance: f64,
}

impl Segment {
    fn new(stream: &FeatureStream, start: usize, end: usize, k: usize) -> Self {
        let mut steps = 0.0;
        for t in start..end - 1 {
            steps += stream.step_distance(t);
        }
        Segment {
            start,
            end,
            summary: summary_unchecked(stream.rows(start, end), stream.dim, k),
            mean_step_distance: steps / (end - start - 1).max(1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Window boundaries; a short remainder joins the last window.
fn initial_windows(len: usize, window: usize) -> Vec<(usize, usize)> {
    let n = (len / window).max(1);
    (0..n)
        .map(|i| (i * window, if i + 1 == n { len } else { (i + 1) * window }))
        .collect()
}

fn check(stream: &FeatureStream, p: &SegmentParams) -> Result<()> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    if p.window < 2 || p.min_len < 2 || p.window < p.min_len {
        return Err(Error::Inconsistent(format!(
            "segment window {} must be at least min_len {} and 2",
            p.window, p.min_len
        )));
    }
    if stream.len() < p.min_len {
        return Err(Error::StreamTooShort {
            len: stream.len(),
            min: p.min_len,
        });
    }
    Ok(())
}

/// Repeatedly merges the closest adjacent pair (leftmost on ties) while its
/// summary distance stays below `tau`.
pub fn propose_segments(stream: &FeatureStream, p: &SegmentParams) -> Result<Vec<Segment>> {
    check(stream, p)?;
    let mut segs: Vec<Segment> = initial_windows(stream.len(), p.window)
        .into_iter()
        .map(|(s, e)| Segment::new(stream, s, e, p.k))
        .collect();
    let mut gaps: Vec<f64> = segs
        .windows(2)
        .map(|w| l2(&w[0].summary.coeffs, &w[1].summary.coeffs))
        .collect();
    while !gaps.is_empty() {
        let mut best = 0;
        for i in 1..gaps.len() {
            if gaps[i] < gaps[best] {
                best = i;
            }
        }
        if gaps[best] >= p.tau {
            break;
        }
        let merged = Segment::new(stream, segs[best].start, segs[best + 1].end, p.k);
        segs[best] = merged;
        segs.remove(best + 1);
        gaps.remove(best);
        if best > 0 {
            gaps[best - 1] = l2(&segs[best - 1].summary.coeffs, &segs[best].summary.coeffs);
        }
        if best < gaps.len() {
            gaps[best] = l2(&segs[best].summary.coeffs, &segs[best + 1].summary.coeffs);
        }
    }
    Ok(segs)
}

/// Summary distances between adjacent initial windows, pooled over streams.
pub fn adjacent_window_distances(streams: &[&FeatureStream], p: &SegmentParams) -> Vec<f64> {
    let mut out = Vec::new();
    for s in streams {
        if check(s, p).is_err() {
            continue;
        }
        let sums: Vec<SegmentSummary> = initial_windows(s.len(), p.window)
            .into_iter()
            .map(|(a, b)| summary_unchecked(s.rows(a, b), s.dim, p.k))
            .collect();
        out.extend(sums.windows(2).map(|w| l2(&w[0].coeffs, &w[1].coeffs)));
    }
    out
}

/// Median of the adjacent-window distances, used as the default threshold.
pub fn median_window_distance(streams: &[&FeatureStream], p: &SegmentParams) -> Result<f64> {
    let mut d = adjacent_window_distances(streams, p);
    if d.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    Ok(if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    })
}

/// One `start end` pair per line.
pub fn write_segment_list(segs: &[(usize, usize)]) -> String {
    let mut out = String::new();
    for (s, e) in segs {
        let _ = writeln!(out, "{s} {e}");
    }
    out
}

/// Parses a segment dump and checks that it is a sorted, gap-free partition.
pub fn read_segment_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let n = i + 1;
        let mut it = line.split_whitespace();
        let mut num = || -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::format(n, "expected `start end`"))?
                .parse()
                .map_err(|e| Error::format(n, e))
        };
        let (s, e) = (num()?, num()?);
        if it.next().is_some() {
            return Err(Error::format(n, "trailing fields"));
        }
        if e <= s {
            return Err(Error::format(n, "empty segment"));
        }
        let expected = out.last().map_or(0, |l| l.1);
        if s != expected {
            return Err(Error::format(n, format!("segment starts at {s}, expected {expected}")));
        }
        out.push((s, e));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stream_of(values: &[f64]) -> FeatureStream {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v, 0.5 * v]).collect();
        FeatureStream::from_rows(&rows).unwrap()
    }

    fn spans(segs: &[Segment]) -> Vec<(usize, usize)> {
        segs.iter().map(|s| (s.start, s.end)).collect()
    }

    #[test]
    fn constant_stream_is_one_segment() {
        let s = stream_of(&[2.0; 100]);
        let p = SegmentParams { tau: 1e-9, ..Default::default() };
        assert_eq!(spans(&propose_segments(&s, &p).unwrap()), vec![(0, 100)]);
    }

    #[test]
    fn short_stream_is_one_segment() {
        let s = stream_of(&(0..17).map(|v| v as f64).collect::<Vec<_>>());
        let p = SegmentParams { tau: 0.0, ..Default::default() };
        assert_eq!(spans(&propose_segments(&s, &p).unwrap()), vec![(0, 17)]);
        assert!(matches!(propose_segments(&FeatureStream::new(2), &p), Err(Error::EmptyStream)));
        assert!(matches!(
            propose_segments(&stream_of(&[1.0; 5]), &p),
            Err(Error::StreamTooShort { .. })
        ));
    }

    /// Exhaustive two-way split minimizing within-segment squared deviation.
    fn best_split(values: &[f64]) -> usize {
        let cost = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        (1..values.len())
            .min_by(|&a, &b| {
                (cost(&values[..a]) + cost(&values[a..]))
                    .total_cmp(&(cost(&values[..b]) + cost(&values[b..])))
            })
            .unwrap()
    }

    #[test]
    fn single_jump_matches_change_point_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let values: Vec<f64> = (0..100)
            .map(|t| if t < 50 { 0.0 } else { 4.0 } + rng.gen_range(-0.05..0.05))
            .collect();
        let s = stream_of(&values);
        let p = SegmentParams { tau: 1.0, ..Default::default() };
        let segs = propose_segments(&s, &p).unwrap();
        assert_eq!(segs.len(), 2);
        let oracle = best_split(&values);
        assert!((segs[0].end as i64 - oracle as i64).abs() <= p.window as i64);
        assert_eq!(segs[0].end, 50);
    }

    #[test]
    fn dump_round_trip() {
        let segs = vec![(0, 10), (10, 35), (35, 40)];
        assert_eq!(read_segment_list(&write_segment_list(&segs)).unwrap(), segs);
        assert!(read_segment_list("0 10\n11 20\n").is_err());
        assert!(read_segment_list("0 0\n").is_err());
        assert!(read_segment_list("0 x\n").is_err());
        assert!(read_segment_list("0 4 5\n").is_err());
    }

    fn random_stream(seed: u64, len: usize) -> FeatureStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut level = 0.0;
        let v: Vec<f64> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.03) {
                    level = rng.gen_range(-3.0..3.0);
                }
                level + rng.gen_range(-0.2..0.2)
            })
            .collect();
        stream_of(&v)
    }

    proptest! {
        #[test]
        fn partition_monotone_idempotent(seed in 0u64..500, len in 10usize..300, t1 in 0.0f64..3.0, dt in 0.0f64..3.0) {
            let s = random_stream(seed, len);
            let lo = SegmentParams { tau: t1, ..Default::default() };
            let hi = SegmentParams { tau: t1 + dt, ..Default::default() };
            let a = propose_segments(&s, &lo).unwrap();
            let b = propose_segments(&s, &hi).unwrap();
            prop_assert_eq!(a.first().unwrap().start, 0);
            prop_assert_eq!(a.last().unwrap().end, len);
            for w in a.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            prop_assert!(a.iter().all(|s| s.len() >= 10));
            prop_assert!(b.len() <= a.len());
            prop_assert_eq!(&a, &propose_segments(&s, &lo).unwrap());
        }
    }
}
