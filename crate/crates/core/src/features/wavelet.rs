//! Orthonormal Haar transform and fixed-length window summaries.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// In-place orthonormal Haar decomposition of a power-of-two length signal.
///
/// Output order is `[approximation, coarsest detail, 2 next details, 4 …]`.
pub fn haar_forward(x: &mut [f64]) {
    let n = x.len();
    assert!(n.is_power_of_two(), "haar_forward needs a power-of-two length");
    let mut tmp = vec![0.0; n];
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            tmp[i] = (a + b) * FRAC_1_SQRT_2;
            tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
        }
        x[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
}

pub fn haar_inverse(x: &mut [f64]) {
    let n = x.len();
    assert!(n.is_power_of_two(), "haar_inverse needs a power-of-two length");
    let mut tmp = vec![0.0; n];
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for i in 0..half {
            let (s, d) = (x[i], x[half + i]);
            tmp[2 * i] = (s + d) * FRAC_1_SQRT_2;
            tmp[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
        }
        x[..len].copy_from_slice(&tmp[..len]);
        len *= 2;
    }
}

/// Nearest-neighbor resampling to the next power-of-two length.
pub fn resample_dyadic(x: &[f64]) -> Vec<f64> {
    let l = x.len();
    let n = l.next_power_of_two();
    if n == l {
        return x.to_vec();
    }
    // sample i sits at the center of its cell: (2i + 1) L / (2N)
    (0..n).map(|i| x[((2 * i + 1) * l) / (2 * n)]).collect()
}

/// `k` leading Haar coefficients per channel, scaled by `1/√N` so that a
/// constant channel `c` summarizes to `(c, 0, …, 0)` at any window length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub k: usize,
    pub coeffs: Vec<f64>,
}

/// Summarizes a row-major `L × dim` window. Windows shorter than 2 are rejected.
pub fn wavelet_summary(rows: &[f64], dim: usize, k: usize) -> Result<SegmentSummary> {
    let len = if dim == 0 { 0 } else { rows.len() / dim };
    if len < 2 {
        return Err(Error::WindowTooShort(len));
    }
    Ok(summary_unchecked(rows, dim, k))
}

pub(crate) fn summary_unchecked(rows: &[f64], dim: usize, k: usize) -> SegmentSummary {
    let len = rows.len() / dim.max(1);
    let mut coeffs = Vec::with_capacity(dim * k);
    let mut channel = vec![0.0; len];
    for c in 0..dim {
        for (t, v) in channel.iter_mut().enumerate() {
            *v = rows[t * dim + c];
        }
        let mut s = resample_dyadic(&channel);
        let scale = 1.0 / (s.len() as f64).sqrt();
        haar_forward(&mut s);
        for i in 0..k {
            coeffs.push(s.get(i).map_or(0.0, |v| v * scale));
        }
    }
    SegmentSummary { k, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_channel() {
        for len in [2, 3, 7, 10, 33] {
            let rows = vec![3.0; len];
            let s = wavelet_summary(&rows, 1, 8).unwrap();
            assert!((s.coeffs[0] - 3.0).abs() < 1e-12, "len {len}");
            assert!(s.coeffs[1..].iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn step_signal_hand_computed() {
        // Orthonormal Haar of 0,0,0,0,1,1,1,1: approximation 4/√8 = √2,
        // coarsest detail (0 - 4)/√8 = -√2, all finer details zero.
        // After the 1/√8 scaling: 0.5 and -0.5.
        let rows = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let mut raw = rows.to_vec();
        haar_forward(&mut raw);
        let expected_raw = [2f64.sqrt(), -(2f64.sqrt()), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in raw.iter().zip(expected_raw) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = wavelet_summary(&rows, 1, 8).unwrap();
        let expected = [0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in s.coeffs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn short_window_rejected() {
        assert!(matches!(
            wavelet_summary(&[1.0], 1, 8),
            Err(Error::WindowTooShort(1))
        ));
        assert!(wavelet_summary(&[], 1, 8).is_err());
    }

    #[test]
    fn energy_preserved_and_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 8, 64, 256] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut y = x.clone();
            haar_forward(&mut y);
            let ex: f64 = x.iter().map(|v| v * v).sum();
            let ey: f64 = y.iter().map(|v| v * v).sum();
            assert!((ex - ey).abs() < 1e-9);
            haar_inverse(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resampling_length() {
        assert_eq!(resample_dyadic(&[1.0, 2.0, 3.0]).len(), 4);
        assert_eq!(resample_dyadic(&[1.0; 10]).len(), 16);
        assert_eq!(resample_dyadic(&[1.0, 2.0]), vec![1.0, 2.0]);
        let r = resample_dyadic(&[1.0, 2.0, 3.0]);
        assert_eq!(r, vec![1.0, 2.0, 2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn linear_in_scale(xs in prop::collection::vec(-10.0f64..10.0, 4..40), alpha in -4.0f64..4.0) {
            let dim = 2;
            let len = xs.len() / dim * dim;
            let xs = &xs[..len];
            let scaled: Vec<f64> = xs.iter().map(|v| v * alpha).collect();
            let a = wavelet_summary(xs, dim, 8).unwrap();
            let b = wavelet_summary(&scaled, dim, 8).unwrap();
            for (u, v) in a.coeffs.iter().zip(&b.coeffs) {
                prop_assert!((u * alpha - v).abs() < 1e-9);
            }
        }
    }
}
