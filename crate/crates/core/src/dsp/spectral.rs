use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    pub fn df(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    /// Rectangle-rule integral over `lo <= f < hi`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.df();
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .map(|(_, p)| p * df)
            .sum()
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch's averaged periodogram: Hann segments of `segment_len` samples
/// (clamped to the signal length) with `overlap` shared samples, each segment
/// mean-detrended, zero-padded to `nfft` (at least the segment length).
/// Density scaling, one-sided.
pub fn welch(x: &[f64], rate_hz: f64, segment_len: usize, overlap: usize, nfft: usize) -> Psd {
    let n = x.len();
    let seg = segment_len.min(n).max(1);
    let overlap = overlap.min(seg.saturating_sub(1));
    let step = seg - overlap;
    let nfft = nfft.max(seg);
    let window = hann(seg);
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let n_segments = if n >= seg { (n - seg) / step + 1 } else { 0 };

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let n_bins = nfft / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for s in 0..n_segments {
        let chunk = &x[s * step..s * step + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < seg {
                Complex64::new((chunk[i] - mean) * window[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
    }
    let scale = 1.0 / (rate_hz * wss * n_segments.max(1) as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (nfft % 2 == 0 && k == nfft / 2) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let freqs = (0..n_bins).map(|k| k as f64 * rate_hz / nfft as f64).collect();
    Psd { freqs, power }
}
