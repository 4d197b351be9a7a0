//! PPG beat detection, inter-beat intervals and heart-rate-variability features.
//!
//! Beats are found on a band-passed PPG with an adaptive threshold: a 0.75 s
//! rolling mean raised by `alpha * sd(signal)`. Every contiguous run above the
//! threshold contributes one beat at its maximum. Several `alpha` values are
//! tried and the one giving the most regular intervals (smallest IBI standard
//! deviation) with a plausible mean rate wins. Beats whose interval strays
//! more than 30% from the recent median interval are then flagged.

use crate::dsp::{central_moving_average, interp_sorted, uniform_grid, welch};
use crate::error::{Error, Result};
use crate::model::TimeSeries;

pub const MIN_BPM: f64 = 42.0;
pub const MAX_BPM: f64 = 210.0;

/// Window of the centered moving average applied to heart metric series.
pub const HEART_METRIC_SMOOTHING_S: f64 = 10.0;

pub const FEATURE_NAMES: [&str; 13] = [
    "bpm",
    "ibi",
    "sdnn",
    "sdsd",
    "rmssd",
    "pnn20",
    "pnn50",
    "hr_mad",
    "sd1",
    "sd2",
    "s",
    "sd1_sd2",
    "breathingrate",
];

// ---------------------------------------------------------------------------
// Beat detection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BeatDetectorConfig {
    pub rolling_window_s: f64,
    pub alphas: Vec<f64>,
    pub min_bpm: f64,
    pub max_bpm: f64,
    /// Allowed relative deviation from the reference interval.
    pub reject_tolerance: f64,
    /// Number of recent clean intervals forming the reference median.
    pub median_len: usize,
}

impl Default for BeatDetectorConfig {
    fn default() -> Self {
        BeatDetectorConfig {
            rolling_window_s: 0.75,
            alphas: vec![0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0],
            min_bpm: MIN_BPM,
            max_bpm: MAX_BPM,
            reject_tolerance: 0.3,
            median_len: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatSeries {
    /// Beat times in seconds, strictly increasing.
    pub times: Vec<f64>,
    pub accepted: Vec<bool>,
    /// Time span of the analysed signal.
    pub bounds: (f64, f64),
    /// Threshold offset that was selected.
    pub alpha: f64,
}

impl BeatSeries {
    pub fn accepted_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.times
            .iter()
            .zip(&self.accepted)
            .filter(|(_, a)| **a)
            .map(|(t, _)| *t)
    }

    pub fn n_rejected(&self) -> usize {
        self.accepted.iter().filter(|a| !**a).count()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn pop_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn rolling_mean(x: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Peak sample indices (with sub-sample offset) of runs above `threshold`.
/// Runs touching either edge are skipped since their maximum may lie outside.
fn peaks_above(x: &[f64], threshold: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        if x[i] <= threshold[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && x[i] > threshold[i] {
            i += 1;
        }
        let end = i; // exclusive
        if start == 0 || end == n {
            continue;
        }
        let k = (start..end).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        let offset = if k > 0 && k + 1 < n {
            let (ym, y0, yp) = (x[k - 1], x[k], x[k + 1]);
            let denom = ym - 2.0 * y0 + yp;
            if denom < 0.0 {
                (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        } else {
            0.0
        };
        peaks.push(k as f64 + offset);
    }
    peaks
}

/// Detects beats on a band-passed PPG sampled at `rate_hz` whose first sample
/// sits at time `t0`.
pub fn detect_beats(signal: &[f64], rate_hz: f64, t0: f64) -> Result<BeatSeries> {
    detect_beats_with(signal, rate_hz, t0, &BeatDetectorConfig::default())
}

pub fn detect_beats_with(
    signal: &[f64],
    rate_hz: f64,
    t0: f64,
    config: &BeatDetectorConfig,
) -> Result<BeatSeries> {
    if signal.len() < 3 || !(rate_hz > 0.0) {
        return Err(Error::NoPlausibleBeats);
    }
    let sd = pop_sd(signal);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::NoPlausibleBeats);
    }
    let half = ((config.rolling_window_s * rate_hz) / 2.0).round() as usize;
    let rm = rolling_mean(signal, half);

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for &alpha in &config.alphas {
        let thr: Vec<f64> = rm.iter().map(|m| m + alpha * sd).collect();
        let idx = peaks_above(signal, &thr);
        if idx.len() < 3 {
            continue;
        }
        let ibis: Vec<f64> = idx.windows(2).map(|w| (w[1] - w[0]) / rate_hz).collect();
        let bpm = 60.0 / mean(&ibis);
        if !(config.min_bpm..=config.max_bpm).contains(&bpm) {
            continue;
        }
        let score = pop_sd(&ibis);
        if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
            best = Some((score, alpha, idx));
        }
    }
    let (_, alpha, idx) = best.ok_or(Error::NoPlausibleBeats)?;
    let times: Vec<f64> = idx.iter().map(|k| t0 + k / rate_hz).collect();
    let accepted = flag_outliers(&times, config);
    Ok(BeatSeries {
        times,
        accepted,
        bounds: (t0, t0 + (signal.len() - 1) as f64 / rate_hz),
        alpha,
    })
}

/// A beat is kept when its interval to either the previous detected beat or
/// the last accepted beat lies within tolerance of the reference: the median
/// of the last `median_len` clean intervals (or of all raw intervals before
/// any clean one exists), and inside the plausible bpm range.
fn flag_outliers(times: &[f64], config: &BeatDetectorConfig) -> Vec<bool> {
    let mut accepted = vec![true; times.len()];
    if times.len() < 2 {
        return accepted;
    }
    let raw: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let global_ref = median(&raw);
    let min_ibi = 60.0 / config.max_bpm;
    let max_ibi = 60.0 / config.min_bpm;
    let mut clean: Vec<f64> = Vec::new();
    let mut last_accepted = 0usize;
    for i in 1..times.len() {
        let reference = if clean.is_empty() {
            global_ref
        } else {
            let from = clean.len().saturating_sub(config.median_len);
            median(&clean[from..])
        };
        let ok = |ibi: f64| {
            (min_ibi..=max_ibi).contains(&ibi)
                && (ibi - reference).abs() <= config.reject_tolerance * reference
        };
        let to_prev = times[i] - times[i - 1];
        let to_acc = times[i] - times[last_accepted];
        if ok(to_prev) || ok(to_acc) {
            if accepted[i - 1] && ok(to_prev) {
                clean.push(to_prev);
            } else if ok(to_acc) {
                clean.push(to_acc);
            }
            last_accepted = i;
        } else {
            accepted[i] = false;
        }
    }
    accepted
}

// ---------------------------------------------------------------------------
// Inter-beat intervals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct IbiSeries {
    /// Time of the closing beat of each interval, seconds.
    pub times: Vec<f64>,
    pub ms: Vec<f64>,
}

/// Intervals between consecutive accepted beats, in ms.
///
/// An interval that spans a rejected beat is kept only when it agrees (within
/// 30%) with the median of the intervals that do not; a missed pulse therefore
/// breaks the chain while a spurious extra detection does not.
pub fn ibi_series(beats: &BeatSeries) -> Result<IbiSeries> {
    let accepted: Vec<usize> = (0..beats.times.len()).filter(|&i| beats.accepted[i]).collect();
    if accepted.len() < 2 {
        return Err(Error::Insufficient(format!(
            "{} accepted beats; need at least 2",
            accepted.len()
        )));
    }
    let pairs: Vec<(usize, usize, bool)> = accepted
        .windows(2)
        .map(|w| (w[0], w[1], w[1] - w[0] > 1))
        .collect();
    let direct: Vec<f64> = pairs
        .iter()
        .filter(|p| !p.2)
        .map(|&(a, b, _)| (beats.times[b] - beats.times[a]) * 1000.0)
        .collect();
    let reference = (!direct.is_empty()).then(|| median(&direct));

    let mut out = IbiSeries {
        times: Vec::new(),
        ms: Vec::new(),
    };
    for (a, b, bridged) in pairs {
        let ms = (beats.times[b] - beats.times[a]) * 1000.0;
        let keep = !bridged || reference.is_some_and(|r| (ms - r).abs() <= 0.3 * r);
        if keep {
            out.times.push(beats.times[b]);
            out.ms.push(ms);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrvFeatures {
    pub bpm: f64,
    /// Mean inter-beat interval, ms.
    pub ibi: f64,
    pub sdnn: f64,
    pub sdsd: f64,
    pub rmssd: f64,
    pub pnn20: f64,
    pub pnn50: f64,
    pub hr_mad: f64,
    pub sd1: f64,
    pub sd2: f64,
    /// Poincaré ellipse area, ms².
    pub s: f64,
    pub sd1_sd2_ratio: f64,
    /// Hz; filled separately since it needs interval timestamps.
    pub breathingrate: Option<f64>,
}

impl HrvFeatures {
    /// `(name, value)` pairs in [`FEATURE_NAMES`] order; breathing rate is
    /// omitted when unknown.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let vals = [
            self.bpm,
            self.ibi,
            self.sdnn,
            self.sdsd,
            self.rmssd,
            self.pnn20,
            self.pnn50,
            self.hr_mad,
            self.sd1,
            self.sd2,
            self.s,
            self.sd1_sd2_ratio,
        ];
        let mut out: Vec<_> = FEATURE_NAMES.iter().copied().zip(vals).collect();
        if let Some(br) = self.breathingrate {
            out.push((FEATURE_NAMES[12], br));
        }
        out
    }
}

/// Time-domain and Poincaré features from IBIs in ms. Population statistics
/// throughout; pNNx counts strictly greater differences.
pub fn hrv_features(ibi_ms: &[f64]) -> Result<HrvFeatures> {
    if ibi_ms.len() < 3 {
        return Err(Error::Insufficient(format!(
            "{} intervals; HRV features need at least 3",
            ibi_ms.len()
        )));
    }
    if ibi_ms.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("intervals must be positive and finite".into()));
    }
    let mean_ibi = mean(ibi_ms);
    let sdnn = pop_sd(ibi_ms);
    let diffs: Vec<f64> = ibi_ms.windows(2).map(|w| w[1] - w[0]).collect();
    let sdsd = pop_sd(&diffs);
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let frac_over = |x: f64| diffs.iter().filter(|d| d.abs() > x).count() as f64 / diffs.len() as f64;
    let med = median(ibi_ms);
    let deviations: Vec<f64> = ibi_ms.iter().map(|v| (v - med).abs()).collect();
    let sd1 = rmssd / std::f64::consts::SQRT_2;
    let sd2 = (2.0 * sdnn * sdnn - 0.5 * sdsd * sdsd).max(0.0).sqrt();
    Ok(HrvFeatures {
        bpm: 60_000.0 / mean_ibi,
        ibi: mean_ibi,
        sdnn,
        sdsd,
        rmssd,
        pnn20: frac_over(20.0),
        pnn50: frac_over(50.0),
        hr_mad: median(&deviations),
        sd1,
        sd2,
        s: std::f64::consts::PI * sd1 * sd2,
        sd1_sd2_ratio: if sd2 > 0.0 { sd1 / sd2 } else { 0.0 },
        breathingrate: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreathingRate {
    pub hz: f64,
    /// Set when the respiratory band carries no meaningful power.
    pub low_confidence: bool,
}

pub const BREATHING_BAND_HZ: (f64, f64) = (0.1, 0.4);
const IBI_RESAMPLE_HZ: f64 = 4.0;

/// Dominant respiratory frequency of the IBI series.
///
/// The intervals are interpolated at 4 Hz, mean-removed, and passed through
/// Welch (30 s Hann segments, 50% overlap, zero-padded to 1024 bins); the
/// result is the frequency of maximum power inside 0.1-0.4 Hz.
pub fn breathing_rate(times_s: &[f64], ibi_ms: &[f64], min_span_s: f64) -> Result<BreathingRate> {
    if times_s.len() != ibi_ms.len() || times_s.len() < 2 {
        return Err(Error::Insufficient("breathing rate needs at least 2 intervals".into()));
    }
    let span = times_s[times_s.len() - 1] - times_s[0];
    if span < min_span_s {
        return Err(Error::TooShort(format!(
            "interval series spans {span:.1} s; breathing rate needs {min_span_s} s"
        )));
    }
    let grid = uniform_grid(times_s[0], times_s[times_s.len() - 1], IBI_RESAMPLE_HZ);
    let mut x = interp_sorted(times_s, ibi_ms, &grid);
    let m = mean(&x);
    x.iter_mut().for_each(|v| *v -= m);

    let seg = ((30.0 * IBI_RESAMPLE_HZ) as usize).min(x.len());
    let nfft = seg.next_power_of_two().max(1024);
    let psd = welch(&x, IBI_RESAMPLE_HZ, seg, seg / 2, nfft);
    let (lo, hi) = BREATHING_BAND_HZ;
    let band: Vec<(f64, f64)> = psd
        .freqs
        .iter()
        .zip(&psd.power)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, p)| (*f, *p))
        .collect();
    let (hz, peak) = band
        .iter()
        .copied()
        .fold((lo, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let total: f64 = psd.power.iter().sum();
    let low_confidence = !(peak > 1e-9 * total.max(f64::MIN_POSITIVE)) || total < 1e-12;
    Ok(BreathingRate { hz, low_confidence })
}

/// 10 s centered moving average of a heart-metric series.
pub fn smooth_heart_metrics(series: &TimeSeries) -> Result<TimeSeries> {
    central_moving_average(series, HEART_METRIC_SMOOTHING_S, 0.0)
}
