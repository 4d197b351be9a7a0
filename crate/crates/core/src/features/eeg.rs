use crate::dsp::welch;
use crate::error::{Error, Result};

use super::wavelet::{wavedec_energies, WAVELET_LEVELS};

/// `(name, low Hz, high Hz)`, half-open.
pub const BANDS: [(&str, f64, f64); 5] = [
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
];

/// Below this rate the gamma band is not resolvable.
const GAMMA_MIN_RATE_HZ: f64 = 90.0;
const MIN_WINDOW_S: f64 = 2.0;

pub const EEG_FEATURE_NAMES: [&str; 21] = [
    "skew",
    "kurtosis",
    "sample_entropy",
    "delta_power",
    "theta_power",
    "alpha_power",
    "beta_power",
    "gamma_power",
    "delta_rel",
    "theta_rel",
    "alpha_rel",
    "beta_rel",
    "gamma_rel",
    "wavelet_a4",
    "wavelet_d4",
    "wavelet_d3",
    "wavelet_d2",
    "wavelet_d1",
    "hjorth_activity",
    "hjorth_mobility",
    "hjorth_complexity",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EegFeatures {
    pub skew: f64,
    /// Non-excess (a normal distribution gives 3).
    pub kurtosis: f64,
    pub sample_entropy: f64,
    /// Absolute band power, signal units² ; `None` when the band is undefined.
    pub band_power: [Option<f64>; 5],
    /// Share of the summed defined-band power.
    pub relative_power: [Option<f64>; 5],
    /// `[a4, d4, d3, d2, d1]`.
    pub wavelet_energy: [f64; WAVELET_LEVELS + 1],
    pub hjorth: Hjorth,
}

impl EegFeatures {
    pub fn named(&self) -> Vec<(&'static str, Option<f64>)> {
        let mut vals = vec![Some(self.skew), Some(self.kurtosis), Some(self.sample_entropy)];
        vals.extend(self.band_power);
        vals.extend(self.relative_power);
        vals.extend(self.wavelet_energy.iter().map(|v| Some(*v)));
        vals.extend([
            Some(self.hjorth.activity),
            Some(self.hjorth.mobility),
            Some(self.hjorth.complexity),
        ]);
        EEG_FEATURE_NAMES.into_iter().zip(vals).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hjorth {
    pub activity: f64,
    /// rad/s (per-sample mobility times the rate).
    pub mobility: f64,
    pub complexity: f64,
}

fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn variance(x: &[f64]) -> f64 {
    central_moments(x).0
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Hjorth parameters; `None` for constant input.
pub fn hjorth(x: &[f64], rate_hz: f64) -> Option<Hjorth> {
    let v0 = variance(x);
    if !(v0 > 0.0) || x.len() < 3 {
        return None;
    }
    let dx = diff(x);
    let v1 = variance(&dx);
    let v2 = variance(&diff(&dx));
    let mob = (v1 / v0).sqrt();
    let complexity = if v1 > 0.0 { (v2 / v1).sqrt() / mob } else { 0.0 };
    Some(Hjorth {
        activity: v0,
        mobility: mob * rate_hz,
        complexity,
    })
}

/// Sample entropy with tolerance `r_factor * sd(x)` and Chebyshev distance.
///
/// Both template lengths use the first `n - m` templates. Constant input gives
/// 0. When no template pair matches, the value is capped at
/// `ln(C(n - m, 2))`, the largest finite estimate for this length.
pub fn sample_entropy(x: &[f64], m: usize, r_factor: f64) -> f64 {
    let n = x.len();
    if n <= m + 1 {
        return 0.0;
    }
    let sd = variance(x).sqrt();
    if !(sd > 0.0) {
        return 0.0;
    }
    let r = r_factor * sd;
    let nt = n - m;
    let (mut b, mut a) = (0u64, 0u64);
    for i in 0..nt {
        for j in i + 1..nt {
            if (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    let pairs = (nt * (nt - 1) / 2) as f64;
    if a == 0 || b == 0 {
        return pairs.ln();
    }
    -(a as f64 / b as f64).ln()
}

pub fn eeg_features(x: &[f64], rate_hz: f64) -> Result<EegFeatures> {
    if (x.len() as f64) < MIN_WINDOW_S * rate_hz - 1.0 {
        return Err(Error::TooShort(format!(
            "EEG window of {} samples at {rate_hz} Hz; need {MIN_WINDOW_S} s",
            x.len()
        )));
    }
    let (m2, m3, m4) = central_moments(x);
    let hj = hjorth(x, rate_hz).ok_or_else(|| Error::InvalidInput("constant EEG window".into()))?;

    let seg = rate_hz.round() as usize;
    let psd = welch(x, rate_hz, seg, seg / 2, 4 * seg);
    let mut band_power = [None; 5];
    for (slot, (name, lo, hi)) in band_power.iter_mut().zip(BANDS) {
        if name == "gamma" && rate_hz < GAMMA_MIN_RATE_HZ {
            continue;
        }
        *slot = Some(psd.band_power(lo, hi));
    }
    let total: f64 = band_power.iter().flatten().sum();
    let relative_power = band_power.map(|p| p.filter(|_| total > 0.0).map(|p| p / total));

    Ok(EegFeatures {
        skew: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        sample_entropy: sample_entropy(x, 2, 0.2),
        band_power,
        relative_power,
        wavelet_energy: wavedec_energies(x),
        hjorth: hj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn sine(f: f64, fs: f64, n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }

    #[test]
    fn alpha_tone() {
        let x = sine(10.0, 256.0, 1024, 1.0);
        let f = eeg_features(&x, 256.0).unwrap();
        assert!(f.relative_power[2].unwrap() > 0.9);
        let want = 2.0 * (PI * 10.0 / 256.0).sin() * 256.0;
        assert!((f.hjorth.mobility - want).abs() < 1e-3 * want, "{}", f.hjorth.mobility);
        assert!(f.skew.abs() < 1e-6);
        assert!((f.kurtosis - 1.5).abs() < 1e-6);
    }

    #[test]
    fn white_noise_band_shares_follow_widths() {
        let defined: f64 = BANDS.iter().map(|b| b.2 - b.1).sum();
        let mut mean_rel = [0.0; 5];
        for seed in 0..100 {
            let f = eeg_features(&noise(seed, 512), 256.0).unwrap();
            for (m, r) in mean_rel.iter_mut().zip(f.relative_power) {
                *m += r.unwrap() / 100.0;
            }
        }
        for (m, (_, lo, hi)) in mean_rel.iter().zip(BANDS) {
            let want = (hi - lo) / defined;
            assert!((m - want).abs() <= 0.3 * want, "{m} vs {want}");
        }
    }

    #[test]
    fn relative_powers_sum_to_one() {
        let f = eeg_features(&noise(7, 600), 256.0).unwrap();
        let s: f64 = f.relative_power.iter().flatten().sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert_eq!(f.named().len(), 21);
    }

    #[test]
    fn low_rate_marks_gamma_missing() {
        let f = eeg_features(&noise(3, 256), 64.0).unwrap();
        assert!(f.band_power[4].is_none() && f.relative_power[4].is_none());
        let s: f64 = f.relative_power.iter().flatten().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn short_or_flat_windows_rejected() {
        assert!(eeg_features(&noise(1, 300), 256.0).is_err());
        assert!(eeg_features(&[1.0; 600], 256.0).is_err());
    }

    /// Direct count over all template pairs, written without early exits.
    fn sampen_oracle(x: &[f64], m: usize, r: f64) -> f64 {
        let nt = x.len() - m;
        let count = |len: usize| {
            let mut c = 0;
            for i in 0..nt {
                for j in 0..nt {
                    if i != j {
                        let d = (0..len).map(|k| (x[i + k] - x[j + k]).abs()).fold(0.0, f64::max);
                        if d <= r {
                            c += 1;
                        }
                    }
                }
            }
            c as f64
        };
        -(count(m + 1) / count(m)).ln()
    }

    #[test]
    fn sample_entropy_matches_oracle() {
        for seed in 0..5 {
            let x = noise(seed, 200);
            let sd = variance(&x).sqrt();
            let got = sample_entropy(&x, 2, 0.2);
            let want = sampen_oracle(&x, 2, 0.2 * sd);
            assert!((got - want).abs() < 1e-12, "{got} {want}");
        }
        assert_eq!(sample_entropy(&[4.0; 50], 2, 0.2), 0.0);
        // a periodic sequence is perfectly predictable
        let saw: Vec<f64> = (0..100).map(|i| (i % 4) as f64).collect();
        assert!(sample_entropy(&saw, 2, 0.2).abs() < 1e-12);
    }

    #[test]
    fn amplitude_scaling() {
        let x = noise(11, 512);
        let a = eeg_features(&x, 256.0).unwrap();
        let k = 3.7;
        let xs: Vec<f64> = x.iter().map(|v| v * k).collect();
        let b = eeg_features(&xs, 256.0).unwrap();
        for (p, q) in a.band_power.iter().zip(&b.band_power) {
            let (p, q) = (p.unwrap(), q.unwrap());
            assert!((p * k * k - q).abs() < 1e-9 * q);
        }
        assert!((a.hjorth.mobility - b.hjorth.mobility).abs() < 1e-9 * a.hjorth.mobility);
        assert!((a.sample_entropy - b.sample_entropy).abs() < 1e-12);
    }
}
