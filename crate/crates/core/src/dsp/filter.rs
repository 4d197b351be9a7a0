//! Butterworth IIR design as cascaded second-order sections.
//!
//! Analog prototype poles are mapped through the low-pass or band-pass
//! transformation, pre-warped so the digital band edges land exactly on the
//! requested cutoffs, and then bilinear-transformed to the z-plane. Sections
//! run in transposed direct form II.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{SampleRate, TimeSeries};

/// One biquad, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Steady-state state vector for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z2 = b2 - a2 * gain;
        let z1 = b1 - a1 * gain + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b.iter().sum::<f64>()) / (self.a.iter().sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Sos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Forward-backward; zero phase, squared magnitude.
    #[default]
    ZeroPhase,
    /// Single causal pass.
    Causal,
}

fn prewarp(f_hz: f64, rate_hz: f64) -> f64 {
    2.0 * rate_hz * (PI * f_hz / rate_hz).tan()
}

fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn bilinear(s: Complex64, rate_hz: f64) -> Complex64 {
    let k = Complex64::new(2.0 * rate_hz, 0.0);
    (k + s) / (k - s)
}

/// Groups real-coefficient zeros/poles into biquads.
fn zpk_to_sos(zeros: &[Complex64], poles: &[Complex64]) -> Vec<Sos> {
    const EPS: f64 = 1e-12;
    let quad = |roots: &[Complex64]| -> [f64; 3] {
        match roots {
            [] => [1.0, 0.0, 0.0],
            [r] => [1.0, -r.re, 0.0],
            [r1, r2] => {
                let sum = r1 + r2;
                let prod = r1 * r2;
                [1.0, -sum.re, prod.re]
            }
            _ => unreachable!(),
        }
    };

    // conjugate pairs first, then real roots two at a time
    let group = |roots: &[Complex64]| -> Vec<Vec<Complex64>> {
        let mut out = Vec::new();
        let mut reals: Vec<Complex64> = roots.iter().copied().filter(|r| r.im.abs() <= EPS).collect();
        reals.sort_by(|a, b| a.re.total_cmp(&b.re));
        for r in roots.iter().filter(|r| r.im > EPS) {
            out.push(vec![*r, r.conj()]);
        }
        for chunk in reals.chunks(2) {
            out.push(chunk.iter().map(|r| Complex64::new(r.re, 0.0)).collect());
        }
        out
    };

    let pole_groups = group(poles);
    let mut zero_groups = group(zeros).into_iter();
    pole_groups
        .iter()
        .map(|pg| {
            let zg = zero_groups.next().unwrap_or_default();
            Sos {
                b: quad(&zg),
                a: quad(pg),
            }
        })
        .collect()
}

impl SosFilter {
    pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("filter order must be >= 1".into()));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0) {
            return Err(Error::InvalidInput(format!(
                "cutoff {cutoff_hz} Hz outside (0, Nyquist {} Hz)",
                rate_hz / 2.0
            )));
        }
        let wc = prewarp(cutoff_hz, rate_hz);
        let poles: Vec<_> = prototype_poles(order)
            .into_iter()
            .map(|p| bilinear(p * wc, rate_hz))
            .collect();
        let zeros = vec![Complex64::new(-1.0, 0.0); order];
        let mut filter = SosFilter {
            sections: zpk_to_sos(&zeros, &poles),
        };
        filter.normalize_at(0.0, rate_hz);
        Ok(filter)
    }

    pub fn butterworth_bandpass(order: usize, low_hz: f64, high_hz: f64, rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("filter order must be >= 1".into()));
        }
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < rate_hz / 2.0) {
            return Err(Error::InvalidInput(format!(
                "band [{low_hz}, {high_hz}] Hz must satisfy 0 < low < high < Nyquist ({} Hz)",
                rate_hz / 2.0
            )));
        }
        let wl = prewarp(low_hz, rate_hz);
        let wh = prewarp(high_hz, rate_hz);
        let w0 = (wl * wh).sqrt();
        let bw = wh - wl;
        let mut poles = Vec::with_capacity(2 * order);
        for p in prototype_poles(order) {
            let half = p * (bw / 2.0);
            let disc = (half * half - w0 * w0).sqrt();
            poles.push(bilinear(half + disc, rate_hz));
            poles.push(bilinear(half - disc, rate_hz));
        }
        // 2N poles pair up into N biquads; each carries one zero at DC and one at Nyquist
        let mut filter = SosFilter {
            sections: zpk_to_sos(&[], &poles),
        };
        for s in filter.sections.iter_mut() {
            s.b = [1.0, 0.0, -1.0];
        }
        // digital image of the analog geometric center
        let center_hz = rate_hz / PI * (w0 / (2.0 * rate_hz)).atan();
        filter.normalize_at(center_hz, rate_hz);
        Ok(filter)
    }

    fn normalize_at(&mut self, f_hz: f64, rate_hz: f64) {
        let g = self.response(f_hz, rate_hz).norm();
        if let Some(first) = self.sections.first_mut() {
            for b in first.b.iter_mut() {
                *b /= g;
            }
        }
    }

    /// Complex frequency response of one causal pass.
    pub fn response(&self, f_hz: f64, rate_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f_hz / rate_hz);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Edge-padding length used by [`SosFilter::filtfilt`].
    pub fn padlen(&self) -> usize {
        let first_order = self.sections.iter().filter(|s| s.a[2] == 0.0 && s.b[2] == 0.0).count();
        3 * (2 * self.sections.len() + 1 - first_order)
    }

    fn run(&self, x: &mut [f64], init_scale: Option<f64>) {
        let mut scale = init_scale;
        for s in &self.sections {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            let (mut z1, mut z2) = match scale {
                Some(x0) => {
                    let st = s.step_state();
                    (st[0] * x0, st[1] * x0)
                }
                None => (0.0, 0.0),
            };
            for v in x.iter_mut() {
                let xin = *v;
                let y = b0 * xin + z1;
                z1 = b1 * xin - a1 * y + z2;
                z2 = b2 * xin - a2 * y;
                *v = y;
            }
            scale = scale.map(|x0| x0 * s.dc_gain());
        }
    }

    /// Single causal pass from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.run(&mut y, None);
        y
    }

    /// Zero-phase forward-backward filtering with odd edge reflection and
    /// steady-state initial conditions.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.padlen();
        let n = x.len();
        if n <= pad {
            return Err(Error::TooShort(format!(
                "{n} samples; zero-phase filtering needs more than {pad}"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let x0 = ext[0];
        self.run(&mut ext, Some(x0));
        ext.reverse();
        let y0 = ext[0];
        self.run(&mut ext, Some(y0));
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }

    pub fn apply(&self, x: &[f64], mode: FilterMode) -> Result<Vec<f64>> {
        match mode {
            FilterMode::ZeroPhase => self.filtfilt(x),
            FilterMode::Causal => Ok(self.filter(x)),
        }
    }
}

// ---------------------------------------------------------------------------
// Band-pass on time series
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPassSpec {
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub rate_hz: f64,
}

/// Processing rate for PPG streams.
pub const PPG_RATE_HZ: f64 = 64.0;

impl Default for BandPassSpec {
    /// 3rd-order, 0.7-3.5 Hz (42-210 bpm) at the PPG processing rate.
    fn default() -> Self {
        BandPassSpec {
            order: 3,
            low_hz: 0.7,
            high_hz: 3.5,
            rate_hz: PPG_RATE_HZ,
        }
    }
}

impl BandPassSpec {
    pub fn design(&self) -> Result<SosFilter> {
        SosFilter::butterworth_bandpass(self.order, self.low_hz, self.high_hz, self.rate_hz)
    }
}

pub(crate) fn require_rate(series: &TimeSeries, rate_hz: f64) -> Result<()> {
    match series.rate {
        SampleRate::Hz(r) if (r - rate_hz).abs() <= 1e-9 * rate_hz => Ok(()),
        other => Err(Error::InvalidInput(format!(
            "{} stream sampled at {other:?}; resample to {rate_hz} Hz first",
            series.kind
        ))),
    }
}

/// Band-pass every channel of a uniformly sampled series.
pub fn butterworth_bandpass(series: &TimeSeries, spec: &BandPassSpec, mode: FilterMode) -> Result<TimeSeries> {
    require_rate(series, spec.rate_hz)?;
    let filter = spec.design()?;
    let values = series
        .values
        .iter()
        .map(|ch| filter.apply(ch, mode))
        .collect::<Result<Vec<_>>>()?;
    series.with_samples(series.timestamps.clone(), values)
}

/// Low-pass every channel of a uniformly sampled series.
pub fn butterworth_lowpass(
    series: &TimeSeries,
    order: usize,
    cutoff_hz: f64,
    mode: FilterMode,
) -> Result<TimeSeries> {
    let rate = series
        .rate
        .hz()
        .ok_or_else(|| Error::InvalidInput("low-pass needs a uniformly sampled series".into()))?;
    let filter = SosFilter::butterworth_lowpass(order, cutoff_hz, rate)?;
    let values = series
        .values
        .iter()
        .map(|ch| filter.apply(ch, mode))
        .collect::<Result<Vec<_>>>()?;
    series.with_samples(series.timestamps.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SensorKind, Unit};

    /// Closed-form magnitude of the bilinear-transformed Butterworth band-pass,
    /// evaluated on the pre-warped analog frequency axis.
    fn analytic_bandpass_gain(f: f64, spec: &BandPassSpec) -> f64 {
        let w = prewarp(f, spec.rate_hz);
        let wl = prewarp(spec.low_hz, spec.rate_hz);
        let wh = prewarp(spec.high_hz, spec.rate_hz);
        let x = (w * w - wl * wh) / (w * (wh - wl));
        1.0 / (1.0 + x.powi(2 * spec.order as i32)).sqrt()
    }

    fn analytic_lowpass_gain(f: f64, order: usize, fc: f64, fs: f64) -> f64 {
        let x = prewarp(f, fs) / prewarp(fc, fs);
        1.0 / (1.0 + x.powi(2 * order as i32)).sqrt()
    }

    fn sine(f: f64, fs: f64, secs: f64) -> Vec<f64> {
        (0..(secs * fs) as usize)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect()
    }

    /// Least-squares amplitude of a known-frequency sinusoid on a slice.
    fn fitted_amplitude(y: &[f64], f: f64, fs: f64, offset: usize) -> f64 {
        let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, v) in y.iter().enumerate() {
            let t = (offset + i) as f64 / fs;
            let (s, c) = (2.0 * PI * f * t).sin_cos();
            ss += s * s;
            sc += s * c;
            cc += c * c;
            ys += v * s;
            yc += v * c;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        (a * a + b * b).sqrt()
    }

    #[test]
    fn bandpass_matches_closed_form_response() {
        let spec = BandPassSpec::default();
        let filt = spec.design().unwrap();
        assert_eq!(filt.sections.len(), 3);
        for f in [0.05, 0.1, 0.5, 0.7, 1.0, 1.5, 2.5, 3.5, 5.0, 10.0, 20.0, 31.0] {
            let got = filt.response(f, spec.rate_hz).norm();
            let want = analytic_bandpass_gain(f, &spec);
            assert!((got - want).abs() < 1e-9, "f={f}: {got} vs {want}");
        }
    }

    #[test]
    fn lowpass_matches_closed_form_response() {
        for order in 1..=4 {
            let filt = SosFilter::butterworth_lowpass(order, 3.0, 16.0).unwrap();
            for f in [0.0, 0.1, 1.0, 3.0, 5.0, 7.9] {
                let got = filt.response(f, 16.0).norm();
                let want = analytic_lowpass_gain(f, order, 3.0, 16.0);
                assert!((got - want).abs() < 1e-9, "order {order} f={f}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn constant_input_is_removed() {
        let spec = BandPassSpec::default();
        let filt = spec.design().unwrap();
        let y = filt.filtfilt(&vec![5.0; 64 * 30]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-6), "max {:?}", y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn passband_and_stopband_sinusoids() {
        let spec = BandPassSpec::default();
        let filt = spec.design().unwrap();
        let fs = spec.rate_hz;
        // forward-backward squares the single-pass gain
        let y = filt.filtfilt(&sine(1.5, fs, 60.0)).unwrap();
        let tail = 20 * fs as usize;
        let amp = fitted_amplitude(&y[tail..y.len() - tail], 1.5, fs, tail);
        let want = analytic_bandpass_gain(1.5, &spec).powi(2);
        assert!((0.95..=1.0).contains(&amp), "amp {amp}");
        assert!((amp - want).abs() < 1e-3);

        let y = filt.filtfilt(&sine(0.1, fs, 120.0)).unwrap();
        let tail = 40 * fs as usize;
        let amp = fitted_amplitude(&y[tail..y.len() - tail], 0.1, fs, tail);
        assert!(amp < 0.1, "amp {amp}");
    }

    #[test]
    fn zero_phase_keeps_symmetric_pulse_centered() {
        let filt = BandPassSpec::default().design().unwrap();
        let n = 64 * 20;
        let c = n / 2;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let d = (i as f64 - c as f64) / 64.0;
                (-d * d / (2.0 * 0.08f64.powi(2))).exp()
            })
            .collect();
        let y = filt.filtfilt(&x).unwrap();
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((peak as i64 - c as i64).abs() <= 1);
        for k in 1..200 {
            assert!((y[c - k] - y[c + k]).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SosFilter::butterworth_bandpass(3, 0.7, 40.0, 64.0).is_err());
        assert!(SosFilter::butterworth_bandpass(3, 3.5, 0.7, 64.0).is_err());
        assert!(SosFilter::butterworth_bandpass(0, 0.7, 3.5, 64.0).is_err());
        assert!(SosFilter::butterworth_lowpass(2, 8.0, 16.0).is_err());
        let filt = BandPassSpec::default().design().unwrap();
        assert!(filt.filtfilt(&[1.0; 10]).is_err());
    }

    #[test]
    fn series_rate_must_match() {
        let ts = TimeSeries::single(
            SensorKind::Ppg,
            (0..640).map(|i| i as f64 / 32.0).collect(),
            vec![0.0; 640],
            Unit::Arbitrary,
            SampleRate::Hz(32.0),
        )
        .unwrap();
        assert!(butterworth_bandpass(&ts, &BandPassSpec::default(), FilterMode::ZeroPhase).is_err());
    }
}
