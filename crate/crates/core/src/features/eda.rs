use crate::dsp::{butterworth_lowpass, moving_median, resample_uniform, FilterMode};
use crate::error::{Error, Result};
use crate::model::TimeSeries;

pub const EDA_RATE_HZ: f64 = 16.0;
const CLEAN_CUTOFF_HZ: f64 = 3.0;
const TONIC_MEDIAN_S: f64 = 4.0;
const TONIC_CUTOFF_HZ: f64 = 0.05;
const MIN_DECOMPOSE_S: f64 = 10.0;
/// Phasic level, µS, that an SCR must rise through and then exceed again.
pub const SCR_THRESHOLD_US: f64 = 0.01;

pub const EDA_FEATURE_NAMES: [&str; 10] = [
    "eda_raw",
    "eda_clean",
    "eda_tonic",
    "eda_phasic",
    "scr_onsets",
    "scr_peaks",
    "scr_height",
    "scr_amplitude",
    "scr_rise_time",
    "scr_recovery",
];

/// Resample to 16 Hz, then 2nd-order 3 Hz zero-phase low-pass.
pub fn eda_clean(series: &TimeSeries) -> Result<TimeSeries> {
    let uniform = resample_uniform(series, EDA_RATE_HZ)?;
    butterworth_lowpass(&uniform, 2, CLEAN_CUTOFF_HZ, FilterMode::ZeroPhase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaDecomposition {
    pub tonic: TimeSeries,
    pub phasic: TimeSeries,
}

/// Tonic = 4 s running median smoothed by a 0.05 Hz zero-phase low-pass;
/// phasic = clean - tonic.
pub fn eda_decompose(clean: &TimeSeries) -> Result<EdaDecomposition> {
    let rate = clean
        .rate
        .hz()
        .ok_or_else(|| Error::InvalidInput("EDA decomposition needs a uniform series".into()))?;
    let span = clean.end().unwrap_or(0.0) - clean.start().unwrap_or(0.0);
    if span < MIN_DECOMPOSE_S {
        return Err(Error::TooShort(format!(
            "EDA spans {span:.1} s; decomposition needs {MIN_DECOMPOSE_S} s"
        )));
    }
    let half = (TONIC_MEDIAN_S / 2.0 * rate).round() as usize;
    let medians = clean
        .values
        .iter()
        .map(|ch| moving_median(ch, half))
        .collect();
    let median_series = clean.with_samples(clean.timestamps.clone(), medians)?;
    let tonic = butterworth_lowpass(&median_series, 2, TONIC_CUTOFF_HZ, FilterMode::ZeroPhase)?;
    let phasic_values = clean
        .values
        .iter()
        .zip(&tonic.values)
        .map(|(c, t)| c.iter().zip(t).map(|(c, t)| c - t).collect())
        .collect();
    let phasic = clean.with_samples(clean.timestamps.clone(), phasic_values)?;
    Ok(EdaDecomposition { tonic, phasic })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrEvent {
    pub onset_s: f64,
    pub peak_s: f64,
    pub onset_value: f64,
    /// Phasic value at the peak, µS.
    pub height: f64,
    pub amplitude: f64,
    pub rise_time: f64,
    /// Seconds from peak to half recovery; `None` if the record ends first.
    pub recovery: Option<f64>,
}

/// SCR events on the first channel of a phasic series, in time order.
pub fn scr_events(phasic: &TimeSeries) -> Vec<ScrEvent> {
    if phasic.values.is_empty() {
        return Vec::new();
    }
    let x = phasic.channel(0);
    let t = &phasic.timestamps;
    let n = x.len();
    let mut events = Vec::new();
    let mut i = 1;
    while i < n {
        let crossing = x[i - 1] < SCR_THRESHOLD_US && x[i] >= SCR_THRESHOLD_US && x[i] > x[i - 1];
        if !crossing {
            i += 1;
            continue;
        }
        let onset_value = x[i];
        let mut peak = None;
        let mut j = i;
        while j + 1 < n && x[j] >= onset_value {
            let local_max = x[j] >= x[j - 1] && x[j] > x[j + 1];
            if local_max && x[j] >= onset_value + SCR_THRESHOLD_US {
                peak = Some(j);
                break;
            }
            j += 1;
        }
        let Some(p) = peak else {
            i = j.max(i + 1);
            continue;
        };
        let amplitude = x[p] - onset_value;
        let half_level = onset_value + amplitude / 2.0;
        let recovery = (p + 1..n).find(|&k| x[k] <= half_level).map(|k| t[k] - t[p]);
        events.push(ScrEvent {
            onset_s: t[i],
            peak_s: t[p],
            onset_value,
            height: x[p],
            amplitude,
            rise_time: t[p] - t[i],
            recovery,
        });
        i = p + 1;
    }
    events
}

/// The full-record EDA chain; per-window features are read off it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaAnalysis {
    pub raw: TimeSeries,
    pub clean: TimeSeries,
    pub decomposition: EdaDecomposition,
    pub events: Vec<ScrEvent>,
}

impl EdaAnalysis {
    pub fn run(raw: &TimeSeries) -> Result<Self> {
        let clean = eda_clean(raw)?;
        let decomposition = eda_decompose(&clean)?;
        let events = scr_events(&decomposition.phasic);
        Ok(EdaAnalysis {
            raw: raw.clone(),
            clean,
            decomposition,
            events,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdaFeatures {
    pub eda_raw: f64,
    pub eda_clean: f64,
    pub eda_tonic: f64,
    pub eda_phasic: f64,
    pub scr_onsets: f64,
    pub scr_peaks: f64,
    pub scr_height: f64,
    pub scr_amplitude: f64,
    pub scr_rise_time: f64,
    pub scr_recovery: f64,
}

impl EdaFeatures {
    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> {
        EDA_FEATURE_NAMES.into_iter().zip([
            self.eda_raw,
            self.eda_clean,
            self.eda_tonic,
            self.eda_phasic,
            self.scr_onsets,
            self.scr_peaks,
            self.scr_height,
            self.scr_amplitude,
            self.scr_rise_time,
            self.scr_recovery,
        ])
    }
}

fn window_mean(series: &TimeSeries, t0: f64, t1: f64) -> Option<f64> {
    let r = series.index_range(t0, t1);
    (!r.is_empty()).then(|| series.channel(0)[r.clone()].iter().sum::<f64>() / r.len() as f64)
}

fn mean_or_zero(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// EDA features over `[t0, t1)`. Event descriptors average the events whose
/// peak falls inside the window and are 0 when there is none.
pub fn eda_features(analysis: &EdaAnalysis, t0: f64, t1: f64) -> Result<EdaFeatures> {
    let mean = |s: &TimeSeries| {
        window_mean(s, t0, t1).ok_or_else(|| Error::Insufficient(format!("no EDA samples in [{t0}, {t1})")))
    };
    let inside = |t: f64| t >= t0 && t < t1;
    let peaked: Vec<&ScrEvent> = analysis.events.iter().filter(|e| inside(e.peak_s)).collect();
    Ok(EdaFeatures {
        eda_raw: mean(&analysis.raw)?,
        eda_clean: mean(&analysis.clean)?,
        eda_tonic: mean(&analysis.decomposition.tonic)?,
        eda_phasic: mean(&analysis.decomposition.phasic)?,
        scr_onsets: analysis.events.iter().filter(|e| inside(e.onset_s)).count() as f64,
        scr_peaks: peaked.len() as f64,
        scr_height: mean_or_zero(peaked.iter().map(|e| e.height)),
        scr_amplitude: mean_or_zero(peaked.iter().map(|e| e.amplitude)),
        scr_rise_time: mean_or_zero(peaked.iter().map(|e| e.rise_time)),
        scr_recovery: mean_or_zero(peaked.iter().filter_map(|e| e.recovery)),
    })
}
