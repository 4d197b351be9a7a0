//! Window tiling of trimmed sessions, per-window featurization and feature
//! matrix assembly.
//!
//! Whole-stream work (ACC smoothing, PPG band-pass, EDA decomposition) runs
//! once per session in [`PreparedStreams`]; windows then only slice it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dsp::{central_moving_average, interp_sorted, resample_uniform, BandPassSpec, PPG_RATE_HZ};
use crate::error::{Error, Result};
use crate::features::{eda_features, eeg_features, magnitude, stat_features, EdaAnalysis};
use crate::hrv::{breathing_rate, detect_beats, hrv_features, ibi_series, smooth_heart_metrics};
use crate::model::{
    ActivityInterval, Device, FeatureMap, FeatureMatrix, SampleRate, SensorKind, Session, TimeSeries, Unit,
    Window,
};

pub const STANDARD_WIDTHS_S: [f64; 6] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
const EPS: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub width_s: f64,
    pub hop_s: f64,
    /// Required fraction of the nominal sample count in every window.
    pub min_coverage: f64,
}

impl WindowSpec {
    /// Non-overlapping windows of one of the standard widths.
    pub fn standard(width_s: f64) -> Result<Self> {
        if !STANDARD_WIDTHS_S.contains(&width_s) {
            return Err(Error::InvalidInput(format!(
                "window width {width_s} s not in {STANDARD_WIDTHS_S:?}"
            )));
        }
        Self::new(width_s, width_s, 0.8)
    }

    pub fn new(width_s: f64, hop_s: f64, min_coverage: f64) -> Result<Self> {
        if !(width_s > 0.0 && hop_s > 0.0 && hop_s <= width_s) {
            return Err(Error::InvalidInput(format!(
                "need 0 < hop <= width, got width {width_s} hop {hop_s}"
            )));
        }
        if !(min_coverage > 0.0 && min_coverage <= 1.0) {
            return Err(Error::InvalidInput(format!("min_coverage {min_coverage} outside (0, 1]")));
        }
        Ok(WindowSpec {
            width_s,
            hop_s,
            min_coverage,
        })
    }
}

/// Non-empty set of sensor kinds, kept in canonical [`SensorKind::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SensorSet(Vec<SensorKind>);

impl SensorSet {
    pub fn new(kinds: impl IntoIterator<Item = SensorKind>) -> Result<Self> {
        let set: BTreeSet<usize> = kinds
            .into_iter()
            .map(|k| SensorKind::ALL.iter().position(|a| *a == k).unwrap())
            .collect();
        if set.is_empty() {
            return Err(Error::InvalidInput("sensor set is empty".into()));
        }
        Ok(SensorSet(set.into_iter().map(|i| SensorKind::ALL[i]).collect()))
    }

    pub fn kinds(&self) -> &[SensorKind] {
        &self.0
    }

    pub fn contains(&self, kind: SensorKind) -> bool {
        self.0.contains(&kind)
    }
}

impl FromStr for SensorSet {
    type Err = Error;

    /// `"acc+gyro+ppg"` or `"acc,gyro,ppg"`.
    fn from_str(s: &str) -> Result<Self> {
        let kinds = s
            .split(['+', ','])
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(SensorKind::from_str)
            .collect::<Result<Vec<_>>>()?;
        SensorSet::new(kinds)
    }
}

impl fmt::Display for SensorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.0.iter().map(|k| k.feature_prefix()).collect();
        f.write_str(&names.join("+"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizeConfig {
    /// Central moving-average window applied to ACC before windowing.
    pub acc_smoothing_s: f64,
    /// HRV context for windows narrower than `hrv_min_window_s`.
    pub hrv_context_s: f64,
    pub hrv_min_window_s: f64,
    /// Context for breathing rate, regardless of window width.
    pub breathing_context_s: f64,
    /// Minimum IBI span accepted for breathing rate inside that context.
    pub breathing_min_span_s: f64,
    pub smooth_heart_metrics: bool,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        FeaturizeConfig {
            acc_smoothing_s: 60.0,
            hrv_context_s: 30.0,
            hrv_min_window_s: 10.0,
            breathing_context_s: 30.0,
            breathing_min_span_s: 20.0,
            smooth_heart_metrics: true,
        }
    }
}

// ---------------------------------------------------------------------------
// Tiling
// ---------------------------------------------------------------------------

fn coverage(series: &TimeSeries, t0: f64, t1: f64) -> f64 {
    let count = series.index_range(t0, t1).len() as f64;
    match series.rate {
        SampleRate::Hz(r) => count / ((t1 - t0) * r),
        SampleRate::Irregular => f64::from(count > 0.0),
    }
}

/// Mean MET over `[t0, t1)`; `None` unless the MET record spans the window.
fn window_target(met: &TimeSeries, t0: f64, t1: f64) -> Option<f64> {
    let (start, end) = (met.start()?, met.end()?);
    let spacing = match met.rate {
        SampleRate::Hz(r) => 1.0 / r,
        SampleRate::Irregular if met.len() > 1 => met.timestamps[1] - met.timestamps[0],
        SampleRate::Irregular => 0.0,
    };
    if start > t0 + EPS || end < t1 - spacing - EPS {
        return None;
    }
    let r = met.index_range(t0, t1);
    let ch = met.channel(0);
    if r.is_empty() {
        let mid = 0.5 * (t0 + t1);
        return Some(interp_sorted(&met.timestamps, ch, &[mid])[0]);
    }
    Some(ch[r.clone()].iter().sum::<f64>() / r.len() as f64)
}

/// Windows tiling each activity interval from its start. A window is kept
/// when every requested stream of `device` reaches `min_coverage` inside it
/// and the MET record spans it.
pub fn make_windows(session: &Session, device: Device, sensors: &SensorSet, spec: &WindowSpec) -> Vec<Window> {
    let streams: Option<Vec<&TimeSeries>> = sensors.kinds().iter().map(|k| session.stream(device, *k)).collect();
    let Some(streams) = streams else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (ai, iv) in session.activities.iter().enumerate() {
        let mut k = 0usize;
        loop {
            let start = iv.start_s + k as f64 * spec.hop_s;
            let end = start + spec.width_s;
            if end > iv.end_s + EPS {
                break;
            }
            k += 1;
            if streams.iter().any(|s| coverage(s, start, end) < spec.min_coverage - EPS) {
                continue;
            }
            let Some(target_met) = window_target(&session.met_series, start, end) else {
                continue;
            };
            out.push(Window {
                participant_id: session.participant_id.clone(),
                device,
                start_s: start,
                width_s: spec.width_s,
                activity_index: ai,
                features: FeatureMap::new(),
                target_met,
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

struct FilteredPpg {
    timestamps: Vec<f64>,
    values: Vec<f64>,
}

/// Whole-stream preprocessing for one session and device.
pub struct PreparedStreams {
    device: Device,
    sensors: SensorSet,
    config: FeaturizeConfig,
    stats: BTreeMap<SensorKind, TimeSeries>,
    ppg: Option<FilteredPpg>,
    eda: Option<EdaAnalysis>,
    eeg: Option<TimeSeries>,
}

impl PreparedStreams {
    /// Streams that cannot be prepared (too short, wrong shape) are left out
    /// and their features come back missing.
    pub fn new(session: &Session, device: Device, sensors: &SensorSet, config: &FeaturizeConfig) -> Self {
        let mut prepared = PreparedStreams {
            device,
            sensors: sensors.clone(),
            config: config.clone(),
            stats: BTreeMap::new(),
            ppg: None,
            eda: None,
            eeg: None,
        };
        for &kind in sensors.kinds() {
            let Some(series) = session.stream(device, kind) else {
                continue;
            };
            match kind {
                SensorKind::Acc => {
                    let smoothed = central_moving_average(series, config.acc_smoothing_s, 0.0);
                    match smoothed {
                        Ok(s) => {
                            prepared.stats.insert(kind, s);
                        }
                        Err(e) => log::warn!("{}: ACC smoothing failed: {e}", session.participant_id),
                    }
                }
                SensorKind::Ppg => match prepare_ppg(series) {
                    Ok(p) => prepared.ppg = Some(p),
                    Err(e) => log::warn!("{}: PPG filtering failed: {e}", session.participant_id),
                },
                SensorKind::Eda => match EdaAnalysis::run(series) {
                    Ok(a) => prepared.eda = Some(a),
                    Err(e) => log::warn!("{}: EDA decomposition failed: {e}", session.participant_id),
                },
                SensorKind::Eeg => prepared.eeg = Some(series.clone()),
                _ => {
                    prepared.stats.insert(kind, series.clone());
                }
            }
        }
        prepared
    }

    pub fn device(&self) -> Device {
        self.device
    }
}

fn prepare_ppg(series: &TimeSeries) -> Result<FilteredPpg> {
    let uniform = if series.rate == SampleRate::Hz(PPG_RATE_HZ) {
        series.clone()
    } else {
        resample_uniform(series, PPG_RATE_HZ)?
    };
    let filter = BandPassSpec::default().design()?;
    Ok(FilteredPpg {
        values: filter.filtfilt(uniform.channel(0))?,
        timestamps: uniform.timestamps,
    })
}

fn stat_block(out: &mut FeatureMap, prefix: &str, series: &TimeSeries, t0: f64, t1: f64) {
    let r = series.index_range(t0, t1);
    if r.is_empty() {
        return;
    }
    let mut put = |label: Option<&str>, x: &[f64]| {
        if let Ok(s) = stat_features(x) {
            for (name, v) in s.named() {
                let key = match label {
                    Some(l) => format!("{prefix}.{l}.{name}"),
                    None => format!("{prefix}.{name}"),
                };
                out.insert(key, v);
            }
        }
    };
    if series.channels.len() == 1 {
        put(None, &series.channel(0)[r]);
        return;
    }
    for (c, label) in series.channels.iter().enumerate() {
        put(Some(label), &series.channel(c)[r.clone()]);
    }
    if series.channels.len() == 3 && matches!(series.kind, SensorKind::Acc | SensorKind::Gyro) {
        let mag = magnitude(
            &series.channel(0)[r.clone()],
            &series.channel(1)[r.clone()],
            &series.channel(2)[r.clone()],
        );
        put(Some("mag"), &mag);
    }
}

/// Span of length `len` centred on `center`, shifted (then clipped) to stay
/// inside the interval.
fn context_span(center: f64, len: f64, iv: &ActivityInterval) -> (f64, f64) {
    let mut t0 = center - len / 2.0;
    let mut t1 = center + len / 2.0;
    if t0 < iv.start_s {
        t1 += iv.start_s - t0;
        t0 = iv.start_s;
    }
    if t1 > iv.end_s {
        t0 -= t1 - iv.end_s;
        t1 = iv.end_s;
    }
    (t0.max(iv.start_s), t1)
}

impl FilteredPpg {
    fn slice(&self, t0: f64, t1: f64) -> (f64, &[f64]) {
        let lo = self.timestamps.partition_point(|t| *t < t0);
        let hi = self.timestamps.partition_point(|t| *t < t1);
        let start = self.timestamps.get(lo).copied().unwrap_or(t0);
        (start, &self.values[lo..hi])
    }

    fn ibis(&self, t0: f64, t1: f64) -> Result<crate::hrv::IbiSeries> {
        let (start, x) = self.slice(t0, t1);
        let beats = detect_beats(x, PPG_RATE_HZ, start)?;
        ibi_series(&beats)
    }
}

fn ppg_block(out: &mut FeatureMap, ppg: &FilteredPpg, cfg: &FeaturizeConfig, w: &Window, iv: &ActivityInterval) {
    let hrv_len = if w.width_s >= cfg.hrv_min_window_s {
        w.width_s
    } else {
        cfg.hrv_context_s
    };
    let (h0, h1) = context_span(w.center_s(), hrv_len, iv);
    let Ok(ibis) = ppg.ibis(h0, h1) else {
        return;
    };
    let Ok(mut f) = hrv_features(&ibis.ms) else {
        return;
    };
    let (b0, b1) = context_span(w.center_s(), cfg.breathing_context_s, iv);
    let breath_ibis = if (b0, b1) == (h0, h1) {
        Ok(ibis)
    } else {
        ppg.ibis(b0, b1)
    };
    if let Ok(b) = breath_ibis {
        if let Ok(br) = breathing_rate(&b.times, &b.ms, cfg.breathing_min_span_s) {
            f.breathingrate = Some(br.hz);
        }
    }
    for (name, v) in f.named() {
        out.insert(format!("ppg.{name}"), v);
    }
}

fn eeg_block(out: &mut FeatureMap, eeg: &TimeSeries, t0: f64, t1: f64) {
    let Some(rate) = eeg.rate.hz() else {
        return;
    };
    let r = eeg.index_range(t0, t1);
    for (c, label) in eeg.channels.iter().enumerate() {
        if let Ok(f) = eeg_features(&eeg.channel(c)[r.clone()], rate) {
            for (name, v) in f.named() {
                if let Some(v) = v {
                    out.insert(format!("eeg.{label}.{name}"), v);
                }
            }
        }
    }
}

/// Namespaced features of one window. Extractor failures leave the affected
/// sensor's features absent.
pub fn featurize_window(prepared: &PreparedStreams, window: &Window, interval: &ActivityInterval) -> FeatureMap {
    let (t0, t1) = (window.start_s, window.end_s());
    let mut out = FeatureMap::new();
    for &kind in prepared.sensors.kinds() {
        match kind {
            SensorKind::Ppg => {
                if let Some(ppg) = &prepared.ppg {
                    ppg_block(&mut out, ppg, &prepared.config, window, interval);
                }
            }
            SensorKind::Eda => {
                if let Some(f) = prepared.eda.as_ref().and_then(|a| eda_features(a, t0, t1).ok()) {
                    for (name, v) in f.named() {
                        out.insert(format!("eda.{name}"), v);
                    }
                }
            }
            SensorKind::Eeg => {
                if let Some(eeg) = &prepared.eeg {
                    eeg_block(&mut out, eeg, t0, t1);
                }
            }
            _ => {
                if let Some(series) = prepared.stats.get(&kind) {
                    stat_block(&mut out, kind.feature_prefix(), series, t0, t1);
                }
            }
        }
    }
    out
}

/// 10 s moving average of every `ppg.*` feature across the windows of each
/// activity interval. Windows without a value stay without one.
fn smooth_ppg_features(windows: &mut [Window]) {
    let mut by_interval: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, w) in windows.iter().enumerate() {
        by_interval.entry(w.activity_index).or_default().push(i);
    }
    for idx in by_interval.values() {
        let names: BTreeSet<String> = idx
            .iter()
            .flat_map(|&i| windows[i].features.keys().filter(|k| k.starts_with("ppg.")).cloned())
            .collect();
        for name in names {
            let present: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| windows[i].features.contains_key(&name))
                .collect();
            let ts: Vec<f64> = present.iter().map(|&i| windows[i].center_s()).collect();
            let vs: Vec<f64> = present.iter().map(|&i| windows[i].features[&name]).collect();
            let Ok(series) = TimeSeries::single(SensorKind::Ppg, ts, vs, Unit::Arbitrary, SampleRate::Irregular)
            else {
                continue;
            };
            if let Ok(sm) = smooth_heart_metrics(&series) {
                for (&i, v) in present.iter().zip(sm.channel(0)) {
                    windows[i].features.insert(name.clone(), *v);
                }
            }
        }
    }
}

/// Tiles, featurizes and (optionally) heart-smooths one session. Windows are
/// featurized in parallel; order follows [`make_windows`].
pub fn featurize_session(
    session: &Session,
    device: Device,
    sensors: &SensorSet,
    spec: &WindowSpec,
    config: &FeaturizeConfig,
) -> Vec<Window> {
    let mut windows = make_windows(session, device, sensors, spec);
    if windows.is_empty() {
        return windows;
    }
    let prepared = PreparedStreams::new(session, device, sensors, config);
    let features: Vec<FeatureMap> = windows
        .par_iter()
        .map(|w| featurize_window(&prepared, w, &session.activities[w.activity_index]))
        .collect();
    for (w, f) in windows.iter_mut().zip(features) {
        w.features = f;
    }
    if config.smooth_heart_metrics && sensors.contains(SensorKind::Ppg) {
        smooth_ppg_features(&mut windows);
    }
    windows
}

/// [`featurize_session`] over many sessions, concatenated in input order.
pub fn featurize_sessions(
    sessions: &[Session],
    device: Device,
    sensors: &SensorSet,
    spec: &WindowSpec,
    config: &FeaturizeConfig,
) -> Vec<Window> {
    sessions
        .par_iter()
        .map(|s| featurize_session(s, device, sensors, spec, config))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

/// Columns are every feature name seen for the requested sensors, grouped by
/// sensor in set order and sorted within a sensor. Rows missing any column are
/// dropped and counted.
pub fn build_matrix(windows: &[Window], sensors: &SensorSet) -> Result<FeatureMatrix> {
    let mut names = Vec::new();
    for kind in sensors.kinds() {
        let prefix = format!("{}.", kind.feature_prefix());
        let group: BTreeSet<&String> = windows
            .iter()
            .flat_map(|w| w.features.keys().filter(|k| k.starts_with(&prefix)))
            .collect();
        names.extend(group.into_iter().cloned());
    }
    let mut m = FeatureMatrix {
        names,
        values: Vec::new(),
        participants: Vec::new(),
        window_starts: Vec::new(),
        targets: Vec::new(),
        dropped_rows: 0,
    };
    for w in windows {
        let row: Option<Vec<f64>> = m.names.iter().map(|n| w.features.get(n).copied()).collect();
        match row {
            Some(row) if !m.names.is_empty() => {
                m.values.extend(row);
                m.participants.push(w.participant_id.clone());
                m.window_starts.push(w.start_s);
                m.targets.push(w.target_met);
            }
            _ => m.dropped_rows += 1,
        }
    }
    if m.dropped_rows > 0 {
        log::info!("dropped {} of {} windows with missing features", m.dropped_rows, windows.len());
    }
    if m.n_rows() == 0 {
        return Err(Error::Insufficient(format!(
            "no complete windows out of {} for sensors {sensors}",
            windows.len()
        )));
    }
    Ok(m)
}

const DROPPED_KEY: &str = "dropped_rows";
const TRAILING_COLUMNS: [&str; 3] = ["participant_id", "window_start", "target_met"];

/// Free-form `key=value` pairs carried in the matrix CSV preamble.
pub type MatrixMeta = BTreeMap<String, String>;

/// Header of feature names then `participant_id,window_start,target_met`,
/// preceded by `# key=value` comment lines, the first being `dropped_rows`.
pub fn write_matrix_csv(path: &Path, m: &FeatureMatrix) -> Result<()> {
    write_matrix_csv_with_meta(path, m, &MatrixMeta::new())
}

pub fn write_matrix_csv_with_meta(path: &Path, m: &FeatureMatrix, meta: &MatrixMeta) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "# {DROPPED_KEY}={}", m.dropped_rows).unwrap();
    for (k, v) in meta.iter().filter(|(k, _)| k.as_str() != DROPPED_KEY) {
        writeln!(buf, "# {k}={v}").unwrap();
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let header: Vec<&str> = m.names.iter().map(String::as_str).chain(TRAILING_COLUMNS).collect();
        w.write_record(&header).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for i in 0..m.n_rows() {
            let mut rec: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
            rec.push(m.participants[i].clone());
            rec.push(format!("{}", m.window_starts[i]));
            rec.push(format!("{}", m.targets[i]));
            w.write_record(&rec).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<FeatureMatrix> {
    read_matrix_csv_with_meta(path).map(|(m, _)| m)
}

pub fn read_matrix_csv_with_meta(path: &Path) -> Result<(FeatureMatrix, MatrixMeta)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut meta = MatrixMeta::new();
    let mut body = text.as_str();
    let mut line_offset = 0u64;
    while let Some(rest) = body.strip_prefix('#') {
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        line_offset += 1;
        if let Some((k, v)) = line.trim().split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
        body = tail;
    }
    let dropped_rows = match meta.get(DROPPED_KEY) {
        Some(n) => n.parse().map_err(|_| Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("bad {DROPPED_KEY} comment {n:?}"),
        })?,
        None => 0,
    };
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1 + line_offset,
            reason: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let d = header.len().checked_sub(3).filter(|_| header.ends_with(&TRAILING_COLUMNS.map(String::from)));
    let Some(d) = d else {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1 + line_offset,
            reason: format!("header must end with {}", TRAILING_COLUMNS.join(",")),
        });
    };
    let mut m = FeatureMatrix {
        names: header[..d].to_vec(),
        values: Vec::new(),
        participants: Vec::new(),
        window_starts: Vec::new(),
        targets: Vec::new(),
        dropped_rows,
    };
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2 + line_offset;
        let bad = |reason: String| Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            let s = &rec[j];
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("column {} is not a finite number: {s:?}", header[j])))
        };
        for j in 0..d {
            m.values.push(num(j)?);
        }
        m.participants.push(rec[d].to_string());
        m.window_starts.push(num(d + 1)?);
        m.targets.push(num(d + 2)?);
    }
    Ok((m, meta))
}
