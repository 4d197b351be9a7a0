//! Domain types shared across the pipeline.
//!
//! Everything here is plain data: sensor inventory, time series, sessions,
//! windows, feature matrices and evaluation reports. Types are immutable once
//! built and are `Send + Sync`, so workers can share them freely.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Sensors and units
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensorKind {
    Acc,
    Gyro,
    Ppg,
    Eda,
    Temp,
    Eeg,
    Vo2,
    HrSummary,
    BrSummary,
}

impl SensorKind {
    pub const ALL: [SensorKind; 9] = [
        SensorKind::Acc,
        SensorKind::Gyro,
        SensorKind::Ppg,
        SensorKind::Eda,
        SensorKind::Temp,
        SensorKind::Eeg,
        SensorKind::Vo2,
        SensorKind::HrSummary,
        SensorKind::BrSummary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensorKind::Acc => "ACC",
            SensorKind::Gyro => "GYRO",
            SensorKind::Ppg => "PPG",
            SensorKind::Eda => "EDA",
            SensorKind::Temp => "TEMP",
            SensorKind::Eeg => "EEG",
            SensorKind::Vo2 => "VO2",
            SensorKind::HrSummary => "HR_SUMMARY",
            SensorKind::BrSummary => "BR_SUMMARY",
        }
    }

    /// Lower-case prefix used when naming features (`acc.x.mean`).
    pub fn feature_prefix(self) -> &'static str {
        match self {
            SensorKind::Acc => "acc",
            SensorKind::Gyro => "gyro",
            SensorKind::Ppg => "ppg",
            SensorKind::Eda => "eda",
            SensorKind::Temp => "temp",
            SensorKind::Eeg => "eeg",
            SensorKind::Vo2 => "vo2",
            SensorKind::HrSummary => "hr",
            SensorKind::BrSummary => "br",
        }
    }

    pub fn default_channels(self) -> &'static [&'static str] {
        match self {
            SensorKind::Acc | SensorKind::Gyro => &["x", "y", "z"],
            SensorKind::Eeg => &["tp9", "af7", "af8", "tp10"],
            SensorKind::Ppg => &["ppg"],
            SensorKind::Eda => &["eda"],
            SensorKind::Temp => &["temp"],
            SensorKind::Vo2 => &["vo2"],
            SensorKind::HrSummary => &["hr"],
            SensorKind::BrSummary => &["br"],
        }
    }

    pub fn registered_units(self) -> &'static [Unit] {
        match self {
            SensorKind::Acc => &[Unit::G, Unit::MilliG, Unit::GOver64],
            SensorKind::Gyro => &[Unit::DegPerSec, Unit::RadPerSec],
            SensorKind::Ppg => &[Unit::Arbitrary],
            SensorKind::Eda => &[Unit::MicroSiemens],
            SensorKind::Temp => &[Unit::Celsius],
            SensorKind::Eeg => &[Unit::MicroVolt],
            SensorKind::Vo2 => &[Unit::MlPerKgPerMin],
            SensorKind::HrSummary => &[Unit::Bpm],
            SensorKind::BrSummary => &[Unit::BreathsPerMin],
        }
    }

    pub fn canonical_unit(self) -> Unit {
        self.registered_units()[0]
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        SensorKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == upper || k.feature_prefix().to_ascii_uppercase() == upper)
            .ok_or_else(|| Error::Unknown {
                what: "sensor",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    G,
    MilliG,
    GOver64,
    DegPerSec,
    RadPerSec,
    MicroSiemens,
    Celsius,
    Arbitrary,
    MicroVolt,
    MlPerKgPerMin,
    Bpm,
    BreathsPerMin,
    /// Metabolic equivalents; only used by the derived ground-truth series.
    Met,
}

impl Unit {
    const ALL: [Unit; 13] = [
        Unit::G,
        Unit::MilliG,
        Unit::GOver64,
        Unit::DegPerSec,
        Unit::RadPerSec,
        Unit::MicroSiemens,
        Unit::Celsius,
        Unit::Arbitrary,
        Unit::MicroVolt,
        Unit::MlPerKgPerMin,
        Unit::Bpm,
        Unit::BreathsPerMin,
        Unit::Met,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::G => "g",
            Unit::MilliG => "milli-g",
            Unit::GOver64 => "g/64",
            Unit::DegPerSec => "deg/s",
            Unit::RadPerSec => "rad/s",
            Unit::MicroSiemens => "uS",
            Unit::Celsius => "degC",
            Unit::Arbitrary => "a.u.",
            Unit::MicroVolt => "uV",
            Unit::MlPerKgPerMin => "ml/kg/min",
            Unit::Bpm => "bpm",
            Unit::BreathsPerMin => "breaths/min",
            Unit::Met => "MET",
        }
    }

    /// Parses a unit string. Accepts a few common spellings besides the
    /// canonical one (`mg`, `milli g`, `1/64 g`).
    pub fn parse(s: &str) -> Option<Unit> {
        let norm = s.trim().to_ascii_lowercase();
        let alias = match norm.as_str() {
            "mg" | "milli g" | "millig" | "milli_g" => Some(Unit::MilliG),
            "1/64 g" | "g_64" | "g64" => Some(Unit::GOver64),
            "dps" | "deg_s" => Some(Unit::DegPerSec),
            "us" | "microsiemens" | "µs" => Some(Unit::MicroSiemens),
            "c" | "celsius" | "°c" => Some(Unit::Celsius),
            "au" | "arb" => Some(Unit::Arbitrary),
            "microvolt" | "µv" => Some(Unit::MicroVolt),
            "brpm" | "rpm" => Some(Unit::BreathsPerMin),
            _ => None,
        };
        alias.or_else(|| {
            Unit::ALL
                .iter()
                .copied()
                .find(|u| u.as_str().to_ascii_lowercase() == norm)
        })
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SampleRate {
    Hz(f64),
    Irregular,
}

impl SampleRate {
    pub fn hz(self) -> Option<f64> {
        match self {
            SampleRate::Hz(r) => Some(r),
            SampleRate::Irregular => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Devices and protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Device {
    /// Instrumented earbuds.
    Nbl,
    /// Wristband.
    Ee4,
    /// Headband.
    Msh,
    /// Chest belt, pre-aggregated summary streams.
    Zbh,
    /// Face-mask indirect calorimeter (ground truth only).
    Vo2Master,
}

impl Device {
    pub const WEARABLES: [Device; 4] = [Device::Nbl, Device::Ee4, Device::Msh, Device::Zbh];

    pub fn as_str(self) -> &'static str {
        match self {
            Device::Nbl => "NBL",
            Device::Ee4 => "EE4",
            Device::Msh => "MSH",
            Device::Zbh => "ZBH",
            Device::Vo2Master => "VO2M",
        }
    }

    pub fn sensors(self) -> &'static [SensorKind] {
        match self {
            Device::Nbl => &[SensorKind::Acc, SensorKind::Gyro, SensorKind::Ppg],
            Device::Ee4 => &[
                SensorKind::Acc,
                SensorKind::Ppg,
                SensorKind::Eda,
                SensorKind::Temp,
            ],
            Device::Msh => &[SensorKind::Acc, SensorKind::Gyro, SensorKind::Eeg],
            Device::Zbh => &[
                SensorKind::Acc,
                SensorKind::HrSummary,
                SensorKind::BrSummary,
            ],
            Device::Vo2Master => &[SensorKind::Vo2],
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Device {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let device = match upper.as_str() {
            "NBL" | "EARBUDS" | "EARBUD" => Device::Nbl,
            "EE4" | "E4" | "WRIST" => Device::Ee4,
            "MSH" | "MUSE" | "HEADBAND" => Device::Msh,
            "ZBH" | "ZEPHYR" | "CHEST" => Device::Zbh,
            "VO2M" | "VO2" | "CALORIMETER" => Device::Vo2Master,
            _ => {
                return Err(Error::Unknown {
                    what: "device",
                    value: s.to_string(),
                })
            }
        };
        Ok(device)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Activity {
    Rest,
    Cycle,
    Run,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Rest, Activity::Cycle, Activity::Run];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Rest => "REST",
            Activity::Cycle => "CYCLE",
            Activity::Run => "RUN",
        }
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "REST" | "RESTING" => Ok(Activity::Rest),
            "CYCLE" | "CYCLING" => Ok(Activity::Cycle),
            "RUN" | "RUNNING" => Ok(Activity::Run),
            _ => Err(Error::Unknown {
                what: "activity",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityInterval {
    pub activity: Activity,
    pub intensity: u8,
    pub start_s: f64,
    pub end_s: f64,
}

impl ActivityInterval {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age_years: Option<f64>,
    pub sex: Option<Sex>,
    pub height_cm: Option<f64>,
    pub weight_kg: Option<f64>,
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

/// One sensor's channels sharing a timestamp vector (seconds from session start).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub kind: SensorKind,
    pub channels: Vec<String>,
    pub timestamps: Vec<f64>,
    /// `values[c][i]` is channel `c` at `timestamps[i]`.
    pub values: Vec<Vec<f64>>,
    pub unit: Unit,
    pub rate: SampleRate,
}

impl TimeSeries {
    pub fn new(
        kind: SensorKind,
        channels: Vec<String>,
        timestamps: Vec<f64>,
        values: Vec<Vec<f64>>,
        unit: Unit,
        rate: SampleRate,
    ) -> Result<Self> {
        if channels.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{kind}: {} channel labels but {} value columns",
                channels.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| v.len() != timestamps.len()) {
            return Err(Error::InvalidInput(format!(
                "{kind}: channel `{}` has {} samples for {} timestamps",
                channels[bad],
                values[bad].len(),
                timestamps.len()
            )));
        }
        Ok(TimeSeries {
            kind,
            channels,
            timestamps,
            values,
            unit,
            rate,
        })
    }

    /// Single-channel convenience constructor.
    pub fn single(
        kind: SensorKind,
        timestamps: Vec<f64>,
        values: Vec<f64>,
        unit: Unit,
        rate: SampleRate,
    ) -> Result<Self> {
        let label = kind.default_channels()[0].to_string();
        TimeSeries::new(kind, vec![label], timestamps, vec![values], unit, rate)
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, timestamps: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        TimeSeries::new(
            self.kind,
            self.channels.clone(),
            timestamps,
            values,
            self.unit,
            self.rate,
        )
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.values[idx]
    }

    pub fn start(&self) -> Option<f64> {
        self.timestamps.first().copied()
    }

    pub fn end(&self) -> Option<f64> {
        self.timestamps.last().copied()
    }

    /// Index range of samples with `t0 <= t < t1`.
    pub fn index_range(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let lo = self.timestamps.partition_point(|&t| t < t0);
        let hi = self.timestamps.partition_point(|&t| t < t1);
        lo..hi.max(lo)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.timestamps.windows(2).all(|w| w[1] > w[0])
    }
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub participant_id: String,
    /// Absolute epoch (seconds) of t = 0, if known.
    pub epoch_s: Option<f64>,
    pub demographics: Demographics,
    pub streams: BTreeMap<Device, Vec<TimeSeries>>,
    pub activities: Vec<ActivityInterval>,
    pub met_series: TimeSeries,
    /// Boundary trim already applied to `activities`, seconds per side.
    pub trimmed_s: f64,
}

impl Session {
    pub fn stream(&self, device: Device, kind: SensorKind) -> Option<&TimeSeries> {
        self.streams
            .get(&device)
            .and_then(|list| list.iter().find(|s| s.kind == kind))
    }

    pub fn devices(&self) -> impl Iterator<Item = Device> + '_ {
        self.streams.keys().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    TimestampOrder,
    ChannelLength,
    UnregisteredUnit,
    ActivityOverlap,
    ActivityDuration,
    NegativeMet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

/// Nominal activity interval length before trimming.
pub const NOMINAL_INTERVAL_S: f64 = 300.0;

/// Checks every structural invariant of a session. Returns an empty list iff
/// the session is well formed.
pub fn validate_session(session: &Session) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, message: String| out.push(Violation { kind, message });

    let all_series = session
        .streams
        .iter()
        .flat_map(|(d, list)| list.iter().map(move |s| (d.as_str(), s)))
        .chain(std::iter::once(("MET", &session.met_series)));

    for (device, series) in all_series {
        if !series.is_strictly_increasing() {
            push(
                ViolationKind::TimestampOrder,
                format!("{device}/{}: timestamps not strictly increasing", series.kind),
            );
        }
        for (label, vals) in series.channels.iter().zip(&series.values) {
            if vals.len() != series.timestamps.len() {
                push(
                    ViolationKind::ChannelLength,
                    format!(
                        "{device}/{}: channel `{label}` has {} samples for {} timestamps",
                        series.kind,
                        vals.len(),
                        series.timestamps.len()
                    ),
                );
            }
        }
        if series.channels.len() != series.values.len() {
            push(
                ViolationKind::ChannelLength,
                format!("{device}/{}: channel label count mismatch", series.kind),
            );
        }
        // MET is a derived series and carries no physical sensor unit.
        if device != "MET" && !series.kind.registered_units().contains(&series.unit) {
            push(
                ViolationKind::UnregisteredUnit,
                format!("{device}/{}: unit `{}` not registered", series.kind, series.unit),
            );
        }
    }

    let mut sorted: Vec<(usize, &ActivityInterval)> = session.activities.iter().enumerate().collect();
    sorted.sort_by(|a, b| a.1.start_s.total_cmp(&b.1.start_s));
    if sorted.iter().map(|(i, _)| *i).ne(0..sorted.len()) {
        push(
            ViolationKind::ActivityOverlap,
            "activity intervals are not in time order".to_string(),
        );
    }
    for pair in sorted.windows(2) {
        let (ia, a) = pair[0];
        let (ib, b) = pair[1];
        if b.start_s < a.end_s {
            push(
                ViolationKind::ActivityOverlap,
                format!(
                    "interval #{ia} {} L{} [{}, {}] overlaps interval #{ib} {} L{} [{}, {}]",
                    a.activity.as_str(),
                    a.intensity,
                    a.start_s,
                    a.end_s,
                    b.activity.as_str(),
                    b.intensity,
                    b.start_s,
                    b.end_s
                ),
            );
        }
    }

    let expected = NOMINAL_INTERVAL_S - 2.0 * session.trimmed_s;
    for (i, a) in session.activities.iter().enumerate() {
        let d = a.duration();
        if expected > 0.0 && (d - expected).abs() > 0.1 * NOMINAL_INTERVAL_S {
            push(
                ViolationKind::ActivityDuration,
                format!("interval #{i} spans {d} s, expected ~{expected} s"),
            );
        }
    }

    let negatives = session.met_series.values.iter().flatten().filter(|v| **v < 0.0).count();
    if negatives > 0 {
        push(
            ViolationKind::NegativeMet,
            format!("negative MET in {negatives} samples"),
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Windows, matrices, reports
// ---------------------------------------------------------------------------

/// Named features of one window. Missing features are simply absent.
pub type FeatureMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub participant_id: String,
    pub device: Device,
    pub start_s: f64,
    pub width_s: f64,
    /// Index into the session's activity list.
    pub activity_index: usize,
    pub features: FeatureMap,
    pub target_met: f64,
}

impl Window {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.width_s
    }

    pub fn center_s(&self) -> f64 {
        self.start_s + 0.5 * self.width_s
    }
}

/// Windows x named features for one (device, sensors, width) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    /// Row-major, `rows * names.len()` cells.
    pub values: Vec<f64>,
    pub participants: Vec<String>,
    pub window_starts: Vec<f64>,
    pub targets: Vec<f64>,
    pub dropped_rows: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    /// Distinct participant ids in first-appearance order.
    pub fn participant_ids(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for p in &self.participants {
            if !seen.contains(p) {
                seen.push(p.clone());
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// Missing when targets are constant.
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDescriptor {
    pub device: String,
    pub sensors: String,
    pub width_s: f64,
    pub model: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub participant_id: String,
    pub count: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigDescriptor,
    pub folds: Vec<FoldResult>,
    pub pooled: Metrics,
    pub dropped_rows: usize,
    /// Participants that had no rows and therefore no fold.
    pub skipped: Vec<String>,
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// Six contiguous 300 s intervals, constant MET, one zero ACC stream.
    pub(crate) fn minimal_session() -> Session {
        let t: Vec<f64> = (0..1800).map(f64::from).collect();
        let met = TimeSeries::single(
            SensorKind::Vo2,
            t.clone(),
            vec![1.0; t.len()],
            Unit::Met,
            SampleRate::Hz(1.0),
        )
        .unwrap();
        let acc = TimeSeries::new(
            SensorKind::Acc,
            vec!["x".into(), "y".into(), "z".into()],
            t.clone(),
            vec![vec![0.0; t.len()]; 3],
            Unit::G,
            SampleRate::Hz(1.0),
        )
        .unwrap();
        let mut activities = Vec::new();
        for (i, act) in Activity::ALL.iter().enumerate() {
            for lvl in 0..2u8 {
                let start = (i as f64 * 2.0 + lvl as f64) * 300.0;
                activities.push(ActivityInterval {
                    activity: *act,
                    intensity: lvl + 1,
                    start_s: start,
                    end_s: start + 300.0,
                });
            }
        }
        Session {
            participant_id: "P01".into(),
            epoch_s: None,
            demographics: Demographics::default(),
            streams: BTreeMap::from([(Device::Nbl, vec![acc])]),
            activities,
            met_series: met,
            trimmed_s: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::minimal_session as tiny_session;
    use super::*;

    #[test]
    fn well_formed_session_has_no_violations() {
        assert!(validate_session(&tiny_session()).is_empty());
    }

    #[test]
    fn overlapping_intervals_name_both() {
        let mut s = tiny_session();
        s.activities[1].start_s = 250.0;
        let v = validate_session(&s);
        let overlaps: Vec<_> = v
            .iter()
            .filter(|v| v.kind == ViolationKind::ActivityOverlap)
            .collect();
        assert_eq!(overlaps.len(), 1);
        assert!(overlaps[0].message.contains("#0"));
        assert!(overlaps[0].message.contains("#1"));
    }

    #[test]
    fn negative_met_is_reported() {
        let mut s = tiny_session();
        s.met_series.values[0][10] = -1.0;
        let v = validate_session(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NegativeMet);
        assert!(v[0].message.contains("negative MET"));
    }

    #[test]
    fn unsorted_timestamps_and_bad_unit() {
        let mut s = tiny_session();
        let acc = &mut s.streams.get_mut(&Device::Nbl).unwrap()[0];
        acc.timestamps.swap(3, 4);
        acc.unit = Unit::MicroVolt;
        let kinds: Vec<_> = validate_session(&s).iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::TimestampOrder));
        assert!(kinds.contains(&ViolationKind::UnregisteredUnit));
    }

    #[test]
    fn short_interval_flagged() {
        let mut s = tiny_session();
        s.activities[5].end_s = s.activities[5].start_s + 200.0;
        let v = validate_session(&s);
        assert_eq!(v[0].kind, ViolationKind::ActivityDuration);
    }

    #[test]
    fn mismatched_channel_lengths_rejected_at_construction() {
        let r = TimeSeries::new(
            SensorKind::Acc,
            vec!["x".into()],
            vec![0.0, 1.0],
            vec![vec![1.0]],
            Unit::G,
            SampleRate::Irregular,
        );
        assert!(r.is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("nbl".parse::<Device>().unwrap(), Device::Nbl);
        assert_eq!("ppg".parse::<SensorKind>().unwrap(), SensorKind::Ppg);
        assert_eq!("hr".parse::<SensorKind>().unwrap(), SensorKind::HrSummary);
        assert_eq!(Unit::parse("milli-g"), Some(Unit::MilliG));
        assert_eq!(Unit::parse("g/64"), Some(Unit::GOver64));
        assert_eq!(Unit::parse("furlongs"), None);
        assert!("XYZ".parse::<Device>().is_err());
    }
}
