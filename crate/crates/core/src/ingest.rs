//! Session ingestion: manifest parsing, per-stream CSV loading, unit
//! harmonization, MET ground truth and activity-boundary trimming.
//!
//! A session on disk is a directory holding `manifest.toml` plus one CSV per
//! stream. Each CSV has a header row whose first column is `t` (seconds from
//! session start) followed by one column per channel:
//!
//! ```text
//! t,x,y,z
//! 0,12.5,-3,998
//! 0.02,13.1,-2.5,1001
//! ```
//!
//! The manifest names every stream and the activity schedule:
//!
//! ```toml
//! participant_id = "P01"
//! epoch_s = 1690000000.0        # optional
//!
//! [demographics]                # every field optional
//! age_years = 27.0
//! sex = "female"
//! height_cm = 168.0
//! weight_kg = 61.5
//!
//! [[stream]]
//! file = "nbl_acc.csv"
//! device = "NBL"
//! sensor = "ACC"
//! unit = "milli-g"
//! rate_hz = 50.0                # omit for irregular sampling
//! channels = ["x", "y", "z"]
//!
//! [[activity]]
//! activity = "REST"
//! intensity = 1
//! start_s = 0.0
//! end_s = 300.0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Activity, ActivityInterval, Demographics, Device, SampleRate, SensorKind, Session, Sex,
    TimeSeries, Unit,
};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Oxygen uptake of one MET, ml O2 per kg per minute.
pub const ML_O2_PER_MET: f64 = 3.5;

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub participant_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch_s: Option<f64>,
    #[serde(default)]
    pub demographics: ManifestDemographics,
    #[serde(default, rename = "stream")]
    pub streams: Vec<StreamEntry>,
    #[serde(default, rename = "activity")]
    pub activities: Vec<ActivityEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestDemographics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_years: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_kg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEntry {
    pub file: String,
    pub device: String,
    pub sensor: String,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEntry {
    pub activity: String,
    pub intensity: u8,
    pub start_s: f64,
    pub end_s: f64,
}

impl SessionManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

fn manifest_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_demographics(d: &ManifestDemographics, path: &Path) -> Result<Demographics> {
    let sex = match d.sex.as_deref().map(|s| s.trim().to_ascii_lowercase()) {
        None => None,
        Some(s) if s == "male" || s == "m" => Some(Sex::Male),
        Some(s) if s == "female" || s == "f" => Some(Sex::Female),
        Some(other) => return Err(manifest_err(path, format!("unknown sex `{other}`"))),
    };
    Ok(Demographics {
        age_years: d.age_years,
        sex,
        height_cm: d.height_cm,
        weight_kg: d.weight_kg,
    })
}

// ---------------------------------------------------------------------------
// Unit harmonization and MET
// ---------------------------------------------------------------------------

/// Converts accelerometer samples to g. Linear scaling only.
pub fn harmonize_acceleration(values: &[f64], source: Unit) -> Result<Vec<f64>> {
    let scale = match source {
        Unit::G => 1.0,
        Unit::MilliG => 1e-3,
        Unit::GOver64 => 1.0 / 64.0,
        other => {
            return Err(Error::UnknownUnit {
                unit: other.to_string(),
                sensor: SensorKind::Acc.to_string(),
            })
        }
    };
    Ok(values.iter().map(|v| v * scale).collect())
}

/// Rescales a stream to the canonical unit of its sensor kind.
pub fn canonicalize_series(series: &TimeSeries) -> Result<TimeSeries> {
    if !series.kind.registered_units().contains(&series.unit) {
        return Err(Error::UnknownUnit {
            unit: series.unit.to_string(),
            sensor: series.kind.to_string(),
        });
    }
    let canonical = series.kind.canonical_unit();
    if series.unit == canonical {
        return Ok(series.clone());
    }
    let values = match series.kind {
        SensorKind::Acc => series
            .values
            .iter()
            .map(|ch| harmonize_acceleration(ch, series.unit))
            .collect::<Result<Vec<_>>>()?,
        SensorKind::Gyro => {
            let k = 180.0 / std::f64::consts::PI;
            series
                .values
                .iter()
                .map(|ch| ch.iter().map(|v| v * k).collect())
                .collect()
        }
        _ => unreachable!("single-unit sensor kinds are always canonical"),
    };
    let mut out = series.clone();
    out.values = values;
    out.unit = canonical;
    Ok(out)
}

/// Canonicalizes every stream of a session.
pub fn canonicalize_session(session: &Session) -> Result<Session> {
    let mut out = session.clone();
    for list in out.streams.values_mut() {
        for s in list.iter_mut() {
            *s = canonicalize_series(s)?;
        }
    }
    Ok(out)
}

/// Oxygen uptake (ml O2/kg/min) to metabolic equivalents.
pub fn vo2_to_met(vo2: f64) -> Result<f64> {
    if !(vo2 >= 0.0) {
        return Err(Error::InvalidInput(format!("negative or NaN VO2: {vo2}")));
    }
    Ok(vo2 / ML_O2_PER_MET)
}

/// Derives the MET ground-truth series from a VO2 stream.
pub fn met_series_from_vo2(vo2: &TimeSeries) -> Result<TimeSeries> {
    if vo2.kind != SensorKind::Vo2 {
        return Err(Error::InvalidInput(format!("expected VO2 stream, got {}", vo2.kind)));
    }
    let met = vo2.values[0]
        .iter()
        .map(|&v| vo2_to_met(v))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(
        SensorKind::Vo2,
        vec!["met".into()],
        vo2.timestamps.clone(),
        vec![met],
        Unit::Met,
        vo2.rate,
    )
}

// ---------------------------------------------------------------------------
// Trimming
// ---------------------------------------------------------------------------

/// Shrinks every activity interval by `trim_s` on both ends. Intervals with
/// nothing left vanish. Streams are untouched; windowing only looks inside
/// the annotated intervals.
pub fn trim_activity_boundaries(session: &Session, trim_s: f64) -> Session {
    let mut out = session.clone();
    if trim_s <= 0.0 {
        return out;
    }
    out.activities = session
        .activities
        .iter()
        .filter_map(|a| {
            let start = a.start_s + trim_s;
            let end = a.end_s - trim_s;
            (end > start).then_some(ActivityInterval {
                start_s: start,
                end_s: end,
                ..*a
            })
        })
        .collect();
    out.trimmed_s += trim_s;
    out
}

// ---------------------------------------------------------------------------
// CSV streams
// ---------------------------------------------------------------------------

/// Stable sort by timestamp, then drop repeated timestamps keeping the first.
pub fn sort_and_dedup(timestamps: Vec<f64>, values: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut order: Vec<usize> = (0..timestamps.len()).collect();
    order.sort_by(|&a, &b| timestamps[a].total_cmp(&timestamps[b]));
    let mut keep = Vec::with_capacity(order.len());
    for &i in &order {
        match keep.last() {
            Some(&prev) if timestamps[prev] == timestamps[i] => {}
            _ => keep.push(i),
        }
    }
    let ts = keep.iter().map(|&i| timestamps[i]).collect();
    let vals = values
        .iter()
        .map(|ch| keep.iter().map(|&i| ch[i]).collect())
        .collect();
    (ts, vals)
}

/// Reads one stream CSV. Returns (channel labels from header, timestamps, values).
pub fn read_stream_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>, Vec<Vec<f64>>)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.is_empty() || header.get(0) != Some("t") {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            reason: "header must start with column `t`".into(),
        });
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if labels.is_empty() {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            reason: "no channel columns".into(),
        });
    }

    let mut timestamps = Vec::new();
    let mut values = vec![Vec::new(); labels.len()];
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_err(path, e)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason,
        };
        if record.len() != labels.len() + 1 {
            return Err(bad(format!(
                "expected {} fields, found {}",
                labels.len() + 1,
                record.len()
            )));
        }
        let mut parsed = record.iter().map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("not a finite number: `{f}`")))
        });
        timestamps.push(parsed.next().unwrap()?);
        for ch in values.iter_mut() {
            ch.push(parsed.next().unwrap()?);
        }
    }
    Ok((labels, timestamps, values))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_stream_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 16 * (series.channels.len() + 1));
    out.push('t');
    for c in &series.channels {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for i in 0..series.len() {
        let _ = write!(out, "{}", series.timestamps[i]);
        for ch in &series.values {
            let _ = write!(out, ",{}", ch[i]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Session load / write
// ---------------------------------------------------------------------------

struct ResolvedEntry {
    path: PathBuf,
    device: Device,
    kind: SensorKind,
    unit: Unit,
    rate: SampleRate,
    channels: Vec<String>,
}

fn resolve_entry(entry: &StreamEntry, base: &Path, manifest: &Path) -> Result<ResolvedEntry> {
    let device: Device = entry.device.parse()?;
    let kind: SensorKind = entry.sensor.parse()?;
    let unit = Unit::parse(&entry.unit)
        .filter(|u| kind.registered_units().contains(u))
        .ok_or_else(|| Error::UnknownUnit {
            unit: entry.unit.clone(),
            sensor: kind.to_string(),
        })?;
    let rate = match entry.rate_hz {
        Some(r) if r > 0.0 && r.is_finite() => SampleRate::Hz(r),
        Some(r) => return Err(manifest_err(manifest, format!("invalid rate {r} for {}", entry.file))),
        None => SampleRate::Irregular,
    };
    let path = base.join(&entry.file);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    Ok(ResolvedEntry {
        path,
        device,
        kind,
        unit,
        rate,
        channels: entry.channels.clone(),
    })
}

fn load_entry(entry: &ResolvedEntry) -> Result<TimeSeries> {
    let (labels, ts, vals) = read_stream_csv(&entry.path)?;
    if ts.is_empty() {
        return Err(Error::EmptyStream(entry.path.display().to_string()));
    }
    if !entry.channels.is_empty() && entry.channels != labels {
        return Err(Error::MalformedRow {
            path: entry.path.clone(),
            line: 1,
            reason: format!("header channels {labels:?} differ from manifest {:?}", entry.channels),
        });
    }
    let (ts, vals) = sort_and_dedup(ts, vals);
    let raw = TimeSeries::new(entry.kind, labels, ts, vals, entry.unit, entry.rate)?;
    canonicalize_series(&raw)
}

/// Loads a session from a manifest file, or from a directory containing
/// `manifest.toml`.
pub fn load_session(manifest_path: &Path) -> Result<Session> {
    let manifest_path = if manifest_path.is_dir() {
        manifest_path.join(MANIFEST_FILE)
    } else {
        manifest_path.to_path_buf()
    };
    let manifest = SessionManifest::from_path(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let entries = manifest
        .streams
        .iter()
        .map(|e| resolve_entry(e, base, &manifest_path))
        .collect::<Result<Vec<_>>>()?;
    let loaded = entries
        .par_iter()
        .map(load_entry)
        .collect::<Result<Vec<_>>>()?;

    let mut streams: BTreeMap<Device, Vec<TimeSeries>> = BTreeMap::new();
    for (entry, series) in entries.iter().zip(loaded) {
        streams.entry(entry.device).or_default().push(series);
    }
    let vo2 = streams
        .values()
        .flatten()
        .find(|s| s.kind == SensorKind::Vo2)
        .ok_or_else(|| manifest_err(&manifest_path, "no VO2 stream for ground truth"))?;
    let met_series = met_series_from_vo2(vo2)?;

    let mut activities = manifest
        .activities
        .iter()
        .map(|a| {
            Ok(ActivityInterval {
                activity: a.activity.parse::<Activity>()?,
                intensity: a.intensity,
                start_s: a.start_s,
                end_s: a.end_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    activities.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));

    Ok(Session {
        participant_id: manifest.participant_id.clone(),
        epoch_s: manifest.epoch_s,
        demographics: parse_demographics(&manifest.demographics, &manifest_path)?,
        streams,
        activities,
        met_series,
        trimmed_s: 0.0,
    })
}

/// Loads every session directory (one containing `manifest.toml`) under
/// `root`, sorted by directory name.
pub fn load_sessions_dir(root: &Path) -> Result<Vec<Session>> {
    if !root.is_dir() {
        return Err(Error::MissingFile(root.to_path_buf()));
    }
    let mut dirs = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect::<Vec<_>>();
    dirs.sort();
    dirs.iter().map(|d| load_session(d)).collect()
}

fn stream_file_name(device: Device, kind: SensorKind) -> String {
    format!(
        "{}_{}.csv",
        device.as_str().to_ascii_lowercase(),
        kind.as_str().to_ascii_lowercase()
    )
}

/// Writes a session directory (manifest plus one CSV per stream). Streams are
/// written in whatever units they currently carry.
pub fn write_session(session: &Session, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for (device, list) in &session.streams {
        for series in list {
            let file = stream_file_name(*device, series.kind);
            write_stream_csv(&dir.join(&file), series)?;
            entries.push(StreamEntry {
                file,
                device: device.as_str().to_string(),
                sensor: series.kind.as_str().to_string(),
                unit: series.unit.as_str().to_string(),
                rate_hz: series.rate.hz(),
                channels: series.channels.clone(),
            });
        }
    }
    let d = &session.demographics;
    let manifest = SessionManifest {
        participant_id: session.participant_id.clone(),
        epoch_s: session.epoch_s,
        demographics: ManifestDemographics {
            age_years: d.age_years,
            sex: d.sex.map(|s| match s {
                Sex::Male => "male".to_string(),
                Sex::Female => "female".to_string(),
            }),
            height_cm: d.height_cm,
            weight_kg: d.weight_kg,
        },
        streams: entries,
        activities: session
            .activities
            .iter()
            .map(|a| ActivityEntry {
                activity: a.activity.as_str().to_string(),
                intensity: a.intensity,
                start_s: a.start_s,
                end_s: a.end_s,
            })
            .collect(),
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_toml()).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn nbl_dir(vo2: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "acc.csv", "t,x,y,z\n0,1000,0,-500\n0.5,2000,64,0\n1,0,0,1000\n");
        write(p, "gyro.csv", "t,x,y,z\n0,1,2,3\n1,4,5,6\n");
        write(p, "ppg.csv", "t,ppg\n1,5\n0,3\n0,4\n");
        write(p, "vo2.csv", vo2);
        write(
            p,
            MANIFEST_FILE,
            r#"
participant_id = "P07"

[demographics]
sex = "male"
age_years = 30.0

[[stream]]
file = "acc.csv"
device = "NBL"
sensor = "ACC"
unit = "milli-g"
rate_hz = 2.0
channels = ["x", "y", "z"]

[[stream]]
file = "gyro.csv"
device = "NBL"
sensor = "GYRO"
unit = "deg/s"
rate_hz = 1.0

[[stream]]
file = "ppg.csv"
device = "NBL"
sensor = "PPG"
unit = "a.u."
rate_hz = 1.0

[[stream]]
file = "vo2.csv"
device = "VO2M"
sensor = "VO2"
unit = "ml/kg/min"

[[activity]]
activity = "CYCLE"
intensity = 1
start_s = 300.0
end_s = 600.0

[[activity]]
activity = "REST"
intensity = 1
start_s = 0.0
end_s = 300.0
"#,
        );
        dir
    }

    #[test]
    fn loads_earbud_session_in_canonical_units() {
        let dir = nbl_dir("t,vo2\n0,3.5\n1,3.5\n2,3.5\n");
        let s = load_session(dir.path()).unwrap();
        assert_eq!(s.participant_id, "P07");
        assert_eq!(s.streams[&Device::Nbl].len(), 3);
        let acc = s.stream(Device::Nbl, SensorKind::Acc).unwrap();
        assert_eq!(acc.unit, Unit::G);
        assert_eq!(acc.values[0], vec![1.0, 2.0, 0.0]);
        assert_eq!(acc.values[1][1], 0.064);
        let ppg = s.stream(Device::Nbl, SensorKind::Ppg).unwrap();
        // sorted, duplicate t=0 keeps the first row
        assert_eq!(ppg.timestamps, vec![0.0, 1.0]);
        assert_eq!(ppg.values[0], vec![3.0, 5.0]);
        assert!(s.met_series.values[0].iter().all(|&m| m == 1.0));
        assert_eq!(s.activities[0].activity, Activity::Rest);
        assert_eq!(s.demographics.sex, Some(Sex::Male));
    }

    #[test]
    fn missing_file_names_path() {
        let dir = nbl_dir("t,vo2\n0,3.5\n");
        fs::remove_file(dir.path().join("gyro.csv")).unwrap();
        let err = load_session(dir.path()).unwrap_err();
        match err {
            Error::MissingFile(p) => assert!(p.ends_with("gyro.csv")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = nbl_dir("t,vo2\n0,3.5\n1,abc\n");
        let err = load_session(dir.path()).unwrap_err();
        match err {
            Error::MalformedRow { path, line, .. } => {
                assert!(path.ends_with("vo2.csv"));
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_unit_and_empty_stream() {
        let dir = nbl_dir("t,vo2\n");
        assert!(matches!(load_session(dir.path()), Err(Error::EmptyStream(_))));

        let dir = nbl_dir("t,vo2\n0,3.5\n");
        let m = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&m).unwrap().replace("\"milli-g\"", "\"furlong\"");
        fs::write(&m, text).unwrap();
        assert!(matches!(load_session(dir.path()), Err(Error::UnknownUnit { .. })));
    }

    #[test]
    fn negative_vo2_is_an_error() {
        let dir = nbl_dir("t,vo2\n0,-1\n");
        assert!(load_session(dir.path()).is_err());
    }

    #[test]
    fn acceleration_units() {
        assert_eq!(harmonize_acceleration(&[64.0], Unit::GOver64).unwrap(), vec![1.0]);
        assert_eq!(harmonize_acceleration(&[1000.0], Unit::MilliG).unwrap(), vec![1.0]);
        for u in [Unit::G, Unit::MilliG, Unit::GOver64] {
            assert_eq!(harmonize_acceleration(&[0.0], u).unwrap(), vec![0.0]);
        }
        assert!(harmonize_acceleration(&[1.0], Unit::Bpm).is_err());
    }

    #[test]
    fn met_conversion() {
        assert_eq!(vo2_to_met(3.5).unwrap(), 1.0);
        assert_eq!(vo2_to_met(0.0).unwrap(), 0.0);
        assert_eq!(vo2_to_met(35.0).unwrap(), 10.0);
        assert!(vo2_to_met(-0.1).is_err());
    }

    #[test]
    fn trimming() {
        let dir = nbl_dir("t,vo2\n0,3.5\n");
        let mut s = load_session(dir.path()).unwrap();
        let t = trim_activity_boundaries(&s, 60.0);
        assert_eq!(t.activities.len(), 2);
        assert_eq!(t.activities[0].duration(), 180.0);
        assert_eq!(t.activities[0].start_s, 60.0);
        assert_eq!(trim_activity_boundaries(&s, 0.0), s);

        s.activities[1].end_s = s.activities[1].start_s + 100.0;
        let t = trim_activity_boundaries(&s, 60.0);
        assert_eq!(t.activities.len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn harmonize_is_idempotent(xs in proptest::collection::vec(-5e3f64..5e3, 1..20),
                                       u in prop_oneof![Just(Unit::G), Just(Unit::MilliG), Just(Unit::GOver64)]) {
                let once = harmonize_acceleration(&xs, u).unwrap();
                let twice = harmonize_acceleration(&once, Unit::G).unwrap();
                prop_assert_eq!(once, twice);
            }

            #[test]
            fn met_is_linear(x in 0.0f64..80.0, a in 0.0f64..10.0) {
                let lhs = vo2_to_met(a * x).unwrap();
                let rhs = a * vo2_to_met(x).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }

            #[test]
            fn trimming_shrinks_and_keeps_order(lens in proptest::collection::vec(1.0f64..400.0, 1..8),
                                                trim in 0.0f64..120.0) {
                let mut start = 0.0;
                let activities: Vec<_> = lens.iter().map(|l| {
                    let a = ActivityInterval { activity: Activity::Rest, intensity: 1, start_s: start, end_s: start + l };
                    start += l;
                    a
                }).collect();
                let mut s = crate::model::tests_support::minimal_session();
                s.activities = activities.clone();
                let t = trim_activity_boundaries(&s, trim);
                prop_assert!(t.activities.windows(2).all(|w| w[0].end_s <= w[1].start_s));
                for a in &t.activities {
                    let src = activities.iter().find(|b| b.start_s <= a.start_s && a.end_s <= b.end_s);
                    prop_assert!(src.is_some());
                    prop_assert!(a.duration() <= src.unwrap().duration());
                }
            }
        }
    }
}
