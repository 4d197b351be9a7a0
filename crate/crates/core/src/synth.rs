//! Deterministic synthetic sessions following the rest / cycle / run protocol.
//!
//! Every session is six 300 s intervals (two intensities per activity). MET
//! follows per-interval levels through a first-order onset transient; heart
//! rate is slaved to MET, so cardiovascular streams carry most of the target
//! signal. Motion identifies the activity and scales with each participant's
//! effort, blurred by a per-participant amplitude factor.
//!
//! Streams are emitted in device-native units and quantized to a fixed number
//! of decimals, so writing a session to CSV and loading it back reproduces the
//! canonicalized in-memory session exactly.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{met_series_from_vo2, write_session, ML_O2_PER_MET};
use crate::model::{
    Activity, ActivityInterval, Demographics, Device, SampleRate, SensorKind, Session, Sex, TimeSeries, Unit,
};

pub const INTERVAL_S: f64 = 300.0;
pub const PROTOCOL: [(Activity, u8); 6] = [
    (Activity::Rest, 1),
    (Activity::Rest, 2),
    (Activity::Cycle, 1),
    (Activity::Cycle, 2),
    (Activity::Run, 1),
    (Activity::Run, 2),
];
pub const SESSION_S: f64 = INTERVAL_S * PROTOCOL.len() as f64;
/// Time constant of the VO2 onset transient after each level change.
pub const ONSET_TAU_S: f64 = 60.0;
/// Pulse transit delay of the wrist PPG relative to the ear.
pub const WRIST_DELAY_S: f64 = 0.12;
/// Minimum gap between SCR onsets.
pub const SCR_REFRACTORY_S: f64 = 12.0;
pub const SCR_RISE_S: f64 = 1.0;
pub const SCR_DECAY_S: f64 = 0.4;
/// Raised-cosine blend from the peak into the exponential decay; a rounded
/// maximum survives 4 Hz sampling, a cusp does not.
pub const SCR_SHOULDER_S: f64 = 0.75;

const NBL_IMU_HZ: f64 = 50.0;
const PPG_HZ: f64 = 64.0;
const EE4_ACC_HZ: f64 = 32.0;
const EE4_SLOW_HZ: f64 = 4.0;
const MSH_IMU_HZ: f64 = 52.0;
const EEG_HZ: f64 = 256.0;
const ZBH_ACC_HZ: f64 = 25.0;
const SUMMARY_HZ: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSds {
    pub acc_g: f64,
    pub gyro_dps: f64,
    /// Relative to a unit pulse amplitude.
    pub ppg: f64,
    pub eda_us: f64,
    pub eeg_uv: f64,
    pub vo2: f64,
    pub hr_bpm: f64,
}

impl Default for NoiseSds {
    fn default() -> Self {
        NoiseSds {
            acc_g: 0.01,
            gyro_dps: 0.8,
            ppg: 0.05,
            eda_us: 0.0005,
            eeg_uv: 2.0,
            vo2: 0.35,
            hr_bpm: 1.0,
        }
    }
}

/// Per-participant generator parameters. Arrays are indexed by protocol
/// interval (see [`PROTOCOL`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    pub participant_id: String,
    pub seed: u64,
    pub demographics: Demographics,
    pub rest_bpm: f64,
    /// Heart-rate rise per MET above the first rest level.
    pub bpm_per_met: f64,
    /// ml O2/kg/min.
    pub rest_vo2: f64,
    /// MET level per interval; the first is `rest_vo2 / 3.5`.
    pub met_levels: [f64; 6],
    /// Peak head acceleration of the cadence oscillation, g.
    pub motion_g: [f64; 6],
    pub gyro_dps: [f64; 6],
    pub cadence_hz: [f64; 6],
    /// Forward head tilt, degrees.
    pub pitch_deg: [f64; 6],
    /// Sensor mounting offsets (pitch, roll), degrees.
    pub mount_deg: (f64, f64),
    pub breathing_hz: f64,
    pub scr_per_min: [f64; 6],
    pub noise: NoiseSds,
    pub devices: Vec<Device>,
    /// EEG is large on disk, so the headband only carries it on request.
    pub include_eeg: bool,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            participant_id: "P01".into(),
            seed: 42,
            demographics: Demographics {
                age_years: Some(28.0),
                sex: Some(Sex::Male),
                height_cm: Some(178.0),
                weight_kg: Some(74.0),
            },
            rest_bpm: 65.0,
            bpm_per_met: 10.0,
            rest_vo2: 3.5,
            met_levels: [1.0, 1.2, 4.0, 5.5, 7.5, 9.5],
            motion_g: [0.005, 0.008, 0.06, 0.07, 0.35, 0.45],
            gyro_dps: [2.0, 3.0, 12.0, 14.0, 50.0, 60.0],
            cadence_hz: [0.25, 0.25, 1.1, 1.3, 2.6, 2.85],
            pitch_deg: [0.0, 0.0, 25.0, 25.0, 8.0, 10.0],
            mount_deg: (0.0, 0.0),
            breathing_hz: 0.22,
            scr_per_min: [1.0, 1.2, 1.8, 2.2, 2.6, 3.0],
            noise: NoiseSds::default(),
            devices: Device::WEARABLES.to_vec(),
            include_eeg: false,
        }
    }
}

impl SynthProfile {
    /// Draws participant `index` of a cohort; depends only on `(seed, index)`.
    pub fn random(index: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
        let rest_vo2 = u(3.2, 3.8);
        let rest1 = rest_vo2 / ML_O2_PER_MET;
        let rest2 = rest1 * u(1.1, 1.3);
        let cycle1 = u(3.0, 5.5);
        let cycle2 = cycle1 + u(1.0, 2.5);
        let run1 = cycle2 + u(0.5, 2.5);
        let run2 = run1 + u(1.0, 2.5);
        let motion = u(0.7, 1.3);
        let cadence = u(0.95, 1.05);
        let base = SynthProfile::default();
        let female = u(0.0, 1.0) < 5.0 / 17.0;
        let met_levels = [rest1, rest2, cycle1, cycle2, run1, run2];
        // Harder work moves the body harder and faster: motion scales with the
        // participant's own level relative to the reference profile.
        let effort: [f64; 6] = std::array::from_fn(|i| met_levels[i] / base.met_levels[i]);
        SynthProfile {
            participant_id: format!("P{:02}", index + 1),
            seed: seed.wrapping_add(index as u64 * 7919),
            demographics: Demographics {
                age_years: Some(u(20.0, 40.0).round()),
                sex: Some(if female { Sex::Female } else { Sex::Male }),
                height_cm: Some(if female { u(155.0, 178.0) } else { u(166.0, 192.0) }.round()),
                weight_kg: Some(if female { u(50.0, 75.0) } else { u(62.0, 95.0) }.round()),
            },
            rest_bpm: u(60.0, 70.0),
            bpm_per_met: u(9.5, 10.5),
            rest_vo2,
            met_levels,
            motion_g: std::array::from_fn(|i| base.motion_g[i] * motion * effort[i]),
            gyro_dps: std::array::from_fn(|i| base.gyro_dps[i] * motion * effort[i]),
            cadence_hz: std::array::from_fn(|i| base.cadence_hz[i] * cadence * effort[i].sqrt()),
            pitch_deg: base.pitch_deg.map(|p| p + u(-4.0, 4.0)),
            mount_deg: (u(-12.0, 12.0), u(-12.0, 12.0)),
            breathing_hz: u(0.18, 0.26),
            scr_per_min: base.scr_per_min.map(|r| r * u(0.7, 1.3)),
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("synth profile {}: {m}", self.participant_id)));
        if (self.met_levels[0] * ML_O2_PER_MET - self.rest_vo2).abs() > 1e-9 {
            return bad("first MET level must equal rest_vo2 / 3.5".into());
        }
        if self.met_levels.windows(2).any(|w| w[1] < w[0]) || self.met_levels[0] <= 0.0 {
            return bad(format!("MET levels must be positive and non-decreasing: {:?}", self.met_levels));
        }
        let peak_bpm = self.bpm_at(self.met_levels[5]);
        if self.rest_bpm < 45.0 || peak_bpm > 200.0 {
            return bad(format!("heart rate {}..{peak_bpm} bpm leaves the detectable range", self.rest_bpm));
        }
        if !(0.1..=0.4).contains(&self.breathing_hz) {
            return bad(format!("breathing {} Hz outside 0.1..0.4", self.breathing_hz));
        }
        let non_negative = self.motion_g.iter().chain(&self.gyro_dps).chain(&self.cadence_hz).chain(&self.scr_per_min);
        if non_negative.clone().any(|v| !(*v >= 0.0)) {
            return bad("motion, cadence and SCR rates must be non-negative".into());
        }
        Ok(())
    }

    fn bpm_at(&self, met: f64) -> f64 {
        self.rest_bpm + self.bpm_per_met * (met - self.met_levels[0])
    }

    fn breathing_at(&self, met: f64) -> f64 {
        (self.breathing_hz + 0.012 * (met - self.met_levels[0])).min(0.38)
    }
}

/// One generated skin-conductance response, in session seconds and µS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthScr {
    pub onset_s: f64,
    pub peak_s: f64,
    pub amplitude: f64,
}

/// Generator-side ground truth hidden from the recorded streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Systolic peak times at the ear.
    pub beats: Vec<f64>,
    /// Systolic peak times at the wrist.
    pub wrist_beats: Vec<f64>,
    pub scrs: Vec<SynthScr>,
    pub met_levels: [f64; 6],
}

fn interval_index(t: f64) -> usize {
    ((t / INTERVAL_S).floor().max(0.0) as usize).min(PROTOCOL.len() - 1)
}

/// Noise-free MET curve: levels joined by exponential onset transients.
fn met_curve(levels: &[f64; 6], t: f64) -> f64 {
    let mut value = levels[0];
    for (i, &level) in levels.iter().enumerate() {
        let start = i as f64 * INTERVAL_S;
        let end = start + INTERVAL_S;
        if t < end || i == levels.len() - 1 {
            return level + (value - level) * (-(t - start).max(0.0) / ONSET_TAU_S).exp();
        }
        value = level + (value - level) * (-INTERVAL_S / ONSET_TAU_S).exp();
    }
    value
}

fn stream_rng(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut h = seed ^ 0x51_7c_c1_b7_27_22_0a_95;
    for b in tag.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn quantize(v: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    (v * k).round() / k
}

fn grid(rate: f64) -> Vec<f64> {
    let n = (SESSION_S * rate).round() as usize;
    (0..n).map(|i| i as f64 / rate).collect()
}

fn series(kind: SensorKind, channels: &[&str], ts: Vec<f64>, values: Vec<Vec<f64>>, unit: Unit, rate: f64) -> TimeSeries {
    TimeSeries::new(
        kind,
        channels.iter().map(|c| c.to_string()).collect(),
        ts,
        values,
        unit,
        SampleRate::Hz(rate),
    )
    .expect("generator builds consistent series")
}

fn beat_train(p: &SynthProfile) -> Vec<f64> {
    let mut rng = stream_rng(p.seed, "beats");
    let jitter = Normal::new(0.0, 1.0).unwrap();
    // respiratory phase, integrated on a 0.1 s grid
    let step = 0.1;
    let mut phase = vec![0.0];
    for i in 1..=(SESSION_S / step) as usize + 20 {
        let t = i as f64 * step;
        let prev = phase[i - 1];
        phase.push(prev + 2.0 * PI * p.breathing_at(met_curve(&p.met_levels, t)) * step);
    }
    let phase_at = |t: f64| phase[((t / step) as usize).min(phase.len() - 1)];
    let mut beats = Vec::new();
    let mut t = 0.4;
    while t < SESSION_S {
        beats.push(t);
        let bpm = p.bpm_at(met_curve(&p.met_levels, t));
        let ibi = 60.0 / bpm;
        let rsa = 0.04 * (p.rest_bpm / bpm);
        t += ibi * (1.0 + rsa * phase_at(t).sin() + 0.012 * jitter.sample(&mut rng));
    }
    beats
}

/// Asymmetric Gaussian pair per beat: systolic peak at the beat time plus a
/// smaller diastolic wave. Widths scale with the following interval.
fn pulse_wave(beats: &[f64], ts: &[f64], delay: f64) -> Vec<f64> {
    let mut out = vec![0.0; ts.len()];
    let mut first = 0;
    for (i, &t) in ts.iter().enumerate() {
        while first < beats.len() && beats[first] + delay < t - 2.0 {
            first += 1;
        }
        let mut v = 0.0;
        for k in first..beats.len() {
            let tb = beats[k] + delay;
            if tb > t + 2.0 {
                break;
            }
            let ibi = beats.get(k + 1).map_or(0.8, |n| n - beats[k]).clamp(0.25, 1.5);
            let (s1, s2, d2) = (0.09 * ibi, 0.1 * ibi, 0.4 * ibi);
            let a = (t - tb) / s1;
            let b = (t - tb - d2) / s2;
            v += (-0.5 * a * a).exp() + 0.25 * (-0.5 * b * b).exp();
        }
        out[i] = v;
    }
    out
}

fn ppg_stream(p: &SynthProfile, beats: &[f64], delay: f64, artifact_gain: f64, tag: &str) -> TimeSeries {
    let mut rng = stream_rng(p.seed, tag);
    let noise = Normal::new(0.0, p.noise.ppg).unwrap();
    let ts = grid(PPG_HZ);
    let pulse = pulse_wave(beats, &ts, delay);
    let wander_phase = rng.gen_range(0.0..2.0 * PI);
    let values = ts
        .iter()
        .zip(&pulse)
        .map(|(&t, &v)| {
            let i = interval_index(t);
            let artifact = artifact_gain * p.motion_g[i] * (2.0 * PI * p.cadence_hz[i] * t).sin();
            let wander = 0.3 * (2.0 * PI * 0.03 * t + wander_phase).sin();
            quantize(500.0 + 100.0 * (v + wander + artifact + noise.sample(&mut rng)), 3)
        })
        .collect();
    series(SensorKind::Ppg, &["ppg"], ts, vec![values], Unit::Arbitrary, PPG_HZ)
}

/// Three-axis accelerometer in g: tilted gravity plus cadence-locked motion.
fn acc_g(p: &SynthProfile, rate: f64, gain: f64, tag: &str) -> (Vec<f64>, [Vec<f64>; 3]) {
    let mut rng = stream_rng(p.seed, tag);
    let noise = Normal::new(0.0, p.noise.acc_g).unwrap();
    let ts = grid(rate);
    let mut axes = [Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len())];
    let roll = p.mount_deg.1.to_radians();
    for &t in &ts {
        let i = interval_index(t);
        let pitch = (p.pitch_deg[i] + p.mount_deg.0).to_radians();
        let (a, w) = (gain * p.motion_g[i], 2.0 * PI * p.cadence_hz[i]);
        let g = [pitch.sin(), -pitch.cos() * roll.sin(), pitch.cos() * roll.cos()];
        let m = [0.3 * a * (w * t + 0.5).sin(), 0.4 * a * (0.5 * w * t).sin(), a * (w * t).sin()];
        for k in 0..3 {
            axes[k].push(g[k] + m[k] + noise.sample(&mut rng));
        }
    }
    (ts, axes)
}

fn gyro_dps(p: &SynthProfile, rate: f64, gain: f64, tag: &str) -> (Vec<f64>, [Vec<f64>; 3]) {
    let mut rng = stream_rng(p.seed, tag);
    let noise = Normal::new(0.0, p.noise.gyro_dps).unwrap();
    let ts = grid(rate);
    let mut axes = [Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len())];
    for &t in &ts {
        let i = interval_index(t);
        let (a, w) = (gain * p.gyro_dps[i], 2.0 * PI * p.cadence_hz[i]);
        let m = [a * (0.5 * w * t).sin(), 0.6 * a * (w * t + 1.0).sin(), 0.3 * a * (0.5 * w * t + 2.0).sin()];
        for k in 0..3 {
            axes[k].push(m[k] + noise.sample(&mut rng));
        }
    }
    (ts, axes)
}

fn scaled(axes: [Vec<f64>; 3], k: f64, decimals: i32) -> Vec<Vec<f64>> {
    axes.into_iter()
        .map(|ch| ch.into_iter().map(|v| quantize(v * k, decimals)).collect())
        .collect()
}

fn scr_schedule(p: &SynthProfile) -> Vec<SynthScr> {
    let mut rng = stream_rng(p.seed, "scr");
    let mut out = Vec::new();
    let mut t = 5.0;
    loop {
        let rate = p.scr_per_min[interval_index(t)] / 60.0;
        if rate <= 0.0 {
            t += INTERVAL_S;
        } else {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            t += SCR_REFRACTORY_S - u.ln() / rate;
        }
        // keep the full bump and its recovery inside the record
        if t > SESSION_S - 20.0 {
            break;
        }
        out.push(SynthScr {
            onset_s: t,
            peak_s: t + SCR_RISE_S,
            amplitude: rng.gen_range(0.2..0.8),
        });
    }
    out
}

fn scr_shape(dt: f64) -> f64 {
    if dt <= 0.0 {
        0.0
    } else if dt < SCR_RISE_S {
        0.5 * (1.0 - (PI * dt / SCR_RISE_S).cos())
    } else {
        let decay = (-(dt - SCR_RISE_S) / SCR_DECAY_S).exp();
        let u = (dt - SCR_RISE_S) / SCR_SHOULDER_S;
        if u < 1.0 {
            let c = 0.5 * (1.0 + (PI * u).cos());
            c + (1.0 - c) * decay
        } else {
            decay
        }
    }
}

fn eda_stream(p: &SynthProfile, scrs: &[SynthScr]) -> TimeSeries {
    let mut rng = stream_rng(p.seed, "eda");
    let noise = Normal::new(0.0, p.noise.eda_us).unwrap();
    let base = rng.gen_range(2.0..8.0);
    let ts = grid(EE4_SLOW_HZ);
    let mut first = 0;
    let values = ts
        .iter()
        .map(|&t| {
            let load = met_curve(&p.met_levels, t) - p.met_levels[0];
            let tonic = base + 0.08 * load + 0.2 * (2.0 * PI * t / 1500.0).sin();
            while first < scrs.len() && scrs[first].onset_s < t - 60.0 {
                first += 1;
            }
            let phasic: f64 = scrs[first..]
                .iter()
                .take_while(|s| s.onset_s <= t)
                .map(|s| s.amplitude * scr_shape(t - s.onset_s))
                .sum();
            quantize(tonic + phasic + noise.sample(&mut rng), 4)
        })
        .collect();
    series(SensorKind::Eda, &["eda"], ts, vec![values], Unit::MicroSiemens, EE4_SLOW_HZ)
}

fn temp_stream(p: &SynthProfile) -> TimeSeries {
    let mut rng = stream_rng(p.seed, "temp");
    let noise = Normal::new(0.0, 0.02).unwrap();
    let base = rng.gen_range(32.0..34.0);
    let ts = grid(EE4_SLOW_HZ);
    let values = ts
        .iter()
        .map(|&t| quantize(base - 0.05 * (met_curve(&p.met_levels, t) - p.met_levels[0]) + noise.sample(&mut rng), 3))
        .collect();
    series(SensorKind::Temp, &["temp"], ts, vec![values], Unit::Celsius, EE4_SLOW_HZ)
}

/// Pink background (Kellet filter) plus an alpha tone that fades with load.
fn eeg_stream(p: &SynthProfile) -> TimeSeries {
    let ts = grid(EEG_HZ);
    let channels = SensorKind::Eeg.default_channels();
    let values = channels
        .iter()
        .map(|ch| {
            let mut rng = stream_rng(p.seed, &format!("eeg.{ch}"));
            let white = Normal::new(0.0, 1.0).unwrap();
            let noise = Normal::new(0.0, p.noise.eeg_uv).unwrap();
            let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
            let alpha_phase = rng.gen_range(0.0..2.0 * PI);
            ts.iter()
                .map(|&t| {
                    let w = white.sample(&mut rng);
                    b0 = 0.99765 * b0 + w * 0.099_046;
                    b1 = 0.963 * b1 + w * 0.296_516_4;
                    b2 = 0.57 * b2 + w * 1.052_691_3;
                    let pink = b0 + b1 + b2 + w * 0.1848;
                    let load = met_curve(&p.met_levels, t) - p.met_levels[0];
                    let alpha = 8.0 / (1.0 + 0.3 * load) * (2.0 * PI * 10.0 * t + alpha_phase).sin();
                    quantize(6.0 * pink + alpha + noise.sample(&mut rng), 2)
                })
                .collect()
        })
        .collect();
    series(SensorKind::Eeg, channels, ts, values, Unit::MicroVolt, EEG_HZ)
}

fn summary_streams(p: &SynthProfile) -> [TimeSeries; 2] {
    let mut rng = stream_rng(p.seed, "zbh.summary");
    let hr_noise = Normal::new(0.0, p.noise.hr_bpm).unwrap();
    let br_noise = Normal::new(0.0, 0.5).unwrap();
    let ts = grid(SUMMARY_HZ);
    let (mut hr, mut br) = (Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len()));
    for &t in &ts {
        let met = met_curve(&p.met_levels, t);
        hr.push(quantize(p.bpm_at(met) + hr_noise.sample(&mut rng), 1));
        br.push(quantize(60.0 * p.breathing_at(met) + br_noise.sample(&mut rng), 1));
    }
    [
        series(SensorKind::HrSummary, &["hr"], ts.clone(), vec![hr], Unit::Bpm, SUMMARY_HZ),
        series(SensorKind::BrSummary, &["br"], ts, vec![br], Unit::BreathsPerMin, SUMMARY_HZ),
    ]
}

fn vo2_stream(p: &SynthProfile) -> TimeSeries {
    let mut rng = stream_rng(p.seed, "vo2");
    let noise = Normal::new(0.0, p.noise.vo2).unwrap();
    let ts = grid(SUMMARY_HZ);
    let values = ts
        .iter()
        .map(|&t| quantize((ML_O2_PER_MET * met_curve(&p.met_levels, t) + noise.sample(&mut rng)).max(0.0), 3))
        .collect();
    series(SensorKind::Vo2, &["vo2"], ts, vec![values], Unit::MlPerKgPerMin, SUMMARY_HZ)
}

fn device_streams(p: &SynthProfile, device: Device, beats: &[f64], scrs: &[SynthScr]) -> Vec<TimeSeries> {
    let xyz = SensorKind::Acc.default_channels();
    match device {
        Device::Nbl => {
            let (ts, acc) = acc_g(p, NBL_IMU_HZ, 1.0, "nbl.acc");
            let (gts, gyro) = gyro_dps(p, NBL_IMU_HZ, 1.0, "nbl.gyro");
            vec![
                series(SensorKind::Acc, xyz, ts, scaled(acc, 1000.0, 1), Unit::MilliG, NBL_IMU_HZ),
                series(SensorKind::Gyro, xyz, gts, scaled(gyro, 1.0, 2), Unit::DegPerSec, NBL_IMU_HZ),
                ppg_stream(p, beats, 0.0, 0.1, "nbl.ppg"),
            ]
        }
        Device::Ee4 => {
            let (ts, acc) = acc_g(p, EE4_ACC_HZ, 2.5, "ee4.acc");
            vec![
                series(SensorKind::Acc, xyz, ts, scaled(acc, 64.0, 0), Unit::GOver64, EE4_ACC_HZ),
                ppg_stream(p, beats, WRIST_DELAY_S, 0.8, "ee4.ppg"),
                eda_stream(p, scrs),
                temp_stream(p),
            ]
        }
        Device::Msh => {
            let (ts, acc) = acc_g(p, MSH_IMU_HZ, 1.0, "msh.acc");
            let (gts, gyro) = gyro_dps(p, MSH_IMU_HZ, 1.0, "msh.gyro");
            let mut out = vec![
                series(SensorKind::Acc, xyz, ts, scaled(acc, 1.0, 4), Unit::G, MSH_IMU_HZ),
                series(SensorKind::Gyro, xyz, gts, scaled(gyro, PI / 180.0, 5), Unit::RadPerSec, MSH_IMU_HZ),
            ];
            if p.include_eeg {
                out.push(eeg_stream(p));
            }
            out
        }
        Device::Zbh => {
            let (ts, acc) = acc_g(p, ZBH_ACC_HZ, 1.5, "zbh.acc");
            let [hr, br] = summary_streams(p);
            vec![series(SensorKind::Acc, xyz, ts, scaled(acc, 1.0, 4), Unit::G, ZBH_ACC_HZ), hr, br]
        }
        Device::Vo2Master => vec![vo2_stream(p)],
    }
}

/// Session in device-native units plus the hidden ground truth.
pub fn generate_session_with_truth(profile: &SynthProfile) -> Result<(Session, GroundTruth)> {
    profile.validate()?;
    let beats = beat_train(profile);
    let scrs = scr_schedule(profile);
    let mut devices = profile.devices.clone();
    devices.retain(|d| *d != Device::Vo2Master);
    devices.push(Device::Vo2Master);
    devices.sort();
    devices.dedup();
    let streams: Vec<(Device, Vec<TimeSeries>)> = devices
        .par_iter()
        .map(|&d| (d, device_streams(profile, d, &beats, &scrs)))
        .collect();
    let met_series = met_series_from_vo2(&streams.iter().find(|(d, _)| *d == Device::Vo2Master).unwrap().1[0])?;
    let activities = PROTOCOL
        .iter()
        .enumerate()
        .map(|(i, &(activity, intensity))| ActivityInterval {
            activity,
            intensity,
            start_s: i as f64 * INTERVAL_S,
            end_s: (i + 1) as f64 * INTERVAL_S,
        })
        .collect();
    let session = Session {
        participant_id: profile.participant_id.clone(),
        epoch_s: None,
        demographics: profile.demographics.clone(),
        streams: streams.into_iter().collect(),
        activities,
        met_series,
        trimmed_s: 0.0,
    };
    let wrist_beats = beats.iter().map(|b| b + WRIST_DELAY_S).collect();
    let truth = GroundTruth {
        beats,
        wrist_beats,
        scrs: if profile.devices.contains(&Device::Ee4) { scrs } else { Vec::new() },
        met_levels: profile.met_levels,
    };
    Ok((session, truth))
}

pub fn generate_session(profile: &SynthProfile) -> Result<Session> {
    generate_session_with_truth(profile).map(|(s, _)| s)
}

pub fn cohort_profiles(n: usize, seed: u64) -> Result<Vec<SynthProfile>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("a cohort needs at least 2 participants, got {n}")));
    }
    Ok((0..n).map(|i| SynthProfile::random(i, seed)).collect())
}

pub fn generate_cohort_with_truth(profiles: &[SynthProfile]) -> Result<Vec<(Session, GroundTruth)>> {
    profiles.par_iter().map(generate_session_with_truth).collect()
}

pub fn generate_cohort(n: usize, seed: u64) -> Result<Vec<Session>> {
    let profiles = cohort_profiles(n, seed)?;
    profiles.par_iter().map(generate_session).collect()
}

/// Writes one ingest-format directory per session, named by participant id.
pub fn write_cohort(sessions: &[Session], root: &Path) -> Result<()> {
    sessions
        .par_iter()
        .map(|s| write_session(s, &root.join(&s.participant_id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{canonicalize_session, load_session, trim_activity_boundaries};

    fn nbl_only() -> SynthProfile {
        SynthProfile {
            devices: vec![Device::Nbl],
            ..Default::default()
        }
    }

    fn core_mean_met(s: &Session, interval: usize) -> f64 {
        let trimmed = trim_activity_boundaries(s, 60.0);
        let a = &trimmed.activities[interval];
        let r = s.met_series.index_range(a.start_s, a.end_s);
        let v = &s.met_series.channel(0)[r];
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn deterministic() {
        let a = generate_session_with_truth(&nbl_only()).unwrap();
        let b = generate_session_with_truth(&nbl_only()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn protocol_layout() {
        let s = generate_session(&nbl_only()).unwrap();
        assert_eq!(s.activities.len(), 6);
        assert_eq!(s.activities[5].end_s, SESSION_S);
        assert_eq!(s.stream(Device::Nbl, SensorKind::Acc).unwrap().unit, Unit::MilliG);
        assert!(s.stream(Device::Ee4, SensorKind::Eda).is_none());
        assert!(crate::model::validate_session(&s).is_empty());
    }

    #[test]
    fn rest_core_is_one_met() {
        let s = generate_session(&nbl_only()).unwrap();
        // 180 samples at 0.1 MET noise sd
        assert!((core_mean_met(&s, 0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn met_rises_through_protocol() {
        let s = generate_session(&nbl_only()).unwrap();
        assert!(core_mean_met(&s, 5) > core_mean_met(&s, 2));
        for p in cohort_profiles(17, 9).unwrap() {
            assert!(p.validate().is_ok());
        }
    }

    #[test]
    fn met_series_is_vo2_over_3_5() {
        let s = generate_session(&nbl_only()).unwrap();
        let vo2 = s.stream(Device::Vo2Master, SensorKind::Vo2).unwrap();
        for (v, m) in vo2.channel(0).iter().zip(s.met_series.channel(0)) {
            assert_eq!(crate::ingest::vo2_to_met(*v).unwrap(), *m);
        }
    }

    #[test]
    fn onset_transient_is_continuous() {
        let levels = SynthProfile::default().met_levels;
        for i in 1..6 {
            let b = i as f64 * INTERVAL_S;
            assert!((met_curve(&levels, b - 1e-9) - met_curve(&levels, b)).abs() < 1e-6);
        }
        let one_tau = met_curve(&levels, 600.0 + ONSET_TAU_S);
        let start = met_curve(&levels, 600.0);
        assert!(((one_tau - levels[2]) / (start - levels[2]) - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn cohort_shape_and_seeds() {
        let a = cohort_profiles(17, 1).unwrap();
        assert_eq!(a.len(), 17);
        assert_eq!(a, cohort_profiles(17, 1).unwrap());
        let b = cohort_profiles(17, 2).unwrap();
        assert_ne!(a[0].rest_bpm, b[0].rest_bpm);
        assert!(cohort_profiles(1, 1).is_err());
        let ids: Vec<_> = a.iter().map(|p| p.participant_id.as_str()).collect();
        assert_eq!(ids[0], "P01");
        assert_eq!(ids[16], "P17");
    }

    #[test]
    fn invalid_profile_rejected() {
        let mut p = SynthProfile::default();
        p.met_levels[3] = 2.0;
        assert!(generate_session(&p).is_err());
        let mut p = SynthProfile::default();
        p.rest_vo2 = 4.0;
        assert!(generate_session(&p).is_err());
    }

    #[test]
    fn disk_round_trip_matches_canonical_session() {
        let p = SynthProfile {
            include_eeg: false,
            ..Default::default()
        };
        let s = generate_session(&p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_session(&s, dir.path()).unwrap();
        let back = load_session(dir.path()).unwrap();
        assert_eq!(back, canonicalize_session(&s).unwrap());
    }

    #[test]
    fn scr_schedule_respects_refractory_gap() {
        let (_, truth) = generate_session_with_truth(&SynthProfile::default()).unwrap();
        assert!(truth.scrs.len() > 20);
        for w in truth.scrs.windows(2) {
            assert!(w[1].onset_s - w[0].onset_s >= SCR_REFRACTORY_S);
        }
    }

    #[test]
    fn beats_follow_heart_rate() {
        let (_, truth) = generate_session_with_truth(&nbl_only()).unwrap();
        let rate = |t0: f64, t1: f64| truth.beats.iter().filter(|&&b| b >= t0 && b < t1).count() as f64 * 60.0 / (t1 - t0);
        assert!((rate(100.0, 280.0) - 65.0).abs() < 2.0);
        assert!((rate(1620.0, 1780.0) - (65.0 + 10.0 * 8.5)).abs() < 3.0);
    }
}
