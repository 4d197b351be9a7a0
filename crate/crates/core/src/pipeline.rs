//! End-to-end orchestration: prepared sessions to feature matrices to
//! leave-one-participant-out reports, and one-axis configuration sweeps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{canonicalize_session, trim_activity_boundaries};
use crate::ml::{
    design_matrix, fit_pipeline, loso_cv, loso_cv_with_roster, CvOutcome, ModelKind, PipelineSpec, SearchSettings,
    TrainedPipeline,
};
use crate::model::{ConfigDescriptor, Device, EvalReport, FeatureMatrix, SensorKind, Session};
use crate::windowing::{
    build_matrix, featurize_sessions, FeaturizeConfig, MatrixMeta, SensorSet, WindowSpec, STANDARD_WIDTHS_S,
};

pub const DEFAULT_TRIM_S: f64 = 60.0;

/// Canonical units plus boundary trimming, ready for windowing.
pub fn prepare_sessions(raw: &[Session], trim_s: f64) -> Result<Vec<Session>> {
    raw.iter()
        .map(|s| Ok(trim_activity_boundaries(&canonicalize_session(s)?, trim_s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub device: Device,
    pub sensors: SensorSet,
    pub width_s: f64,
    pub model: ModelKind,
    pub seed: u64,
    pub featurize: FeaturizeConfig,
    /// Search settings for boosting; `None` fits the default parameters.
    pub search: Option<SearchSettings>,
}

impl ExperimentConfig {
    /// Earbud ACC+GYRO+PPG, 6 s windows, boosting with the default search.
    pub fn new(device: Device, sensors: SensorSet, width_s: f64, model: ModelKind, seed: u64) -> Self {
        ExperimentConfig {
            device,
            sensors,
            width_s,
            model,
            seed,
            featurize: FeaturizeConfig::default(),
            search: Some(SearchSettings::default()),
        }
    }

    pub fn window_spec(&self) -> Result<WindowSpec> {
        if STANDARD_WIDTHS_S.contains(&self.width_s) {
            WindowSpec::standard(self.width_s)
        } else {
            WindowSpec::new(self.width_s, self.width_s, 0.8)
        }
    }

    pub fn pipeline_spec(&self) -> PipelineSpec {
        let mut spec = PipelineSpec::new(self.model, self.seed);
        if self.model == ModelKind::Gbdt {
            spec.search = self.search.clone();
        }
        spec
    }

    pub fn descriptor(&self) -> ConfigDescriptor {
        ConfigDescriptor {
            device: self.device.as_str().to_string(),
            sensors: self.sensors.to_string(),
            width_s: self.width_s,
            model: self.model.as_str().to_string(),
            seed: self.seed,
        }
    }

    pub fn matrix_meta(&self) -> MatrixMeta {
        [
            ("device", self.device.as_str().to_string()),
            ("sensors", self.sensors.to_string()),
            ("width_s", format!("{}", self.width_s)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Featurized matrix for one (device, sensors, width) over prepared sessions.
pub fn build_feature_matrix(sessions: &[Session], cfg: &ExperimentConfig) -> Result<FeatureMatrix> {
    let spec = cfg.window_spec()?;
    let windows = featurize_sessions(sessions, cfg.device, &cfg.sensors, &spec, &cfg.featurize);
    if windows.is_empty() {
        return Err(Error::Insufficient(format!(
            "no windows for device {} with sensors {} at {} s",
            cfg.device, cfg.sensors, cfg.width_s
        )));
    }
    build_matrix(&windows, &cfg.sensors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub outcome: CvOutcome,
}

pub fn evaluate_matrix(
    matrix: &FeatureMatrix,
    descriptor: ConfigDescriptor,
    spec: &PipelineSpec,
    roster: Option<&[String]>,
) -> Result<Evaluation> {
    let outcome = match roster {
        Some(r) => loso_cv_with_roster(matrix, spec, r)?,
        None => loso_cv(matrix, spec)?,
    };
    let report = outcome.clone().into_report(descriptor, matrix.dropped_rows);
    Ok(Evaluation { report, outcome })
}

/// The deployable model: the same pipeline fitted on every row.
pub fn fit_final_model(matrix: &FeatureMatrix, spec: &PipelineSpec) -> Result<TrainedPipeline> {
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    let x = design_matrix(matrix, &rows);
    fit_pipeline(&x, &matrix.targets, &matrix.participants, &matrix.names, spec, spec.seed)
}

/// Featurize then evaluate; every session's participant gets a fold or is
/// reported as skipped.
pub fn run_experiment(sessions: &[Session], cfg: &ExperimentConfig) -> Result<Evaluation> {
    let matrix = build_feature_matrix(sessions, cfg)?;
    let roster: Vec<String> = sessions.iter().map(|s| s.participant_id.clone()).collect();
    evaluate_matrix(&matrix, cfg.descriptor(), &cfg.pipeline_spec(), Some(&roster))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareAxis {
    Device,
    Sensors,
    Width,
    Model,
}

impl CompareAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareAxis::Device => "device",
            CompareAxis::Sensors => "sensors",
            CompareAxis::Width => "width",
            CompareAxis::Model => "model",
        }
    }

    /// Values swept when none are given.
    pub fn default_values(self) -> Vec<String> {
        let v: Vec<&str> = match self {
            CompareAxis::Device => vec!["NBL", "EE4", "MSH", "ZBH"],
            CompareAxis::Sensors => vec!["acc", "ppg", "acc+gyro+ppg"],
            CompareAxis::Width => vec!["2", "4", "6", "8", "10", "12"],
            CompareAxis::Model => vec!["linreg", "gbdt"],
        };
        v.into_iter().map(String::from).collect()
    }
}

impl fmt::Display for CompareAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompareAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "device" | "devices" => Ok(CompareAxis::Device),
            "sensors" | "sensor" => Ok(CompareAxis::Sensors),
            "width" | "widths" => Ok(CompareAxis::Width),
            "model" | "models" => Ok(CompareAxis::Model),
            _ => Err(Error::Unknown {
                what: "comparison axis",
                value: s.to_string(),
            }),
        }
    }
}

/// Sensors of `device` present in every session; the device axis evaluates
/// each device on everything it recorded.
pub fn device_sensor_set(sessions: &[Session], device: Device) -> Result<SensorSet> {
    let kinds: Vec<SensorKind> = device
        .sensors()
        .iter()
        .copied()
        .filter(|k| sessions.iter().all(|s| s.stream(device, *k).is_some()))
        .collect();
    if kinds.is_empty() {
        return Err(Error::Insufficient(format!("no session carries streams for device {device}")));
    }
    SensorSet::new(kinds)
}

/// The configuration obtained by setting `axis` to `value` on `base`.
pub fn configure(base: &ExperimentConfig, axis: CompareAxis, value: &str, sessions: &[Session]) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match axis {
        CompareAxis::Device => {
            cfg.device = value.parse()?;
            cfg.sensors = device_sensor_set(sessions, cfg.device)?;
        }
        CompareAxis::Sensors => cfg.sensors = value.parse()?,
        CompareAxis::Width => {
            cfg.width_s = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("window width {value:?} is not a number")))?;
            cfg.window_spec()?;
        }
        CompareAxis::Model => cfg.model = value.parse()?,
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub value: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub axis: CompareAxis,
    /// Sorted by pooled MAE, ties in sweep order.
    pub rows: Vec<ComparisonRow>,
}

/// One experiment per axis value. Matrices are shared between values that
/// only change the model.
pub fn compare(sessions: &[Session], base: &ExperimentConfig, axis: CompareAxis, values: &[String]) -> Result<Comparison> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("no {axis} values to compare")));
    }
    let configs = values
        .iter()
        .map(|v| configure(base, axis, v, sessions))
        .collect::<Result<Vec<_>>>()?;
    let roster: Vec<String> = sessions.iter().map(|s| s.participant_id.clone()).collect();
    let shared = if axis == CompareAxis::Model {
        Some(build_feature_matrix(sessions, base)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(configs.len());
    for (value, cfg) in values.iter().zip(&configs) {
        log::info!("comparing {axis}={value}");
        let own;
        let matrix = match &shared {
            Some(m) => m,
            None => {
                own = build_feature_matrix(sessions, cfg)?;
                &own
            }
        };
        let eval = evaluate_matrix(matrix, cfg.descriptor(), &cfg.pipeline_spec(), Some(&roster))?;
        rows.push(ComparisonRow {
            value: value.trim().to_string(),
            report: eval.report,
        });
    }
    rows.sort_by(|a, b| a.report.pooled.mae.total_cmp(&b.report.pooled.mae));
    Ok(Comparison { axis, rows })
}
