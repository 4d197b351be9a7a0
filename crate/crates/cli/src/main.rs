//! `eee`: synthesize cohorts, featurize sessions, evaluate MET regressors and
//! compare configurations.
//!
//! Every failure prints exactly one line, `error: <kind>: <message>`, to
//! stderr. Usage errors exit with 2, all other failures with 1.

mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eee_core::ingest::load_sessions_dir;
use eee_core::ml::{save_model, ModelKind, PipelineSpec, SearchSettings};
use eee_core::model::{ConfigDescriptor, Device, Session};
use eee_core::pipeline::{
    build_feature_matrix, compare, evaluate_matrix, fit_final_model, prepare_sessions, CompareAxis, ExperimentConfig,
    DEFAULT_TRIM_S,
};
use eee_core::report::{comparison_summary, summary_line, write_comparison_csv, write_comparison_svg, write_report_csv};
use eee_core::synth::{cohort_profiles, generate_cohort_with_truth, write_cohort};
use eee_core::windowing::{read_matrix_csv_with_meta, write_matrix_csv_with_meta, SensorSet, STANDARD_WIDTHS_S};

use config::ConfigFile;

pub const JOBS_ENV: &str = "EEE_JOBS";

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub usage: bool,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: "usage".into(),
            message: message.into(),
            usage: true,
        }
    }

    fn exit_code(&self) -> ExitCode {
        ExitCode::from(if self.usage { 2 } else { 1 })
    }
}

impl From<eee_core::Error> for CliError {
    fn from(e: eee_core::Error) -> Self {
        CliError {
            kind: e.kind().to_string(),
            message: e.to_string(),
            usage: false,
        }
    }
}

impl fmt::Display for CliError {
    /// Always a single line so callers can parse it.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error: {}: {}", self.kind, msg)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "eee", version, about = "Energy-expenditure estimation from wearable sensor recordings")]
struct Cli {
    /// Worker threads; defaults to the EEE_JOBS environment variable, then all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Plain-text `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress to stderr (-vv for debug detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a deterministic synthetic cohort in the ingest format.
    Synth(SynthArgs),
    /// Trim, window and featurize sessions into a feature-matrix CSV.
    Featurize(FeaturizeArgs),
    /// Leave-one-participant-out evaluation of a feature matrix.
    Evaluate(EvaluateArgs),
    /// Sweep one configuration axis and rank the values by pooled MAE.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Number of participants [default: 17]
    #[arg(long)]
    participants: Option<usize>,
    /// Cohort seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; one subdirectory per participant.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated devices to emit [default: all wearables plus VO2]
    #[arg(long)]
    devices: Option<String>,
    /// Also emit headband EEG.
    #[arg(long)]
    eeg: bool,
}

/// Options shared by featurize and compare.
#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Directory of session subdirectories.
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// NBL, EE4, MSH or ZBH [default: NBL]
    #[arg(long)]
    device: Option<String>,
    /// Sensor set such as acc+gyro+ppg [default: acc+gyro+ppg]
    #[arg(long)]
    sensors: Option<String>,
    /// Window width in seconds [default: 6]
    #[arg(long)]
    width: Option<f64>,
    /// Comma-separated widths allowed in place of 2,4,6,8,10,12.
    #[arg(long)]
    widths: Option<String>,
    /// Seconds dropped at each end of every activity interval [default: 60]
    #[arg(long)]
    trim: Option<f64>,
}

#[derive(Args, Debug)]
struct FeaturizeArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Output feature-matrix CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// mean, linreg or gbdt [default: gbdt]
    #[arg(long)]
    model: Option<String>,
    /// Seed for search and boosting [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Random-search candidates per fold for gbdt [default: 50]
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Feature-matrix CSV written by `featurize`.
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Report CSV: one row per fold plus a pooled row.
    #[arg(long)]
    report: PathBuf,
    /// Also fit on every row and save the model here.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// device, sensors, width or model.
    #[arg(long)]
    by: Option<String>,
    /// Comma-separated values; `;` also separates, for sensor sets with commas.
    #[arg(long)]
    values: Option<String>,
    #[command(flatten)]
    exp: ExperimentArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comparison CSV, sorted by pooled MAE.
    #[arg(long)]
    out: PathBuf,
    /// SVG bar chart [default: the CSV path with an .svg extension]
    #[arg(long)]
    chart: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn resolve_jobs(flag: Option<usize>, cfg: &ConfigFile) -> CliResult<Option<usize>> {
    let env = std::env::var(JOBS_ENV).ok().filter(|v| !v.trim().is_empty());
    let jobs = match cfg.resolve(flag, "jobs")? {
        Some(j) => Some(j),
        None => match env {
            Some(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::usage(format!("{JOBS_ENV}={v:?} is not a thread count")))?,
            ),
            None => None,
        },
    };
    if jobs == Some(0) {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    Ok(jobs)
}

fn split_list(s: &str) -> Vec<String> {
    let sep = if s.contains(';') { ';' } else { ',' };
    s.split(sep).map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect()
}

fn parse_widths(s: &str) -> CliResult<Vec<f64>> {
    let widths: Vec<f64> = split_list(s)
        .iter()
        .map(|w| w.parse::<f64>().ok().filter(|w| *w > 0.0))
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::usage(format!("--widths {s:?} must be positive numbers")))?;
    if widths.is_empty() {
        return Err(CliError::usage("--widths is empty"));
    }
    Ok(widths)
}

fn check_width(width: f64, allowed: &[f64]) -> CliResult<()> {
    if allowed.contains(&width) {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "window width {width} s is not one of {allowed:?} (use --widths to allow others)"
        )))
    }
}

struct Experiment {
    sessions: Vec<Session>,
    config: ExperimentConfig,
    allowed_widths: Vec<f64>,
}

fn resolve_experiment(exp: &ExperimentArgs, model: Option<&ModelArgs>, cfg: &ConfigFile) -> CliResult<Experiment> {
    let dir: PathBuf = cfg
        .resolve(exp.sessions.clone().map(|p| p.display().to_string()), "sessions")?
        .map(PathBuf::from)
        .ok_or_else(|| CliError::usage("--sessions is required"))?;
    let device: Device = cfg.resolve_or(exp.device.clone(), "device", "NBL".into())?.parse::<Device>()?;
    let sensors: SensorSet = cfg
        .resolve_or(exp.sensors.clone(), "sensors", "acc+gyro+ppg".into())?
        .parse::<SensorSet>()?;
    let width = cfg.resolve_or(exp.width, "width", 6.0)?;
    let allowed_widths = match cfg.resolve(exp.widths.clone(), "widths")? {
        Some(w) => parse_widths(&w)?,
        None => STANDARD_WIDTHS_S.to_vec(),
    };
    check_width(width, &allowed_widths)?;
    let trim = cfg.resolve_or(exp.trim, "trim", DEFAULT_TRIM_S)?;
    if !(trim >= 0.0) {
        return Err(CliError::usage("--trim must be >= 0"));
    }
    let (kind, seed, search) = match model {
        Some(m) => resolve_model(m, cfg)?,
        None => (ModelKind::Gbdt, 42, Some(SearchSettings::default())),
    };
    let mut config = ExperimentConfig::new(device, sensors, width, kind, seed);
    config.search = search;
    let raw = load_sessions_dir(&dir)?;
    log::info!("loaded {} sessions from {}", raw.len(), dir.display());
    let sessions = prepare_sessions(&raw, trim)?;
    Ok(Experiment {
        sessions,
        config,
        allowed_widths,
    })
}

fn resolve_model(m: &ModelArgs, cfg: &ConfigFile) -> CliResult<(ModelKind, u64, Option<SearchSettings>)> {
    let kind: ModelKind = cfg.resolve_or(m.model.clone(), "model", "gbdt".into())?.parse()?;
    let seed = cfg.resolve_or(m.seed, "seed", 42)?;
    let budget = cfg.resolve_or(m.budget, "budget", SearchSettings::default().budget)?;
    if budget == 0 {
        return Err(CliError::usage("--budget must be at least 1"));
    }
    Ok((
        kind,
        seed,
        Some(SearchSettings {
            budget,
            ..Default::default()
        }),
    ))
}

fn cmd_synth(a: &SynthArgs, cfg: &ConfigFile) -> CliResult<()> {
    let n = cfg.resolve_or(a.participants, "participants", 17)?;
    let seed = cfg.resolve_or(a.seed, "seed", 42)?;
    let eeg = a.eeg || cfg.resolve_or(None, "eeg", false)?;
    let devices = cfg
        .resolve(a.devices.clone(), "devices")?
        .map(|d| split_list(&d).iter().map(|s| s.parse::<Device>()).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    if devices.as_ref().is_some_and(|d| d.is_empty()) {
        return Err(CliError::usage("--devices is empty"));
    }
    let mut profiles = cohort_profiles(n, seed)?;
    for p in &mut profiles {
        if let Some(d) = &devices {
            p.devices = d.clone();
        }
        p.include_eeg = eeg;
    }
    let sessions: Vec<Session> = generate_cohort_with_truth(&profiles)?.into_iter().map(|(s, _)| s).collect();
    write_cohort(&sessions, &a.out)?;
    println!("wrote {} sessions to {}", sessions.len(), a.out.display());
    Ok(())
}

fn cmd_featurize(a: &FeaturizeArgs, cfg: &ConfigFile) -> CliResult<()> {
    let exp = resolve_experiment(&a.exp, None, cfg)?;
    let m = build_feature_matrix(&exp.sessions, &exp.config)?;
    let mut meta = exp.config.matrix_meta();
    let roster: Vec<&str> = exp.sessions.iter().map(|s| s.participant_id.as_str()).collect();
    meta.insert("participants".into(), roster.join(";"));
    write_matrix_csv_with_meta(&a.out, &m, &meta)?;
    println!(
        "wrote {} windows x {} features ({} dropped) to {}",
        m.n_rows(),
        m.n_cols(),
        m.dropped_rows,
        a.out.display()
    );
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, cfg: &ConfigFile) -> CliResult<()> {
    let (kind, seed, search) = resolve_model(&a.model, cfg)?;
    let (matrix, meta) = read_matrix_csv_with_meta(&a.features)?;
    let field = |k: &str| meta.get(k).cloned().unwrap_or_else(|| "unknown".into());
    let descriptor = ConfigDescriptor {
        device: field("device"),
        sensors: field("sensors"),
        width_s: meta.get("width_s").and_then(|w| w.parse().ok()).unwrap_or(f64::NAN),
        model: kind.as_str().into(),
        seed,
    };
    let mut spec = PipelineSpec::new(kind, seed);
    if kind == ModelKind::Gbdt {
        spec.search = search;
    }
    let roster: Option<Vec<String>> = meta
        .get("participants")
        .map(|p| p.split(';').filter(|s| !s.is_empty()).map(String::from).collect());
    let eval = evaluate_matrix(&matrix, descriptor, &spec, roster.as_deref())?;
    write_report_csv(&a.report, &eval.report)?;
    let p = &eval.report.pooled;
    println!("{}", summary_line(&eval.report));
    println!(
        "pooled MAE={} RMSE={} R2={}",
        p.mae,
        p.rmse,
        p.r2.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into())
    );
    if !eval.report.skipped.is_empty() {
        println!("skipped participants without rows: {}", eval.report.skipped.join(", "));
    }
    if let Some(path) = &a.model_out {
        let model = fit_final_model(&matrix, &spec)?;
        save_model(&model, path)?;
        println!("saved model to {}", path.display());
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs, cfg: &ConfigFile) -> CliResult<()> {
    let axis: CompareAxis = cfg
        .resolve(a.by.clone(), "by")?
        .ok_or_else(|| CliError::usage("--by is required (device, sensors, width or model)"))?
        .parse()
        .map_err(|e: eee_core::Error| CliError::usage(e.to_string()))?;
    let values = match cfg.resolve(a.values.clone(), "values")? {
        Some(v) => split_list(&v),
        None => axis.default_values(),
    };
    if values.is_empty() {
        return Err(CliError {
            kind: "invalid_input".into(),
            message: format!("no {axis} values to compare"),
            usage: false,
        });
    }
    let exp = resolve_experiment(&a.exp, Some(&a.model), cfg)?;
    if axis == CompareAxis::Width {
        for v in &values {
            let w: f64 = v
                .parse()
                .map_err(|_| CliError::usage(format!("width {v:?} is not a number")))?;
            check_width(w, &exp.allowed_widths)?;
        }
    }
    let result = compare(&exp.sessions, &exp.config, axis, &values)?;
    write_comparison_csv(&a.out, &result)?;
    let chart = a.chart.clone().unwrap_or_else(|| a.out.with_extension("svg"));
    write_comparison_svg(&chart, &result)?;
    print!("{}", comparison_summary(&result));
    println!("wrote {} and {}", a.out.display(), chart.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let jobs = resolve_jobs(cli.jobs, &cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {jobs:?} worker threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Synth(a) => cmd_synth(a, &cfg),
        Command::Featurize(a) => cmd_featurize(a, &cfg),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg),
        Command::Compare(a) => cmd_compare(a, &cfg),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::usage(msg));
            return ExitCode::from(2);
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
