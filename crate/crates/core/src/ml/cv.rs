use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbdt::{gbdt_fit, GbdtModel, GbdtParams};
use super::linreg::{linreg_fit, LinearModel};
use super::metrics::compute_metrics;
use super::pca::{pca_fit, PcaModel};
use super::search::{random_search, InnerSplit, SearchSpace};
use crate::error::{Error, Result};
use crate::model::{ConfigDescriptor, EvalReport, FeatureMatrix, FoldResult, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Predicts the training-target mean; the reference baseline.
    Mean,
    Linreg,
    Gbdt,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mean => "mean",
            ModelKind::Linreg => "linreg",
            ModelKind::Gbdt => "gbdt",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(ModelKind::Mean),
            "linreg" | "lr" => Ok(ModelKind::Linreg),
            "gbdt" | "xgboost" => Ok(ModelKind::Gbdt),
            _ => Err(Error::Unknown {
                what: "model",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub space: SearchSpace,
    pub budget: usize,
    pub inner_folds: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            space: SearchSpace::default(),
            budget: 50,
            inner_folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub model: ModelKind,
    pub variance_target: f64,
    pub seed: u64,
    /// Boosting parameters used when `search` is off.
    pub gbdt: GbdtParams,
    pub search: Option<SearchSettings>,
}

impl PipelineSpec {
    /// 99% PCA variance; boosting tuned by the default random search.
    pub fn new(model: ModelKind, seed: u64) -> Self {
        PipelineSpec {
            model,
            variance_target: 0.99,
            seed,
            gbdt: GbdtParams::default(),
            search: (model == ModelKind::Gbdt).then(SearchSettings::default),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Mean(f64),
    Linear(LinearModel),
    Gbdt(GbdtModel),
}

/// Standardization, PCA and regressor fitted together on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub feature_names: Vec<String>,
    pub pca: Option<PcaModel>,
    pub model: FittedModel,
}

impl TrainedPipeline {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let z = match &self.pca {
            Some(p) => p.transform(x),
            None => x.clone(),
        };
        match &self.model {
            FittedModel::Mean(m) => vec![*m; x.nrows()],
            FittedModel::Linear(l) => l.predict(&z),
            FittedModel::Gbdt(g) => g.predict(&z),
        }
    }

    pub fn gbdt_params(&self) -> Option<GbdtParams> {
        match &self.model {
            FittedModel::Gbdt(g) => Some(g.params),
            _ => None,
        }
    }
}

/// Per-fold seed derived from the global seed and the held-out participant,
/// independent of scheduling.
pub fn fold_seed(seed: u64, participant_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in participant_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = (seed ^ h).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn design_matrix(m: &FeatureMatrix, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.n_cols(), |i, j| m.values[rows[i] * m.n_cols() + j])
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Group-wise partition of row indices into at most `k` folds, assignment
/// shuffled by `seed`. Returns `(train, validation)` pairs.
fn group_folds(groups: &[String], k: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut ids: Vec<&String> = groups.iter().collect();
    ids.sort();
    ids.dedup();
    let k = k.min(ids.len());
    if k < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    (0..k)
        .map(|f| {
            let held: Vec<&String> = ids.iter().skip(f).step_by(k).copied().collect();
            let (mut train, mut val) = (Vec::new(), Vec::new());
            for (i, g) in groups.iter().enumerate() {
                if held.contains(&g) {
                    val.push(i);
                } else {
                    train.push(i);
                }
            }
            (train, val)
        })
        .collect()
}

fn project_split(x: &DMatrix<f64>, y: &[f64], train: &[usize], val: &[usize], target: f64) -> Result<InnerSplit> {
    let xt = select_rows(x, train);
    let pca = pca_fit(&xt, target)?;
    Ok(InnerSplit {
        x_train: pca.transform(&xt),
        y_train: train.iter().map(|&i| y[i]).collect(),
        x_val: pca.transform(&select_rows(x, val)),
        y_val: val.iter().map(|&i| y[i]).collect(),
    })
}

/// Fits the whole pipeline on `(x, y)`. `groups` labels each row's
/// participant and drives the inner folds of the hyperparameter search.
pub fn fit_pipeline(
    x: &DMatrix<f64>,
    y: &[f64],
    groups: &[String],
    feature_names: &[String],
    spec: &PipelineSpec,
    seed: u64,
) -> Result<TrainedPipeline> {
    if x.nrows() != y.len() || groups.len() != y.len() {
        return Err(Error::InvalidInput("rows, targets and groups differ in length".into()));
    }
    if y.is_empty() {
        return Err(Error::Insufficient("no training rows".into()));
    }
    if spec.model == ModelKind::Mean {
        return Ok(TrainedPipeline {
            feature_names: feature_names.to_vec(),
            pca: None,
            model: FittedModel::Mean(y.iter().sum::<f64>() / y.len() as f64),
        });
    }
    let pca = pca_fit(x, spec.variance_target)?;
    let z = pca.transform(x);
    let model = match spec.model {
        ModelKind::Linreg => FittedModel::Linear(linreg_fit(&z, y)?),
        ModelKind::Gbdt => {
            let mut params = GbdtParams { seed, ..spec.gbdt };
            if let Some(search) = &spec.search {
                let folds = group_folds(groups, search.inner_folds, seed);
                if folds.is_empty() {
                    log::warn!("too few training participants for an inner search; using fixed parameters");
                } else {
                    let splits = folds
                        .iter()
                        .map(|(tr, va)| project_split(x, y, tr, va, spec.variance_target))
                        .collect::<Result<Vec<_>>>()?;
                    params = random_search(&search.space, &splits, search.budget, seed)?.best;
                }
            }
            FittedModel::Gbdt(gbdt_fit(&z, y, &params)?)
        }
        ModelKind::Mean => unreachable!(),
    };
    Ok(TrainedPipeline {
        feature_names: feature_names.to_vec(),
        pca: Some(pca),
        model,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<FoldResult>,
    pub pooled: Metrics,
    /// Out-of-fold prediction per matrix row.
    pub predictions: Vec<f64>,
    pub skipped: Vec<String>,
    /// Boosting parameters each fold settled on, in fold order.
    pub fold_params: Vec<Option<GbdtParams>>,
}

impl CvOutcome {
    pub fn into_report(self, config: ConfigDescriptor, dropped_rows: usize) -> EvalReport {
        EvalReport {
            config,
            folds: self.folds,
            pooled: self.pooled,
            dropped_rows,
            skipped: self.skipped,
        }
    }
}

/// Leave-one-participant-out evaluation over the participants present in
/// the matrix.
pub fn loso_cv(matrix: &FeatureMatrix, spec: &PipelineSpec) -> Result<CvOutcome> {
    loso_cv_with_roster(matrix, spec, &matrix.participant_ids())
}

/// As [`loso_cv`], with one fold per roster entry; roster participants that
/// have no rows are skipped and listed.
pub fn loso_cv_with_roster(matrix: &FeatureMatrix, spec: &PipelineSpec, roster: &[String]) -> Result<CvOutcome> {
    let (present, skipped): (Vec<String>, Vec<String>) =
        roster.iter().cloned().partition(|p| matrix.participants.contains(p));
    if present.len() < 2 {
        return Err(Error::Insufficient(format!(
            "leave-one-participant-out needs at least 2 participants with rows, got {}",
            present.len()
        )));
    }
    for p in &skipped {
        log::warn!("participant {p} has no rows; fold skipped");
    }
    let all: Vec<usize> = (0..matrix.n_rows()).collect();
    let x = design_matrix(matrix, &all);

    let folds: Vec<(Vec<usize>, Vec<f64>, Option<GbdtParams>)> = present
        .par_iter()
        .map(|pid| {
            let (test, train): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| &matrix.participants[i] == pid);
            let pipeline = fit_pipeline(
                &select_rows(&x, &train),
                &train.iter().map(|&i| matrix.targets[i]).collect::<Vec<_>>(),
                &train.iter().map(|&i| matrix.participants[i].clone()).collect::<Vec<_>>(),
                &matrix.names,
                spec,
                fold_seed(spec.seed, pid),
            )?;
            let preds = pipeline.predict(&select_rows(&x, &test));
            Ok((test, preds, pipeline.gbdt_params()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut predictions = vec![f64::NAN; matrix.n_rows()];
    let mut results = Vec::with_capacity(folds.len());
    let mut fold_params = Vec::with_capacity(folds.len());
    for (pid, (test, preds, params)) in present.iter().zip(folds) {
        let targets: Vec<f64> = test.iter().map(|&i| matrix.targets[i]).collect();
        results.push(FoldResult {
            participant_id: pid.clone(),
            count: test.len(),
            metrics: compute_metrics(&preds, &targets)?,
        });
        for (&i, p) in test.iter().zip(preds) {
            predictions[i] = p;
        }
        fold_params.push(params);
    }
    let pooled = compute_metrics(&predictions, &matrix.targets)?;
    Ok(CvOutcome {
        folds: results,
        pooled,
        predictions,
        skipped,
        fold_params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn matrix(n_participants: usize, rows_each: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = FeatureMatrix {
            names: vec!["a".into(), "b".into(), "c".into()],
            values: Vec::new(),
            participants: Vec::new(),
            window_starts: Vec::new(),
            targets: Vec::new(),
            dropped_rows: 0,
        };
        for p in 0..n_participants {
            let offset = rng.gen_range(-0.2..0.2);
            for r in 0..rows_each {
                let a: f64 = rng.gen_range(0.0..3.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                m.values.extend([a, b, a * 0.5 + rng.gen_range(-0.1..0.1)]);
                m.participants.push(format!("P{p:02}"));
                m.window_starts.push(r as f64 * 6.0);
                m.targets.push(1.0 + 2.0 * a + 0.3 * b + offset);
            }
        }
        m
    }

    #[test]
    fn one_fold_per_participant_rows_tested_once() {
        let m = matrix(5, 20, 1);
        let out = loso_cv(&m, &PipelineSpec::new(ModelKind::Linreg, 1)).unwrap();
        assert_eq!(out.folds.len(), 5);
        assert_eq!(out.folds.iter().map(|f| f.count).sum::<usize>(), m.n_rows());
        assert!(out.predictions.iter().all(|p| p.is_finite()));
        assert!(out.pooled.mae < 0.3);
    }

    #[test]
    fn mean_model_swaps_two_participants() {
        let mut m = matrix(2, 4, 2);
        for (i, t) in m.targets.iter_mut().enumerate() {
            *t = if i < 4 { 1.0 } else { 3.0 };
        }
        let out = loso_cv(&m, &PipelineSpec::new(ModelKind::Mean, 0)).unwrap();
        assert_eq!(&out.predictions[..4], &[3.0; 4]);
        assert_eq!(&out.predictions[4..], &[1.0; 4]);
    }

    #[test]
    fn needs_two_participants_and_reports_skipped() {
        let m = matrix(1, 10, 3);
        assert!(loso_cv(&m, &PipelineSpec::new(ModelKind::Linreg, 0)).is_err());
        let m = matrix(3, 10, 3);
        let roster: Vec<String> = ["P00", "P01", "P02", "P09"].map(String::from).to_vec();
        let out = loso_cv_with_roster(&m, &PipelineSpec::new(ModelKind::Linreg, 0), &roster).unwrap();
        assert_eq!(out.skipped, vec!["P09".to_string()]);
        assert_eq!(out.folds.len(), 3);
    }

    fn small_gbdt_spec(seed: u64) -> PipelineSpec {
        let mut spec = PipelineSpec::new(ModelKind::Gbdt, seed);
        spec.search = Some(SearchSettings {
            space: SearchSpace {
                max_depth: vec![2, 3],
                learning_rate: vec![0.1, 0.2],
                n_trees: vec![20, 40],
                min_samples_leaf: vec![2, 5],
            },
            budget: 5,
            inner_folds: 3,
        });
        spec
    }

    #[test]
    fn held_out_rows_never_influence_their_fold() {
        let m = matrix(5, 15, 4);
        let spec = small_gbdt_spec(42);
        let base = loso_cv(&m, &spec).unwrap();

        // duplicate one row of P02 a hundred times
        let victim = m.participants.iter().position(|p| p == "P02").unwrap();
        let mut dup = m.clone();
        for _ in 0..100 {
            dup.values.extend_from_slice(m.row(victim));
            dup.participants.push("P02".into());
            dup.window_starts.push(m.window_starts[victim]);
            dup.targets.push(m.targets[victim]);
        }
        let probed = loso_cv(&dup, &spec).unwrap();
        for i in 0..m.n_rows() {
            if m.participants[i] == "P02" {
                assert_eq!(base.predictions[i].to_bits(), probed.predictions[i].to_bits());
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let m = matrix(4, 15, 5);
        let spec = small_gbdt_spec(7);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| loso_cv(&m, &spec).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
    }

    #[test]
    fn fold_seeds_depend_on_participant() {
        assert_ne!(fold_seed(42, "P01"), fold_seed(42, "P02"));
        assert_eq!(fold_seed(42, "P01"), fold_seed(42, "P01"));
        assert_ne!(fold_seed(1, "P01"), fold_seed(2, "P01"));
    }

    #[test]
    fn group_folds_partition_groups() {
        let groups: Vec<String> = (0..30).map(|i| format!("G{}", i % 7)).collect();
        let folds = group_folds(&groups, 3, 1);
        assert_eq!(folds.len(), 3);
        let mut seen = vec![0; 30];
        for (train, val) in &folds {
            assert_eq!(train.len() + val.len(), 30);
            for &v in val {
                seen[v] += 1;
                assert!(train.iter().all(|&t| groups[t] != groups[v]));
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert!(group_folds(&groups[..1], 3, 1).is_empty());
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("GBDT".parse::<ModelKind>().unwrap(), ModelKind::Gbdt);
        assert_eq!("linreg".parse::<ModelKind>().unwrap().to_string(), "linreg");
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
