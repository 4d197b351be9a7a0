//! Dimensionality reduction, regressors, hyperparameter search and
//! leave-one-participant-out evaluation.

pub mod cv;
pub mod gbdt;
pub mod linreg;
pub mod metrics;
pub mod model_io;
pub mod pca;
pub mod search;

pub use cv::{
    design_matrix, fit_pipeline, fold_seed, loso_cv, loso_cv_with_roster, CvOutcome, FittedModel, ModelKind,
    PipelineSpec, SearchSettings, TrainedPipeline,
};
pub use gbdt::{gbdt_fit, GbdtModel, GbdtParams};
pub use linreg::{linreg_fit, LinearModel};
pub use metrics::compute_metrics;
pub use model_io::{load_model, save_model};
pub use pca::{pca_fit, PcaModel};
pub use search::{random_search, InnerSplit, SearchResult, SearchSpace};
