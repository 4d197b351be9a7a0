//! Energy-expenditure estimation from multimodal wearable recordings.
//!
//! The pipeline runs raw per-device sensor streams through unit harmonization,
//! filtering and per-window feature extraction, then estimates MET values with
//! PCA-reduced regressors evaluated leave-one-participant-out.
//!
//! ```text
//! ingest -> dsp -> hrv / features -> windowing -> ml -> report
//!                      synth (deterministic test cohorts)
//! ```

pub mod dsp;
pub mod error;
pub mod features;
pub mod hrv;
pub mod ingest;
pub mod ml;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod windowing;

pub use error::{Error, Result};
