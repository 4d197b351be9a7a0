//! Non-heart feature extractors: summary statistics, EDA decomposition with
//! SCR events, and EEG spectral, wavelet, entropy and Hjorth descriptors.

mod eda;
mod eeg;
mod stats;
mod wavelet;

pub use eda::{
    eda_clean, eda_decompose, eda_features, scr_events, EdaAnalysis, EdaDecomposition, EdaFeatures, ScrEvent,
    EDA_FEATURE_NAMES, EDA_RATE_HZ, SCR_THRESHOLD_US,
};
pub use eeg::{
    eeg_features, hjorth, sample_entropy, EegFeatures, Hjorth, BANDS, EEG_FEATURE_NAMES,
};
pub use stats::{magnitude, stat_features, StatFeatures, STAT_NAMES};
pub use wavelet::{wavedec_energies, DB4_DEC_LO, WAVELET_LEVELS};
