//! Signal-processing primitives. Everything here is a pure function of its
//! inputs.

mod filter;
mod resample;
mod smooth;
mod spectral;

pub use filter::{
    butterworth_bandpass, butterworth_lowpass, BandPassSpec, FilterMode, Sos, SosFilter, PPG_RATE_HZ,
};
pub use resample::{align_to_grid, interp_sorted, resample_uniform, uniform_grid, AlignedSeries};
pub use smooth::{central_moving_average, moving_median};
pub use spectral::{hann, welch, Psd};
