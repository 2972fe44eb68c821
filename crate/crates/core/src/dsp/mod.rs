//! Butterworth band-pass design and zero-phase band splitting.

mod bands;
mod butterworth;

pub use bands::{apply_zero_phase, split_bands, BandStack, FilterBank, DEFAULT_BANDS_HZ, FILTER_ORDER};
pub use butterworth::{design_butterworth_bandpass, BandSpec, Biquad, BiquadCascade};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid band {low_hz}-{high_hz} Hz at {sample_rate_hz} Hz: need 0 < low < high < Nyquist")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate_hz: f64,
    },
    #[error("band-pass order must be even and at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("designed filter has a pole on or outside the unit circle")]
    Unstable,
    #[error("signal of {len} samples is shorter than the {required} needed for edge padding")]
    SignalTooShort { len: usize, required: usize },
    #[error("expected a {expected_rows}x{expected_cols} trial matrix, got {found} values")]
    TrialShape {
        expected_rows: usize,
        expected_cols: usize,
        found: usize,
    },
}
