use super::{design_butterworth_bandpass, BandSpec, BiquadCascade, DspError};
use crate::data::{N_ELECTRODES, SAMPLE_RATE_HZ, TRIAL_SAMPLES};

/// Order of every band-pass in the analysis bank.
pub const FILTER_ORDER: usize = 4;

/// Analysis bands in Hz: theta, mu/alpha, beta.
pub const DEFAULT_BANDS_HZ: [(f64, f64); 3] = [(4.0, 7.0), (8.0, 13.0), (13.0, 32.0)];

/// Forward-backward filtering with odd-reflection edge padding of
/// `3 × order` samples and steady-state initial conditions on each pass.
/// The effective magnitude response is `|H|²` with zero phase.
pub fn apply_zero_phase(filter: &BiquadCascade, signal: &[f64]) -> Result<Vec<f64>, DspError> {
    let required = 3 * filter.order();
    if signal.len() < required.max(2) {
        return Err(DspError::SignalTooShort {
            len: signal.len(),
            required: required.max(2),
        });
    }
    let n = signal.len();
    let pad = required.min(n - 1);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (signal[0], signal[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let unit = filter.step_initial_states();
    let scaled = |x0: f64| unit.iter().map(|s| [s[0] * x0, s[1] * x0]).collect::<Vec<_>>();

    let x0 = ext[0];
    filter.filter_with_states(&mut ext, scaled(x0));
    ext.reverse();
    let y0 = ext[0];
    filter.filter_with_states(&mut ext, scaled(y0));
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// A trial decomposed into the three analysis bands. Each band is a
/// row-major `[time, electrode]` matrix with the trial's shape.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStack {
    bands: Vec<Vec<f64>>,
    specs: Vec<BandSpec>,
    rows: usize,
    cols: usize,
}

impl BandStack {
    pub fn band(&self, index: usize) -> &[f64] {
        &self.bands[index]
    }

    pub fn specs(&self) -> &[BandSpec] {
        &self.specs
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Elementwise sum of all bands.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for band in &self.bands {
            for (o, v) in out.iter_mut().zip(band) {
                *o += v;
            }
        }
        out
    }

    /// Replaces one band with another stack's band of the same shape.
    pub fn with_band_from(&self, index: usize, donor: &BandStack) -> BandStack {
        let mut out = self.clone();
        out.bands[index] = donor.bands[index].clone();
        out
    }
}

/// Designed filters for a set of bands at one sample rate.
#[derive(Clone, Debug)]
pub struct FilterBank {
    specs: Vec<BandSpec>,
    filters: Vec<BiquadCascade>,
}

impl FilterBank {
    pub fn new(specs: Vec<BandSpec>, order: usize) -> Result<Self, DspError> {
        let filters = specs
            .iter()
            .map(|s| design_butterworth_bandpass(s, order))
            .collect::<Result<_, _>>()?;
        Ok(Self { specs, filters })
    }

    /// The 4-7, 8-13 and 13-32 Hz bank at 250 Hz, fourth order.
    pub fn standard() -> Self {
        let specs = DEFAULT_BANDS_HZ
            .iter()
            .map(|&(lo, hi)| BandSpec::new(lo, hi, SAMPLE_RATE_HZ).expect("valid default band"))
            .collect();
        Self::new(specs, FILTER_ORDER).expect("default bank designs")
    }

    pub fn specs(&self) -> &[BandSpec] {
        &self.specs
    }

    pub fn filters(&self) -> &[BiquadCascade] {
        &self.filters
    }

    /// Filters every column of a row-major `[rows, cols]` matrix through
    /// every band.
    pub fn split(&self, samples: &[f64], cols: usize) -> Result<BandStack, DspError> {
        if cols == 0 || samples.len() % cols != 0 {
            return Err(DspError::TrialShape {
                expected_rows: samples.len() / cols.max(1),
                expected_cols: cols,
                found: samples.len(),
            });
        }
        let rows = samples.len() / cols;
        let mut bands = Vec::with_capacity(self.filters.len());
        let mut column = vec![0.0; rows];
        for filter in &self.filters {
            let mut band = vec![0.0; samples.len()];
            for c in 0..cols {
                for (r, v) in column.iter_mut().enumerate() {
                    *v = samples[r * cols + c];
                }
                let filtered = apply_zero_phase(filter, &column)?;
                for (r, v) in filtered.into_iter().enumerate() {
                    band[r * cols + c] = v;
                }
            }
            bands.push(band);
        }
        Ok(BandStack {
            bands,
            specs: self.specs.clone(),
            rows,
            cols,
        })
    }
}

/// Splits an 875×3 trial matrix (row-major, C3/CZ/C4 columns) with the
/// standard bank.
pub fn split_bands(samples: &[f64]) -> Result<BandStack, DspError> {
    if samples.len() != TRIAL_SAMPLES * N_ELECTRODES {
        return Err(DspError::TrialShape {
            expected_rows: TRIAL_SAMPLES,
            expected_cols: N_ELECTRODES,
            found: samples.len(),
        });
    }
    FilterBank::standard().split(samples, N_ELECTRODES)
}
