use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{DataError, N_ELECTRODES, TRIAL_SAMPLES};
use crate::dsp::{BandStack, FilterBank};

/// Imagined-movement class. The class index is the position in
/// [`Label::ALL`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Left,
    Right,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Left, Label::Right];

    pub fn class_index(self) -> usize {
        match self {
            Label::Left => 0,
            Label::Right => 1,
        }
    }

    pub fn from_class_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Manifest token, `L` or `R`.
    pub fn token(self) -> &'static str {
        match self {
            Label::Left => "L",
            Label::Right => "R",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "L" => Some(Label::Left),
            "R" => Some(Label::Right),
            _ => None,
        }
    }
}

/// Where a trial came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrialOrigin {
    Recorded,
    /// One source trial id per time segment, in segment order.
    TimeRecombination { segment_sources: Vec<String> },
    FrequencySwap {
        base: String,
        donor: String,
        band: usize,
    },
}

/// One 875×3 motor-imagery window (C3, CZ, C4 columns, row-major).
#[derive(Clone, Debug)]
pub struct Trial {
    samples: Vec<f64>,
    pub label: Label,
    pub subject_id: String,
    pub session_id: String,
    pub trial_id: String,
    pub origin: TrialOrigin,
    bands: OnceLock<BandStack>,
}

impl PartialEq for Trial {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
            && self.label == other.label
            && self.subject_id == other.subject_id
            && self.session_id == other.session_id
            && self.trial_id == other.trial_id
            && self.origin == other.origin
    }
}

fn standard_bank() -> &'static FilterBank {
    static BANK: OnceLock<FilterBank> = OnceLock::new();
    BANK.get_or_init(FilterBank::standard)
}

impl Trial {
    pub fn new(
        samples: Vec<f64>,
        label: Label,
        subject_id: impl Into<String>,
        session_id: impl Into<String>,
        trial_id: impl Into<String>,
    ) -> Result<Self, DataError> {
        let (subject_id, session_id, trial_id) = (subject_id.into(), session_id.into(), trial_id.into());
        if samples.len() != TRIAL_SAMPLES * N_ELECTRODES {
            return Err(DataError::InvalidTrial(format!(
                "trial `{trial_id}` has {} values, expected {}x{}",
                samples.len(),
                TRIAL_SAMPLES,
                N_ELECTRODES
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(DataError::InvalidTrial(format!(
                "trial `{trial_id}` has a non-finite value at row {}, column {}",
                i / N_ELECTRODES + 1,
                i % N_ELECTRODES + 1
            )));
        }
        if subject_id.is_empty() || session_id.is_empty() || trial_id.is_empty() {
            return Err(DataError::InvalidTrial("subject, session and trial ids must be non-empty".into()));
        }
        Ok(Self {
            samples,
            label,
            subject_id,
            session_id,
            trial_id,
            origin: TrialOrigin::Recorded,
            bands: OnceLock::new(),
        })
    }

    pub fn with_origin(mut self, origin: TrialOrigin) -> Self {
        self.origin = origin;
        self
    }

    /// Row-major `[875, 3]` samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample(&self, t: usize, electrode: usize) -> f64 {
        self.samples[t * N_ELECTRODES + electrode]
    }

    /// One electrode's time series.
    pub fn channel(&self, electrode: usize) -> Vec<f64> {
        (0..TRIAL_SAMPLES).map(|t| self.sample(t, electrode)).collect()
    }

    /// The standard three-band decomposition, computed once and cached.
    pub fn bands(&self) -> &BandStack {
        self.bands.get_or_init(|| {
            standard_bank()
                .split(&self.samples, N_ELECTRODES)
                .expect("trial shape validated at construction")
        })
    }

    pub fn class_index(&self) -> usize {
        self.label.class_index()
    }
}

/// Parses a trial signal file: exactly 875 lines of three comma-separated
/// reals, no header.
pub fn parse_trial_samples(text: &str, path: &Path) -> Result<Vec<f64>, DataError> {
    let parse_err = |line: usize, message: String| DataError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    let lines: Vec<&str> = if body.is_empty() { Vec::new() } else { body.split('\n').collect() };
    if lines.len() != TRIAL_SAMPLES {
        return Err(parse_err(
            lines.len().min(TRIAL_SAMPLES) + 1,
            format!("expected {TRIAL_SAMPLES} rows, found {}", lines.len()),
        ));
    }
    let mut samples = Vec::with_capacity(TRIAL_SAMPLES * N_ELECTRODES);
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim_end_matches('\r');
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != N_ELECTRODES {
            return Err(parse_err(
                i + 1,
                format!("expected {N_ELECTRODES} comma-separated values, found {}", fields.len()),
            ));
        }
        for field in fields {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("non-numeric value `{}`", field.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(i + 1, format!("non-finite value `{}`", field.trim())));
            }
            samples.push(v);
        }
    }
    Ok(samples)
}

pub fn read_trial_samples(path: &Path) -> Result<Vec<f64>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trial_samples(&text, path)
}

/// Serialises samples in the trial file format. Values use the shortest
/// representation that parses back to the identical `f64`.
pub fn format_trial_samples(samples: &[f64]) -> String {
    let mut out = String::with_capacity(samples.len() * 22);
    for row in samples.chunks(N_ELECTRODES) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_trial_samples(path: &Path, samples: &[f64]) -> Result<(), DataError> {
    std::fs::write(path, format_trial_samples(samples)).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}
