//! Synthetic motor-imagery trials for desk-scale checks.
//!
//! Each electrode carries unit-variance 1/f noise plus a 10 Hz rhythm whose
//! phase is fixed per subject. Imagined left-hand movement attenuates the
//! rhythm on C4, right-hand movement on C3, by a per-subject factor drawn
//! from `attenuation_range`. `snr_db` is the rhythm power over the noise
//! power; `-inf` gives noise only.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, TrialRecord};
use super::trial::write_trial_samples;
use super::{DataError, Label, Trial, N_ELECTRODES, SAMPLE_RATE_HZ, TRIAL_SAMPLES};
use crate::seeds::derive_seed;

const C3: usize = 0;
const C4: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub trials_per_class: usize,
    pub snr_db: f64,
    pub sessions: usize,
    pub seed: u64,
    pub rhythm_hz: f64,
    pub attenuation_range: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 9,
            trials_per_class: 60,
            snr_db: 20.0,
            sessions: 5,
            seed: 0,
            rhythm_hz: 10.0,
            attenuation_range: (0.3, 0.7),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if self.n_subjects < 2 {
            problems.push(DataError::Config(format!("n_subjects must be at least 2, got {}", self.n_subjects)));
        }
        if self.trials_per_class == 0 {
            problems.push(DataError::Config("trials_per_class must be positive".into()));
        }
        if self.sessions == 0 {
            problems.push(DataError::Config("sessions must be positive".into()));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::INFINITY {
            problems.push(DataError::Config(format!("snr_db must be finite or -inf, got {}", self.snr_db)));
        }
        let (lo, hi) = self.attenuation_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            problems.push(DataError::Config(format!("attenuation range ({lo}, {hi}) must lie in [0, 1]")));
        }
        if !(self.rhythm_hz > 0.0 && self.rhythm_hz < SAMPLE_RATE_HZ / 2.0) {
            problems.push(DataError::Config(format!("rhythm frequency {} Hz out of range", self.rhythm_hz)));
        }
        DataError::collect(problems)
    }

    /// Peak amplitude of the rhythm for unit-variance noise.
    fn rhythm_amplitude(&self) -> f64 {
        (2.0 * 10f64.powf(self.snr_db / 10.0)).sqrt()
    }
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

pub fn session_id(index: usize) -> String {
    format!("E{}", index + 1)
}

struct PinkNoise {
    ifft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl PinkNoise {
    fn new(n: usize) -> Self {
        Self {
            ifft: FftPlanner::new().plan_fft_inverse(n),
            buf: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Zero-mean, unit-variance noise with a 1/f power spectrum.
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let n = self.buf.len();
        self.buf.fill(Complex64::new(0.0, 0.0));
        for k in 1..=n / 2 {
            let amp = 1.0 / (k as f64).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if 2 * k == n {
                self.buf[k] = Complex64::new(re * amp, 0.0);
            } else {
                self.buf[k] = Complex64::new(re * amp, im * amp);
                self.buf[n - k] = self.buf[k].conj();
            }
        }
        self.ifft.process(&mut self.buf);
        let x: Vec<f64> = self.buf.iter().map(|c| c.re).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let inv = 1.0 / var.sqrt();
        x.into_iter().map(|v| (v - mean) * inv).collect()
    }
}

/// Per-subject constants of the generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubjectProfile {
    pub phase: f64,
    pub attenuation: f64,
}

pub fn subject_profile(cfg: &SynthConfig, subject: usize) -> SubjectProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["synth-profile", &subject.to_string()]));
    let (lo, hi) = cfg.attenuation_range;
    SubjectProfile {
        phase: rng.random_range(0.0..2.0 * PI),
        attenuation: if hi > lo { rng.random_range(lo..hi) } else { lo },
    }
}

/// All synthetic trials, ordered by subject, then session, then
/// alternating Left/Right.
pub fn synthesize_trials(cfg: &SynthConfig) -> Result<Vec<Trial>, DataError> {
    cfg.validate()?;
    let amplitude = cfg.rhythm_amplitude();
    let mut noise = PinkNoise::new(TRIAL_SAMPLES);
    let mut trials = Vec::with_capacity(cfg.n_subjects * cfg.trials_per_class * 2);
    for s in 0..cfg.n_subjects {
        let profile = subject_profile(cfg, s);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["synth-trials", &s.to_string()]));
        for e in 0..cfg.sessions {
            let per_session = (0..cfg.trials_per_class).filter(|i| i % cfg.sessions == e).count();
            let mut counter = 0;
            for _ in 0..per_session {
                for label in Label::ALL {
                    counter += 1;
                    let attenuated = match label {
                        Label::Left => C4,
                        Label::Right => C3,
                    };
                    let mut samples = vec![0.0; TRIAL_SAMPLES * N_ELECTRODES];
                    for electrode in 0..N_ELECTRODES {
                        let gain = if electrode == attenuated { profile.attenuation } else { 1.0 };
                        let n = noise.draw(&mut rng);
                        for (t, nv) in n.into_iter().enumerate() {
                            let phase = 2.0 * PI * cfg.rhythm_hz * t as f64 / SAMPLE_RATE_HZ + profile.phase;
                            samples[t * N_ELECTRODES + electrode] = amplitude * gain * phase.sin() + nv;
                        }
                    }
                    let id = format!("{}_{}_T{:03}", subject_id(s), session_id(e), counter);
                    trials.push(Trial::new(samples, label, subject_id(s), session_id(e), id)?);
                }
            }
        }
    }
    Ok(trials)
}

/// `count` rhythm-free trials of the generator's background noise, for
/// corrupting support sets. Ids are `noise-0001`, …; labels alternate.
pub fn noise_trials(count: usize, seed: u64) -> Result<Vec<Trial>, DataError> {
    let mut noise = PinkNoise::new(TRIAL_SAMPLES);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["synth-noise"]));
    (0..count)
        .map(|i| {
            let mut samples = vec![0.0; TRIAL_SAMPLES * N_ELECTRODES];
            for electrode in 0..N_ELECTRODES {
                for (t, v) in noise.draw(&mut rng).into_iter().enumerate() {
                    samples[t * N_ELECTRODES + electrode] = v;
                }
            }
            Trial::new(samples, Label::ALL[i % 2], "noise", "N", format!("noise-{:04}", i + 1))
        })
        .collect()
}

/// Writes `manifest.csv` and `trials/<subject>/<trial>.csv` under `out_dir`
/// and returns the manifest.
pub fn generate_synthetic_dataset(cfg: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest, DataError> {
    let trials = synthesize_trials(cfg)?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DataError::Io { path, source }
    };
    let mut records = Vec::with_capacity(trials.len());
    for (i, t) in trials.iter().enumerate() {
        let rel = PathBuf::from("trials").join(&t.subject_id).join(format!("{}.csv", t.trial_id));
        let abs = out_dir.join(&rel);
        let dir = abs.parent().expect("trial path has a parent");
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        write_trial_samples(&abs, t.samples())?;
        records.push(TrialRecord {
            path: rel,
            subject_id: t.subject_id.clone(),
            session_id: t.session_id.clone(),
            trial_id: t.trial_id.clone(),
            label: t.label,
            excluded: false,
            line: i + 5,
        });
    }
    let manifest = DatasetManifest {
        root: out_dir.to_path_buf(),
        sample_rate_hz: SAMPLE_RATE_HZ,
        window_s: (3.5, 7.0),
        records,
    };
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
