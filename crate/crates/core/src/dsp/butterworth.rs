use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::DspError;

/// A pass band in Hz together with the sampling rate it applies to.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub sample_rate_hz: f64,
}

impl BandSpec {
    pub fn new(low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Result<Self, DspError> {
        let spec = Self {
            low_hz,
            high_hz,
            sample_rate_hz,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let nyquist = self.sample_rate_hz / 2.0;
        let ok = [self.low_hz, self.high_hz, self.sample_rate_hz]
            .iter()
            .all(|v| v.is_finite())
            && self.low_hz > 0.0
            && self.low_hz < self.high_hz
            && self.high_hz < nyquist;
        if ok {
            Ok(())
        } else {
            Err(DspError::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                sample_rate_hz: self.sample_rate_hz,
            })
        }
    }

    /// Geometric centre of the band edges.
    pub fn center_hz(&self) -> f64 {
        (self.low_hz * self.high_hz).sqrt()
    }
}

/// Second-order section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Pole radius. Both poles of a section with complex-conjugate poles
    /// share this radius; for real poles the larger magnitude is returned.
    pub fn pole_radius(&self) -> f64 {
        let (a1, a2) = (self.a[1], self.a[2]);
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            a2.sqrt()
        } else {
            let r = disc.sqrt();
            ((-a1 + r) / 2.0).abs().max(((-a1 - r) / 2.0).abs())
        }
    }

    /// DC gain `H(1)`.
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

/// Ordered cascade of second-order sections.
#[derive(Clone, Debug, PartialEq)]
pub struct BiquadCascade {
    sections: Vec<Biquad>,
}

impl BiquadCascade {
    pub fn new(sections: Vec<Biquad>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Filter order (two per section).
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Complex frequency response at `freq_hz` for a single causal pass.
    pub fn response(&self, freq_hz: f64, sample_rate_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// `|H(f)|` for one causal pass.
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        self.response(freq_hz, sample_rate_hz).norm()
    }

    pub fn is_stable(&self, margin: f64) -> bool {
        self.sections.iter().all(|s| s.pole_radius() < 1.0 - margin)
    }

    /// Steady-state direct-form-II-transposed states for a unit step.
    pub(crate) fn step_initial_states(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let y = s.dc_gain() * level;
                let s2 = s.b[2] * level - s.a[2] * y;
                let s1 = s.b[1] * level - s.a[1] * y + s2;
                level = y;
                [s1, s2]
            })
            .collect()
    }

    /// Causal pass with the given per-section initial states.
    pub(crate) fn filter_with_states(&self, signal: &mut [f64], mut states: Vec<[f64; 2]>) {
        for (sec, st) in self.sections.iter().zip(states.iter_mut()) {
            let [b0, b1, b2] = sec.b;
            let [_, a1, a2] = sec.a;
            let (mut s1, mut s2) = (st[0], st[1]);
            for x in signal.iter_mut() {
                let input = *x;
                let y = b0 * input + s1;
                s1 = b1 * input - a1 * y + s2;
                s2 = b2 * input - a2 * y;
                *x = y;
            }
        }
    }
}

fn prewarp(freq_hz: f64, sample_rate_hz: f64) -> f64 {
    2.0 * sample_rate_hz * (PI * freq_hz / sample_rate_hz).tan()
}

fn bilinear(s: Complex64, sample_rate_hz: f64) -> Complex64 {
    let k = Complex64::new(2.0 * sample_rate_hz, 0.0);
    (k + s) / (k - s)
}

fn section_from_poles(p1: Complex64, p2: Complex64) -> Biquad {
    let sum = p1 + p2;
    let prod = p1 * p2;
    Biquad {
        b: [1.0, 0.0, -1.0],
        a: [1.0, -sum.re, prod.re],
    }
}

/// Butterworth band-pass of total order `order` (even, ≥ 2) designed by
/// the bilinear transform with pre-warped band edges. The low-pass
/// prototype has order `order / 2`; the cascade has `order / 2` sections
/// and unit gain at the pre-warped geometric centre frequency.
pub fn design_butterworth_bandpass(spec: &BandSpec, order: usize) -> Result<BiquadCascade, DspError> {
    spec.validate()?;
    if order < 2 || order % 2 != 0 {
        return Err(DspError::InvalidOrder(order));
    }
    let fs = spec.sample_rate_hz;
    let n = order / 2;
    let wl = prewarp(spec.low_hz, fs);
    let wh = prewarp(spec.high_hz, fs);
    let w0_sq = wl * wh;
    let bw = wh - wl;

    let bandpass_poles = |p: Complex64| {
        let pb = p * bw;
        let root = (pb * pb - 4.0 * w0_sq).sqrt();
        ((pb + root) / 2.0, (pb - root) / 2.0)
    };

    let mut sections = Vec::with_capacity(n);
    for k in 0..n {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        if p.im > 1e-12 {
            let (s1, s2) = bandpass_poles(p);
            for s in [s1, s2] {
                let z = bilinear(s, fs);
                sections.push(section_from_poles(z, z.conj()));
            }
        } else if p.im.abs() <= 1e-12 {
            // real prototype pole (odd prototype order)
            let (s1, s2) = bandpass_poles(Complex64::new(p.re, 0.0));
            sections.push(section_from_poles(bilinear(s1, fs), bilinear(s2, fs)));
        }
    }

    let mut cascade = BiquadCascade::new(sections);
    let center = 2.0 * (w0_sq.sqrt() / (2.0 * fs)).atan() * fs / (2.0 * PI);
    let gain = cascade.magnitude(center, fs);
    let per_section = gain.powf(-1.0 / n as f64);
    for s in &mut cascade.sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }
    if !cascade.is_stable(0.0) {
        return Err(DspError::Unstable);
    }
    Ok(cascade)
}
