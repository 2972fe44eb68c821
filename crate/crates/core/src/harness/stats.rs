//! Small statistics helpers for reports and acceptance checks.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two
/// values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Welch's t statistic and the one-sided p-value for `mean(a) < mean(b)`.
pub fn welch_less(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_std(a).powi(2) / na, sample_std(b).powi(2) / nb);
    let se = (va + vb).sqrt();
    let diff = mean(a) - mean(b);
    if se == 0.0 || !se.is_finite() {
        // Degenerate (constant samples): the ordering of the means decides.
        let p = if diff < 0.0 { 0.0 } else { 1.0 };
        return (if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY }, p);
    }
    let t = diff / se;
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (t, dist.cdf(t))
}
