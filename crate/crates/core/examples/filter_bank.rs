//! Designs the three-band filter bank, prints its magnitude response and
//! splits a mixture of 5, 10 and 20 Hz tones into theta, mu and beta.

use std::f64::consts::PI;

use anyhow::Result;
use eeg_fewshot::dsp::{split_bands, FilterBank};

const FS: f64 = 250.0;

fn main() -> Result<()> {
    let bank = FilterBank::standard();
    print!("{:>6}", "Hz");
    for spec in bank.specs() {
        print!("  {:>5.0}-{:<5.0}", spec.low_hz, spec.high_hz);
    }
    println!();
    for hz in [2.0, 4.0, 5.5, 8.0, 10.2, 13.0, 20.0, 32.0, 40.0, 60.0] {
        print!("{hz:>6.1}");
        for f in bank.filters() {
            print!("  {:>11.4}", f.magnitude(hz, FS));
        }
        println!();
    }

    // Three electrodes, 875 samples, row-major (time × electrode).
    let n = 875;
    let mut trial = vec![0.0; n * 3];
    for t in 0..n {
        let s = t as f64 / FS;
        let v = (2.0 * PI * 5.0 * s).sin() + (2.0 * PI * 10.0 * s).sin() + (2.0 * PI * 20.0 * s).sin();
        trial[t * 3..t * 3 + 3].fill(v);
    }
    let bands = split_bands(&trial)?;
    println!("\nband energy of the 5 + 10 + 20 Hz mixture (C3, central half):");
    for b in 0..bands.n_bands() {
        let c3: Vec<f64> = (n / 4..3 * n / 4).map(|t| bands.band(b)[t * 3]).collect();
        let power = c3.iter().map(|v| v * v).sum::<f64>() / c3.len() as f64;
        let spec = &bands.specs()[b];
        println!("  {:>4.0}-{:<4.0} Hz  mean power {power:.3}", spec.low_hz, spec.high_hz);
    }
    Ok(())
}
