//! Writes a seeded synthetic motor-imagery dataset (manifest plus one text
//! file per trial), loads it back and prints what the loader sees.
//!
//! `cargo run --example synthetic_dataset -- [out_dir]`

use std::path::PathBuf;

use anyhow::{Context, Result};
use eeg_fewshot::data::{generate_synthetic_dataset, load_dataset, Label, SynthConfig};

fn main() -> Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("eeg-fewshot-synth"), PathBuf::from);
    if out.exists() {
        std::fs::remove_dir_all(&out).with_context(|| format!("clearing {}", out.display()))?;
    }
    let cfg = SynthConfig {
        seed: 11,
        n_subjects: 3,
        trials_per_class: 10,
        ..SynthConfig::default()
    };
    let manifest = generate_synthetic_dataset(&cfg, &out)?;
    println!("wrote {} trials to {}", manifest.records.len(), out.display());

    let ds = load_dataset(&out.join("manifest.csv"))?;
    for subject in ds.subjects() {
        let trials = ds.trials_of(&subject);
        let left = trials.iter().filter(|t| t.label == Label::Left).count();
        let mut sessions: Vec<&str> = trials.iter().map(|t| t.session_id.as_str()).collect();
        sessions.dedup();
        println!("{subject}: {} trials ({left} left), sessions {}", trials.len(), sessions.join(" "));
    }
    println!("rejected rows: {}", ds.rejected.len());
    Ok(())
}
