//! Saves a network to the binary checkpoint format, reads it back and
//! shows that the restored network predicts identically.

use anyhow::{ensure, Result};
use eeg_fewshot::data::{sample_training_episode, synthesize_trials, ClassPools, EpisodeSpec, SynthConfig};
use eeg_fewshot::model::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointHeader, ModelConfig, RelationNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn main() -> Result<()> {
    let net = RelationNetwork::new(ModelConfig::reduced(), 9)?;
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            model: net.config().clone(),
            iteration: 0,
            val_loss: None,
            seed_lineage: vec![("model".into(), 9)],
            fold: None,
            test_subject: None,
            run_config: serde_json::Value::Null,
            crate_version: env!("CARGO_PKG_VERSION").into(),
        },
        params: net.params().clone(),
    };
    let path = std::env::temp_dir().join("eeg-fewshot-example.ckpt");
    write_checkpoint(&path, &ckpt)?;
    let bytes = std::fs::read(&path)?;
    let hash: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    println!("{}: {} bytes, sha256 {hash}", path.display(), bytes.len());

    let back = read_checkpoint(&path)?;
    println!("iteration {}, {} tensors", back.header.iteration, back.params.len());
    for (name, t) in back.params.iter().take(6) {
        println!("  {name} {:?}", t.shape());
    }
    println!("  ...");

    let trials = synthesize_trials(&SynthConfig {
        seed: 2,
        n_subjects: 2,
        trials_per_class: 6,
        ..SynthConfig::default()
    })?;
    let pools = ClassPools::new(2, trials.into_iter().map(Into::into));
    let ep = sample_training_episode(&pools, &EpisodeSpec::two_way(2), &mut ChaCha8Rng::seed_from_u64(0))?;
    let (a, _) = net.predict(&ep)?;
    let (b, _) = back.network()?.predict(&ep)?;
    ensure!(a.relation_scores == b.relation_scores, "restored network disagrees");
    println!("restored network reproduces scores {:?}", b.relation_scores);
    Ok(())
}
