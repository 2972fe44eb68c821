//! One forward pass of the relation network: attention weights per
//! support trial, relation scores and the episode loss.

use anyhow::Result;
use eeg_fewshot::data::{sample_training_episode, synthesize_trials, ClassPools, EpisodeSpec, SynthConfig};
use eeg_fewshot::model::{ModelConfig, RelationNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let trials = synthesize_trials(&SynthConfig {
        seed: 5,
        n_subjects: 2,
        trials_per_class: 12,
        ..SynthConfig::default()
    })?;
    let pools = ClassPools::new(2, trials.into_iter().map(Into::into));
    let ep = sample_training_episode(&pools, &EpisodeSpec::two_way(3), &mut ChaCha8Rng::seed_from_u64(1))?;

    let cfg = ModelConfig::default();
    let net = RelationNetwork::new(cfg.clone(), 0)?;
    let (t, c) = cfg.embedding.output_shape();
    println!("{} parameters, embedding [{t}, {c}]", net.params().scalar_count());

    let (out, loss) = net.predict(&ep)?;
    for (class, weights) in out.attention_scores.iter().enumerate() {
        let w: Vec<String> = weights.iter().map(|w| format!("{w:.3}")).collect();
        println!("class {class} attention: [{}]", w.join(", "));
    }
    println!("logits {:?}", out.logits);
    println!("scores {:?}, predicted {} (true {})", out.relation_scores, out.predicted_class, ep.query_label);
    println!("loss {loss:.6}");
    Ok(())
}
