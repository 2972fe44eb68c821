//! Compares back-propagated gradients with central differences on a few
//! entries of every parameter tensor of the reduced network.

use anyhow::Result;
use eeg_fewshot::data::{sample_training_episode, synthesize_trials, ClassPools, Episode, EpisodeSpec, SynthConfig};
use eeg_fewshot::model::{ModelConfig, RelationNetwork};
use eeg_fewshot::numcore::{Graph, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn central(net: &mut RelationNetwork, ep: &Episode, name: &str, value: &Tensor, i: usize, h: f64) -> Result<f64> {
    let mut loss_at = |delta: f64| -> Result<f64> {
        let mut shifted = value.data().to_vec();
        shifted[i] += delta;
        net.params_mut().set(name, Tensor::new(value.shape().to_vec(), shifted)?)?;
        Ok(net.predict(ep)?.1)
    };
    let (up, down) = (loss_at(h)?, loss_at(-h)?);
    net.params_mut().set(name, value.clone())?;
    Ok((up - down) / (2.0 * h))
}

fn main() -> Result<()> {
    let trials = synthesize_trials(&SynthConfig {
        seed: 13,
        n_subjects: 2,
        trials_per_class: 6,
        ..SynthConfig::default()
    })?;
    let pools = ClassPools::new(2, trials.into_iter().map(Into::into));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ep = sample_training_episode(&pools, &EpisodeSpec::two_way(2), &mut rng)?;

    let mut net = RelationNetwork::new(ModelConfig::reduced(), 0)?;
    // Positive biases so no ReLU layer starts out dead.
    let biases: Vec<String> = net.params().names().filter(|n| n.ends_with(".bias")).map(String::from).collect();
    for name in biases {
        let n = net.params().get(&name).expect("listed").len();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.1)).collect();
        net.params_mut().set(&name, Tensor::vector(v)?)?;
    }

    let mut g = Graph::new();
    let f = net.forward_episode(&mut g, &ep)?;
    let grads = g.backward(f.loss, net.params())?;

    let names: Vec<String> = net.params().names().map(String::from).collect();
    let mut worst = (0.0, String::new());
    for name in &names {
        let value = net.params().get(name).expect("listed").clone();
        let mut line = Vec::new();
        for _ in 0..3 {
            let i = rng.random_range(0..value.len());
            let analytic = grads.get(name).expect("every parameter").data()[i];
            // A step that crosses a ReLU or max-pool switch gives a wrong
            // difference quotient; a smaller step clears it.
            let mut h = 1e-6;
            let (numeric, rel) = loop {
                let numeric = central(&mut net, &ep, name, &value, i, h)?;
                // Loss rounding is about 1e-15, so differences below 1e-15/h
                // are noise.
                let rel =
                    ((analytic - numeric).abs() - 1e-15 / h).max(0.0) / analytic.abs().max(numeric.abs()).max(1e-7);
                if rel < 1e-4 || h < 1e-7 {
                    break (numeric, rel);
                }
                h /= 10.0;
            };
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}]"));
            }
            line.push(format!("{analytic:+.3e}/{numeric:+.3e}"));
        }
        println!("{name:<28} {}", line.join("  "));
    }
    match worst {
        (0.0, _) => println!("all sampled entries agree to rounding"),
        (rel, at) => println!("worst relative error {rel:.2e} at {at}"),
    }
    Ok(())
}
