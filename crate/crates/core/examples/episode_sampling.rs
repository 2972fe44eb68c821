//! Leave-one-subject-out folds, training episodes and the held-out
//! support/query split on a small synthetic dataset.

use anyhow::Result;
use eeg_fewshot::data::{make_folds, make_test_split, sample_training_episode, synthesize_trials, ClassPools, Dataset, EpisodeSpec, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let ds = Dataset::from_trials(synthesize_trials(&SynthConfig {
        seed: 3,
        n_subjects: 4,
        trials_per_class: 30,
        ..SynthConfig::default()
    })?);
    let folds = make_folds(&ds)?;
    for f in &folds {
        println!(
            "fold {}: test {}, train subjects {:?}, validation sessions {:?}",
            f.index, f.test_subject, f.train_subjects, f.val_sessions
        );
    }

    let fold = &folds[0];
    let pools = ClassPools::new(2, fold.episode_pool(&ds));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ep = sample_training_episode(&pools, &EpisodeSpec::two_way(5), &mut rng)?;
    println!("\n2-way 5-shot episode, query class {} ({}):", ep.query_label, ep.query.trial_id);
    for (c, class) in ep.support.iter().enumerate() {
        let ids: Vec<&str> = class.iter().map(|t| t.trial_id.as_str()).collect();
        println!("  class {c}: {}", ids.join(" "));
    }

    let split = make_test_split(&fold.test_trials(&ds), 2, 20, &mut rng)?;
    let k5 = split.subsample_support(5, &mut rng)?;
    println!(
        "\ntest subject {}: {} support candidates per class, {} queries, 5 drawn per class: {}",
        fold.test_subject,
        split.support[0].len(),
        split.queries.len(),
        k5[0].len()
    );
    Ok(())
}
