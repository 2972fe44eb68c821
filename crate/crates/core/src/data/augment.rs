use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Trial, TrialOrigin, N_ELECTRODES, TRIAL_SAMPLES};

/// Training-set augmentation settings. `per_group = 0` disables it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Equal time segments used by recombination.
    pub segments: usize,
    /// New trials generated per (subject, class) group.
    pub per_group: usize,
    /// Band swapped in the second stage; `None` picks one at random.
    pub swap_band: Option<usize>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            segments: 5,
            per_group: 0,
            swap_band: None,
        }
    }
}

fn same_class(trials: &[&Trial]) -> Result<(), DataError> {
    match trials.split_first() {
        None => Err(DataError::Usage("augmentation needs at least one source trial".into())),
        Some((first, rest)) => {
            if let Some(other) = rest.iter().find(|t| t.label != first.label) {
                Err(DataError::Usage(format!(
                    "augmentation sources mix classes: `{}` is {:?}, `{}` is {:?}",
                    first.trial_id, first.label, other.trial_id, other.label
                )))
            } else {
                Ok(())
            }
        }
    }
}

/// Cuts the time axis into `segments` equal slots (the last absorbs any
/// remainder) and fills each slot from the same slot of a randomly chosen
/// source. Label, subject and session come from the first source.
pub fn augment_time_recombination<R: Rng + ?Sized>(
    sources: &[Arc<Trial>],
    segments: usize,
    rng: &mut R,
) -> Result<Trial, DataError> {
    let refs: Vec<&Trial> = sources.iter().map(Arc::as_ref).collect();
    same_class(&refs)?;
    if segments == 0 || segments > TRIAL_SAMPLES {
        return Err(DataError::Usage(format!("segment count must be in 1..={TRIAL_SAMPLES}, got {segments}")));
    }
    let seg_len = TRIAL_SAMPLES / segments;
    let mut samples = vec![0.0; TRIAL_SAMPLES * N_ELECTRODES];
    let mut segment_sources = Vec::with_capacity(segments);
    for slot in 0..segments {
        let src = refs[rng.random_range(0..refs.len())];
        let start = slot * seg_len;
        let end = if slot + 1 == segments { TRIAL_SAMPLES } else { start + seg_len };
        let range = start * N_ELECTRODES..end * N_ELECTRODES;
        samples[range.clone()].copy_from_slice(&src.samples()[range]);
        segment_sources.push(src.trial_id.clone());
    }
    let first = refs[0];
    let id = format!("{}+tr{:08x}", first.trial_id, rng.random::<u32>());
    Ok(Trial::new(samples, first.label, first.subject_id.clone(), first.session_id.clone(), id)?
        .with_origin(TrialOrigin::TimeRecombination { segment_sources }))
}

/// Rebuilds `base` from its three band components with band `band`
/// taken from `donor` instead.
pub fn augment_frequency_swap(base: &Trial, donor: &Trial, band: usize) -> Result<Trial, DataError> {
    same_class(&[base, donor])?;
    let stack = base.bands();
    if band >= stack.n_bands() {
        return Err(DataError::Usage(format!("band index {band} out of range 0..{}", stack.n_bands())));
    }
    let samples = stack.with_band_from(band, donor.bands()).reconstruct();
    let id = format!("{}+fs{}-{}", base.trial_id, band, donor.trial_id);
    Ok(Trial::new(samples, base.label, base.subject_id.clone(), base.session_id.clone(), id)?
        .with_origin(TrialOrigin::FrequencySwap {
            base: base.trial_id.clone(),
            donor: donor.trial_id.clone(),
            band,
        }))
}

/// Two-stage augmentation of a training pool: time recombination within a
/// (subject, class) group, then a one-band swap with another random member
/// of the group. Returns only the new trials.
pub fn augment_pool<R: Rng + ?Sized>(
    trials: &[Arc<Trial>],
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<Vec<Arc<Trial>>, DataError> {
    if cfg.per_group == 0 {
        return Ok(Vec::new());
    }
    let mut groups: BTreeMap<(String, usize), Vec<Arc<Trial>>> = BTreeMap::new();
    for t in trials {
        groups
            .entry((t.subject_id.clone(), t.class_index()))
            .or_default()
            .push(Arc::clone(t));
    }
    let mut out = Vec::new();
    for ((subject, class), members) in &groups {
        for n in 0..cfg.per_group {
            let recombined = augment_time_recombination(members, cfg.segments, rng)?;
            let donor = &members[rng.random_range(0..members.len())];
            let band = match cfg.swap_band {
                Some(b) => b,
                None => rng.random_range(0..recombined.bands().n_bands()),
            };
            let mut t = augment_frequency_swap(&recombined, donor, band)?;
            t.trial_id = format!("aug-{subject}-c{class}-{n:04}");
            out.push(Arc::new(t));
        }
    }
    Ok(out)
}
