use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Trial};

/// One cross-subject fold: a held-out test subject and, for every other
/// subject, its training sessions and its validation session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub index: usize,
    pub test_subject: String,
    pub train_subjects: Vec<String>,
    /// Training sessions per training subject.
    pub train_sessions: BTreeMap<String, Vec<String>>,
    /// Validation session per training subject.
    pub val_sessions: BTreeMap<String, String>,
}

impl FoldPlan {
    fn is_train(&self, t: &Trial) -> bool {
        self.train_sessions
            .get(&t.subject_id)
            .is_some_and(|s| s.contains(&t.session_id))
    }

    fn is_val(&self, t: &Trial) -> bool {
        self.val_sessions.get(&t.subject_id) == Some(&t.session_id)
    }

    pub fn train_trials(&self, dataset: &Dataset) -> Vec<Arc<Trial>> {
        dataset.trials.iter().filter(|t| self.is_train(t)).cloned().collect()
    }

    pub fn val_trials(&self, dataset: &Dataset) -> Vec<Arc<Trial>> {
        dataset.trials.iter().filter(|t| self.is_val(t)).cloned().collect()
    }

    /// Training plus validation trials; episodes during training draw from both.
    pub fn episode_pool(&self, dataset: &Dataset) -> Vec<Arc<Trial>> {
        dataset
            .trials
            .iter()
            .filter(|t| self.is_train(t) || self.is_val(t))
            .cloned()
            .collect()
    }

    pub fn test_trials(&self, dataset: &Dataset) -> Vec<Arc<Trial>> {
        dataset.trials_of(&self.test_subject)
    }
}

/// One fold per subject. Each remaining subject's sessions, in order of
/// first appearance, split into training (all but the last) and validation
/// (the last).
pub fn make_folds(dataset: &Dataset) -> Result<Vec<FoldPlan>, DataError> {
    let subjects = dataset.subjects();
    if subjects.len() < 2 {
        return Err(DataError::Fold(format!(
            "cross-subject folds need at least 2 subjects, found {}",
            subjects.len()
        )));
    }
    let mut sessions = BTreeMap::new();
    let mut problems = Vec::new();
    for s in &subjects {
        let list = dataset.sessions_of(s);
        if list.len() < 2 {
            problems.push(DataError::Fold(format!(
                "subject `{s}` has {} session(s); a train/validation split needs at least 2",
                list.len()
            )));
        }
        sessions.insert(s.clone(), list);
    }
    DataError::collect(problems)?;

    Ok(subjects
        .iter()
        .enumerate()
        .map(|(index, test)| {
            let train_subjects: Vec<String> = subjects.iter().filter(|s| *s != test).cloned().collect();
            let mut train_sessions = BTreeMap::new();
            let mut val_sessions = BTreeMap::new();
            for s in &train_subjects {
                let list = &sessions[s];
                let (val, train) = list.split_last().expect("at least two sessions");
                train_sessions.insert(s.clone(), train.to_vec());
                val_sessions.insert(s.clone(), val.clone());
            }
            FoldPlan {
                index,
                test_subject: test.clone(),
                train_subjects,
                train_sessions,
                val_sessions,
            }
        })
        .collect())
}
