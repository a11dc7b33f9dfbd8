use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::pose::Dataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Holdout {
    /// The last `n` participant ids in sorted order.
    LastN(usize),
    Ids(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Samples of the pooled participants are shuffled together.
    WithinParticipantRandom,
    /// Whole participants go to either train or test.
    ByParticipant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub holdout: Holdout,
    pub train_fraction: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            holdout: Holdout::LastN(4),
            train_fraction: 0.8,
            seed: 0,
            mode: SplitMode::WithinParticipantRandom,
        }
    }
}

/// Sample indices of the three parts, each in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub holdout: Vec<usize>,
    pub holdout_ids: Vec<String>,
}

impl Split {
    pub fn parts(&self, dataset: &Dataset) -> (Dataset, Dataset, Dataset) {
        (
            dataset.subset(&self.train),
            dataset.subset(&self.test),
            dataset.subset(&self.holdout),
        )
    }
}

pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<Split, EvalError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(EvalError::Split(format!(
            "train fraction {} must lie in (0, 1)",
            spec.train_fraction
        )));
    }
    let participants: Vec<String> = dataset.participants().into_iter().map(String::from).collect();
    let holdout_ids: Vec<String> = match &spec.holdout {
        Holdout::LastN(n) => {
            if *n > participants.len() {
                return Err(EvalError::Split(format!(
                    "cannot hold out {n} of {} participants",
                    participants.len()
                )));
            }
            participants[participants.len() - n..].to_vec()
        }
        Holdout::Ids(ids) => {
            if let Some(missing) = ids.iter().find(|id| !participants.contains(id)) {
                return Err(EvalError::Split(format!("unknown participant `{missing}`")));
            }
            let mut ids = ids.clone();
            ids.sort();
            ids.dedup();
            ids
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut holdout = Vec::new();
    let mut pool = Vec::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        if holdout_ids.contains(&s.frame.participant_id) {
            holdout.push(i);
        } else {
            pool.push(i);
        }
    }
    let (mut train, mut test) = match spec.mode {
        SplitMode::WithinParticipantRandom => {
            let mut shuffled = pool.clone();
            shuffled.shuffle(&mut rng);
            let n_train = (spec.train_fraction * shuffled.len() as f64).round() as usize;
            let test = shuffled.split_off(n_train);
            (shuffled, test)
        }
        SplitMode::ByParticipant => {
            let mut ids: Vec<&String> = participants.iter().filter(|p| !holdout_ids.contains(p)).collect();
            ids.shuffle(&mut rng);
            let n_train = (spec.train_fraction * ids.len() as f64).round() as usize;
            let train_ids = &ids[..n_train];
            pool.into_iter()
                .partition(|&i| train_ids.contains(&&dataset.samples[i].frame.participant_id))
        }
    };
    if train.is_empty() {
        return Err(EvalError::Split("training part is empty".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        test,
        holdout,
        holdout_ids,
    })
}
