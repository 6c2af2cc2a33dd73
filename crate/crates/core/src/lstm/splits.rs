use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LstmError;
use crate::Phase;

const MAX_ATTEMPTS: usize = 10_000;

/// Indices into the shot list. Both sides are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified splits whose training sets jointly cover every shot.
///
/// Each phase is drawn independently and redrawn until its own shots are all
/// covered, so a failure in one phase never discards the others.
pub fn make_splits(labels: &[Phase], seed: u64, cycles: usize, train_per_class: usize) -> Result<Vec<Split>, LstmError> {
    if cycles == 0 || train_per_class == 0 {
        return Err(LstmError::InvalidConfig("cycles and train_per_class must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_sets: Vec<Vec<usize>> = vec![Vec::new(); cycles];
    for phase in Phase::ALL {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == phase).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 * train_per_class {
            return Err(LstmError::InsufficientShots {
                phase,
                available: members.len(),
                required: 2 * train_per_class,
            });
        }
        if cycles * train_per_class < members.len() {
            return Err(LstmError::CoverageUnreachable { phase, attempts: 0 });
        }
        let mut chosen = None;
        for _ in 0..MAX_ATTEMPTS {
            let draws: Vec<Vec<usize>> = (0..cycles)
                .map(|_| {
                    let mut m = members.clone();
                    m.shuffle(&mut rng);
                    m.truncate(train_per_class);
                    m
                })
                .collect();
            let mut covered = vec![false; labels.len()];
            draws.iter().flatten().for_each(|&i| covered[i] = true);
            if members.iter().all(|&i| covered[i]) {
                chosen = Some(draws);
                break;
            }
        }
        let draws = chosen.ok_or(LstmError::CoverageUnreachable {
            phase,
            attempts: MAX_ATTEMPTS,
        })?;
        for (set, draw) in train_sets.iter_mut().zip(draws) {
            set.extend(draw);
        }
    }
    Ok(train_sets
        .into_iter()
        .map(|mut train| {
            train.sort_unstable();
            let mut in_train = vec![false; labels.len()];
            train.iter().for_each(|&i| in_train[i] = true);
            let test = (0..labels.len()).filter(|&i| !in_train[i]).collect();
            Split { train, test }
        })
        .collect())
}
