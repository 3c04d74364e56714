use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of `n` observations to `Q` disjoint folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    q: usize,
    /// Zero-based fold index of every observation.
    assignment: Vec<usize>,
}

/// Seeded random permutation dealt round-robin into `q` folds; fold sizes
/// differ by at most one and the first `n mod q` folds are the larger ones.
pub fn make_fold_plan(n: usize, q: usize, seed: u64) -> Result<FoldPlan> {
    if q < 2 || q > n {
        return Err(Error::InvalidFoldCount { q, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, &obs) in order.iter().enumerate() {
        assignment[obs] = pos % q;
    }
    Ok(FoldPlan { q, assignment })
}

impl FoldPlan {
    pub fn n_folds(&self) -> usize {
        self.q
    }

    pub fn n_obs(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.q];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Observations held out in fold `fold`, ascending.
    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// Observations used for training when `fold` is held out, ascending.
    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}
