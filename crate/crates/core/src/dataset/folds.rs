use rand::seq::SliceRandom;
use serde::Serialize;

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// K disjoint validation sets covering `0..n`, each paired with its
/// complementary training set. Index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    pub folds: Vec<Fold>,
}

/// Shuffles `0..n` with `seed` and deals the permutation round-robin into
/// `k` folds, so fold sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("fold count must satisfy 2 <= k <= n (k={k}, n={n})")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));

    let mut assignment = vec![0usize; n];
    for (pos, &idx) in perm.iter().enumerate() {
        assignment[idx] = pos % k;
    }
    let folds = (0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect();
    Ok(FoldSplit { k, seed, n, folds })
}

impl FoldSplit {
    /// Fold index of every sample.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (f, fold) in self.folds.iter().enumerate() {
            for &i in &fold.validation {
                out[i] = f;
            }
        }
        out
    }

    /// Builds a split from an explicit fold label per sample.
    pub fn from_assignment(assignment: &[usize], k: usize, seed: u64) -> Result<Self> {
        let n = assignment.len();
        if k < 2 || assignment.iter().any(|&a| a >= k) {
            return Err(Error::invalid("fold labels must lie in 0..k with k >= 2"));
        }
        let folds = (0..k)
            .map(|f| {
                let (validation, train): (Vec<usize>, Vec<usize>) =
                    (0..n).partition(|&i| assignment[i] == f);
                Fold { train, validation }
            })
            .collect();
        Ok(FoldSplit { k, seed, n, folds })
    }
}
