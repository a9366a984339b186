use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EvalError;

/// Disjoint train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Random split with the given train and validation fractions; the rest
    /// is test.
    pub fn random(n: usize, train_frac: f64, val_frac: f64, seed: u64) -> Result<Self, EvalError> {
        if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0) {
            return Err(EvalError::InvalidSplit(format!(
                "fractions train={train_frac} val={val_frac}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (n as f64 * train_frac).round() as usize;
        let n_val = (n as f64 * val_frac).round() as usize;
        let split = Self {
            train: order[..n_train].to_vec(),
            val: order[n_train..n_train + n_val].to_vec(),
            test: order[n_train + n_val..].to_vec(),
        };
        split.validate(n)?;
        Ok(split)
    }

    pub fn validate(&self, n: usize) -> Result<(), EvalError> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(EvalError::InvalidSplit("train and test sets must be non-empty".into()));
        }
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n {
                return Err(EvalError::InvalidSplit(format!("node {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(EvalError::InvalidSplit(format!("node {i} appears twice")));
            }
        }
        Ok(())
    }
}
