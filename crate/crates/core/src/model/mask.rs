use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{FeatureMatrix, Matrix};

/// Which nodes have their features hidden in the masked forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPlan {
    pub masked: Vec<bool>,
    pub seed: u64,
}

impl MaskPlan {
    pub fn len(&self) -> usize {
        self.masked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masked.is_empty()
    }

    pub fn masked_nodes(&self) -> Vec<usize> {
        (0..self.masked.len()).filter(|&i| self.masked[i]).collect()
    }

    pub fn unmasked_nodes(&self) -> Vec<usize> {
        (0..self.masked.len()).filter(|&i| !self.masked[i]).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }
}

/// Masks each node independently with probability `mask_ratio`.
pub fn sample_mask(n: usize, mask_ratio: f64, seed: u64) -> MaskPlan {
    assert!(
        (0.0..=1.0).contains(&mask_ratio),
        "mask_ratio {mask_ratio} outside [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masked = (0..n).map(|_| rng.random::<f64>() < mask_ratio).collect();
    MaskPlan { masked, seed }
}

/// Copy of `x` with masked rows zeroed.
pub fn apply_mask(x: &FeatureMatrix, plan: &MaskPlan) -> FeatureMatrix {
    assert_eq!(x.rows(), plan.len(), "mask length must match row count");
    let mut out: Matrix = x.clone();
    for (i, _) in plan.masked.iter().enumerate().filter(|(_, &m)| m) {
        out.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
    }
    out
}
