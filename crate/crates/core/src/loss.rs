//! Scaled cosine error and the two reconstruction objectives built on it.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::LossError;
use crate::matrix::{dot, FeatureMatrix};
use crate::model::MaskPlan;

/// Norm guard for cosine similarities.
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda: f64,
    pub eps: f64,
}

impl LossConfig {
    pub fn new(gamma1: f64, gamma2: f64, lambda: f64) -> Result<Self, LossError> {
        let cfg = Self {
            gamma1,
            gamma2,
            lambda,
            eps: COSINE_EPS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Scaling exponents must be at least 1 (some published settings use
    /// exactly 1) and `lambda` must lie in `[0, 1]`.
    pub fn validate(&self) -> Result<(), LossError> {
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(LossError::Config(format!("{name}={g} must be >= 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(LossError::Config(format!("lambda={} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

/// Mean over `rows` of `(1 − cos(p_i, t_i))^gamma`.
///
/// `target` is a constant. Rows with norm below `eps` have cosine 0, so they
/// contribute exactly 1.
pub fn sce(
    tape: &mut Tape,
    pred: Var,
    target: &FeatureMatrix,
    rows: &[usize],
    gamma: f64,
    eps: f64,
) -> Result<Var, LossError> {
    if rows.is_empty() {
        return Err(LossError::EmptyRows("sce"));
    }
    let p = tape.gather_rows(pred, rows)?;
    let p = tape.row_normalize_l2(p, eps)?;
    let t = tape.constant(target.select_rows(rows).row_normalized(eps));
    let prod = tape.mul(p, t)?;
    let cos = tape.row_sum(prod)?;
    let neg = tape.scale(cos, -1.0)?;
    let err = tape.add_scalar(neg, 1.0)?;
    let err = tape.powf(err, gamma)?;
    Ok(tape.mean(err)?)
}

/// Feature reconstruction error on the masked nodes.
pub fn feature_loss(
    tape: &mut Tape,
    z_hat: Var,
    x: &FeatureMatrix,
    plan: &MaskPlan,
    gamma1: f64,
) -> Result<Var, LossError> {
    let rows = plan.masked_nodes();
    if rows.is_empty() {
        return Err(LossError::EmptyRows("feature_loss"));
    }
    sce(tape, z_hat, x, &rows, gamma1, COSINE_EPS)
}

/// Discrepancy reconstruction error on the unmasked nodes, averaged over
/// those nodes.
pub fn discrepancy_loss(
    tape: &mut Tape,
    z_d: Var,
    x_d: &FeatureMatrix,
    plan: &MaskPlan,
    gamma2: f64,
) -> Result<Var, LossError> {
    let rows = plan.unmasked_nodes();
    if rows.is_empty() {
        return Err(LossError::EmptyRows("discrepancy_loss"));
    }
    sce(tape, z_d, x_d, &rows, gamma2, COSINE_EPS)
}

/// `(1 − λ)·L_f + λ·L_d`.
pub fn total_loss(tape: &mut Tape, lf: Var, ld: Var, lambda: f64) -> Result<Var, LossError> {
    let a = tape.scale(lf, 1.0 - lambda)?;
    let b = tape.scale(ld, lambda)?;
    Ok(tape.add(a, b)?)
}

/// Both sides of the pull/push expansion of the discrepancy objective for one
/// node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullPush {
    /// `⟨z, x_i − Σ_j x_j⟩`.
    pub lhs: f64,
    /// `−½‖z − x_i‖² + Σ_j ½‖z − x_j‖²`.
    pub pull_push: f64,
    /// `(k − 1)(‖z‖² + 1)/2` for `k` neighbours; `lhs = pull_push − offset`.
    pub offset: f64,
}

/// Evaluates the pull/push decomposition for unit-norm `x_i` and neighbours.
///
/// Expanding `‖z − x‖² = ‖z‖² − 2⟨z, x⟩ + 1` for unit `x` gives
/// `pull_push = lhs + (k − 1)(‖z‖² + 1)/2`.
pub fn pull_push_identity_check(
    z: &[f64],
    x_i: &[f64],
    neighbors: &[&[f64]],
) -> Result<PullPush, LossError> {
    const UNIT_TOL: f64 = 1e-9;
    for v in std::iter::once(x_i).chain(neighbors.iter().copied()) {
        let norm = dot(v, v).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(LossError::NotNormalized(norm));
        }
    }
    let sq_dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum() };
    let lhs = dot(z, x_i) - neighbors.iter().map(|x_j| dot(z, x_j)).sum::<f64>();
    let pull_push =
        -0.5 * sq_dist(z, x_i) + neighbors.iter().map(|x_j| 0.5 * sq_dist(z, x_j)).sum::<f64>();
    let k = neighbors.len() as f64;
    let offset = (k - 1.0) * (dot(z, z) + 1.0) / 2.0;
    Ok(PullPush {
        lhs,
        pull_push,
        offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn sce_value(p: Matrix, t: &Matrix, rows: &[usize], gamma: f64) -> f64 {
        let mut tape = Tape::new();
        let pv = tape.param(p);
        let l = sce(&mut tape, pv, t, rows, gamma, COSINE_EPS).unwrap();
        tape.scalar(l)
    }

    #[test]
    fn sce_examples() {
        let t = Matrix::from_rows(&[[1.0, 0.0]]);
        assert!(sce_value(Matrix::from_rows(&[[2.0, 0.0]]), &t, &[0], 3.0).abs() < 1e-15);
        assert!((sce_value(Matrix::from_rows(&[[0.0, 5.0]]), &t, &[0], 1.0) - 1.0).abs() < 1e-15);
        // cos = 0.5
        let p = Matrix::from_rows(&[[0.5, 3f64.sqrt() / 2.0]]);
        assert!((sce_value(p, &t, &[0], 3.0) - 0.125).abs() < 1e-12);
    }

    #[test]
    fn zero_prediction_row_counts_as_orthogonal() {
        let t = Matrix::from_rows(&[[1.0, 0.0]]);
        assert_eq!(sce_value(Matrix::zeros(1, 2), &t, &[0], 2.0), 1.0);
    }

    #[test]
    fn empty_rows_are_rejected() {
        let mut tape = Tape::new();
        let p = tape.param(Matrix::zeros(1, 1));
        assert!(matches!(
            sce(&mut tape, p, &Matrix::zeros(1, 1), &[], 2.0, COSINE_EPS),
            Err(LossError::EmptyRows(_))
        ));
        let none = MaskPlan {
            masked: vec![false],
            seed: 0,
        };
        assert!(feature_loss(&mut tape, p, &Matrix::zeros(1, 1), &none, 3.0).is_err());
        let all = MaskPlan {
            masked: vec![true],
            seed: 0,
        };
        assert!(discrepancy_loss(&mut tape, p, &Matrix::zeros(1, 1), &all, 3.0).is_err());
    }

    #[test]
    fn feature_and_discrepancy_losses_use_complementary_rows() {
        let plan = MaskPlan {
            masked: vec![true, false],
            seed: 0,
        };
        let target = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        // Row 0 matches the target, row 1 is orthogonal to it.
        let pred = Matrix::from_rows(&[[3.0, 0.0], [0.0, 1.0]]);
        let mut tape = Tape::new();
        let p = tape.param(pred);
        let lf = feature_loss(&mut tape, p, &target, &plan, 3.0).unwrap();
        let ld = discrepancy_loss(&mut tape, p, &target, &plan, 3.0).unwrap();
        assert!(tape.scalar(lf).abs() < 1e-15);
        assert!((tape.scalar(ld) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn total_loss_examples() {
        let mut tape = Tape::new();
        let lf = tape.constant(Matrix::filled(1, 1, 0.2));
        let ld = tape.constant(Matrix::filled(1, 1, 0.4));
        let t0 = total_loss(&mut tape, lf, ld, 0.0).unwrap();
        let t1 = total_loss(&mut tape, lf, ld, 1.0).unwrap();
        let th = total_loss(&mut tape, lf, ld, 0.5).unwrap();
        assert_eq!(tape.scalar(t0), 0.2);
        assert_eq!(tape.scalar(t1), 0.4);
        assert!((tape.scalar(th) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn loss_config_ranges() {
        assert!(LossConfig::new(3.0, 6.0, 0.1).is_ok());
        assert!(LossConfig::new(3.0, 1.0, 0.4).is_ok());
        assert!(LossConfig::new(0.5, 3.0, 0.1).is_err());
        assert!(LossConfig::new(3.0, 3.0, 1.5).is_err());
    }

    #[test]
    fn pull_push_examples() {
        let x = [0.6, 0.8];
        let r = pull_push_identity_check(&x, &x, &[]).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        let r = pull_push_identity_check(&[0.3, -2.0], &x, &[&x]).unwrap();
        assert!(r.lhs.abs() < 1e-15);
        assert!(pull_push_identity_check(&x, &[1.0, 1.0], &[]).is_err());
    }
}
