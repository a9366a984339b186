use crate::matrix::Matrix;

/// Adaptive-moment optimiser with decoupled weight decay (AdamW).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    /// Zeroed moments shaped like `params`.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let m: Vec<Matrix> = params
            .into_iter()
            .map(|p| Matrix::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            v: m.clone(),
            m,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One update. A `None` gradient is treated as zero.
    pub fn update(
        &mut self,
        params: Vec<&mut Matrix>,
        grads: &[Option<Matrix>],
        lr: f64,
        weight_decay: f64,
    ) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let p = p.as_mut_slice();
            let (m, v) = (m.as_mut_slice(), v.as_mut_slice());
            match g {
                Some(g) => {
                    for (((pv, &gv), mv), vv) in p.iter_mut().zip(g.as_slice()).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *pv -= lr * weight_decay * *pv;
                        *mv = b1 * *mv + (1.0 - b1) * gv;
                        *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                        *pv -= lr * (*mv / bc1) / ((*vv / bc2).sqrt() + eps);
                    }
                }
                None => {
                    for ((pv, mv), vv) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()) {
                        *pv -= lr * weight_decay * *pv;
                        *mv *= b1;
                        *vv *= b2;
                        *pv -= lr * (*mv / bc1) / ((*vv / bc2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Matrix::from_rows(&[[1.0, -1.0]]);
        let mut opt = OptimizerState::new([&p]);
        let g = Matrix::from_rows(&[[0.5, -2.0]]);
        opt.update(vec![&mut p], &[Some(g)], 0.1, 0.0);
        // Bias-corrected first step is lr·sign(g) up to eps.
        assert!((p[(0, 0)] - 0.9).abs() < 1e-6);
        assert!((p[(0, 1)] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn decoupled_decay_shrinks_without_gradient() {
        let mut p = Matrix::from_rows(&[[2.0]]);
        let mut opt = OptimizerState::new([&p]);
        opt.update(vec![&mut p], &[None], 0.1, 0.5);
        assert!((p[(0, 0)] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn zero_lr_is_identity() {
        let orig = Matrix::from_rows(&[[0.3, 4.0]]);
        let mut p = orig.clone();
        let mut opt = OptimizerState::new([&p]);
        for _ in 0..5 {
            opt.update(vec![&mut p], &[Some(Matrix::from_rows(&[[1.0, -3.0]]))], 0.0, 0.0);
        }
        assert_eq!(p, orig);
    }
}
