//! Linear-probe evaluation: multinomial logistic regression on frozen
//! embeddings.
//!
//! The solver is plain accelerated gradient descent from a zero start, with
//! the step size taken from the spectral norm of the design matrix. Both are
//! equivariant under orthogonal transforms of the embedding, so probe
//! accuracy is invariant to rotating the representation space.

use super::Split;
use crate::error::EvalError;
use crate::graph::LabelVector;
use crate::matrix::{dot, Matrix};

/// Default L2 penalty on the probe weights.
pub const DEFAULT_L2: f64 = 1e-3;
/// Default number of gradient iterations.
pub const DEFAULT_ITERS: usize = 1000;
const EVAL_EVERY: usize = 10;

/// Weights (`dim x classes`) and bias of a fitted probe.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LogisticModel {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let c = self.bias.len();
        let mut out = self.bias.clone();
        for (k, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(&self.weights.as_slice()[k * c..(k + 1) * c]) {
                *o += xv * w;
            }
        }
        out
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (k, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = k;
            }
        }
        best
    }

    pub fn accuracy(&self, h: &Matrix, y: &LabelVector, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let hits = idx.iter().filter(|&&i| self.predict(h.row(i)) == y.get(i)).count();
        hits as f64 / idx.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub test_accuracy: f64,
    pub val_accuracy: f64,
    /// Iteration whose weights were selected on validation accuracy.
    pub best_iter: usize,
}

/// Largest eigenvalue of `AᵀA / m` for the bias-augmented rows of `h`.
fn lipschitz(h: &Matrix, rows: &[usize]) -> f64 {
    let d = h.cols() + 1;
    let m = rows.len() as f64;
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for &i in rows {
            let r = h.row(i);
            let s = dot(r, &v[..d - 1]) + v[d - 1];
            for (o, &x) in out.iter_mut().zip(r) {
                *o += s * x;
            }
            out[d - 1] += s;
        }
        out.iter_mut().for_each(|o| *o /= m);
        out
    };
    // Start from Aᵀ1, which rotates along with the embedding.
    let mut v = vec![0.0; d];
    for &i in rows {
        for (o, &x) in v.iter_mut().zip(h.row(i)) {
            *o += x;
        }
        v[d - 1] += 1.0;
    }
    let mut eig = 0.0;
    for _ in 0..100 {
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w = apply(&v);
        let next = dot(&v, &w);
        v = w;
        if (next - eig).abs() <= 1e-10 * next.abs() {
            eig = next;
            break;
        }
        eig = next;
    }
    eig.max(1e-12)
}

fn check_inputs(h: &Matrix, y: &LabelVector, idx: &[usize]) -> Result<(), EvalError> {
    if h.rows() != y.len() {
        return Err(crate::error::ShapeError::new(
            "linear_probe",
            format!("{} embeddings for {} labels", h.rows(), y.len()),
        )
        .into());
    }
    if !h.is_finite() {
        return Err(EvalError::InvalidSplit("embeddings contain non-finite values".into()));
    }
    let first = y.get(idx[0]);
    if idx.iter().all(|&i| y.get(i) == first) {
        return Err(EvalError::SingleClass);
    }
    Ok(())
}

/// Fits a probe on `train`, calling `on_eval(iter, model)` every few
/// iterations and at the end.
fn fit_with(
    h: &Matrix,
    y: &LabelVector,
    train: &[usize],
    l2: f64,
    iters: usize,
    mut on_eval: impl FnMut(usize, &LogisticModel),
) -> LogisticModel {
    let d = h.cols();
    let c = y.classes();
    let m = train.len() as f64;
    let step = 1.0 / (0.5 * lipschitz(h, train) + l2);

    let mut cur = LogisticModel {
        weights: Matrix::zeros(d, c),
        bias: vec![0.0; c],
    };
    let mut look = cur.clone();
    let mut grad_w = Matrix::zeros(d, c);
    let mut grad_b = vec![0.0; c];
    let mut probs = vec![0.0; c];
    for it in 1..=iters {
        grad_w.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        grad_b.iter_mut().for_each(|v| *v = 0.0);
        for &i in train {
            let x = h.row(i);
            let logits = look.logits(x);
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (p, &l) in probs.iter_mut().zip(&logits) {
                *p = (l - max).exp();
                z += *p;
            }
            probs.iter_mut().for_each(|p| *p /= z);
            probs[y.get(i)] -= 1.0;
            for (k, &xv) in x.iter().enumerate() {
                let row = &mut grad_w.as_mut_slice()[k * c..(k + 1) * c];
                for (g, &p) in row.iter_mut().zip(&probs) {
                    *g += xv * p;
                }
            }
            for (g, &p) in grad_b.iter_mut().zip(&probs) {
                *g += p;
            }
        }
        // Accelerated step from the look-ahead point.
        let mut next = look.clone();
        for ((w, &g), &lw) in next
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(grad_w.as_slice())
            .zip(look.weights.as_slice())
        {
            *w = lw - step * (g / m + l2 * lw);
        }
        for ((b, &g), &lb) in next.bias.iter_mut().zip(&grad_b).zip(&look.bias) {
            *b = lb - step * g / m;
        }
        let prev = std::mem::replace(&mut cur, next);
        let mu = (it as f64 - 1.0) / (it as f64 + 2.0);
        for ((l, &c1), &c0) in look
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(cur.weights.as_slice())
            .zip(prev.weights.as_slice())
        {
            *l = c1 + mu * (c1 - c0);
        }
        for ((l, &c1), &c0) in look.bias.iter_mut().zip(&cur.bias).zip(&prev.bias) {
            *l = c1 + mu * (c1 - c0);
        }
        if it % EVAL_EVERY == 0 || it == iters {
            on_eval(it, &cur);
        }
    }
    cur
}

/// Fits multinomial logistic regression on the `train` rows and returns the
/// final model.
pub fn fit_logistic(
    h: &Matrix,
    y: &LabelVector,
    train: &[usize],
    l2: f64,
    iters: usize,
) -> Result<LogisticModel, EvalError> {
    if train.is_empty() {
        return Err(EvalError::InvalidSplit("empty training set".into()));
    }
    check_inputs(h, y, train)?;
    Ok(fit_with(h, y, train, l2, iters, |_, _| {}))
}

/// Trains a probe on `split.train`, selects the iterate with the best
/// validation accuracy (the final one when there is no validation set) and
/// reports its test accuracy.
pub fn linear_probe(
    h: &Matrix,
    y: &LabelVector,
    split: &Split,
    l2: f64,
    iters: usize,
) -> Result<ProbeResult, EvalError> {
    split.validate(h.rows())?;
    check_inputs(h, y, &split.train)?;
    let mut best: Option<(f64, usize, f64)> = None;
    fit_with(h, y, &split.train, l2, iters, |it, model| {
        let val = if split.val.is_empty() {
            it as f64
        } else {
            model.accuracy(h, y, &split.val)
        };
        if best.is_none_or(|(b, _, _)| val > b) {
            best = Some((val, it, model.accuracy(h, y, &split.test)));
        }
    });
    let (val, best_iter, test) = best.expect("at least one evaluation");
    Ok(ProbeResult {
        test_accuracy: test,
        val_accuracy: if split.val.is_empty() { f64::NAN } else { val },
        best_iter,
    })
}
