use super::{Op, Tape, Var};
use crate::error::{ShapeError, TensorError};
use crate::matrix::{dot, Matrix};

type Result<T> = std::result::Result<T, TensorError>;

fn check_indices(op: &'static str, idx: &[usize], len: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= len) {
        Some(&index) => Err(TensorError::IndexOutOfRange { op, index, len }),
        None => Ok(()),
    }
}

fn head_width(op: &'static str, cols: usize, heads: usize) -> Result<usize> {
    if heads == 0 || !cols.is_multiple_of(heads) {
        return Err(ShapeError::new(op, format!("{cols} columns do not split into {heads} heads")).into());
    }
    Ok(cols / heads)
}

fn scatter_add(x: &Matrix, idx: &[usize], n: usize) -> Matrix {
    let mut out = Matrix::zeros(n, x.cols());
    for (k, &dst) in idx.iter().enumerate() {
        for (o, &v) in out.row_mut(dst).iter_mut().zip(x.row(k)) {
            *o += v;
        }
    }
    out
}

impl Tape {
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push(value, Op::MatMul(a, b), &[a, b], "matmul")
    }

    /// Elementwise sum. `b` may also be a `1 x cols` row vector, which is
    /// broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        let value = if va.shape() == vb.shape() {
            va.zip_map(vb, "add", |x, y| x + y)?
        } else if vb.rows() == 1 && vb.cols() == va.cols() {
            let mut out = va.clone();
            for i in 0..out.rows() {
                for (o, &y) in out.row_mut(i).iter_mut().zip(vb.as_slice()) {
                    *o += y;
                }
            }
            out
        } else {
            return Err(ShapeError::mismatch("add", va.shape(), vb.shape()).into());
        };
        self.push(value, Op::Add(a, b), &[a, b], "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        self.push(value, Op::Sub(a, b), &[a, b], "sub")
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        self.push(value, Op::Mul(a, b), &[a, b], "mul")
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Result<Var> {
        let value = self.value(x).scale(s);
        self.push(value, Op::Scale(x, s), &[x], "scale")
    }

    pub fn add_scalar(&mut self, x: Var, s: f64) -> Result<Var> {
        let value = self.value(x).map(|v| v + s);
        self.push(value, Op::AddScalar(x), &[x], "add_scalar")
    }

    /// Stacks `b` below `a`.
    pub fn concat_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.cols() {
            return Err(ShapeError::mismatch("concat_rows", va.shape(), vb.shape()).into());
        }
        let mut data = Vec::with_capacity(va.len() + vb.len());
        data.extend_from_slice(va.as_slice());
        data.extend_from_slice(vb.as_slice());
        let value = Matrix::from_vec(va.rows() + vb.rows(), va.cols(), data)?;
        self.push(value, Op::ConcatRows(a, b), &[a, b], "concat_rows")
    }

    /// Rows divided by `max(‖row‖, eps)`.
    pub fn row_normalize_l2(&mut self, x: Var, eps: f64) -> Result<Var> {
        let vx = self.value(x);
        let mut value = vx.clone();
        let mut norms = Vec::with_capacity(vx.rows());
        for i in 0..vx.rows() {
            let r = value.row_mut(i);
            let norm = dot(r, r).sqrt().max(eps);
            r.iter_mut().for_each(|v| *v /= norm);
            norms.push(norm);
        }
        self.push(value, Op::RowNormalize { x, norms }, &[x], "row_normalize_l2")
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { slope * v });
        self.push(value, Op::LeakyRelu(x, slope), &[x], "leaky_relu")
    }

    pub fn elu(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { v.exp_m1() });
        self.push(value, Op::Elu(x), &[x], "elu")
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).map(f64::exp);
        self.push(value, Op::Exp(x), &[x], "exp")
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).map(f64::ln);
        self.push(value, Op::Log(x), &[x], "log")
    }

    /// `max(x, 0)^p`, elementwise. Intended for `p >= 1`.
    pub fn powf(&mut self, x: Var, p: f64) -> Result<Var> {
        let value = self.value(x).map(|v| v.max(0.0).powf(p));
        self.push(value, Op::Powf(x, p), &[x], "powf")
    }

    /// Sum of all entries, as a `1 x 1` tensor.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let value = Matrix::filled(1, 1, self.value(x).sum());
        self.push(value, Op::Sum(x), &[x], "sum")
    }

    /// Mean of all entries, as a `1 x 1` tensor.
    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let vx = self.value(x);
        if vx.is_empty() {
            return Err(ShapeError::new("mean", "empty tensor").into());
        }
        let value = Matrix::filled(1, 1, vx.sum() / vx.len() as f64);
        self.push(value, Op::Mean(x), &[x], "mean")
    }

    /// Per-row sums, as a `rows x 1` column.
    pub fn row_sum(&mut self, x: Var) -> Result<Var> {
        let vx = self.value(x);
        let sums = vx.row_iter().map(|r| r.iter().sum()).collect();
        let value = Matrix::from_vec(vx.rows(), 1, sums)?;
        self.push(value, Op::RowSum(x), &[x], "row_sum")
    }

    /// `out[k] = x[idx[k]]`.
    pub fn gather_rows(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let vx = self.value(x);
        check_indices("gather_rows", idx, vx.rows())?;
        let value = vx.select_rows(idx);
        self.push(value, Op::GatherRows { x, idx: idx.to_vec() }, &[x], "gather_rows")
    }

    /// `out[idx[k]] += x[k]` into an `n`-row zero matrix.
    pub fn scatter_add_rows(&mut self, x: Var, idx: &[usize], n: usize) -> Result<Var> {
        let vx = self.value(x);
        if idx.len() != vx.rows() {
            return Err(ShapeError::new(
                "scatter_add_rows",
                format!("{} indices for {} rows", idx.len(), vx.rows()),
            )
            .into());
        }
        check_indices("scatter_add_rows", idx, n)?;
        let value = scatter_add(vx, idx, n);
        self.push(value, Op::ScatterAddRows { x, idx: idx.to_vec() }, &[x], "scatter_add_rows")
    }

    /// Softmax of each column of `logits` within groups of rows sharing a
    /// segment id. Stabilised by subtracting the per-segment maximum.
    pub fn segment_softmax(&mut self, logits: Var, segments: &[usize], n: usize) -> Result<Var> {
        let vl = self.value(logits);
        if segments.len() != vl.rows() {
            return Err(ShapeError::new(
                "segment_softmax",
                format!("{} segment ids for {} rows", segments.len(), vl.rows()),
            )
            .into());
        }
        check_indices("segment_softmax", segments, n)?;
        let cols = vl.cols();
        let mut max = Matrix::filled(n, cols, f64::NEG_INFINITY);
        for (k, &s) in segments.iter().enumerate() {
            for (m, &v) in max.row_mut(s).iter_mut().zip(vl.row(k)) {
                *m = m.max(v);
            }
        }
        let mut value = Matrix::zeros(vl.rows(), cols);
        let mut denom = Matrix::zeros(n, cols);
        for (k, &s) in segments.iter().enumerate() {
            for c in 0..cols {
                let e = (vl[(k, c)] - max[(s, c)]).exp();
                value[(k, c)] = e;
                denom[(s, c)] += e;
            }
        }
        for (k, &s) in segments.iter().enumerate() {
            for c in 0..cols {
                value[(k, c)] /= denom[(s, c)];
            }
        }
        let op = Op::SegmentSoftmax {
            logits,
            segments: segments.to_vec(),
            n,
        };
        self.push(value, op, &[logits], "segment_softmax")
    }

    /// Per-head inner products. `x` is `r x (heads·w)`, `a` is `heads x w`;
    /// `out[i, h] = ⟨x[i, h·w..(h+1)·w], a[h]⟩`.
    pub fn head_dot(&mut self, x: Var, a: Var) -> Result<Var> {
        let (vx, va) = (self.value(x), self.value(a));
        let heads = va.rows();
        let w = head_width("head_dot", vx.cols(), heads)?;
        if va.cols() != w {
            return Err(ShapeError::mismatch("head_dot", vx.shape(), va.shape()).into());
        }
        let mut value = Matrix::zeros(vx.rows(), heads);
        for i in 0..vx.rows() {
            let r = vx.row(i);
            for h in 0..heads {
                value[(i, h)] = dot(&r[h * w..(h + 1) * w], va.row(h));
            }
        }
        self.push(value, Op::HeadDot { x, a }, &[x, a], "head_dot")
    }

    /// Scales each head block of `x` (`r x (heads·w)`) by the matching column
    /// of `weights` (`r x heads`).
    pub fn head_scale(&mut self, x: Var, weights: Var) -> Result<Var> {
        let (vx, vw) = (self.value(x), self.value(weights));
        if vw.rows() != vx.rows() {
            return Err(ShapeError::mismatch("head_scale", vx.shape(), vw.shape()).into());
        }
        let heads = vw.cols();
        let w = head_width("head_scale", vx.cols(), heads)?;
        let mut value = vx.clone();
        for i in 0..vx.rows() {
            let r = value.row_mut(i);
            for h in 0..heads {
                let s = vw[(i, h)];
                r[h * w..(h + 1) * w].iter_mut().for_each(|v| *v *= s);
            }
        }
        self.push(value, Op::HeadScale { x, w: weights }, &[x, weights], "head_scale")
    }

    /// Average of the head blocks: `r x (heads·w)` to `r x w`.
    pub fn head_mean(&mut self, x: Var, heads: usize) -> Result<Var> {
        let vx = self.value(x);
        let w = head_width("head_mean", vx.cols(), heads)?;
        let mut value = Matrix::zeros(vx.rows(), w);
        let inv = 1.0 / heads as f64;
        for i in 0..vx.rows() {
            let r = vx.row(i);
            let o = value.row_mut(i);
            for h in 0..heads {
                for (ov, &v) in o.iter_mut().zip(&r[h * w..(h + 1) * w]) {
                    *ov += v * inv;
                }
            }
        }
        self.push(value, Op::HeadMean { x, heads }, &[x], "head_mean")
    }

    pub(super) fn backprop(&self, id: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[id];
        let val = |v: Var| &self.nodes[v.0].value;
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                if needs(a) {
                    let ga = g.matmul_t(val(b)).expect("shapes fixed at forward");
                    self.accumulate(grads, a, ga);
                }
                if needs(b) {
                    let gb = val(a).t_matmul(g).expect("shapes fixed at forward");
                    self.accumulate(grads, b, gb);
                }
            }
            &Op::Add(a, b) => {
                self.accumulate(grads, a, g.clone());
                if needs(b) {
                    let gb = if val(b).shape() == g.shape() {
                        g.clone()
                    } else {
                        let mut col = Matrix::zeros(1, g.cols());
                        for r in g.row_iter() {
                            for (c, &v) in col.as_mut_slice().iter_mut().zip(r) {
                                *c += v;
                            }
                        }
                        col
                    };
                    self.accumulate(grads, b, gb);
                }
            }
            &Op::Sub(a, b) => {
                self.accumulate(grads, a, g.clone());
                if needs(b) {
                    self.accumulate(grads, b, g.scale(-1.0));
                }
            }
            &Op::Mul(a, b) => {
                if needs(a) {
                    self.accumulate(grads, a, g.zip_map(val(b), "mul", |x, y| x * y).unwrap());
                }
                if needs(b) {
                    self.accumulate(grads, b, g.zip_map(val(a), "mul", |x, y| x * y).unwrap());
                }
            }
            &Op::Scale(x, s) => self.accumulate(grads, x, g.scale(s)),
            &Op::AddScalar(x) => self.accumulate(grads, x, g.clone()),
            &Op::ConcatRows(a, b) => {
                let split = val(a).len();
                let cols = g.cols();
                let (top, bottom) = g.as_slice().split_at(split);
                if needs(a) {
                    let ga = Matrix::from_vec(val(a).rows(), cols, top.to_vec()).unwrap();
                    self.accumulate(grads, a, ga);
                }
                if needs(b) {
                    let gb = Matrix::from_vec(val(b).rows(), cols, bottom.to_vec()).unwrap();
                    self.accumulate(grads, b, gb);
                }
            }
            Op::RowNormalize { x, norms } => {
                let y = &node.value;
                let vx = val(*x);
                let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                for i in 0..vx.rows() {
                    let (yr, gr) = (y.row(i), g.row(i));
                    let norm = norms[i];
                    let row_norm = dot(vx.row(i), vx.row(i)).sqrt();
                    let out = gx.row_mut(i);
                    if row_norm >= norm {
                        let proj = dot(yr, gr);
                        for ((o, &gy), &yv) in out.iter_mut().zip(gr).zip(yr) {
                            *o = (gy - yv * proj) / norm;
                        }
                    } else {
                        // Guarded branch: the divisor is the constant eps.
                        for (o, &gy) in out.iter_mut().zip(gr) {
                            *o = gy / norm;
                        }
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            &Op::LeakyRelu(x, slope) => {
                let gx = g
                    .zip_map(val(x), "leaky_relu", |gv, xv| if xv > 0.0 { gv } else { slope * gv })
                    .unwrap();
                self.accumulate(grads, x, gx);
            }
            &Op::Elu(x) => {
                let gx = g
                    .zip_map(val(x), "elu", |gv, xv| if xv > 0.0 { gv } else { gv * xv.exp() })
                    .unwrap();
                self.accumulate(grads, x, gx);
            }
            &Op::Exp(x) => {
                let gx = g.zip_map(&node.value, "exp", |gv, y| gv * y).unwrap();
                self.accumulate(grads, x, gx);
            }
            &Op::Log(x) => {
                let gx = g.zip_map(val(x), "log", |gv, xv| gv / xv).unwrap();
                self.accumulate(grads, x, gx);
            }
            &Op::Powf(x, p) => {
                let gx = g
                    .zip_map(val(x), "powf", |gv, xv| gv * p * xv.max(0.0).powf(p - 1.0))
                    .unwrap();
                self.accumulate(grads, x, gx);
            }
            &Op::Sum(x) => {
                let (r, c) = val(x).shape();
                self.accumulate(grads, x, Matrix::filled(r, c, g.as_slice()[0]));
            }
            &Op::Mean(x) => {
                let (r, c) = val(x).shape();
                let s = g.as_slice()[0] / (r * c) as f64;
                self.accumulate(grads, x, Matrix::filled(r, c, s));
            }
            &Op::RowSum(x) => {
                let (r, c) = val(x).shape();
                let mut gx = Matrix::zeros(r, c);
                for i in 0..r {
                    let gi = g[(i, 0)];
                    gx.row_mut(i).iter_mut().for_each(|v| *v = gi);
                }
                self.accumulate(grads, x, gx);
            }
            Op::GatherRows { x, idx } => {
                let gx = scatter_add(g, idx, val(*x).rows());
                self.accumulate(grads, *x, gx);
            }
            Op::ScatterAddRows { x, idx } => {
                self.accumulate(grads, *x, g.select_rows(idx));
            }
            Op::SegmentSoftmax { logits, segments, n } => {
                let y = &node.value;
                let cols = y.cols();
                let mut dots = Matrix::zeros(*n, cols);
                for (k, &s) in segments.iter().enumerate() {
                    for c in 0..cols {
                        dots[(s, c)] += y[(k, c)] * g[(k, c)];
                    }
                }
                let mut gx = Matrix::zeros(y.rows(), cols);
                for (k, &s) in segments.iter().enumerate() {
                    for c in 0..cols {
                        gx[(k, c)] = y[(k, c)] * (g[(k, c)] - dots[(s, c)]);
                    }
                }
                self.accumulate(grads, *logits, gx);
            }
            &Op::HeadDot { x, a } => {
                let (vx, va) = (val(x), val(a));
                let heads = va.rows();
                let w = va.cols();
                if needs(x) {
                    let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                    for i in 0..vx.rows() {
                        let out = gx.row_mut(i);
                        for h in 0..heads {
                            let gh = g[(i, h)];
                            for (o, &av) in out[h * w..(h + 1) * w].iter_mut().zip(va.row(h)) {
                                *o = gh * av;
                            }
                        }
                    }
                    self.accumulate(grads, x, gx);
                }
                if needs(a) {
                    let mut ga = Matrix::zeros(heads, w);
                    for i in 0..vx.rows() {
                        let r = vx.row(i);
                        for h in 0..heads {
                            let gh = g[(i, h)];
                            for (o, &xv) in ga.row_mut(h).iter_mut().zip(&r[h * w..(h + 1) * w]) {
                                *o += gh * xv;
                            }
                        }
                    }
                    self.accumulate(grads, a, ga);
                }
            }
            &Op::HeadScale { x, w: weights } => {
                let (vx, vw) = (val(x), val(weights));
                let heads = vw.cols();
                let w = vx.cols() / heads;
                if needs(x) {
                    let mut gx = g.clone();
                    for i in 0..vx.rows() {
                        let r = gx.row_mut(i);
                        for h in 0..heads {
                            let s = vw[(i, h)];
                            r[h * w..(h + 1) * w].iter_mut().for_each(|v| *v *= s);
                        }
                    }
                    self.accumulate(grads, x, gx);
                }
                if needs(weights) {
                    let mut gw = Matrix::zeros(vw.rows(), heads);
                    for i in 0..vx.rows() {
                        let (xr, gr) = (vx.row(i), g.row(i));
                        for h in 0..heads {
                            gw[(i, h)] = dot(&xr[h * w..(h + 1) * w], &gr[h * w..(h + 1) * w]);
                        }
                    }
                    self.accumulate(grads, weights, gw);
                }
            }
            &Op::HeadMean { x, heads } => {
                let vx = val(x);
                let w = vx.cols() / heads;
                let inv = 1.0 / heads as f64;
                let mut gx = Matrix::zeros(vx.rows(), vx.cols());
                for i in 0..vx.rows() {
                    let gr = g.row(i);
                    let out = gx.row_mut(i);
                    for h in 0..heads {
                        for (o, &gv) in out[h * w..(h + 1) * w].iter_mut().zip(gr) {
                            *o = gv * inv;
                        }
                    }
                }
                self.accumulate(grads, x, gx);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaky_relu_definition() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[-2.0, 3.0]]));
        let y = t.leaky_relu(x, 0.2).unwrap();
        assert_eq!(t.value(y).as_slice(), &[-0.4, 3.0]);
    }

    #[test]
    fn row_normalize_example() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[3.0, 4.0]]));
        let y = t.row_normalize_l2(x, 1e-12).unwrap();
        assert_eq!(t.value(y).as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn gather_and_scatter_examples() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[1.0], [2.0], [3.0]]));
        let g = t.gather_rows(x, &[2, 0]).unwrap();
        assert_eq!(t.value(g).as_slice(), &[3.0, 1.0]);
        let ones = t.constant(Matrix::from_rows(&[[1.0], [1.0]]));
        let s = t.scatter_add_rows(ones, &[0, 0], 2).unwrap();
        assert_eq!(t.value(s).as_slice(), &[2.0, 0.0]);
        assert!(matches!(
            t.gather_rows(x, &[3]),
            Err(TensorError::IndexOutOfRange { index: 3, .. })
        ));
        assert!(t.scatter_add_rows(ones, &[0, 2], 2).is_err());
    }

    #[test]
    fn segment_softmax_examples() {
        let mut t = Tape::new();
        let l = t.constant(Matrix::from_rows(&[[5.0], [0.7], [0.7]]));
        let w = t.segment_softmax(l, &[1, 0, 0], 2).unwrap();
        assert_eq!(t.value(w).as_slice(), &[1.0, 0.5, 0.5]);
    }

    #[test]
    fn segment_softmax_is_stable_for_large_logits() {
        let mut t = Tape::new();
        let l = t.constant(Matrix::from_rows(&[[1000.0], [1000.0], [-1000.0]]));
        let w = t.segment_softmax(l, &[0, 0, 0], 1).unwrap();
        let v = t.value(w).as_slice();
        assert!((v[0] - 0.5).abs() < 1e-15 && v[2] == 0.0);
    }

    #[test]
    fn shape_errors_are_reported() {
        let mut t = Tape::new();
        let a = t.constant(Matrix::zeros(2, 3));
        let b = t.constant(Matrix::zeros(2, 2));
        assert!(matches!(t.matmul(a, b), Err(TensorError::Shape(_))));
        assert!(t.sub(a, b).is_err());
        assert!(t.head_mean(a, 2).is_err());
    }

    #[test]
    fn non_finite_values_are_caught_in_debug() {
        if !cfg!(debug_assertions) {
            return;
        }
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[-1.0]]));
        assert!(matches!(t.log(x), Err(TensorError::NonFinite { op: "log" })));
    }

    #[test]
    fn shared_parameter_gradients_accumulate() {
        let mut t = Tape::new();
        let p = t.param(Matrix::from_rows(&[[2.0]]));
        let a = t.scale(p, 3.0).unwrap();
        let b = t.mul(p, p).unwrap();
        let s = t.add(a, b).unwrap();
        let loss = t.sum(s).unwrap();
        let grads = t.backward(loss).unwrap();
        // d/dp (3p + p²) = 3 + 2p
        assert_eq!(grads.get(p).unwrap().as_slice(), &[7.0]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(Matrix::from_rows(&[[2.0]]));
        let p = t.param(Matrix::from_rows(&[[1.0]]));
        let m = t.mul(c, p).unwrap();
        let loss = t.sum(m).unwrap();
        let grads = t.backward(loss).unwrap();
        assert!(grads.get(c).is_none());
        assert_eq!(grads.get(p).unwrap().as_slice(), &[2.0]);
    }
}
