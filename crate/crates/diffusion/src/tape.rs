//! Reverse-mode automatic differentiation over [`Matrix`] values.
//!
//! A [`Tape`] records each operation with the intermediates its backward rule
//! needs. Parameters are referenced by id and read from the store in place.

use artikit_core::graph::BoolMatrix;
use artikit_core::{Error, Result, Scalar};

use crate::params::{Gradients, ParamId, ParamStore};
use crate::tensor::{dot, Matrix};

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op<T> {
    Input,
    Param(ParamId),
    Linear { x: Var, w: Var, b: Option<Var> },
    Add(Var, Var),
    AddRow { x: Var, row: Var },
    /// `x ⊙ row · scale` with `row` broadcast over rows.
    MulRow { x: Var, row: Var, scale: T },
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Matrix<T>, inv_std: Vec<T> },
    Gelu(Var),
    Attention { q: Var, k: Var, v: Var, heads: usize, probs: Vec<Matrix<T>> },
    TopKGate { logits: Var, selected: Vec<Vec<usize>> },
    Gather { x: Var, rows: Vec<usize> },
    Scatter { src: Var, weights: Var, column: usize, rows: Vec<usize> },
    Reshape(Var),
    Mse { pred: Var, target: Matrix<T> },
}

struct Node<T> {
    value: Option<Matrix<T>>,
    op: Op<T>,
}

pub struct Tape<'p, T: Scalar = f64> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        match (&self.nodes[v.0].value, &self.nodes[v.0].op) {
            (Some(m), _) => m,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    /// Per-head attention probabilities recorded by an attention node.
    pub fn attention_probs(&self, v: Var) -> Option<&[Matrix<T>]> {
        match &self.nodes[v.0].op {
            Op::Attention { probs, .. } => Some(probs),
            _ => None,
        }
    }

    /// Experts picked per row by a gate node.
    pub fn gate_selection(&self, v: Var) -> Option<&[Vec<usize>]> {
        match &self.nodes[v.0].op {
            Op::TopKGate { selected, .. } => Some(selected),
            _ => None,
        }
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value: Some(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Matrix<T>) -> Var {
        self.push(value, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node { value: None, op: Op::Param(id) });
        Var(self.nodes.len() - 1)
    }

    /// `x · w + b`, bias broadcast over rows.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Var {
        let mut y = self.value(x).matmul(self.value(w));
        if let Some(b) = b {
            let bias = self.value(b);
            for i in 0..y.rows {
                for (o, &bv) in y.row_mut(i).iter_mut().zip(&bias.data) {
                    *o += bv;
                }
            }
        }
        self.push(y, Op::Linear { x, w, b })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut y = self.value(a).clone();
        y.add_assign(self.value(b));
        self.push(y, Op::Add(a, b))
    }

    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let mut y = self.value(x).clone();
        let r = self.value(row);
        assert_eq!((r.rows, r.cols), (1, y.cols), "broadcast row shape");
        for i in 0..y.rows {
            for (o, &v) in y.row_mut(i).iter_mut().zip(&r.data) {
                *o += v;
            }
        }
        self.push(y, Op::AddRow { x, row })
    }

    pub fn mul_row(&mut self, x: Var, row: Var, scale: T) -> Var {
        let mut y = self.value(x).clone();
        let r = self.value(row);
        assert_eq!((r.rows, r.cols), (1, y.cols), "broadcast row shape");
        for i in 0..y.rows {
            for (o, &v) in y.row_mut(i).iter_mut().zip(&r.data) {
                *o = *o * v * scale;
            }
        }
        self.push(y, Op::MulRow { x, row, scale })
    }

    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        let n = T::from_usize(cols).expect("column count");
        let eps = T::lit(LAYER_NORM_EPS);
        let mut xhat = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for i in 0..rows {
            let r = xv.row(i);
            let mean = r.iter().copied().sum::<T>() / n;
            let var = r.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let is = T::one() / (var + eps).sqrt();
            for (o, &v) in xhat.row_mut(i).iter_mut().zip(r) {
                *o = (v - mean) * is;
            }
            inv_std.push(is);
        }
        let (g, b) = (self.value(gamma), self.value(beta));
        let mut y = xhat.clone();
        for i in 0..rows {
            for ((o, &gv), &bv) in y.row_mut(i).iter_mut().zip(&g.data).zip(&b.data) {
                *o = *o * gv + bv;
            }
        }
        self.push(y, Op::LayerNorm { x, gamma, beta, xhat, inv_std })
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, x: Var) -> Var {
        let y = self.value(x).map(|v| gelu(v).0);
        self.push(y, Op::Gelu(x))
    }

    /// Multi-head scaled dot-product attention. Queries, keys and values are
    /// already projected; `mask[i][j] = false` gives query `i` zero weight on
    /// key `j`. Every query row must keep at least one key.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, mask: Option<&BoolMatrix>) -> Result<Var> {
        let (qm, km, vm) = (self.value(q), self.value(k), self.value(v));
        let (n, d) = qm.shape();
        let m = km.rows;
        if km.cols != d || vm.cols != d || vm.rows != m || heads == 0 || d % heads != 0 {
            return Err(Error::shape(format!("q {n}x{d}, k and v {m}x{d}, {heads} heads"), format!("k {:?}, v {:?}", km.shape(), vm.shape())));
        }
        if let Some(mask) = mask {
            if (mask.rows, mask.cols) != (n, m) {
                return Err(Error::shape(format!("{n}x{m} attention mask"), format!("{}x{}", mask.rows, mask.cols)));
            }
            if let Some(i) = (0..n).find(|&i| (0..m).all(|j| !mask.get(i, j))) {
                return Err(Error::Structure(format!("attention row {i} has no admissible key")));
            }
        }
        if m == 0 {
            return Err(Error::shape("at least one key", 0));
        }
        let hd = d / heads;
        let scale = T::one() / T::from_usize(hd).expect("head dim").sqrt();
        let mut out = Matrix::zeros(n, d);
        let mut probs = Vec::with_capacity(heads);
        for h in 0..heads {
            let cols = h * hd..(h + 1) * hd;
            let mut p = Matrix::zeros(n, m);
            for i in 0..n {
                let qi = &qm.row(i)[cols.clone()];
                let allowed = |j: usize| mask.is_none_or(|mk| mk.get(i, j));
                let mut max = T::neg_infinity();
                for j in 0..m {
                    if allowed(j) {
                        let s = dot(qi, &km.row(j)[cols.clone()]) * scale;
                        p.set(i, j, s);
                        max = max.max(s);
                    }
                }
                let mut sum = T::zero();
                for j in 0..m {
                    let e = if allowed(j) { (p.get(i, j) - max).exp() } else { T::zero() };
                    p.set(i, j, e);
                    sum += e;
                }
                for j in 0..m {
                    p.set(i, j, p.get(i, j) / sum);
                }
                let oi = &mut out.row_mut(i)[cols.clone()];
                for j in 0..m {
                    let w = p.get(i, j);
                    for (o, &vv) in oi.iter_mut().zip(&vm.row(j)[cols.clone()]) {
                        *o += w * vv;
                    }
                }
            }
            probs.push(p);
        }
        Ok(self.push(out, Op::Attention { q, k, v, heads, probs }))
    }

    /// Row-wise top-k softmax gate: dense weights with zeros outside the
    /// selected experts.
    pub fn top_k_gate(&mut self, logits: Var, k: usize) -> Var {
        let lm = self.value(logits);
        let mut w = Matrix::zeros(lm.rows, lm.cols);
        let mut selected = Vec::with_capacity(lm.rows);
        for i in 0..lm.rows {
            let picks = top_k_softmax(lm.row(i), k);
            for &(e, g) in &picks {
                w.set(i, e, g);
            }
            selected.push(picks.into_iter().map(|(e, _)| e).collect());
        }
        self.push(w, Op::TopKGate { logits, selected })
    }

    pub fn gather(&mut self, x: Var, rows: Vec<usize>) -> Var {
        let y = self.value(x).select_rows(&rows);
        self.push(y, Op::Gather { x, rows })
    }

    /// `out[rows[r]] = weights[rows[r], column] · src[r]`, zero elsewhere;
    /// `total` output rows.
    pub fn scatter(&mut self, src: Var, weights: Var, column: usize, rows: Vec<usize>, total: usize) -> Var {
        let (s, w) = (self.value(src), self.value(weights));
        let mut y = Matrix::zeros(total, s.cols);
        for (r, &dst) in rows.iter().enumerate() {
            let g = w.get(dst, column);
            for (o, &v) in y.row_mut(dst).iter_mut().zip(s.row(r)) {
                *o = g * v;
            }
        }
        self.push(y, Op::Scatter { src, weights, column, rows })
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let y = self.value(x).clone().reshaped(rows, cols)?;
        Ok(self.push(y, Op::Reshape(x)))
    }

    /// Mean squared error against a constant target, as a `1 × 1` value.
    pub fn mse(&mut self, pred: Var, target: Matrix<T>) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(Error::shape(format!("{:?}", p.shape()), format!("{:?}", target.shape())));
        }
        let n = T::from_usize(p.len().max(1)).expect("length");
        let l = p.data.iter().zip(&target.data).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / n;
        Ok(self.push(Matrix::filled(1, 1, l), Op::Mse { pred, target }))
    }

    /// Accumulates `scale · d(root)/dθ` into `grads`; `root` must be `1 × 1`.
    pub fn backward(&self, root: Var, grads: &mut Gradients<T>, scale: T) {
        let mut g: Vec<Option<Matrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        g[root.0] = Some(Matrix::filled(1, 1, scale));
        for idx in (0..=root.0).rev() {
            let Some(dy) = g[idx].take() else { continue };
            let mut send = |v: Var, d: Matrix<T>| match &mut g[v.0] {
                Some(acc) => acc.add_assign(&d),
                slot => *slot = Some(d),
            };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Param(id) => grads.accumulate(*id, &dy, T::one()),
                Op::Linear { x, w, b } => {
                    send(*x, dy.matmul_nt(self.value(*w)));
                    send(*w, self.value(*x).matmul_tn(&dy));
                    if let Some(b) = b {
                        send(*b, dy.col_sums());
                    }
                }
                Op::Add(a, b) => {
                    send(*a, dy.clone());
                    send(*b, dy);
                }
                Op::AddRow { x, row } => {
                    send(*row, dy.col_sums());
                    send(*x, dy);
                }
                Op::MulRow { x, row, scale } => {
                    let (xv, rv) = (self.value(*x), self.value(*row));
                    let mut dx = dy.clone();
                    let mut dr = Matrix::zeros(1, rv.cols);
                    for i in 0..dy.rows {
                        for j in 0..dy.cols {
                            dx.set(i, j, dy.get(i, j) * rv.data[j] * *scale);
                            dr.data[j] += dy.get(i, j) * xv.get(i, j) * *scale;
                        }
                    }
                    send(*x, dx);
                    send(*row, dr);
                }
                Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                    let gv = self.value(*gamma);
                    let (rows, cols) = dy.shape();
                    let n = T::from_usize(cols).expect("column count");
                    let mut dgamma = Matrix::zeros(1, cols);
                    let mut dx = Matrix::zeros(rows, cols);
                    for i in 0..rows {
                        let (dyr, xr) = (dy.row(i), xhat.row(i));
                        let mut sum_dxh = T::zero();
                        let mut sum_dxh_xh = T::zero();
                        for j in 0..cols {
                            dgamma.data[j] += dyr[j] * xr[j];
                            let dxh = dyr[j] * gv.data[j];
                            sum_dxh += dxh;
                            sum_dxh_xh += dxh * xr[j];
                        }
                        let s = inv_std[i] / n;
                        for j in 0..cols {
                            let dxh = dyr[j] * gv.data[j];
                            dx.set(i, j, s * (n * dxh - sum_dxh - xr[j] * sum_dxh_xh));
                        }
                    }
                    send(*beta, dy.col_sums());
                    send(*gamma, dgamma);
                    send(*x, dx);
                }
                Op::Gelu(x) => {
                    let xv = self.value(*x);
                    let mut dx = dy;
                    for (d, &v) in dx.data.iter_mut().zip(&xv.data) {
                        *d *= gelu(v).1;
                    }
                    send(*x, dx);
                }
                Op::Attention { q, k, v, heads, probs } => {
                    let (qm, km, vm) = (self.value(*q), self.value(*k), self.value(*v));
                    let (n, d) = qm.shape();
                    let m = km.rows;
                    let hd = d / heads;
                    let scale = T::one() / T::from_usize(hd).expect("head dim").sqrt();
                    let mut dq = Matrix::zeros(n, d);
                    let mut dk = Matrix::zeros(m, d);
                    let mut dv = Matrix::zeros(m, d);
                    for (h, p) in probs.iter().enumerate() {
                        let cols = h * hd..(h + 1) * hd;
                        for i in 0..n {
                            let dyi = &dy.row(i)[cols.clone()];
                            // dP_ij = dy_i · v_j, then the softmax Jacobian
                            let mut dp = vec![T::zero(); m];
                            let mut acc = T::zero();
                            for (j, dpj) in dp.iter_mut().enumerate() {
                                let pij = p.get(i, j);
                                if pij != T::zero() {
                                    *dpj = dot(dyi, &vm.row(j)[cols.clone()]);
                                    acc += pij * *dpj;
                                }
                            }
                            for (j, &dpj) in dp.iter().enumerate() {
                                let pij = p.get(i, j);
                                if pij == T::zero() {
                                    continue;
                                }
                                for (o, &g) in dv.row_mut(j)[cols.clone()].iter_mut().zip(dyi) {
                                    *o += pij * g;
                                }
                                let ds = pij * (dpj - acc) * scale;
                                for col in cols.clone() {
                                    dq.data[i * d + col] += ds * km.get(j, col);
                                    dk.data[j * d + col] += ds * qm.get(i, col);
                                }
                            }
                        }
                    }
                    send(*q, dq);
                    send(*k, dk);
                    send(*v, dv);
                }
                Op::TopKGate { logits, selected } => {
                    let w = self.nodes[idx].value.as_ref().expect("gate weights");
                    let mut dl = Matrix::zeros(w.rows, w.cols);
                    for (i, sel) in selected.iter().enumerate() {
                        let acc: T = sel.iter().map(|&e| w.get(i, e) * dy.get(i, e)).sum();
                        for &e in sel {
                            dl.set(i, e, w.get(i, e) * (dy.get(i, e) - acc));
                        }
                    }
                    send(*logits, dl);
                }
                Op::Gather { x, rows } => {
                    let xv = self.value(*x);
                    let mut dx = Matrix::zeros(xv.rows, xv.cols);
                    for (r, &src) in rows.iter().enumerate() {
                        for (o, &v) in dx.row_mut(src).iter_mut().zip(dy.row(r)) {
                            *o += v;
                        }
                    }
                    send(*x, dx);
                }
                Op::Scatter { src, weights, column, rows } => {
                    let (s, w) = (self.value(*src), self.value(*weights));
                    let mut ds = Matrix::zeros(s.rows, s.cols);
                    let mut dw = Matrix::zeros(w.rows, w.cols);
                    for (r, &dst) in rows.iter().enumerate() {
                        let g = w.get(dst, *column);
                        for (o, &v) in ds.row_mut(r).iter_mut().zip(dy.row(dst)) {
                            *o = g * v;
                        }
                        dw.set(dst, *column, dot(s.row(r), dy.row(dst)));
                    }
                    send(*src, ds);
                    send(*weights, dw);
                }
                Op::Reshape(x) => {
                    let (r, c) = self.value(*x).shape();
                    send(*x, dy.reshaped(r, c).expect("same size"));
                }
                Op::Mse { pred, target } => {
                    let p = self.value(*pred);
                    let s = dy.data[0] * T::lit(2.0) / T::from_usize(p.len().max(1)).expect("length");
                    let mut dp = p.clone();
                    for (d, &t) in dp.data.iter_mut().zip(&target.data) {
                        *d = (*d - t) * s;
                    }
                    send(*pred, dp);
                }
            }
        }
    }
}

/// GELU value and derivative, tanh approximation.
fn gelu<T: Scalar>(x: T) -> (T, T) {
    let c = T::lit((2.0 / std::f64::consts::PI).sqrt());
    let a = T::lit(0.044715);
    let half = T::lit(0.5);
    let u = c * (x + a * x * x * x);
    let th = u.tanh();
    let y = half * x * (T::one() + th);
    let dy = half * (T::one() + th) + half * x * (T::one() - th * th) * c * (T::one() + T::lit(3.0) * a * x * x);
    (y, dy)
}

/// Indices of the `k` largest logits with their softmax weights. Equal
/// logits resolve toward the lower index.
pub fn top_k_softmax<T: Scalar>(logits: &[T], k: usize) -> Vec<(usize, T)> {
    let mut order: Vec<usize> = (0..logits.len()).collect();
    order.sort_by(|&a, &b| logits[b].partial_cmp(&logits[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order.truncate(k.min(logits.len()));
    let max = order.first().map_or(T::zero(), |&i| logits[i]);
    let exps: Vec<T> = order.iter().map(|&i| (logits[i] - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    order.into_iter().zip(exps).map(|(i, e)| (i, e / sum)).collect()
}
