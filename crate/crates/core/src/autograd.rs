//! Reverse-mode differentiation over an append-only trace.
//!
//! Every op appends a node whose parents already exist, so the node order is a
//! topological order and `backward` is a single reverse sweep.

use std::collections::HashMap;

use crate::tensor::{matmul_into, ParamSet, Tensor};
use crate::{Error, Result};

/// Handle to a node of a [`Trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Sigmoid,
    Tanh,
    Cos,
    Relu,
}

#[derive(Clone, Debug)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    Unary(Unary, Var),
    ConcatRows(Vec<Var>),
    StackRows(Vec<Var>),
    Transpose(Var),
    SoftmaxRows(Var),
    SumOf(Vec<Var>, f64),
    Bce(Var, f64),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    nodes: Vec<Node>,
    param_vars: HashMap<String, Var>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    fn shape(&self, v: Var) -> Vec<usize> {
        self.nodes[v.0].value.shape().to_vec()
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Constant, t)
    }

    pub fn constant_row(&mut self, data: &[f64]) -> Var {
        self.constant(Tensor::row(data.to_vec()))
    }

    /// Leaf bound to a named parameter. Repeated calls return the same node.
    pub fn param(&mut self, params: &ParamSet, name: &str) -> Result<Var> {
        if let Some(&v) = self.param_vars.get(name) {
            return Ok(v);
        }
        let idx = params
            .index_of(name)
            .ok_or_else(|| Error::Tensor(format!("unknown parameter {name}")))?;
        let v = self.push(Op::Param(idx), params.by_index(idx).1.clone());
        self.param_vars.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), out))
    }

    /// Elementwise add; also accepts a `1×n` row `b` added to every row of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.dims(a), self.dims(b));
        if sa == sb {
            let out = self.zip(a, b, |x, y| x + y);
            return Ok(self.push(Op::Add(a, b), out));
        }
        if sb.0 == 1 && sb.1 == sa.1 {
            let n = sa.1;
            let bias = self.value(b).data().to_vec();
            let mut out = self.value(a).clone();
            out.zero_grad();
            for (i, x) in out.data_mut().iter_mut().enumerate() {
                *x += bias[i % n];
            }
            return Ok(self.push(Op::AddRow(a, b), out));
        }
        Err(self.mismatch("add", a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.zip(a, b, |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), out))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.zip(a, b, |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), out))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.map(a, |x| x * s);
        self.push(Op::Scale(a, s), out)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let out = self.map(a, |x| x + c);
        self.push(Op::AddConst(a), out)
    }

    pub fn unary(&mut self, kind: Unary, a: Var) -> Var {
        let out = match kind {
            Unary::Sigmoid => self.map(a, sigmoid),
            Unary::Tanh => self.map(a, f64::tanh),
            Unary::Cos => self.map(a, f64::cos),
            Unary::Relu => self.map(a, |x| if x > 0.0 { x } else { 0.0 }),
        };
        self.push(Op::Unary(kind, a), out)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(Unary::Sigmoid, a)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Unary::Tanh, a)
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(Unary::Cos, a)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(Unary::Relu, a)
    }

    /// Concatenate single-row tensors left to right.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Tensor("concat_rows of empty list".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            if self.dims(p).0 != 1 {
                return Err(Error::Shape {
                    op: "concat_rows",
                    left: self.shape(p),
                    right: vec![1, self.dims(p).1],
                });
            }
            data.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Op::ConcatRows(parts.to_vec()), Tensor::row(data)))
    }

    /// Stack equal-width single rows into an `m×n` matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let Some(&first) = rows.first() else {
            return Err(Error::Tensor("stack_rows of empty list".into()));
        };
        let n = self.dims(first).1;
        let mut data = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if self.dims(r) != (1, n) {
                return Err(self.mismatch("stack_rows", first, r));
            }
            data.extend_from_slice(self.value(r).data());
        }
        let out = Tensor::new(vec![rows.len(), n], data)?;
        Ok(self.push(Op::StackRows(rows.to_vec()), out))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(Op::Transpose(a), out)
    }

    /// Row-wise softmax, stabilized by subtracting each row's max.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let (m, n) = (t.rows(), t.cols());
        let mut out = t.data().to_vec();
        for r in 0..m {
            softmax_in_place(&mut out[r * n..(r + 1) * n]);
        }
        let out = Tensor::new(vec![m, n], out).expect("same shape");
        self.push(Op::SoftmaxRows(a), out)
    }

    /// Elementwise sum of equal-shaped tensors.
    pub fn sum_of(&mut self, parts: &[Var]) -> Result<Var> {
        self.sum_scaled(parts, 1.0)
    }

    /// Elementwise mean of equal-shaped tensors.
    pub fn mean_of(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Tensor("mean of empty list".into()));
        }
        self.sum_scaled(parts, 1.0 / parts.len() as f64)
    }

    fn sum_scaled(&mut self, parts: &[Var], s: f64) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Tensor("sum of empty list".into()));
        };
        let mut acc = vec![0.0; self.value(first).numel()];
        for &p in parts {
            self.same_shape("sum_of", first, p)?;
            acc.iter_mut()
                .zip(self.value(p).data())
                .for_each(|(a, x)| *a += x);
        }
        acc.iter_mut().for_each(|a| *a *= s);
        let out = Tensor::new(self.shape(first), acc)?;
        Ok(self.push(Op::SumOf(parts.to_vec(), s), out))
    }

    /// Binary cross-entropy on a scalar logit, in log-sum-exp stable form.
    pub fn bce_with_logits(&mut self, logit: Var, label: f64) -> Result<Var> {
        let t = self.value(logit);
        if t.numel() != 1 {
            return Err(Error::Tensor(format!(
                "bce_with_logits needs a scalar, got {:?}",
                t.shape()
            )));
        }
        let loss = bce_value(t.item(), label);
        Ok(self.push(Op::Bce(logit, label), Tensor::scalar(loss)))
    }

    /// Accumulate d(loss)/d(param) into every parameter reachable from `loss`.
    pub fn backward(&self, loss: Var, params: &mut ParamSet) -> Result<()> {
        let grads = self.gradients(loss)?;
        for (node, g) in self.nodes.iter().zip(grads) {
            if let (Op::Param(idx), Some(g)) = (&node.op, g) {
                params.by_index_mut(*idx).accumulate_grad(&g);
            }
        }
        Ok(())
    }

    /// Gradient of `loss` with respect to every node (None where unreachable).
    pub fn gradients(&self, loss: Var) -> Result<Vec<Option<Vec<f64>>>> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Tensor(format!(
                "backward from non-scalar {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads.resize(self.nodes.len(), None);
        Ok(grads)
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let out = &node.value;
        match &node.op {
            Op::Constant | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                // dA = dC · Bᵀ
                let bt = bv.transpose();
                let mut da = vec![0.0; m * k];
                matmul_into(g, bt.data(), &mut da, m, n, k);
                accumulate(grads, *a, &da);
                // dB = Aᵀ · dC
                let at = av.transpose();
                let mut db = vec![0.0; k * n];
                matmul_into(at.data(), g, &mut db, k, m, n);
                accumulate(grads, *b, &db);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g);
                accumulate(grads, *b, g);
            }
            Op::AddRow(a, b) => {
                accumulate(grads, *a, g);
                let n = out.cols();
                let mut db = vec![0.0; n];
                for (j, x) in g.iter().enumerate() {
                    db[j % n] += x;
                }
                accumulate(grads, *b, &db);
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, g);
                let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                accumulate(grads, *b, &neg);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                let da: Vec<f64> = g.iter().zip(bv).map(|(g, y)| g * y).collect();
                let db: Vec<f64> = g.iter().zip(av).map(|(g, x)| g * x).collect();
                accumulate(grads, *a, &da);
                accumulate(grads, *b, &db);
            }
            Op::Scale(a, s) => {
                let da: Vec<f64> = g.iter().map(|x| x * s).collect();
                accumulate(grads, *a, &da);
            }
            Op::AddConst(a) => accumulate(grads, *a, g),
            Op::Unary(kind, a) => {
                let x = self.value(*a).data();
                let y = out.data();
                let da: Vec<f64> = match kind {
                    Unary::Sigmoid => g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect(),
                    Unary::Tanh => g.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect(),
                    Unary::Cos => g.iter().zip(x).map(|(g, x)| -g * x.sin()).collect(),
                    Unary::Relu => g
                        .iter()
                        .zip(x)
                        .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                        .collect(),
                };
                accumulate(grads, *a, &da);
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).numel();
                    accumulate(grads, *p, &g[offset..offset + n]);
                    offset += n;
                }
            }
            Op::StackRows(rows) => {
                let n = out.cols();
                for (r, p) in rows.iter().enumerate() {
                    accumulate(grads, *p, &g[r * n..(r + 1) * n]);
                }
            }
            Op::Transpose(a) => {
                let (m, n) = (out.rows(), out.cols());
                // out is m×n, input is n×m
                let mut da = vec![0.0; m * n];
                for r in 0..m {
                    for c in 0..n {
                        da[c * m + r] = g[r * n + c];
                    }
                }
                accumulate(grads, *a, &da);
            }
            Op::SoftmaxRows(a) => {
                let (m, n) = (out.rows(), out.cols());
                let y = out.data();
                let mut da = vec![0.0; m * n];
                for r in 0..m {
                    let ys = &y[r * n..(r + 1) * n];
                    let gs = &g[r * n..(r + 1) * n];
                    let dot: f64 = ys.iter().zip(gs).map(|(y, g)| y * g).sum();
                    for c in 0..n {
                        da[r * n + c] = ys[c] * (gs[c] - dot);
                    }
                }
                accumulate(grads, *a, &da);
            }
            Op::SumOf(parts, s) => {
                let scaled: Vec<f64> = g.iter().map(|x| x * s).collect();
                for p in parts {
                    accumulate(grads, *p, &scaled);
                }
            }
            Op::Bce(logit, label) => {
                let x = self.value(*logit).item();
                accumulate(grads, *logit, &[g[0] * (sigmoid(x) - label)]);
            }
        }
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, bv) = (self.value(a), self.value(b));
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(av.shape().to_vec(), data).expect("same shape")
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let av = self.value(a);
        let data = av.data().iter().map(|&x| f(x)).collect();
        Tensor::new(av.shape().to_vec(), data).expect("same shape")
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.dims(a) == self.dims(b) {
            Ok(())
        } else {
            Err(self.mismatch(op, a, b))
        }
    }

    fn mismatch(&self, op: &'static str, a: Var, b: Var) -> Error {
        Error::Shape {
            op,
            left: self.shape(a),
            right: self.shape(b),
        }
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
    match &mut grads[v.0] {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g.to_vec()),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// max(x, 0) − x·y + ln(1 + e^{−|x|})
pub fn bce_value(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    row.iter_mut().for_each(|x| *x /= sum);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(tr: &mut Trace, xs: &[f64]) -> Var {
        tr.constant_row(xs)
    }

    #[test]
    fn elementwise_examples() {
        let mut tr = Trace::new();
        let z = row(&mut tr, &[0.0]);
        let s = tr.sigmoid(z);
        let t = tr.tanh(z);
        let c = tr.cos(z);
        assert_eq!(tr.value(s).item(), 0.5);
        assert_eq!(tr.value(t).item(), 0.0);
        assert_eq!(tr.value(c).item(), 1.0);
    }

    #[test]
    fn add_broadcasts_bias_row_only() {
        let mut tr = Trace::new();
        let m = tr.constant(Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap());
        let b = row(&mut tr, &[10.0, 20.0]);
        let out = tr.add(m, b).unwrap();
        assert_eq!(tr.value(out).data(), &[11.0, 22.0, 13.0, 24.0]);
        let bad = row(&mut tr, &[1.0, 2.0, 3.0]);
        assert!(tr.add(m, bad).is_err());
        assert!(tr.mul(m, b).is_err());
        assert!(tr.sub(b, m).is_err());
    }

    #[test]
    fn concat_examples() {
        let mut tr = Trace::new();
        let a = row(&mut tr, &[1.0, 2.0]);
        let b = row(&mut tr, &[3.0]);
        let c = tr.concat_rows(&[a, b]).unwrap();
        assert_eq!(tr.value(c).data(), &[1.0, 2.0, 3.0]);
        let single = tr.concat_rows(&[b]).unwrap();
        assert_eq!(tr.value(single).data(), &[3.0]);
        assert!(tr.concat_rows(&[]).is_err());

        let parts: Vec<Var> = [
            &[0.0, 1.0, 1.0][..],
            &[0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]
        .iter()
        .map(|p| row(&mut tr, p))
        .collect();
        let msg = tr.concat_rows(&parts).unwrap();
        assert_eq!(
            tr.value(msg).data(),
            &[0., 1., 1., 0., 1., 0., 1., 0., 0., 0., 0., 0., 1., 0.]
        );
    }

    #[test]
    fn softmax_examples() {
        let mut tr = Trace::new();
        let a = row(&mut tr, &[0.0, 0.0]);
        let s = tr.softmax_rows(a);
        assert_eq!(tr.value(s).data(), &[0.5, 0.5]);
        let big = row(&mut tr, &[1000.0, 1000.0]);
        let s = tr.softmax_rows(big);
        assert_eq!(tr.value(s).data(), &[0.5, 0.5]);
        let l3 = row(&mut tr, &[0.0, 3f64.ln()]);
        let s = tr.softmax_rows(l3);
        let d = tr.value(s).data();
        assert!((d[0] - 0.25).abs() < 1e-15 && (d[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bce_examples() {
        let ln2 = 2f64.ln();
        assert!((bce_value(0.0, 1.0) - ln2).abs() < 1e-15);
        assert!((bce_value(0.0, 0.0) - ln2).abs() < 1e-15);
        let closed = (1.0 + (-2f64).exp()).ln();
        assert!((bce_value(2.0, 1.0) - closed).abs() < 1e-15);
        assert!((bce_value(2.0, 1.0) - 0.126928).abs() < 1e-6);
        // extreme logits stay finite
        assert!(bce_value(800.0, 0.0).is_finite());
        assert!(bce_value(-800.0, 1.0).is_finite());
    }

    #[test]
    fn bce_rejects_non_scalar() {
        let mut tr = Trace::new();
        let a = row(&mut tr, &[0.0, 1.0]);
        assert!(tr.bce_with_logits(a, 1.0).is_err());
    }

    #[test]
    fn backward_single_param_and_product_rule() {
        let mut ps = ParamSet::new();
        ps.insert("p", Tensor::scalar(2.0)).unwrap();
        ps.insert("q", Tensor::scalar(3.0)).unwrap();
        ps.insert("unused", Tensor::scalar(5.0)).unwrap();

        let mut tr = Trace::new();
        let p = tr.param(&ps, "p").unwrap();
        tr.backward(p, &mut ps).unwrap();
        assert_eq!(ps.get("p").unwrap().grad().unwrap(), &[1.0]);

        ps.zero_grad();
        let mut tr = Trace::new();
        let p = tr.param(&ps, "p").unwrap();
        let q = tr.param(&ps, "q").unwrap();
        let pq = tr.mul(p, q).unwrap();
        tr.backward(pq, &mut ps).unwrap();
        assert_eq!(ps.get("p").unwrap().grad().unwrap(), &[3.0]);
        assert_eq!(ps.get("q").unwrap().grad().unwrap(), &[2.0]);
        assert!(ps.get("unused").unwrap().grad().is_none());
    }

    #[test]
    fn backward_twice_doubles() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::from_rows(&[&[0.3, -0.2], &[0.1, 0.7]]).unwrap())
            .unwrap();
        let mut tr = Trace::new();
        let w = tr.param(&ps, "w").unwrap();
        let x = tr.constant_row(&[1.5, -0.5]);
        let h = tr.matmul(x, w).unwrap();
        let h = tr.tanh(h);
        let ones = tr.constant(Tensor::from_rows(&[&[1.0], &[1.0]]).unwrap());
        let y = tr.matmul(h, ones).unwrap();
        let l = tr.bce_with_logits(y, 1.0).unwrap();
        tr.backward(l, &mut ps).unwrap();
        let once = ps.get("w").unwrap().grad().unwrap().to_vec();
        tr.backward(l, &mut ps).unwrap();
        let twice = ps.get("w").unwrap().grad().unwrap();
        for (a, b) in once.iter().zip(twice) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut ps = ParamSet::new();
        let mut tr = Trace::new();
        let a = tr.constant_row(&[1.0, 2.0]);
        assert!(tr.backward(a, &mut ps).is_err());
    }

    #[test]
    fn param_leaf_is_shared() {
        let mut ps = ParamSet::new();
        ps.insert("p", Tensor::scalar(1.0)).unwrap();
        let mut tr = Trace::new();
        let a = tr.param(&ps, "p").unwrap();
        let b = tr.param(&ps, "p").unwrap();
        assert_eq!(a, b);
        assert!(tr.param(&ps, "nope").is_err());
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one(xs in prop::collection::vec(-50.0f64..50.0, 1..12), rows in 1usize..4) {
            let n = xs.len();
            let data: Vec<f64> = (0..rows).flat_map(|r| xs.iter().map(move |x| x * (r as f64 + 1.0))).collect();
            let mut tr = Trace::new();
            let a = tr.constant(Tensor::new(vec![rows, n], data).unwrap());
            let s = tr.softmax_rows(a);
            let t = tr.value(s);
            for r in 0..rows {
                let row = t.row_slice(r);
                prop_assert!(row.iter().all(|&x| x >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn ops_are_deterministic(xs in prop::collection::vec(-3.0f64..3.0, 6)) {
            let run = || {
                let mut tr = Trace::new();
                let a = tr.constant(Tensor::new(vec![2, 3], xs.clone()).unwrap());
                let at = tr.transpose(a);
                let p = tr.matmul(a, at).unwrap();
                let s = tr.softmax_rows(p);
                let c = tr.cos(s);
                tr.value(c).data().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
