use rand::Rng;

use super::{Gradients, ParamId, ParamStore, RngState, Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op<S> {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Concat { inputs: Vec<Var>, axis: usize },
    Slice { input: Var, start: usize },
    Lookup { table: Var, index: usize },
    /// Mask already holds the inverted-dropout scale.
    Dropout { input: Var, mask: Vec<S> },
    Sum(Var),
    Scale(Var, S),
    Dot(Var, Var),
    Stack(Vec<Var>),
    VecMat(Var, Var),
    Mean(Vec<Var>),
    Nll { logits: Var, target: usize },
}

struct Node<S> {
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor<S>>,
    op: Op<S>,
}

/// Records one forward computation over a borrowed parameter store.
///
/// The tape is single-threaded; independent tapes over the same store can run
/// on different threads.
pub struct Tape<'p, S: Scalar> {
    store: &'p ParamStore<S>,
    nodes: Vec<Node<S>>,
    param_vars: Vec<Option<Var>>,
}

fn shape_err(op: &str, a: &[usize], b: &[usize]) -> Error {
    Error::Dimension(format!("{op}: incompatible shapes {a:?} and {b:?}"))
}

fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

fn log_sum_exp<S: Scalar>(xs: &[S]) -> S {
    let max = xs.iter().copied().fold(S::neg_infinity(), S::max);
    let sum = xs.iter().fold(S::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}

impl<'p, S: Scalar> Tape<'p, S> {
    pub fn new(store: &'p ParamStore<S>) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
            param_vars: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'p ParamStore<S> {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.store.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "{} produced a non-finite value",
                op_name(&op)
            )));
        }
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a constant.
    pub fn input(&mut self, value: Tensor<S>) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op: Op::Input,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a parameter leaf. Repeated calls return the same handle.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.index()] {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.index()] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let (da, db) = (ta.data(), tb.data());
        let mut out = vec![S::zero(); m * n];
        for i in 0..m {
            for p in 0..k {
                let x = da[i * k + p];
                if x == S::zero() {
                    continue;
                }
                let row = &db[p * n..(p + 1) * n];
                for (o, &y) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o = *o + x * y;
                }
            }
        }
        self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b))
    }

    /// Matrix-vector product `A x` for `A: [m, k]`, `x: [k]`.
    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (ta, tx) = (self.value(a), self.value(x));
        let (sa, sx) = (ta.shape(), tx.shape());
        if sa.len() != 2 || sx.len() != 1 || sa[1] != sx[0] {
            return Err(shape_err("matvec", sa, sx));
        }
        let k = sa[1];
        let dx = tx.data();
        let out: Vec<S> = ta
            .data()
            .chunks(k)
            .map(|row| row.iter().zip(dx).fold(S::zero(), |acc, (&w, &v)| acc + w * v))
            .collect();
        self.push(Tensor::vector(out), Op::MatVec(a, x))
    }

    fn zip_with(&mut self, a: Var, b: Var, name: &str, f: impl Fn(S, S) -> S, op: Op<S>) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(name, ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let shape = ta.shape().to_vec();
        self.push(Tensor::new(shape, data)?, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// Adds vector `b: [c]` to every row of `m: [r, c]`. The only broadcast the
    /// engine supports.
    pub fn add_row_bias(&mut self, m: Var, b: Var) -> Result<Var> {
        let (tm, tb) = (self.value(m), self.value(b));
        let (sm, sb) = (tm.shape(), tb.shape());
        if sm.len() != 2 || sb.len() != 1 || sm[1] != sb[0] {
            return Err(shape_err("add_row_bias", sm, sb));
        }
        let c = sb[0];
        let bias = tb.data();
        let data = tm
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bias[i % c])
            .collect();
        let shape = sm.to_vec();
        self.push(Tensor::new(shape, data)?, Op::AddRowBias(m, b))
    }

    fn map(&mut self, a: Var, f: impl Fn(S) -> S, op: Op<S>) -> Result<Var> {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| f(x)).collect();
        let shape = ta.shape().to_vec();
        self.push(Tensor::new(shape, data)?, op)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.map(a, |x| x.tanh(), Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn scale(&mut self, a: Var, c: S) -> Result<Var> {
        self.map(a, |x| x * c, Op::Scale(a, c))
    }

    fn require_vector(&self, v: Var, name: &str) -> Result<usize> {
        let s = self.shape(v);
        match s {
            [n] if *n >= 1 => Ok(*n),
            _ => Err(Error::Dimension(format!("{name}: expected a non-empty vector, got {s:?}"))),
        }
    }

    /// Softmax over a vector, computed with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.require_vector(a, "softmax")?;
        let xs = self.value(a).data();
        let max = xs.iter().copied().fold(S::neg_infinity(), S::max);
        let exps: Vec<S> = xs.iter().map(|&x| (x - max).exp()).collect();
        let total = exps.iter().fold(S::zero(), |acc, &e| acc + e);
        let out = exps.into_iter().map(|e| e / total).collect();
        self.push(Tensor::vector(out), Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.require_vector(a, "log_softmax")?;
        let xs = self.value(a).data();
        let lse = log_sum_exp(xs);
        let out = xs.iter().map(|&x| x - lse).collect();
        self.push(Tensor::vector(out), Op::LogSoftmax(a))
    }

    /// Concatenates along `axis`. Vectors support axis 0; matrices 0 or 1.
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::Dimension("concat: no inputs".into()))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(Error::Dimension(format!("concat: axis {axis} out of range for {base:?}")));
        }
        for v in &inputs[1..] {
            let s = self.shape(*v);
            let compatible = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(shape_err("concat", &base, s));
            }
        }
        let mut shape = base.clone();
        shape[axis] = inputs.iter().map(|v| self.shape(*v)[axis]).sum();
        let data = if axis == 0 {
            inputs
                .iter()
                .flat_map(|v| self.value(*v).data().iter().copied())
                .collect()
        } else {
            let rows = base[0];
            let mut out = Vec::with_capacity(shape.iter().product());
            for r in 0..rows {
                for v in inputs {
                    let t = self.value(*v);
                    let c = t.shape()[1];
                    out.extend_from_slice(&t.data()[r * c..(r + 1) * c]);
                }
            }
            out
        };
        self.push(
            Tensor::new(shape, data)?,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
        )
    }

    /// Packs scalars into a vector.
    pub fn pack(&mut self, scalars: &[Var]) -> Result<Var> {
        if scalars.is_empty() {
            return Err(Error::Dimension("pack: no inputs".into()));
        }
        let mut data = Vec::with_capacity(scalars.len());
        for v in scalars {
            let t = self.value(*v);
            if t.len() != 1 {
                return Err(shape_err("pack", &[], t.shape()));
            }
            data.push(t.item());
        }
        self.push(
            Tensor::vector(data),
            Op::Concat {
                inputs: scalars.to_vec(),
                axis: 0,
            },
        )
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn slice(&mut self, input: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.require_vector(input, "slice")?;
        if len == 0 || start + len > n {
            return Err(Error::Dimension(format!(
                "slice: range {start}..{} out of bounds for length {n}",
                start + len
            )));
        }
        let data = self.value(input).data()[start..start + len].to_vec();
        self.push(Tensor::vector(data), Op::Slice { input, start })
    }

    /// Row `index` of a `[vocab, dim]` table.
    pub fn lookup(&mut self, table: Var, index: usize) -> Result<Var> {
        let t = self.value(table);
        let s = t.shape();
        if s.len() != 2 {
            return Err(Error::Dimension(format!("lookup: table must be a matrix, got {s:?}")));
        }
        if index >= s[0] {
            return Err(Error::Vocabulary(format!(
                "index {index} outside vocabulary of size {}",
                s[0]
            )));
        }
        let d = s[1];
        let row = t.data()[index * d..(index + 1) * d].to_vec();
        self.push(Tensor::vector(row), Op::Lookup { table, index })
    }

    /// Inverted dropout. Identity when not training or when `p == 0`.
    pub fn dropout(&mut self, input: Var, p: f64, training: bool, rng: &mut RngState) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("dropout probability {p} outside [0, 1)")));
        }
        if !training || p == 0.0 {
            return Ok(input);
        }
        let keep = S::lit(1.0 / (1.0 - p));
        let n = self.value(input).len();
        let mask: Vec<S> = (0..n)
            .map(|_| if rng.gen::<f64>() < p { S::zero() } else { keep })
            .collect();
        let t = self.value(input);
        let data = t.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        let shape = t.shape().to_vec();
        self.push(Tensor::new(shape, data)?, Op::Dropout { input, mask })
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let total = self.value(a).data().iter().fold(S::zero(), |acc, &x| acc + x);
        self.push(Tensor::scalar(total), Op::Sum(a))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 1 || ta.shape() != tb.shape() {
            return Err(shape_err("dot", ta.shape(), tb.shape()));
        }
        let v = ta.data().iter().zip(tb.data()).fold(S::zero(), |acc, (&x, &y)| acc + x * y);
        self.push(Tensor::scalar(v), Op::Dot(a, b))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Dimension("stack: no inputs".into()))?;
        let d = self.require_vector(*first, "stack")?;
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let t = self.value(*r);
            if t.shape() != [d] {
                return Err(shape_err("stack", &[d], t.shape()));
            }
            data.extend_from_slice(t.data());
        }
        self.push(Tensor::new(vec![rows.len(), d], data)?, Op::Stack(rows.to_vec()))
    }

    /// `wᵀ M` for `w: [n]`, `M: [n, d]`: the `w`-weighted sum of the rows of `M`.
    pub fn vecmat(&mut self, w: Var, m: Var) -> Result<Var> {
        let (tw, tm) = (self.value(w), self.value(m));
        let (sw, sm) = (tw.shape(), tm.shape());
        if sw.len() != 1 || sm.len() != 2 || sw[0] != sm[0] {
            return Err(shape_err("vecmat", sw, sm));
        }
        let d = sm[1];
        let mut out = vec![S::zero(); d];
        for (row, &a) in tm.data().chunks(d).zip(tw.data()) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o = *o + a * x;
            }
        }
        self.push(Tensor::vector(out), Op::VecMat(w, m))
    }

    /// Element-wise mean of same-shaped tensors.
    pub fn mean(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::Dimension("mean: no inputs".into()))?;
        let shape = self.shape(*first).to_vec();
        let mut acc = vec![S::zero(); shape.iter().product()];
        for v in inputs {
            let t = self.value(*v);
            if t.shape() != shape.as_slice() {
                return Err(shape_err("mean", &shape, t.shape()));
            }
            for (a, &x) in acc.iter_mut().zip(t.data()) {
                *a = *a + x;
            }
        }
        let inv = S::one() / S::lit(inputs.len() as f64);
        let data = acc.into_iter().map(|x| x * inv).collect();
        self.push(Tensor::new(shape, data)?, Op::Mean(inputs.to_vec()))
    }

    /// Negative log-likelihood of `target` under `softmax(logits)`, via log-sum-exp.
    pub fn nll(&mut self, logits: Var, target: usize) -> Result<Var> {
        let n = self.require_vector(logits, "nll")?;
        if target >= n {
            return Err(Error::Vocabulary(format!("target {target} outside {n} classes")));
        }
        let xs = self.value(logits).data();
        let loss = log_sum_exp(xs) - xs[target];
        self.push(Tensor::scalar(loss), Op::Nll { logits, target })
    }

    /// Back-propagates from a scalar `loss`, returning gradients for every
    /// parameter in the store. Parameters unreachable from `loss` get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients<S>> {
        let mut grads = Gradients::zeros_like(self.store);
        self.backward_into(loss, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Tape::backward`] but accumulates into an existing bundle.
    pub fn backward_into(&self, loss: Var, out: &mut Gradients<S>) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<S>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![S::one()]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    for (o, &x) in out.get_mut(*id).data_mut().iter_mut().zip(&g) {
                        *o = *o + x;
                    }
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                    let (da, db) = (ta.data(), tb.data());
                    let ga = accum(&mut grads, *a, m * k);
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = S::zero();
                            for j in 0..n {
                                s = s + g[i * n + j] * db[p * n + j];
                            }
                            ga[i * k + p] = ga[i * k + p] + s;
                        }
                    }
                    let gb = accum(&mut grads, *b, k * n);
                    for i in 0..m {
                        for p in 0..k {
                            let x = da[i * k + p];
                            for j in 0..n {
                                gb[p * n + j] = gb[p * n + j] + x * g[i * n + j];
                            }
                        }
                    }
                }
                Op::MatVec(a, x) => {
                    let (ta, tx) = (self.value(*a), self.value(*x));
                    let k = ta.shape()[1];
                    let (da, dx) = (ta.data(), tx.data());
                    let ga = accum(&mut grads, *a, da.len());
                    for (i, &gi) in g.iter().enumerate() {
                        if gi == S::zero() {
                            continue;
                        }
                        for (o, &v) in ga[i * k..(i + 1) * k].iter_mut().zip(dx) {
                            *o = *o + gi * v;
                        }
                    }
                    let gx = accum(&mut grads, *x, k);
                    for (i, &gi) in g.iter().enumerate() {
                        for (o, &w) in gx.iter_mut().zip(&da[i * k..(i + 1) * k]) {
                            *o = *o + gi * w;
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(accum(&mut grads, *a, g.len()), &g);
                    add_into(accum(&mut grads, *b, g.len()), &g);
                }
                Op::Sub(a, b) => {
                    add_into(accum(&mut grads, *a, g.len()), &g);
                    let gb = accum(&mut grads, *b, g.len());
                    for (o, &x) in gb.iter_mut().zip(&g) {
                        *o = *o - x;
                    }
                }
                Op::Mul(a, b) => {
                    let va = self.value(*a).data();
                    let vb = self.value(*b).data();
                    let ga = accum(&mut grads, *a, g.len());
                    for ((o, &x), &y) in ga.iter_mut().zip(&g).zip(vb) {
                        *o = *o + x * y;
                    }
                    let gb = accum(&mut grads, *b, g.len());
                    for ((o, &x), &y) in gb.iter_mut().zip(&g).zip(va) {
                        *o = *o + x * y;
                    }
                }
                Op::AddRowBias(m, b) => {
                    add_into(accum(&mut grads, *m, g.len()), &g);
                    let c = self.shape(*b)[0];
                    let gb = accum(&mut grads, *b, c);
                    for (i, &x) in g.iter().enumerate() {
                        gb[i % c] = gb[i % c] + x;
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let ga = accum(&mut grads, *a, g.len());
                    for ((o, &x), &t) in ga.iter_mut().zip(&g).zip(y) {
                        *o = *o + x * (S::one() - t * t);
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let ga = accum(&mut grads, *a, g.len());
                    for ((o, &x), &s) in ga.iter_mut().zip(&g).zip(y) {
                        *o = *o + x * s * (S::one() - s);
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let dot = g.iter().zip(y).fold(S::zero(), |acc, (&x, &p)| acc + x * p);
                    let ga = accum(&mut grads, *a, g.len());
                    for ((o, &x), &p) in ga.iter_mut().zip(&g).zip(y) {
                        *o = *o + p * (x - dot);
                    }
                }
                Op::LogSoftmax(a) => {
                    let y = node.value.as_ref().unwrap().data();
                    let total = g.iter().fold(S::zero(), |acc, &x| acc + x);
                    let ga = accum(&mut grads, *a, g.len());
                    for ((o, &x), &l) in ga.iter_mut().zip(&g).zip(y) {
                        *o = *o + x - l.exp() * total;
                    }
                }
                Op::Concat { inputs, axis } => {
                    let out_shape = node.value.as_ref().unwrap().shape();
                    if *axis == 0 {
                        let mut off = 0;
                        for v in inputs {
                            let n = self.value(*v).len();
                            add_into(accum(&mut grads, *v, n), &g[off..off + n]);
                            off += n;
                        }
                    } else {
                        let (rows, total) = (out_shape[0], out_shape[1]);
                        let mut col = 0;
                        for v in inputs {
                            let c = self.shape(*v)[1];
                            let gv = accum(&mut grads, *v, rows * c);
                            for r in 0..rows {
                                add_into(
                                    &mut gv[r * c..(r + 1) * c],
                                    &g[r * total + col..r * total + col + c],
                                );
                            }
                            col += c;
                        }
                    }
                }
                Op::Slice { input, start } => {
                    let n = self.value(*input).len();
                    let gi = accum(&mut grads, *input, n);
                    add_into(&mut gi[*start..*start + g.len()], &g);
                }
                Op::Lookup { table, index } => {
                    let t = self.value(*table);
                    let d = t.shape()[1];
                    let gt = accum(&mut grads, *table, t.len());
                    add_into(&mut gt[index * d..(index + 1) * d], &g);
                }
                Op::Dropout { input, mask } => {
                    let gi = accum(&mut grads, *input, g.len());
                    for ((o, &x), &m) in gi.iter_mut().zip(&g).zip(mask) {
                        *o = *o + x * m;
                    }
                }
                Op::Sum(a) => {
                    let n = self.value(*a).len();
                    let ga = accum(&mut grads, *a, n);
                    for o in ga.iter_mut() {
                        *o = *o + g[0];
                    }
                }
                Op::Scale(a, c) => {
                    let ga = accum(&mut grads, *a, g.len());
                    for (o, &x) in ga.iter_mut().zip(&g) {
                        *o = *o + x * *c;
                    }
                }
                Op::Dot(a, b) => {
                    let va = self.value(*a).data();
                    let vb = self.value(*b).data();
                    let ga = accum(&mut grads, *a, va.len());
                    for (o, &y) in ga.iter_mut().zip(vb) {
                        *o = *o + g[0] * y;
                    }
                    let gb = accum(&mut grads, *b, vb.len());
                    for (o, &x) in gb.iter_mut().zip(va) {
                        *o = *o + g[0] * x;
                    }
                }
                Op::Stack(rows) => {
                    let d = g.len() / rows.len();
                    for (r, v) in rows.iter().enumerate() {
                        add_into(accum(&mut grads, *v, d), &g[r * d..(r + 1) * d]);
                    }
                }
                Op::VecMat(w, m) => {
                    let (tw, tm) = (self.value(*w), self.value(*m));
                    let d = tm.shape()[1];
                    let (dw, dm) = (tw.data(), tm.data());
                    let gw = accum(&mut grads, *w, dw.len());
                    for (j, o) in gw.iter_mut().enumerate() {
                        let row = &dm[j * d..(j + 1) * d];
                        *o = *o + row.iter().zip(&g).fold(S::zero(), |acc, (&x, &y)| acc + x * y);
                    }
                    let gm = accum(&mut grads, *m, dm.len());
                    for (j, &a) in dw.iter().enumerate() {
                        for (o, &y) in gm[j * d..(j + 1) * d].iter_mut().zip(&g) {
                            *o = *o + a * y;
                        }
                    }
                }
                Op::Mean(inputs) => {
                    let inv = S::one() / S::lit(inputs.len() as f64);
                    for v in inputs {
                        let gv = accum(&mut grads, *v, g.len());
                        for (o, &x) in gv.iter_mut().zip(&g) {
                            *o = *o + x * inv;
                        }
                    }
                }
                Op::Nll { logits, target } => {
                    let xs = self.value(*logits).data();
                    let lse = log_sum_exp(xs);
                    let gl = accum(&mut grads, *logits, xs.len());
                    for (i, (o, &x)) in gl.iter_mut().zip(xs).enumerate() {
                        let p = (x - lse).exp();
                        let d = if i == *target { p - S::one() } else { p };
                        *o = *o + g[0] * d;
                    }
                }
            }
        }
        Ok(())
    }
}

fn accum<S: Scalar>(grads: &mut [Option<Vec<S>>], v: Var, n: usize) -> &mut Vec<S> {
    grads[v.0].get_or_insert_with(|| vec![S::zero(); n])
}

fn add_into<S: Scalar>(dst: &mut [S], src: &[S]) {
    for (o, &x) in dst.iter_mut().zip(src) {
        *o = *o + x;
    }
}

fn op_name<S>(op: &Op<S>) -> &'static str {
    match op {
        Op::Input => "input",
        Op::Param(_) => "param",
        Op::MatMul(..) => "matmul",
        Op::MatVec(..) => "matvec",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::AddRowBias(..) => "add_row_bias",
        Op::Tanh(_) => "tanh",
        Op::Sigmoid(_) => "sigmoid",
        Op::Softmax(_) => "softmax",
        Op::LogSoftmax(_) => "log_softmax",
        Op::Concat { .. } => "concat",
        Op::Slice { .. } => "slice",
        Op::Lookup { .. } => "lookup",
        Op::Dropout { .. } => "dropout",
        Op::Sum(_) => "sum",
        Op::Scale(..) => "scale",
        Op::Dot(..) => "dot",
        Op::Stack(_) => "stack",
        Op::VecMat(..) => "vecmat",
        Op::Mean(_) => "mean",
        Op::Nll { .. } => "nll",
    }
}
