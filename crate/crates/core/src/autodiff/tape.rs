use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::{max_threads, Scalar};

/// Handle to a node on a [`Tape`]. Only meaningful for the tape that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Unary {
    Sigmoid,
    Tanh,
    LeakyRelu(f64),
    Exp,
    Log,
    Neg,
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddBias(Var, Var),
    Unary(Var, Unary),
    Softmax(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Slice { src: Var, axis: usize, start: usize },
    Sum(Var),
    Mean(Var),
    BceWithLogits(Var, Var),
    SoftmaxCrossEntropy(Var, Var),
    Mse(Var, Var),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Define-by-run record of tensor operations. Build one per forward pass,
/// call [`Tape::backward`] on a scalar, then drop it.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to `v`; zeros when `v` was not reached.
    pub fn wrt(&self, v: Var) -> Tensor<T> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    pub fn take(&mut self, v: Var) -> Tensor<T> {
        match self.grads[v.0].take() {
            Some(g) => g,
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }
}

fn same_shape(op: &'static str, a: &Tensor<impl Scalar>, b: &Tensor<impl Scalar>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dims(op, a.shape(), b.shape()));
    }
    Ok(())
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn log_softmax_row<T: Scalar>(row: &[T], out: &mut [T]) {
    let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let lse = row.iter().fold(T::zero(), |a, &b| a + (b - m).exp()).ln() + m;
    for (o, &v) in out.iter_mut().zip(row) {
        *o = v - lse;
    }
}

/// Row-major `c[m×n] = op(a) · op(b)` where the strides encode optional transposes.
#[allow(clippy::too_many_arguments)]
fn gemm_into<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    (rsa, csa): (isize, isize),
    b: &[T],
    (rsb, csb): (isize, isize),
    c: &mut [T],
) {
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let threads = max_threads().min(m);
    if threads <= 1 || m * n * k < 1 << 16 {
        // SAFETY: strides describe in-bounds views of `a` and `b`; `c` is m×n row-major.
        unsafe {
            T::gemm(
                m, k, n, T::one(), a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, T::zero(),
                c.as_mut_ptr(), n as isize, 1,
            )
        }
        return;
    }
    let chunk = m.div_ceil(threads);
    let a_addr = a.as_ptr() as usize;
    let b_addr = b.as_ptr() as usize;
    std::thread::scope(|s| {
        for (ci, c_rows) in c.chunks_mut(chunk * n).enumerate() {
            let rows = c_rows.len() / n;
            let r0 = (ci * chunk) as isize;
            s.spawn(move || {
                let a_ptr = a_addr as *const T;
                let b_ptr = b_addr as *const T;
                // SAFETY: each thread owns a disjoint row block of `c` and reads
                // the matching rows of `a`; `a` and `b` outlive the scope.
                unsafe {
                    T::gemm(
                        rows, k, n, T::one(), a_ptr.offset(r0 * rsa), rsa, csa, b_ptr, rsb, csb,
                        T::zero(), c_rows.as_mut_ptr(), n as isize, 1,
                    )
                }
            });
        }
    });
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn derived(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let rg = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(value, op, rg)
    }

    /// Trainable input: gradients are accumulated for it.
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Input that receives no gradient and blocks gradient flow.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Copy of `v`'s current value as a gradient-blocking constant.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.constant(value)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0] {
            return Err(Error::dims("matmul", av.shape(), bv.shape()));
        }
        let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
        let mut out = vec![T::zero(); m * n];
        gemm_into(
            m,
            k,
            n,
            av.data(),
            (k as isize, 1),
            bv.data(),
            (n as isize, 1),
            &mut out,
        );
        let value = Tensor::new(vec![m, n], out)?;
        Ok(self.derived(value, Op::MatMul(a, b), &[a, b]))
    }

    fn zip_with(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        same_shape(op, av, bv)?;
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(av.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip_with("add", a, b, |x, y| x + y)?;
        Ok(self.derived(v, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip_with("sub", a, b, |x, y| x - y)?;
        Ok(self.derived(v, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip_with("mul", a, b, |x, y| x * y)?;
        Ok(self.derived(v, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let v = self.nodes[a.0].value.map(|x| x * s);
        self.derived(v, Op::Scale(a, s), &[a])
    }

    /// `a[b×n] + bias[n]`, broadcasting the bias over rows.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[bias.0].value);
        if av.rank() != 2 || bv.rank() != 1 || av.shape()[1] != bv.shape()[0] {
            return Err(Error::dims("add_bias", av.shape(), bv.shape()));
        }
        let mut out = av.clone();
        let n = bv.len();
        if n > 0 {
            for row in out.data_mut().chunks_mut(n) {
                for (o, &b) in row.iter_mut().zip(bv.data()) {
                    *o += b;
                }
            }
        }
        Ok(self.derived(out, Op::AddBias(a, bias), &[a, bias]))
    }

    pub fn unary(&mut self, kind: Unary, a: Var) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        let value = match kind {
            Unary::Sigmoid => av.map(sigmoid),
            Unary::Tanh => av.map(|x| x.tanh()),
            Unary::LeakyRelu(slope) => {
                let s = T::of(slope);
                av.map(|x| if x > T::zero() { x } else { s * x })
            }
            Unary::Exp => av.map(|x| x.exp()),
            Unary::Log => {
                if let Some(bad) = av.data().iter().find(|&&x| !(x > T::zero())) {
                    return Err(Error::Domain {
                        op: "log",
                        detail: format!("non-positive input {bad}"),
                    });
                }
                av.map(|x| x.ln())
            }
            Unary::Neg => av.map(|x| -x),
        };
        Ok(self.derived(value, Op::Unary(a, kind), &[a]))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(Unary::Sigmoid, a).expect("sigmoid is total")
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Unary::Tanh, a).expect("tanh is total")
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        self.unary(Unary::LeakyRelu(slope), a).expect("leaky_relu is total")
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(Unary::Exp, a).expect("exp is total")
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.unary(Unary::Log, a)
    }

    /// Softmax along the last axis.
    pub fn softmax(&mut self, a: Var) -> Var {
        let av = &self.nodes[a.0].value;
        let w = av.shape().last().copied().unwrap_or(1);
        let mut out = av.clone();
        if w > 0 {
            for row in out.data_mut().chunks_mut(w) {
                let src = row.to_vec();
                log_softmax_row(&src, row);
                for v in row.iter_mut() {
                    *v = v.exp();
                }
            }
        }
        self.derived(out, Op::Softmax(a), &[a])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = self.nodes[parts.first().ok_or_else(|| Error::contract("concat of zero tensors"))?.0]
            .value
            .shape()
            .to_vec();
        if axis >= first.len() {
            return Err(Error::Bounds {
                op: "concat",
                detail: format!("axis {axis} for rank {}", first.len()),
            });
        }
        let mut total = 0;
        for p in parts {
            let s = self.nodes[p.0].value.shape();
            let compatible = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !compatible {
                return Err(Error::dims("concat", &first, s));
            }
            total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = total;
        let (outer, _, inner) = axis_split(&shape, axis);
        let mut data = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for p in parts {
                let pv = &self.nodes[p.0].value;
                let block = pv.shape()[axis] * inner;
                data.extend_from_slice(&pv.data()[o * block..(o + 1) * block]);
            }
        }
        let value = Tensor::new(shape, data)?;
        Ok(self.derived(
            value,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            parts,
        ))
    }

    pub fn slice(&mut self, src: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let sv = &self.nodes[src.0].value;
        if axis >= sv.rank() || start + len > sv.shape()[axis] {
            return Err(Error::Bounds {
                op: "slice",
                detail: format!("axis {axis} range {start}..{} of shape {:?}", start + len, sv.shape()),
            });
        }
        let (outer, dim, inner) = axis_split(sv.shape(), axis);
        let mut shape = sv.shape().to_vec();
        shape[axis] = len;
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * dim * inner + start * inner;
            data.extend_from_slice(&sv.data()[base..base + len * inner]);
        }
        let value = Tensor::new(shape, data)?;
        Ok(self.derived(value, Op::Slice { src, axis, start }, &[src]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.nodes[a.0].value.sum());
        self.derived(v, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = &self.nodes[a.0].value;
        let n = T::of(av.len().max(1) as f64);
        let v = Tensor::scalar(av.sum() / n);
        self.derived(v, Op::Mean(a), &[a])
    }

    /// Mean of `max(x,0) − x·t + ln(1 + e^{−|x|})` over all entries.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Var) -> Result<Var> {
        let (xv, tv) = (&self.nodes[logits.0].value, &self.nodes[targets.0].value);
        same_shape("bce_with_logits", xv, tv)?;
        let n = T::of(xv.len().max(1) as f64);
        let total = xv.data().iter().zip(tv.data()).fold(T::zero(), |acc, (&x, &t)| {
            acc + x.max(T::zero()) - x * t + (-x.abs()).exp().ln_1p()
        });
        let v = Tensor::scalar(total / n);
        Ok(self.derived(v, Op::BceWithLogits(logits, targets), &[logits, targets]))
    }

    /// Row-mean of `−Σ_j t_j · log softmax(x)_j` over the last axis.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: Var) -> Result<Var> {
        let (xv, tv) = (&self.nodes[logits.0].value, &self.nodes[targets.0].value);
        same_shape("softmax_cross_entropy", xv, tv)?;
        let w = xv.shape().last().copied().unwrap_or(1).max(1);
        let rows = xv.len() / w;
        let mut ls = vec![T::zero(); w];
        let mut total = T::zero();
        for (xr, tr) in xv.data().chunks(w).zip(tv.data().chunks(w)) {
            log_softmax_row(xr, &mut ls);
            for (&l, &t) in ls.iter().zip(tr) {
                total -= t * l;
            }
        }
        let v = Tensor::scalar(total / T::of(rows.max(1) as f64));
        Ok(self.derived(v, Op::SoftmaxCrossEntropy(logits, targets), &[logits, targets]))
    }

    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (pv, tv) = (&self.nodes[pred.0].value, &self.nodes[target.0].value);
        same_shape("mse", pv, tv)?;
        let n = T::of(pv.len().max(1) as f64);
        let total = pv
            .data()
            .iter()
            .zip(tv.data())
            .fold(T::zero(), |acc, (&p, &t)| acc + (p - t) * (p - t));
        let v = Tensor::scalar(total / n);
        Ok(self.derived(v, Op::Mse(pred, target), &[pred, target]))
    }

    /// Reverse sweep from a scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        let rv = &self
            .nodes
            .get(root.0)
            .ok_or_else(|| Error::contract("backward root is not on this tape"))?
            .value;
        if rv.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar root, got shape {:?}",
                rv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::ones(rv.shape()));

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads.resize(self.nodes.len(), None);
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn accumulate(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let shaped = |like: &Tensor<T>, data: Vec<T>| {
            Tensor::new(like.shape().to_vec(), data).expect("gradient shape mirrors value")
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                if self.wants(*a) {
                    // dA = dC · Bᵀ
                    let mut da = vec![T::zero(); m * k];
                    gemm_into(m, n, k, g.data(), (n as isize, 1), bv.data(), (1, n as isize), &mut da);
                    Self::accumulate(grads, *a, shaped(av, da));
                }
                if self.wants(*b) {
                    // dB = Aᵀ · dC
                    let mut db = vec![T::zero(); k * n];
                    gemm_into(k, m, n, av.data(), (1, k as isize), g.data(), (n as isize, 1), &mut db);
                    Self::accumulate(grads, *b, shaped(bv, db));
                }
            }
            Op::Add(a, b) => {
                if self.wants(*a) {
                    Self::accumulate(grads, *a, g.clone());
                }
                if self.wants(*b) {
                    Self::accumulate(grads, *b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.wants(*a) {
                    Self::accumulate(grads, *a, g.clone());
                }
                if self.wants(*b) {
                    Self::accumulate(grads, *b, g.map(|x| -x));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                if self.wants(*a) {
                    let d = g.data().iter().zip(bv.data()).map(|(&g, &y)| g * y).collect();
                    Self::accumulate(grads, *a, shaped(av, d));
                }
                if self.wants(*b) {
                    let d = g.data().iter().zip(av.data()).map(|(&g, &x)| g * x).collect();
                    Self::accumulate(grads, *b, shaped(bv, d));
                }
            }
            Op::Scale(a, s) => {
                if self.wants(*a) {
                    let s = *s;
                    Self::accumulate(grads, *a, g.map(|x| x * s));
                }
            }
            Op::AddBias(a, bias) => {
                if self.wants(*a) {
                    Self::accumulate(grads, *a, g.clone());
                }
                if self.wants(*bias) {
                    let bv = val(*bias);
                    let n = bv.len();
                    let mut db = vec![T::zero(); n];
                    if n > 0 {
                        for row in g.data().chunks(n) {
                            for (d, &x) in db.iter_mut().zip(row) {
                                *d += x;
                            }
                        }
                    }
                    Self::accumulate(grads, *bias, shaped(bv, db));
                }
            }
            Op::Unary(a, kind) => {
                if !self.wants(*a) {
                    return;
                }
                let (x, y) = (val(*a), &node.value);
                let d: Vec<T> = match kind {
                    Unary::Sigmoid => zip3(g, y, |g, y| g * y * (T::one() - y)),
                    Unary::Tanh => zip3(g, y, |g, y| g * (T::one() - y * y)),
                    Unary::LeakyRelu(slope) => {
                        let s = T::of(*slope);
                        zip3(g, x, |g, x| if x > T::zero() { g } else { g * s })
                    }
                    Unary::Exp => zip3(g, y, |g, y| g * y),
                    Unary::Log => zip3(g, x, |g, x| g / x),
                    Unary::Neg => g.data().iter().map(|&g| -g).collect(),
                };
                Self::accumulate(grads, *a, shaped(x, d));
            }
            Op::Softmax(a) => {
                if !self.wants(*a) {
                    return;
                }
                let y = &node.value;
                let w = y.shape().last().copied().unwrap_or(1).max(1);
                let mut d = Vec::with_capacity(y.len());
                for (yr, gr) in y.data().chunks(w).zip(g.data().chunks(w)) {
                    let dot = yr.iter().zip(gr).fold(T::zero(), |acc, (&y, &g)| acc + y * g);
                    d.extend(yr.iter().zip(gr).map(|(&y, &g)| y * (g - dot)));
                }
                Self::accumulate(grads, *a, shaped(y, d));
            }
            Op::Concat { parts, axis } => {
                let (outer, _, inner) = axis_split(node.value.shape(), *axis);
                let mut offset = 0;
                let total = node.value.shape()[*axis] * inner;
                for p in parts {
                    let pv = val(*p);
                    let block = pv.shape()[*axis] * inner;
                    if self.wants(*p) {
                        let mut d = Vec::with_capacity(pv.len());
                        for o in 0..outer {
                            let base = o * total + offset;
                            d.extend_from_slice(&g.data()[base..base + block]);
                        }
                        Self::accumulate(grads, *p, shaped(pv, d));
                    }
                    offset += block;
                }
            }
            Op::Slice { src, axis, start } => {
                if !self.wants(*src) {
                    return;
                }
                let sv = val(*src);
                let (outer, dim, inner) = axis_split(sv.shape(), *axis);
                let len = node.value.shape()[*axis];
                let mut d = vec![T::zero(); sv.len()];
                for o in 0..outer {
                    let dst = o * dim * inner + start * inner;
                    let srcb = o * len * inner;
                    d[dst..dst + len * inner].copy_from_slice(&g.data()[srcb..srcb + len * inner]);
                }
                Self::accumulate(grads, *src, shaped(sv, d));
            }
            Op::Sum(a) => {
                if self.wants(*a) {
                    let av = val(*a);
                    Self::accumulate(grads, *a, Tensor::filled(av.shape(), g.item()));
                }
            }
            Op::Mean(a) => {
                if self.wants(*a) {
                    let av = val(*a);
                    let s = g.item() / T::of(av.len().max(1) as f64);
                    Self::accumulate(grads, *a, Tensor::filled(av.shape(), s));
                }
            }
            Op::BceWithLogits(x, t) => {
                let (xv, tv) = (val(*x), val(*t));
                let s = g.item() / T::of(xv.len().max(1) as f64);
                if self.wants(*x) {
                    let d = zip_pair(xv, tv, |x, t| s * (sigmoid(x) - t));
                    Self::accumulate(grads, *x, shaped(xv, d));
                }
                if self.wants(*t) {
                    let d = xv.data().iter().map(|&x| -s * x).collect();
                    Self::accumulate(grads, *t, shaped(tv, d));
                }
            }
            Op::SoftmaxCrossEntropy(x, t) => {
                let (xv, tv) = (val(*x), val(*t));
                let w = xv.shape().last().copied().unwrap_or(1).max(1);
                let s = g.item() / T::of((xv.len() / w).max(1) as f64);
                let mut ls = vec![T::zero(); w];
                let mut dx = Vec::with_capacity(xv.len());
                let mut dt = Vec::with_capacity(xv.len());
                for (xr, tr) in xv.data().chunks(w).zip(tv.data().chunks(w)) {
                    log_softmax_row(xr, &mut ls);
                    let tsum = tr.iter().fold(T::zero(), |a, &b| a + b);
                    for (&l, &t) in ls.iter().zip(tr) {
                        dx.push(s * (l.exp() * tsum - t));
                        dt.push(-s * l);
                    }
                }
                if self.wants(*x) {
                    Self::accumulate(grads, *x, shaped(xv, dx));
                }
                if self.wants(*t) {
                    Self::accumulate(grads, *t, shaped(tv, dt));
                }
            }
            Op::Mse(p, t) => {
                let (pv, tv) = (val(*p), val(*t));
                let s = g.item() * T::of(2.0) / T::of(pv.len().max(1) as f64);
                let d: Vec<T> = zip_pair(pv, tv, |p, t| s * (p - t));
                if self.wants(*t) {
                    Self::accumulate(grads, *t, shaped(tv, d.iter().map(|&v| -v).collect()));
                }
                if self.wants(*p) {
                    Self::accumulate(grads, *p, shaped(pv, d));
                }
            }
        }
    }
}

fn zip3<T: Scalar>(g: &Tensor<T>, other: &Tensor<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    g.data().iter().zip(other.data()).map(|(&a, &b)| f(a, b)).collect()
}

fn zip_pair<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
}
