//! Reverse-mode differentiation over a recorded tape of vector operations.
//!
//! Only the layer set needed by the dialogue models is supported: affine
//! maps, element-wise activations, gating products, concatenation and
//! slicing, table lookups, dot products and a fused softmax cross-entropy.
//! Weights live in a [`ParamStore`] that the graph borrows read-only, so a
//! store can be shared by many concurrent forward passes.

use crate::error::{Error, Result};
use crate::neuro::scalar::{axpy, dot, Scalar};
use crate::neuro::tensor::{softmax_slice, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Ordered, named collection of parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> ParamId {
        let name = name.into();
        assert!(!self.names.contains(&name), "duplicate parameter name {name}");
        self.names.push(name);
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total scalar count over all tensors.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.tensors.iter_mut()
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Sets every parameter to zero.
    pub fn zero_all(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Replaces tensor contents in order; shapes must already agree.
    pub fn replace(&mut self, id: ParamId, tensor: Tensor<T>) -> Result<()> {
        let cur = &self.tensors[id.0];
        if cur.shape() != tensor.shape() {
            return Err(Error::dim(
                format!("parameter {}", self.names[id.0]),
                format!("{:?}", cur.shape()),
                format!("{:?}", tensor.shape()),
            ));
        }
        self.tensors[id.0] = tensor;
        Ok(())
    }
}

/// Gradient buffers aligned with a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(store: &ParamStore<T>) -> Self {
        Self {
            params: store.tensors.iter().map(|t| vec![T::zero(); t.len()]).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &[T] {
        &self.params[id.0]
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, c: T) {
        for g in &mut self.params {
            g.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn global_norm(&self) -> T {
        let mut sq = T::zero();
        for g in &self.params {
            sq += dot(g, g);
        }
        sq.sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`; returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: T) -> T {
        let norm = self.global_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative expressed through the input `x` and output `y`.
    fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    Linear { w: ParamId, b: Option<ParamId>, x: Var },
    Row { table: ParamId, row: usize },
    Add(Var, Var),
    Mul(Var, Var),
    Act(Var, Activation),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Dot(Var, Var),
    SoftmaxXent { logits: Var, target: usize, weight: T, probs: Vec<T> },
    Sum(Var),
    Scale(Var, T),
}

#[derive(Debug)]
struct Node<T> {
    value: Vec<T>,
    op: Op<T>,
}

/// Result of a backward pass: parameter gradients plus the gradient of
/// every recorded node.
#[derive(Debug)]
pub struct Backward<T> {
    pub params: Gradients<T>,
    nodes: Vec<Vec<T>>,
}

impl<T: Scalar> Backward<T> {
    /// Gradient with respect to a node; zeros when the node did not
    /// influence the loss.
    pub fn wrt(&self, v: Var) -> &[T] {
        &self.nodes[v.0]
    }
}

/// A tape recording one forward evaluation.
pub struct Graph<'p, T: Scalar> {
    store: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(store: &'p ParamStore<T>) -> Self {
        Self {
            store,
            nodes: Vec::with_capacity(64),
        }
    }

    pub fn store(&self) -> &'p ParamStore<T> {
        self.store
    }

    fn push(&mut self, value: Vec<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn len_of(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    pub fn input(&mut self, value: Vec<T>) -> Var {
        self.push(value, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.store.get(id).data().to_vec();
        self.push(value, Op::Param(id))
    }

    /// `W x + b` where `W` is a rows x cols parameter matrix.
    pub fn linear(&mut self, w: ParamId, b: Option<ParamId>, x: Var) -> Result<Var> {
        let wt = self.store.get(w);
        let xv = &self.nodes[x.0].value;
        if wt.shape().len() != 2 || wt.cols() != xv.len() {
            return Err(Error::dim(
                format!("linear {}", self.store.name(w)),
                format!("input width {}", wt.cols()),
                xv.len(),
            ));
        }
        let mut out = wt.matvec(xv)?;
        if let Some(b) = b {
            let bt = self.store.get(b);
            if bt.len() != out.len() {
                return Err(Error::dim(format!("bias {}", self.store.name(b)), out.len(), bt.len()));
            }
            for (o, &bv) in out.iter_mut().zip(bt.data()) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::Linear { w, b, x }))
    }

    /// Row `row` of a V x E lookup table.
    pub fn row(&mut self, table: ParamId, row: usize) -> Result<Var> {
        let t = self.store.get(table);
        if row >= t.rows() {
            return Err(Error::index(format!("lookup table {}", self.store.name(table)), row, t.rows()));
        }
        let value = t.row(row).to_vec();
        Ok(self.push(value, Op::Row { table, row }))
    }

    fn same_len(&self, a: Var, b: Var, ctx: &str) -> Result<()> {
        let (la, lb) = (self.len_of(a), self.len_of(b));
        if la != lb {
            return Err(Error::dim(ctx, la, lb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "add")?;
        let v = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x + y).collect();
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "mul")?;
        let v = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x * y).collect();
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn activate(&mut self, x: Var, act: Activation) -> Var {
        if act == Activation::Identity {
            return x;
        }
        let v = self.value(x).iter().map(|&z| act.apply(z)).collect();
        self.push(v, Op::Act(x, act))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.activate(x, Activation::Sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.activate(x, Activation::Tanh)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.activate(x, Activation::Relu)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut v = Vec::with_capacity(parts.iter().map(|&p| self.len_of(p)).sum());
        for &p in parts {
            v.extend_from_slice(self.value(p));
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.len_of(src);
        if start + len > n {
            return Err(Error::dim("slice", format!("at least {}", start + len), n));
        }
        let v = self.value(src)[start..start + len].to_vec();
        Ok(self.push(v, Op::Slice { src, start }))
    }

    /// Scalar (length-1) dot product.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "dot")?;
        let v = dot(self.value(a), self.value(b));
        Ok(self.push(vec![v], Op::Dot(a, b)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().copied().sum();
        self.push(vec![s], Op::Sum(x))
    }

    pub fn scale(&mut self, x: Var, c: T) -> Var {
        let v = self.value(x).iter().map(|&z| z * c).collect();
        self.push(v, Op::Scale(x, c))
    }

    /// Fused `-weight * ln softmax(logits)[target]`; its logit gradient is
    /// `weight * (softmax - onehot)`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize, weight: T) -> Result<Var> {
        let l = self.value(logits);
        if target >= l.len() {
            return Err(Error::index("cross-entropy target", target, l.len()));
        }
        let max = l.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + l.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
        let loss = weight * (lse - l[target]);
        let probs = softmax_slice(l)?;
        Ok(self.push(
            vec![loss],
            Op::SoftmaxXent {
                logits,
                target,
                weight,
                probs,
            },
        ))
    }

    /// Sum of several length-1 nodes.
    pub fn add_scalars(&mut self, terms: &[Var]) -> Result<Var> {
        if terms.is_empty() {
            return Err(Error::Argument("sum of zero terms".into()));
        }
        let cat = self.concat(terms);
        Ok(self.sum(cat))
    }

    /// Back-propagates from a length-1 node.
    pub fn backward(&self, loss: Var) -> Result<Backward<T>> {
        if self.len_of(loss) != 1 {
            return Err(Error::dim("backward seed", 1, self.len_of(loss)));
        }
        let mut params = Gradients::zeros_like(self.store);
        let mut grads: Vec<Vec<T>> = self.nodes.iter().map(|_| Vec::new()).collect();
        grads[loss.0] = vec![T::one()];

        fn acc<T: Scalar>(grads: &mut [Vec<T>], lens: usize, v: Var) -> &mut Vec<T> {
            let g = &mut grads[v.0];
            if g.is_empty() {
                *g = vec![T::zero(); lens];
            }
            g
        }

        for i in (0..=loss.0).rev() {
            if grads[i].is_empty() {
                continue;
            }
            let gout = std::mem::take(&mut grads[i]);
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    for (p, &g) in params.params[id.0].iter_mut().zip(&gout) {
                        *p += g;
                    }
                }
                Op::Linear { w, b, x } => {
                    let wt = self.store.get(*w);
                    let cols = wt.cols();
                    let xv = &self.nodes[x.0].value;
                    let gx = acc(&mut grads, cols, *x);
                    let gw = &mut params.params[w.0];
                    for (r, &g) in gout.iter().enumerate() {
                        if g == T::zero() {
                            continue;
                        }
                        axpy(g, wt.row(r), gx);
                        axpy(g, xv, &mut gw[r * cols..(r + 1) * cols]);
                    }
                    if let Some(b) = b {
                        for (p, &g) in params.params[b.0].iter_mut().zip(&gout) {
                            *p += g;
                        }
                    }
                }
                Op::Row { table, row } => {
                    let cols = self.store.get(*table).cols();
                    let gt = &mut params.params[table.0][row * cols..(row + 1) * cols];
                    for (p, &g) in gt.iter_mut().zip(&gout) {
                        *p += g;
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        let g = acc(&mut grads, gout.len(), v);
                        for (x, &y) in g.iter_mut().zip(&gout) {
                            *x += y;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga: Vec<T> = gout.iter().zip(bv).map(|(&g, &y)| g * y).collect();
                    let gb: Vec<T> = gout.iter().zip(av).map(|(&g, &x)| g * x).collect();
                    for (v, d) in [(*a, ga), (*b, gb)] {
                        let g = acc(&mut grads, d.len(), v);
                        for (x, y) in g.iter_mut().zip(d) {
                            *x += y;
                        }
                    }
                }
                Op::Act(x, act) => {
                    let xv = &self.nodes[x.0].value;
                    let d: Vec<T> = gout
                        .iter()
                        .zip(xv.iter().zip(&node.value))
                        .map(|(&g, (&xi, &yi))| g * act.derivative(xi, yi))
                        .collect();
                    let g = acc(&mut grads, d.len(), *x);
                    for (a, b) in g.iter_mut().zip(d) {
                        *a += b;
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.nodes[p.0].value.len();
                        let g = acc(&mut grads, n, p);
                        for (a, &b) in g.iter_mut().zip(&gout[off..off + n]) {
                            *a += b;
                        }
                        off += n;
                    }
                }
                Op::Slice { src, start } => {
                    let n = self.nodes[src.0].value.len();
                    let g = acc(&mut grads, n, *src);
                    for (a, &b) in g[*start..*start + gout.len()].iter_mut().zip(&gout) {
                        *a += b;
                    }
                }
                Op::Dot(a, b) => {
                    let g0 = gout[0];
                    let (av, bv) = (self.nodes[a.0].value.clone(), self.nodes[b.0].value.clone());
                    axpy(g0, &bv, acc(&mut grads, av.len(), *a));
                    axpy(g0, &av, acc(&mut grads, bv.len(), *b));
                }
                Op::SoftmaxXent {
                    logits,
                    target,
                    weight,
                    probs,
                } => {
                    let g0 = gout[0] * *weight;
                    let g = acc(&mut grads, probs.len(), *logits);
                    for (k, (a, &p)) in g.iter_mut().zip(probs).enumerate() {
                        let onehot = if k == *target { T::one() } else { T::zero() };
                        *a += g0 * (p - onehot);
                    }
                }
                Op::Sum(x) => {
                    let n = self.nodes[x.0].value.len();
                    let g0 = gout[0];
                    acc(&mut grads, n, *x).iter_mut().for_each(|a| *a += g0);
                }
                Op::Scale(x, c) => {
                    let g = acc(&mut grads, gout.len(), *x);
                    for (a, &b) in g.iter_mut().zip(&gout) {
                        *a += b * *c;
                    }
                }
            }
            grads[i] = gout;
        }
        for (g, n) in grads.iter_mut().zip(&self.nodes) {
            if g.is_empty() {
                *g = vec![T::zero(); n.value.len()];
            }
        }
        Ok(Backward { params, nodes: grads })
    }
}
