use std::collections::HashMap;

use rand::Rng;

use super::{Gradients, NumError, ParamId, ParamSet, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, T),
    Tanh(NodeId),
    Sigmoid(NodeId),
    ConcatCols(Vec<NodeId>),
    SliceCols(NodeId, usize),
    ConcatRows(Vec<NodeId>),
    Embedding(NodeId, Vec<usize>),
    Dropout(NodeId, Vec<T>),
    Maxout(NodeId, Vec<usize>),
    Softmax(NodeId),
    LogSoftmax(NodeId),
    Nll(NodeId, Vec<usize>, Vec<T>),
    Blend(Vec<bool>, NodeId, NodeId),
    AdditiveScores(Vec<NodeId>, NodeId, NodeId),
    Attend(NodeId, Vec<NodeId>),
    Gather(Vec<NodeId>, Vec<usize>),
    Sum(NodeId),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::AddBias(..) => "add_bias",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::ConcatCols(_) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::ConcatRows(_) => "concat_rows",
            Op::Embedding(..) => "embedding",
            Op::Dropout(..) => "dropout",
            Op::Maxout(..) => "maxout",
            Op::Softmax(_) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Nll(..) => "nll",
            Op::Blend(..) => "blend",
            Op::AdditiveScores(..) => "additive_scores",
            Op::Attend(..) => "attend",
            Op::Gather(..) => "gather",
            Op::Sum(_) => "sum",
        }
    }

    fn inputs(&self) -> Vec<NodeId> {
        match self {
            Op::Constant | Op::Param(_) => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::AddBias(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::SliceCols(a, _)
            | Op::Embedding(a, _)
            | Op::Dropout(a, _)
            | Op::Maxout(a, _)
            | Op::Softmax(a)
            | Op::LogSoftmax(a)
            | Op::Nll(a, ..)
            | Op::Sum(a) => vec![*a],
            Op::ConcatCols(xs) | Op::ConcatRows(xs) | Op::Gather(xs, _) => xs.clone(),
            Op::Blend(_, a, b) => vec![*a, *b],
            Op::AdditiveScores(keys, q, v) => {
                let mut all = keys.clone();
                all.push(*q);
                all.push(*v);
                all
            }
            Op::Attend(w, states) => {
                let mut all = vec![*w];
                all.extend_from_slice(states);
                all
            }
        }
    }
}

struct Node<T> {
    op: Op<T>,
    value: Option<Tensor<T>>,
    needs_grad: bool,
}

/// Record of differentiable operations over a borrowed parameter set.
///
/// Parameters are read in place; `backward` returns their gradients, which
/// the caller folds into the set with [`ParamSet::accumulate`] once the tape
/// is dropped.
pub struct Tape<'p, T: Scalar> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<ParamId, NodeId>,
}

fn slot<'a, T: Scalar>(
    adj: &'a mut [Option<Tensor<T>>],
    n: NodeId,
    shape: &[usize],
) -> &'a mut Tensor<T> {
    adj[n.0].get_or_insert_with(|| Tensor::zeros(shape))
}

fn shape_err(op: &'static str, detail: String) -> NumError {
    NumError::ShapeMismatch { op, detail }
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn params(&self) -> &'p ParamSet<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(p)) => &self.params.get(*p).value,
            (None, _) => unreachable!("only parameter nodes borrow their value"),
        }
    }

    fn dims(&self, id: NodeId, op: &'static str) -> Result<(usize, usize), NumError> {
        self.value(id).dims2(op)
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>) -> Result<NodeId, NumError> {
        if !value.is_finite() {
            return Err(NumError::Numerical { op: op.name() });
        }
        let needs_grad = op.inputs().iter().any(|i| self.nodes[i.0].needs_grad);
        self.nodes.push(Node {
            op,
            value: Some(value),
            needs_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, value: Tensor<T>) -> Result<NodeId, NumError> {
        self.push(Op::Constant, value)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(&n) = self.param_nodes.get(&id) {
            return n;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
            needs_grad: !self.params.is_frozen(id),
        });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes.insert(id, n);
        n
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let (m, k) = self.dims(a, "matmul")?;
        let (k2, n) = self.dims(b, "matmul")?;
        if k != k2 {
            return Err(shape_err("matmul", format!("[{m},{k}] x [{k2},{n}]")));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(m, k, n, self.value(a).data(), false, self.value(b).data(), false, T::zero(), &mut out);
        self.push(Op::MatMul(a, b), Tensor::matrix(m, n, out)?)
    }

    fn same_shape(&self, a: NodeId, b: NodeId, op: &'static str) -> Result<(), NumError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(shape_err(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn zip_with(&self, a: NodeId, b: NodeId, f: impl Fn(T, T) -> T) -> Tensor<T> {
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(va.shape().to_vec(), data).expect("same shape")
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        self.same_shape(a, b, "add")?;
        let v = self.zip_with(a, b, |x, y| x + y);
        self.push(Op::Add(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        self.same_shape(a, b, "mul")?;
        let v = self.zip_with(a, b, |x, y| x * y);
        self.push(Op::Mul(a, b), v)
    }

    /// Adds a `[1, C]` row to every row of `a: [R, C]`.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, NumError> {
        let (r, c) = self.dims(a, "add_bias")?;
        let vb = self.value(bias);
        if vb.numel() != c {
            return Err(shape_err("add_bias", format!("[{r},{c}] + {:?}", vb.shape())));
        }
        let mut out = self.value(a).clone();
        for row in 0..r {
            for (x, &b) in out.row_mut(row).iter_mut().zip(vb.data()) {
                *x += b;
            }
        }
        self.push(Op::AddBias(a, bias), out)
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> Result<NodeId, NumError> {
        let v = self.value(a).map(|x| x * c);
        self.push(Op::Scale(a, c), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        let v = self.value(a).map(T::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        let v = self.value(a).map(|x| T::one() / (T::one() + (-x).exp()));
        self.push(Op::Sigmoid(a), v)
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, NumError> {
        let first = *parts.first().ok_or_else(|| shape_err("concat_cols", "no inputs".into()))?;
        let rows = self.dims(first, "concat_cols")?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.dims(p, "concat_cols")?;
            if r != rows {
                return Err(shape_err("concat_cols", format!("row counts {rows} vs {r}")));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(r));
            }
        }
        self.push(Op::ConcatCols(parts.to_vec()), Tensor::matrix(rows, total, out)?)
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, NumError> {
        let (rows, cols) = self.dims(a, "slice_cols")?;
        if len == 0 || start + len > cols {
            return Err(shape_err("slice_cols", format!("[{start}, {}) of {cols}", start + len)));
        }
        let va = self.value(a);
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&va.row(r)[start..start + len]);
        }
        self.push(Op::SliceCols(a, start), Tensor::matrix(rows, len, out)?)
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId, NumError> {
        let first = *parts.first().ok_or_else(|| shape_err("concat_rows", "no inputs".into()))?;
        let cols = self.dims(first, "concat_rows")?.1;
        let mut rows = 0;
        let mut out = Vec::new();
        for &p in parts {
            let (r, c) = self.dims(p, "concat_rows")?;
            if c != cols {
                return Err(shape_err("concat_rows", format!("widths {cols} vs {c}")));
            }
            rows += r;
            out.extend_from_slice(self.value(p).data());
        }
        self.push(Op::ConcatRows(parts.to_vec()), Tensor::matrix(rows, cols, out)?)
    }

    /// Row `ids[r]` of `table` for every `r`.
    pub fn embedding(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId, NumError> {
        let (vocab, dim) = self.dims(table, "embedding")?;
        if ids.is_empty() {
            return Err(shape_err("embedding", "no ids".into()));
        }
        let vt = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            if id >= vocab {
                return Err(shape_err("embedding", format!("id {id} outside table of {vocab}")));
            }
            out.extend_from_slice(vt.row(id));
        }
        self.push(Op::Embedding(table, ids.to_vec()), Tensor::matrix(ids.len(), dim, out)?)
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - p)`.
    pub fn dropout(&mut self, a: NodeId, p: f64, rng: &mut impl Rng) -> Result<NodeId, NumError> {
        if !(0.0..1.0).contains(&p) {
            return Err(NumError::InvalidArgument(format!("dropout probability {p} not in [0, 1)")));
        }
        if p == 0.0 {
            return Ok(a);
        }
        let keep = T::of(1.0 / (1.0 - p));
        let va = self.value(a);
        let mask: Vec<T> = (0..va.numel())
            .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
            .collect();
        let data = va.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        self.push(Op::Dropout(a, mask), out)
    }

    /// Maximum over consecutive groups of `pieces` columns.
    pub fn maxout(&mut self, a: NodeId, pieces: usize) -> Result<NodeId, NumError> {
        let (rows, cols) = self.dims(a, "maxout")?;
        if pieces == 0 || cols % pieces != 0 {
            return Err(shape_err("maxout", format!("width {cols} not divisible by {pieces}")));
        }
        let width = cols / pieces;
        let va = self.value(a);
        let mut out = Vec::with_capacity(rows * width);
        let mut argmax = Vec::with_capacity(rows * width);
        for r in 0..rows {
            let row = va.row(r);
            for j in 0..width {
                let base = j * pieces;
                let mut best = base;
                for q in base + 1..base + pieces {
                    if row[q] > row[best] {
                        best = q;
                    }
                }
                out.push(row[best]);
                argmax.push(best);
            }
        }
        self.push(Op::Maxout(a, argmax), Tensor::matrix(rows, width, out)?)
    }

    /// Softmax along each row.
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        let (_, cols) = self.dims(a, "softmax")?;
        let rows = self.value(a).rows();
        self.masked_softmax(a, &vec![cols; rows])
    }

    /// Softmax over the first `lengths[r]` columns of row `r`; the rest are 0.
    pub fn masked_softmax(&mut self, a: NodeId, lengths: &[usize]) -> Result<NodeId, NumError> {
        let (rows, cols) = self.dims(a, "softmax")?;
        if lengths.len() != rows || lengths.iter().any(|&l| l == 0 || l > cols) {
            return Err(shape_err("softmax", format!("lengths {lengths:?} for [{rows},{cols}]")));
        }
        let mut out = self.value(a).clone();
        for (r, &len) in lengths.iter().enumerate() {
            let row = out.row_mut(r);
            let max = row[..len].iter().copied().fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for x in &mut row[..len] {
                *x = (*x - max).exp();
                total += *x;
            }
            for x in &mut row[..len] {
                *x = *x / total;
            }
            row[len..].iter_mut().for_each(|x| *x = T::zero());
        }
        self.push(Op::Softmax(a), out)
    }

    pub fn log_softmax(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        let (rows, _) = self.dims(a, "log_softmax")?;
        let mut out = self.value(a).clone();
        for r in 0..rows {
            let row = out.row_mut(r);
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<T>().ln();
            row.iter_mut().for_each(|x| *x = *x - lse);
        }
        self.push(Op::LogSoftmax(a), out)
    }

    /// `-Σ_r weights[r] · logp[r, targets[r]]`.
    pub fn nll(&mut self, logp: NodeId, targets: &[usize], weights: &[T]) -> Result<NodeId, NumError> {
        let (rows, cols) = self.dims(logp, "nll")?;
        if targets.len() != rows || weights.len() != rows {
            return Err(shape_err("nll", format!("{} targets for {rows} rows", targets.len())));
        }
        let v = self.value(logp);
        let mut loss = T::zero();
        for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
            if w == T::zero() {
                continue;
            }
            if t >= cols {
                return Err(shape_err("nll", format!("target {t} outside {cols} classes")));
            }
            loss -= w * v.get(r, t);
        }
        self.push(Op::Nll(logp, targets.to_vec(), weights.to_vec()), Tensor::scalar(loss))
    }

    /// Mean negative log-likelihood over targets different from `ignore_index`.
    pub fn cross_entropy(
        &mut self,
        logp: NodeId,
        targets: &[usize],
        ignore_index: usize,
    ) -> Result<NodeId, NumError> {
        let n = targets.iter().filter(|&&t| t != ignore_index).count();
        let w = if n == 0 { T::zero() } else { T::one() / T::of(n as f64) };
        let weights: Vec<T> = targets
            .iter()
            .map(|&t| if t == ignore_index { T::zero() } else { w })
            .collect();
        self.nll(logp, targets, &weights)
    }

    /// Row `r` comes from `new` where `take_new[r]`, else from `old`.
    pub fn blend(&mut self, take_new: &[bool], new: NodeId, old: NodeId) -> Result<NodeId, NumError> {
        self.same_shape(new, old, "blend")?;
        let rows = self.value(new).rows();
        if take_new.len() != rows {
            return Err(shape_err("blend", format!("{} flags for {rows} rows", take_new.len())));
        }
        if take_new.iter().all(|&t| t) {
            return Ok(new);
        }
        let mut out = self.value(old).clone();
        let vn = self.value(new);
        for (r, &t) in take_new.iter().enumerate() {
            if t {
                out.row_mut(r).copy_from_slice(vn.row(r));
            }
        }
        self.push(Op::Blend(take_new.to_vec(), new, old), out)
    }

    /// `out[b, i] = Σ_k v[k] · tanh(keys[i][b, k] + query[b, k])`.
    pub fn additive_scores(
        &mut self,
        keys: &[NodeId],
        query: NodeId,
        v: NodeId,
    ) -> Result<NodeId, NumError> {
        let (batch, width) = self.dims(query, "additive_scores")?;
        if keys.is_empty() || self.value(v).numel() != width {
            return Err(shape_err("additive_scores", "keys or projection vector".into()));
        }
        for &k in keys {
            if self.dims(k, "additive_scores")? != (batch, width) {
                return Err(shape_err("additive_scores", "key shape differs from query".into()));
            }
        }
        let (vq, vv) = (self.value(query), self.value(v).data());
        let mut out = vec![T::zero(); batch * keys.len()];
        for (i, &k) in keys.iter().enumerate() {
            let vk = self.value(k);
            for b in 0..batch {
                let (kr, qr) = (vk.row(b), vq.row(b));
                out[b * keys.len() + i] = (0..width).map(|j| vv[j] * (kr[j] + qr[j]).tanh()).sum();
            }
        }
        let t = Tensor::matrix(batch, keys.len(), out)?;
        self.push(Op::AdditiveScores(keys.to_vec(), query, v), t)
    }

    /// `out[b] = Σ_i weights[b, i] · states[i][b]`.
    pub fn attend(&mut self, weights: NodeId, states: &[NodeId]) -> Result<NodeId, NumError> {
        let (batch, n) = self.dims(weights, "attend")?;
        if n != states.len() {
            return Err(shape_err("attend", format!("{n} weights for {} states", states.len())));
        }
        let dim = self.dims(states[0], "attend")?.1;
        for &s in states {
            if self.dims(s, "attend")? != (batch, dim) {
                return Err(shape_err("attend", "state shapes differ".into()));
            }
        }
        let vw = self.value(weights);
        let mut out = vec![T::zero(); batch * dim];
        for (i, &s) in states.iter().enumerate() {
            let vs = self.value(s);
            for b in 0..batch {
                let w = vw.get(b, i);
                for (o, &x) in out[b * dim..(b + 1) * dim].iter_mut().zip(vs.row(b)) {
                    *o += w * x;
                }
            }
        }
        self.push(Op::Attend(weights, states.to_vec()), Tensor::matrix(batch, dim, out)?)
    }

    /// `out[b] = states[index[b]][b]`.
    pub fn gather(&mut self, states: &[NodeId], index: &[usize]) -> Result<NodeId, NumError> {
        let first = *states.first().ok_or_else(|| shape_err("gather", "no states".into()))?;
        let (batch, dim) = self.dims(first, "gather")?;
        if index.len() != batch {
            return Err(shape_err("gather", format!("{} indices for {batch} rows", index.len())));
        }
        let mut out = Vec::with_capacity(batch * dim);
        for (b, &i) in index.iter().enumerate() {
            let s = *states
                .get(i)
                .ok_or_else(|| shape_err("gather", format!("index {i} of {}", states.len())))?;
            if self.dims(s, "gather")? != (batch, dim) {
                return Err(shape_err("gather", "state shapes differ".into()));
            }
            out.extend_from_slice(self.value(s).row(b));
        }
        self.push(Op::Gather(states.to_vec(), index.to_vec()), Tensor::matrix(batch, dim, out)?)
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        let total = self.value(a).data().iter().copied().sum();
        self.push(Op::Sum(a), Tensor::scalar(total))
    }

    /// Reverse pass from a scalar `loss`, visiting nodes in exact reverse
    /// recording order.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>, NumError> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(NumError::NotScalar(lv.shape().to_vec()));
        }
        let mut adj: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Tensor::new(lv.shape().to_vec(), vec![T::one()])?);
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.params.len()).map(|_| None).collect();

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = adj[idx].take() else { continue };
            self.propagate(&node.op, NodeId(idx), &g, &mut adj, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn propagate(
        &self,
        op: &Op<T>,
        id: NodeId,
        g: &Tensor<T>,
        adj: &mut [Option<Tensor<T>>],
        grads: &mut [Option<Tensor<T>>],
    ) {
        let needs = |n: NodeId| self.nodes[n.0].needs_grad;
        macro_rules! acc {
            ($n:expr) => {{
                let n: NodeId = $n;
                slot(adj, n, self.value(n).shape())
            }};
        }
        let gd = g.data();
        match op {
            Op::Constant => {}
            Op::Param(p) => {
                grads[p.0] = Some(g.clone());
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k) = (va.rows(), va.cols());
                let n = vb.cols();
                if needs(*a) {
                    T::gemm(m, n, k, gd, false, vb.data(), true, T::one(), acc!(*a).data_mut());
                }
                if needs(*b) {
                    T::gemm(k, m, n, va.data(), true, gd, false, T::one(), acc!(*b).data_mut());
                }
            }
            Op::Add(a, b) => {
                for x in [*a, *b] {
                    if needs(x) {
                        acc!(x).add_assign(g);
                    }
                }
            }
            Op::AddBias(a, b) => {
                if needs(*a) {
                    acc!(*a).add_assign(g);
                }
                if needs(*b) {
                    let cols = g.cols();
                    let db = acc!(*b).data_mut();
                    for (i, &x) in gd.iter().enumerate() {
                        db[i % cols] += x;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                if needs(*a) {
                    for ((d, &x), &y) in acc!(*a).data_mut().iter_mut().zip(gd).zip(vb) {
                        *d += x * y;
                    }
                }
                if needs(*b) {
                    for ((d, &x), &y) in acc!(*b).data_mut().iter_mut().zip(gd).zip(va) {
                        *d += x * y;
                    }
                }
            }
            Op::Scale(a, c) => {
                for (d, &x) in acc!(*a).data_mut().iter_mut().zip(gd) {
                    *d += x * *c;
                }
            }
            Op::Tanh(a) => {
                let y = self.value(id).data();
                for ((d, &x), &yv) in acc!(*a).data_mut().iter_mut().zip(gd).zip(y) {
                    *d += x * (T::one() - yv * yv);
                }
            }
            Op::Sigmoid(a) => {
                let y = self.value(id).data();
                for ((d, &x), &yv) in acc!(*a).data_mut().iter_mut().zip(gd).zip(y) {
                    *d += x * yv * (T::one() - yv);
                }
            }
            Op::ConcatCols(parts) => {
                let (rows, total) = (g.rows(), g.cols());
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if needs(p) {
                        let dp = acc!(p);
                        for r in 0..rows {
                            let src = &gd[r * total + offset..r * total + offset + w];
                            for (d, &x) in dp.row_mut(r).iter_mut().zip(src) {
                                *d += x;
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::SliceCols(a, start) => {
                let w = g.cols();
                let da = acc!(*a);
                for r in 0..g.rows() {
                    for (d, &x) in da.row_mut(r)[*start..*start + w].iter_mut().zip(g.row(r)) {
                        *d += x;
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).numel();
                    if needs(p) {
                        for (d, &x) in acc!(p).data_mut().iter_mut().zip(&gd[offset..offset + n]) {
                            *d += x;
                        }
                    }
                    offset += n;
                }
            }
            Op::Embedding(table, ids) => {
                let dt = acc!(*table);
                for (r, &i) in ids.iter().enumerate() {
                    for (d, &x) in dt.row_mut(i).iter_mut().zip(g.row(r)) {
                        *d += x;
                    }
                }
            }
            Op::Dropout(a, mask) => {
                for ((d, &x), &m) in acc!(*a).data_mut().iter_mut().zip(gd).zip(mask) {
                    *d += x * m;
                }
            }
            Op::Maxout(a, argmax) => {
                let width = g.cols();
                let da = acc!(*a);
                let in_cols = da.cols();
                for (i, &x) in gd.iter().enumerate() {
                    let r = i / width;
                    da.data_mut()[r * in_cols + argmax[i]] += x;
                }
            }
            Op::Softmax(a) => {
                let y = self.value(id);
                let da = acc!(*a);
                for r in 0..g.rows() {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let dot: T = gr.iter().zip(yr).map(|(&x, &p)| x * p).sum();
                    for ((d, &x), &p) in da.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *d += p * (x - dot);
                    }
                }
            }
            Op::LogSoftmax(a) => {
                let y = self.value(id);
                let da = acc!(*a);
                for r in 0..g.rows() {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let total: T = gr.iter().copied().sum();
                    for ((d, &x), &ly) in da.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *d += x - ly.exp() * total;
                    }
                }
            }
            Op::Nll(a, targets, weights) => {
                let gs = gd[0];
                let da = acc!(*a);
                let cols = da.cols();
                for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                    if w != T::zero() {
                        da.data_mut()[r * cols + t] -= w * gs;
                    }
                }
            }
            Op::Blend(take_new, new, old) => {
                for (src, want) in [(*new, true), (*old, false)] {
                    if needs(src) {
                        let ds = acc!(src);
                        for (r, &t) in take_new.iter().enumerate() {
                            if t == want {
                                for (d, &x) in ds.row_mut(r).iter_mut().zip(g.row(r)) {
                                    *d += x;
                                }
                            }
                        }
                    }
                }
            }
            Op::AdditiveScores(keys, query, v) => {
                let (vq, vv) = (self.value(*query), self.value(*v));
                let (batch, width) = (vq.rows(), vq.cols());
                let n = keys.len();
                let mut dq = vec![T::zero(); batch * width];
                let mut dv = vec![T::zero(); width];
                for (i, &k) in keys.iter().enumerate() {
                    let vk = self.value(k);
                    let mut dk = vec![T::zero(); batch * width];
                    for b in 0..batch {
                        let gbi = gd[b * n + i];
                        let (kr, qr) = (vk.row(b), vq.row(b));
                        for j in 0..width {
                            let t = (kr[j] + qr[j]).tanh();
                            dv[j] += gbi * t;
                            let pre = gbi * vv.data()[j] * (T::one() - t * t);
                            dk[b * width + j] = pre;
                            dq[b * width + j] += pre;
                        }
                    }
                    if needs(k) {
                        for (d, x) in acc!(k).data_mut().iter_mut().zip(dk) {
                            *d += x;
                        }
                    }
                }
                if needs(*query) {
                    for (d, x) in acc!(*query).data_mut().iter_mut().zip(dq) {
                        *d += x;
                    }
                }
                if needs(*v) {
                    for (d, x) in acc!(*v).data_mut().iter_mut().zip(dv) {
                        *d += x;
                    }
                }
            }
            Op::Attend(weights, states) => {
                let vw = self.value(*weights);
                let (batch, n) = (vw.rows(), vw.cols());
                if needs(*weights) {
                    let mut dw = vec![T::zero(); batch * n];
                    for (i, &s) in states.iter().enumerate() {
                        let vs = self.value(s);
                        for b in 0..batch {
                            dw[b * n + i] = g.row(b).iter().zip(vs.row(b)).map(|(&x, &y)| x * y).sum();
                        }
                    }
                    for (d, x) in acc!(*weights).data_mut().iter_mut().zip(dw) {
                        *d += x;
                    }
                }
                for (i, &s) in states.iter().enumerate() {
                    if needs(s) {
                        let ds = acc!(s);
                        for b in 0..batch {
                            let w = vw.get(b, i);
                            for (d, &x) in ds.row_mut(b).iter_mut().zip(g.row(b)) {
                                *d += w * x;
                            }
                        }
                    }
                }
            }
            Op::Gather(states, index) => {
                for (b, &i) in index.iter().enumerate() {
                    let s = states[i];
                    if needs(s) {
                        for (d, &x) in acc!(s).row_mut(b).iter_mut().zip(g.row(b)) {
                            *d += x;
                        }
                    }
                }
            }
            Op::Sum(a) => {
                let gs = gd[0];
                acc!(*a).data_mut().iter_mut().for_each(|d| *d += gs);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[Vec<f64>]) -> Tensor<f64> {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let x = tape.constant(t(&[vec![0.0, 0.0], vec![2f64.ln(), 0.0]])).unwrap();
        let y = tape.softmax(x).unwrap();
        let v = tape.value(y);
        assert_eq!(v.row(0), &[0.5, 0.5]);
        assert!((v.get(1, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((v.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn maxout_takes_pairwise_max() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let x = tape.constant(t(&[vec![1.0, 5.0, 2.0, 0.0]])).unwrap();
        let y = tape.maxout(x, 2).unwrap();
        assert_eq!(tape.value(y).data(), &[5.0, 2.0]);
        assert!(tape.maxout(x, 3).is_err());
    }

    #[test]
    fn zero_dropout_is_identity() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let x = tape.constant(t(&[vec![1.0, 2.0]])).unwrap();
        let mut rng = rand::thread_rng();
        assert_eq!(tape.dropout(x, 0.0, &mut rng).unwrap(), x);
        assert!(tape.dropout(x, 1.0, &mut rng).is_err());
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let x = tape.constant(t(&[vec![1e308]])).unwrap();
        assert_eq!(tape.scale(x, 10.0), Err(NumError::Numerical { op: "scale" }));
        assert!(tape.constant(t(&[vec![f64::NAN]])).is_err());
    }

    #[test]
    fn matmul_shape_mismatch() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let a = tape.constant(t(&[vec![1.0, 2.0]])).unwrap();
        assert!(matches!(tape.matmul(a, a), Err(NumError::ShapeMismatch { .. })));
    }

    #[test]
    fn linear_sum_gradient_is_input_outer_product() {
        // loss = sum(x W) with x = [1, 2]; d/dW[i][j] = x[i]
        let mut ps = ParamSet::<f64>::new();
        let w = ps.add("w", Tensor::matrix(2, 3, vec![0.3; 6]).unwrap()).unwrap();
        let unused = ps.add("unused", Tensor::zeros(&[2, 2])).unwrap();
        let grads = {
            let mut tape = Tape::new(&ps);
            let x = tape.constant(t(&[vec![1.0, 2.0]])).unwrap();
            let wn = tape.param(w);
            let y = tape.matmul(x, wn).unwrap();
            let loss = tape.sum(y).unwrap();
            assert!(tape.backward(y).is_err());
            tape.backward(loss).unwrap()
        };
        ps.accumulate(&grads);
        assert_eq!(ps.get(w).grad.data(), &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert!(ps.get(unused).grad.data().iter().all(|&g| g == 0.0));
        ps.accumulate(&grads);
        assert_eq!(ps.get(w).grad.data(), &[2.0, 2.0, 2.0, 4.0, 4.0, 4.0]);
    }

    #[test]
    fn ignored_targets_get_no_loss_or_gradient() {
        let mut ps = ParamSet::<f64>::new();
        let l = ps.add("logits", t(&[vec![0.1, 0.7, -0.2], vec![1.0, 0.0, 0.5]])).unwrap();
        let grads = {
            let mut tape = Tape::new(&ps);
            let x = tape.param(l);
            let lp = tape.log_softmax(x).unwrap();
            let loss = tape.cross_entropy(lp, &[1, 0], 0).unwrap();
            let expected = -tape.value(lp).get(0, 1);
            assert!((tape.value(loss).item().unwrap() - expected).abs() < 1e-12);
            tape.backward(loss).unwrap()
        };
        assert!(grads.get(l).unwrap().row(1).iter().all(|&g| g == 0.0));
        assert!(grads.get(l).unwrap().row(0).iter().any(|&g| g != 0.0));
    }
}
