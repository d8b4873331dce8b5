//! Wengert-list reverse-mode autodiff over 2-D `f64` matrices.
//!
//! Every op appends one node holding its forward value. Nodes only refer to
//! earlier nodes, so a single reverse sweep over the list visits each node
//! once in a valid order.

use std::sync::Arc;

use super::{NumError, Tensor, LEAKY_RELU_SLOPE, PROB_CLAMP};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The op kinds of the core op set, addressable by name through
/// [`Tape::apply`]. Parameterised ops (gather, segment reductions, affine,
/// clamped log) are only reachable through their dedicated methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    MatMul,
    Add,
    ElementwiseMul,
    ConcatColumns,
    RowMean,
    ReduceSum,
    Sigmoid,
    Exp,
    Log,
    LeakyRelu,
    SoftmaxRows,
}

impl OpKind {
    pub const ALL: [OpKind; 11] = [
        OpKind::MatMul,
        OpKind::Add,
        OpKind::ElementwiseMul,
        OpKind::ConcatColumns,
        OpKind::RowMean,
        OpKind::ReduceSum,
        OpKind::Sigmoid,
        OpKind::Exp,
        OpKind::Log,
        OpKind::LeakyRelu,
        OpKind::SoftmaxRows,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::ElementwiseMul => "elementwise_mul",
            OpKind::ConcatColumns => "concat_columns",
            OpKind::RowMean => "row_mean",
            OpKind::ReduceSum => "reduce_sum",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Exp => "exp",
            OpKind::Log => "log",
            OpKind::LeakyRelu => "leaky_relu",
            OpKind::SoftmaxRows => "softmax_rows",
        }
    }
}

/// Contiguous row groups: segment `s` owns rows `offsets[s]..offsets[s + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
}

impl Segments {
    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        let mut acc = 0;
        for len in lengths {
            acc += len;
            offsets.push(acc);
        }
        Self { offsets }
    }

    pub fn num_segments(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total_rows(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    /// Owning segment of each row.
    pub fn row_owner(&self) -> Vec<usize> {
        let mut owner = Vec::with_capacity(self.total_rows());
        for s in 0..self.num_segments() {
            owner.extend(std::iter::repeat(s).take(self.range(s).len()));
        }
        owner
    }
}

#[derive(Clone, Copy, Debug)]
enum Broadcast {
    Same,
    Row,
    Col,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var, Broadcast),
    Mul(Var, Var, Broadcast),
    Concat(Vec<Var>),
    RowMean(Var),
    SumCols(Var),
    ReduceSum(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    LogClamped(Var),
    LeakyRelu(Var),
    Affine(Var, f64),
    SoftmaxRows(Var),
    Gather(Var, Arc<[usize]>),
    SegmentSum(Var, Arc<Segments>),
    SegmentMean(Var, Arc<Segments>),
    SegmentSoftmax(Var, Arc<Segments>),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// Gradients of one backward pass, indexed by the leaf [`Var`]s.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// Gradient for `var`, or zeros of length `len` when the output did not
    /// depend on it.
    pub fn get_or_zeros(&self, var: Var, len: usize) -> Vec<f64> {
        self.get(var)
            .map_or_else(|| vec![0.0; len], <[f64]>::to_vec)
    }

    /// Copies each parameter's gradient into the matching tensor's `grad`.
    pub fn write_into(&self, params: &mut [Tensor], vars: &[Var]) -> Result<(), NumError> {
        for (tensor, &var) in params.iter_mut().zip(vars) {
            let g = self.get_or_zeros(var, tensor.len());
            tensor.set_grad(g)?;
        }
        Ok(())
    }
}

/// Append-only operation record.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(rows * cols, value.len());
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    fn check_live(&self) -> Result<(), NumError> {
        if self.consumed {
            Err(NumError::TapeConsumed)
        } else {
            Ok(())
        }
    }

    /// Records a trainable leaf.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push(t.rows(), t.cols(), t.values().to_vec(), Op::Leaf, true)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(t.rows(), t.cols(), t.values().to_vec(), Op::Leaf, false)
    }

    pub fn constant_matrix(
        &mut self,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    ) -> Result<Var, NumError> {
        if rows * cols != values.len() {
            return Err(NumError::BadShape {
                shape: vec![rows, cols],
                len: values.len(),
            });
        }
        Ok(self.push(rows, cols, values, Op::Leaf, false))
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = self.node(v);
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.node(v).value
    }

    pub fn scalar(&self, v: Var) -> Option<f64> {
        let n = self.node(v);
        (n.value.len() == 1).then(|| n.value[0])
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let n = self.node(v);
        Tensor::matrix(n.rows, n.cols, n.value.clone()).expect("node shape is consistent")
    }

    fn mismatch(&self, op: &'static str, a: Var, b: Var) -> NumError {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        NumError::ShapeMismatch {
            op,
            left: vec![ar, ac],
            right: vec![br, bc],
        }
    }

    /// Dispatches one of the named core ops.
    pub fn apply(&mut self, kind: OpKind, inputs: &[Var]) -> Result<Var, NumError> {
        let arity = match kind {
            OpKind::MatMul | OpKind::Add | OpKind::ElementwiseMul => 2,
            OpKind::ConcatColumns => inputs.len().max(1),
            _ => 1,
        };
        if inputs.len() != arity {
            return Err(NumError::Arity {
                op: kind.name(),
                expected: arity,
                found: inputs.len(),
            });
        }
        match kind {
            OpKind::MatMul => self.matmul(inputs[0], inputs[1]),
            OpKind::Add => self.add(inputs[0], inputs[1]),
            OpKind::ElementwiseMul => self.mul(inputs[0], inputs[1]),
            OpKind::ConcatColumns => self.concat_columns(inputs),
            OpKind::RowMean => self.row_mean(inputs[0]),
            OpKind::ReduceSum => self.reduce_sum(inputs[0]),
            OpKind::Sigmoid => self.sigmoid(inputs[0]),
            OpKind::Exp => self.exp(inputs[0]),
            OpKind::Log => self.log(inputs[0]),
            OpKind::LeakyRelu => self.leaky_relu(inputs[0]),
            OpKind::SoftmaxRows => self.softmax_rows(inputs[0]),
        }
    }

    /// `(m, k) x (k, n) -> (m, n)`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(self.mismatch("matmul", a, b));
        }
        let av = &self.node(a).value;
        let bv = &self.node(b).value;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for (o, &y) in row.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
        let ng = self.node(a).needs_grad || self.node(b).needs_grad;
        Ok(self.push(m, n, out, Op::MatMul(a, b), ng))
    }

    fn broadcast_mode(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        alt: Broadcast,
    ) -> Result<Broadcast, NumError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) == (br, bc) {
            return Ok(Broadcast::Same);
        }
        match alt {
            Broadcast::Row if br == 1 && bc == ac => Ok(Broadcast::Row),
            Broadcast::Col if bc == 1 && br == ar => Ok(Broadcast::Col),
            _ => Err(self.mismatch(op, a, b)),
        }
    }

    /// Elementwise sum; `b` may also be a `(1, n)` row added to every row of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let mode = self.broadcast_mode("add", a, b, Broadcast::Row)?;
        let (m, n) = self.shape(a);
        let av = &self.node(a).value;
        let bv = &self.node(b).value;
        let out: Vec<f64> = match mode {
            Broadcast::Same => av.iter().zip(bv).map(|(x, y)| x + y).collect(),
            _ => av.iter().enumerate().map(|(i, x)| x + bv[i % n]).collect(),
        };
        let ng = self.node(a).needs_grad || self.node(b).needs_grad;
        Ok(self.push(m, n, out, Op::Add(a, b, mode), ng))
    }

    /// Elementwise product; `b` may also be an `(m, 1)` column scaling each row of `a`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let mode = self.broadcast_mode("elementwise_mul", a, b, Broadcast::Col)?;
        let (m, n) = self.shape(a);
        let av = &self.node(a).value;
        let bv = &self.node(b).value;
        let out: Vec<f64> = match mode {
            Broadcast::Same => av.iter().zip(bv).map(|(x, y)| x * y).collect(),
            _ => av
                .iter()
                .enumerate()
                .map(|(i, x)| x * bv[i / n.max(1)])
                .collect(),
        };
        let ng = self.node(a).needs_grad || self.node(b).needs_grad;
        Ok(self.push(m, n, out, Op::Mul(a, b, mode), ng))
    }

    pub fn concat_columns(&mut self, parts: &[Var]) -> Result<Var, NumError> {
        self.check_live()?;
        let Some(&first) = parts.first() else {
            return Err(NumError::Arity {
                op: "concat_columns",
                expected: 1,
                found: 0,
            });
        };
        let rows = self.shape(first).0;
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(self.mismatch("concat_columns", first, p));
            }
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                let pc = self.shape(p).1;
                out.extend_from_slice(&self.node(p).value[r * pc..(r + 1) * pc]);
            }
        }
        let ng = parts.iter().any(|&p| self.node(p).needs_grad);
        Ok(self.push(rows, cols, out, Op::Concat(parts.to_vec()), ng))
    }

    /// Mean over rows: `(m, n) -> (1, n)`.
    pub fn row_mean(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let (m, n) = self.shape(a);
        if m == 0 {
            return Err(NumError::Empty { op: "row_mean" });
        }
        let av = &self.node(a).value;
        let mut out = vec![0.0; n];
        for r in 0..m {
            for (o, x) in out.iter_mut().zip(&av[r * n..(r + 1) * n]) {
                *o += x;
            }
        }
        let inv = 1.0 / m as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        let ng = self.node(a).needs_grad;
        Ok(self.push(1, n, out, Op::RowMean(a), ng))
    }

    /// Sum across each row: `(m, n) -> (m, 1)`.
    pub fn sum_cols(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let (m, n) = self.shape(a);
        let av = &self.node(a).value;
        let out: Vec<f64> = (0..m)
            .map(|r| av[r * n..(r + 1) * n].iter().sum())
            .collect();
        let ng = self.node(a).needs_grad;
        Ok(self.push(m, 1, out, Op::SumCols(a), ng))
    }

    pub fn reduce_sum(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let s = self.node(a).value.iter().sum();
        let ng = self.node(a).needs_grad;
        Ok(self.push(1, 1, vec![s], Op::ReduceSum(a), ng))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (m, n) = self.shape(a);
        let out = self.node(a).value.iter().map(|&x| f(x)).collect();
        let ng = self.node(a).needs_grad;
        self.push(m, n, out, op, ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        Ok(self.unary(a, sigmoid, Op::Sigmoid(a)))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        Ok(self.unary(a, f64::exp, Op::Exp(a)))
    }

    /// Natural log; rejects any non-positive entry.
    pub fn log(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        if let Some(&bad) = self.node(a).value.iter().find(|&&x| x <= 0.0 || x.is_nan()) {
            return Err(NumError::NonPositiveLog { value: bad });
        }
        Ok(self.unary(a, f64::ln, Op::Log(a)))
    }

    /// `log(clamp(x, PROB_CLAMP, 1 - PROB_CLAMP))`; gradient is zero where
    /// the clamp is active.
    pub fn log_clamped(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        Ok(self.unary(a, |x| clamp_prob(x).ln(), Op::LogClamped(a)))
    }

    pub fn leaky_relu(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        Ok(self.unary(
            a,
            |x| if x > 0.0 { x } else { LEAKY_RELU_SLOPE * x },
            Op::LeakyRelu(a),
        ))
    }

    /// `scale * x + shift`.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Result<Var, NumError> {
        self.check_live()?;
        Ok(self.unary(a, |x| scale * x + shift, Op::Affine(a, scale)))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, NumError> {
        self.check_live()?;
        let (m, n) = self.shape(a);
        let mut out = self.node(a).value.clone();
        for r in 0..m {
            softmax_in_place(&mut out[r * n..(r + 1) * n]);
        }
        let ng = self.node(a).needs_grad;
        Ok(self.push(m, n, out, Op::SoftmaxRows(a), ng))
    }

    /// Row selection `out[r] = a[index[r]]`; rows may repeat.
    pub fn gather_rows(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var, NumError> {
        self.check_live()?;
        let (m, n) = self.shape(a);
        if let Some(&bad) = index.iter().find(|&&i| i >= m) {
            return Err(NumError::IndexOutOfRange { index: bad, len: m });
        }
        let av = &self.node(a).value;
        let mut out = Vec::with_capacity(index.len() * n);
        for &i in index.iter() {
            out.extend_from_slice(&av[i * n..(i + 1) * n]);
        }
        let ng = self.node(a).needs_grad;
        let rows = index.len();
        Ok(self.push(rows, n, out, Op::Gather(a, index), ng))
    }

    fn check_segments(&self, op: &'static str, a: Var, seg: &Segments) -> Result<(), NumError> {
        let (m, n) = self.shape(a);
        if seg.total_rows() != m {
            return Err(NumError::ShapeMismatch {
                op,
                left: vec![m, n],
                right: vec![seg.total_rows(), n],
            });
        }
        Ok(())
    }

    /// Per-segment row sums; an empty segment yields a zero row.
    pub fn segment_sum(&mut self, a: Var, seg: Arc<Segments>) -> Result<Var, NumError> {
        self.check_live()?;
        self.check_segments("segment_sum", a, &seg)?;
        let out = self.segment_reduce(a, &seg, false);
        let ng = self.node(a).needs_grad;
        let (s, n) = (seg.num_segments(), self.shape(a).1);
        Ok(self.push(s, n, out, Op::SegmentSum(a, seg), ng))
    }

    /// Per-segment row means; an empty segment yields a zero row.
    pub fn segment_mean(&mut self, a: Var, seg: Arc<Segments>) -> Result<Var, NumError> {
        self.check_live()?;
        self.check_segments("segment_mean", a, &seg)?;
        let out = self.segment_reduce(a, &seg, true);
        let ng = self.node(a).needs_grad;
        let (s, n) = (seg.num_segments(), self.shape(a).1);
        Ok(self.push(s, n, out, Op::SegmentMean(a, seg), ng))
    }

    fn segment_reduce(&self, a: Var, seg: &Segments, mean: bool) -> Vec<f64> {
        let n = self.shape(a).1;
        let av = &self.node(a).value;
        let mut out = vec![0.0; seg.num_segments() * n];
        for s in 0..seg.num_segments() {
            let range = seg.range(s);
            let len = range.len();
            let dst = &mut out[s * n..(s + 1) * n];
            for r in range {
                for (o, x) in dst.iter_mut().zip(&av[r * n..(r + 1) * n]) {
                    *o += x;
                }
            }
            if mean && len > 0 {
                let inv = 1.0 / len as f64;
                dst.iter_mut().for_each(|o| *o *= inv);
            }
        }
        out
    }

    /// Softmax of a column vector within each segment.
    pub fn segment_softmax(&mut self, a: Var, seg: Arc<Segments>) -> Result<Var, NumError> {
        self.check_live()?;
        let (m, n) = self.shape(a);
        if n != 1 {
            return Err(NumError::ShapeMismatch {
                op: "segment_softmax",
                left: vec![m, n],
                right: vec![m, 1],
            });
        }
        self.check_segments("segment_softmax", a, &seg)?;
        let mut out = self.node(a).value.clone();
        for s in 0..seg.num_segments() {
            softmax_in_place(&mut out[seg.range(s)]);
        }
        let ng = self.node(a).needs_grad;
        Ok(self.push(m, 1, out, Op::SegmentSoftmax(a, seg), ng))
    }

    /// Reverse sweep from a scalar output. Consumes the tape: a second call
    /// is rejected.
    pub fn backward(&mut self, output: Var) -> Result<Gradients, NumError> {
        self.check_live()?;
        let out_node = self.node(output);
        if out_node.value.len() != 1 {
            return Err(NumError::NotScalar {
                shape: vec![out_node.rows, out_node.cols],
            });
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(vec![1.0]);

        for idx in (0..=output.0).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(dy);
                continue;
            }
            self.propagate(idx, &dy, &mut grads);
        }

        for (i, g) in grads.iter_mut().enumerate() {
            let n = &self.nodes[i];
            if !(matches!(n.op, Op::Leaf) && n.needs_grad) {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, dy: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        let (m, n) = (node.rows, node.cols);

        // Only inputs that themselves need a gradient receive one.
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            let len = self.nodes[v.0].value.len();
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
            f(slot);
        };

        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (_, k) = self.shape(*a);
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                if wants(*a) {
                    acc(*a, &mut |ga| {
                        for i in 0..m {
                            let dyr = &dy[i * n..(i + 1) * n];
                            for p in 0..k {
                                let brow = &bv[p * n..(p + 1) * n];
                                ga[i * k + p] +=
                                    dyr.iter().zip(brow).map(|(d, b)| d * b).sum::<f64>();
                            }
                        }
                    });
                }
                if wants(*b) {
                    acc(*b, &mut |gb| {
                        for i in 0..m {
                            let dyr = &dy[i * n..(i + 1) * n];
                            for p in 0..k {
                                let x = av[i * k + p];
                                if x == 0.0 {
                                    continue;
                                }
                                for (g, d) in gb[p * n..(p + 1) * n].iter_mut().zip(dyr) {
                                    *g += x * d;
                                }
                            }
                        }
                    });
                }
            }
            Op::Add(a, b, mode) => {
                if wants(*a) {
                    acc(*a, &mut |ga| {
                        ga.iter_mut().zip(dy).for_each(|(g, d)| *g += d)
                    });
                }
                if wants(*b) {
                    acc(*b, &mut |gb| match mode {
                        Broadcast::Same => gb.iter_mut().zip(dy).for_each(|(g, d)| *g += d),
                        _ => dy.iter().enumerate().for_each(|(i, d)| gb[i % n] += d),
                    });
                }
            }
            Op::Mul(a, b, mode) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let bcol = |i: usize| match mode {
                    Broadcast::Same => bv[i],
                    _ => bv[i / n],
                };
                if wants(*a) {
                    acc(*a, &mut |ga| {
                        for (i, g) in ga.iter_mut().enumerate() {
                            *g += dy[i] * bcol(i);
                        }
                    });
                }
                if wants(*b) {
                    acc(*b, &mut |gb| match mode {
                        Broadcast::Same => {
                            for (i, g) in gb.iter_mut().enumerate() {
                                *g += dy[i] * av[i];
                            }
                        }
                        _ => {
                            for i in 0..m * n {
                                gb[i / n] += dy[i] * av[i];
                            }
                        }
                    });
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let pc = self.nodes[p.0].cols;
                    if wants(p) {
                        acc(p, &mut |gp| {
                            for r in 0..m {
                                for c in 0..pc {
                                    gp[r * pc + c] += dy[r * n + offset + c];
                                }
                            }
                        });
                    }
                    offset += pc;
                }
            }
            Op::RowMean(a) => {
                let rows = self.nodes[a.0].rows;
                let inv = 1.0 / rows as f64;
                acc(*a, &mut |ga| {
                    for (i, g) in ga.iter_mut().enumerate() {
                        *g += dy[i % n] * inv;
                    }
                });
            }
            Op::SumCols(a) => {
                let cols = self.nodes[a.0].cols;
                acc(*a, &mut |ga| {
                    for (i, g) in ga.iter_mut().enumerate() {
                        *g += dy[i / cols];
                    }
                });
            }
            Op::ReduceSum(a) => acc(*a, &mut |ga| ga.iter_mut().for_each(|g| *g += dy[0])),
            Op::Sigmoid(a) => acc(*a, &mut |ga| {
                for i in 0..ga.len() {
                    ga[i] += dy[i] * y[i] * (1.0 - y[i]);
                }
            }),
            Op::Exp(a) => acc(*a, &mut |ga| {
                for i in 0..ga.len() {
                    ga[i] += dy[i] * y[i];
                }
            }),
            Op::Log(a) => {
                let x = &self.nodes[a.0].value;
                acc(*a, &mut |ga| {
                    for i in 0..ga.len() {
                        ga[i] += dy[i] / x[i];
                    }
                });
            }
            Op::LogClamped(a) => {
                let x = &self.nodes[a.0].value;
                acc(*a, &mut |ga| {
                    for i in 0..ga.len() {
                        if x[i] > PROB_CLAMP && x[i] < 1.0 - PROB_CLAMP {
                            ga[i] += dy[i] / x[i];
                        }
                    }
                });
            }
            Op::LeakyRelu(a) => {
                let x = &self.nodes[a.0].value;
                acc(*a, &mut |ga| {
                    for i in 0..ga.len() {
                        ga[i] += if x[i] > 0.0 {
                            dy[i]
                        } else {
                            LEAKY_RELU_SLOPE * dy[i]
                        };
                    }
                });
            }
            Op::Affine(a, scale) => acc(*a, &mut |ga| {
                for i in 0..ga.len() {
                    ga[i] += dy[i] * scale;
                }
            }),
            Op::SoftmaxRows(a) => acc(*a, &mut |ga| {
                for r in 0..m {
                    let range = r * n..(r + 1) * n;
                    softmax_backward(&y[range.clone()], &dy[range.clone()], &mut ga[range]);
                }
            }),
            Op::Gather(a, index) => {
                acc(*a, &mut |ga| {
                    for (r, &src) in index.iter().enumerate() {
                        for c in 0..n {
                            ga[src * n + c] += dy[r * n + c];
                        }
                    }
                });
            }
            Op::SegmentSum(a, seg) | Op::SegmentMean(a, seg) => {
                let mean = matches!(node.op, Op::SegmentMean(..));
                acc(*a, &mut |ga| {
                    for s in 0..seg.num_segments() {
                        let range = seg.range(s);
                        let scale = if mean && !range.is_empty() {
                            1.0 / range.len() as f64
                        } else {
                            1.0
                        };
                        for r in range {
                            for c in 0..n {
                                ga[r * n + c] += dy[s * n + c] * scale;
                            }
                        }
                    }
                });
            }
            Op::SegmentSoftmax(a, seg) => acc(*a, &mut |ga| {
                for s in 0..seg.num_segments() {
                    let range = seg.range(s);
                    softmax_backward(&y[range.clone()], &dy[range.clone()], &mut ga[range]);
                }
            }),
        }
    }
}

pub(crate) fn clamp_prob(x: f64) -> f64 {
    x.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn softmax_in_place(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

fn softmax_backward(y: &[f64], dy: &[f64], gx: &mut [f64]) {
    let dot: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
    for i in 0..y.len() {
        gx[i] += y[i] * (dy[i] - dot);
    }
}
