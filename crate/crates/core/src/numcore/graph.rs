use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::kernels::{self, ConvGeom};
use super::{NumError, ParamStore, Tensor};

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a node recorded in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    graph: u64,
    index: usize,
}

/// Time-axis padding mode for [`Graph::conv2d`]. Stride is always 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Valid,
    /// Symmetric zero padding along time so the output keeps the input
    /// length. For even kernels the extra sample goes on the right.
    SameTime,
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(String),
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Var,
        geom: ConvGeom,
    },
    MaxPoolTime {
        input: Var,
        argmax: Vec<usize>,
    },
    Dense {
        input: Var,
        weight: Var,
        bias: Var,
    },
    Relu(Var),
    Sigmoid(Var),
    Softmax(Var),
    GlobalAvgPoolTime(Var),
    ConcatChannels(Vec<Var>),
    WeightedAverage {
        weights: Var,
        items: Vec<Var>,
    },
    Stack(Vec<Var>),
    LogClamped {
        input: Var,
        floor: f64,
    },
    Add(Var, Var),
    Mul(Var, Var),
    Affine {
        input: Var,
        scale: f64,
    },
    Sum(Var),
}

struct Node {
    value: Arc<Tensor>,
    op: Op,
}

/// Tape of forward operations supporting one reverse sweep.
///
/// Nodes are appended in evaluation order, so the tape is acyclic by
/// construction and a reverse walk visits every consumer before its inputs.
pub struct Graph {
    id: u64,
    nodes: Vec<Node>,
}

/// Parameter gradients keyed by parameter path, in sorted order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    by_name: BTreeMap<String, Tensor>,
}

impl Gradients {
    /// All-zero gradients for every parameter of `store`.
    pub fn zeros_like(store: &ParamStore) -> Self {
        let by_name = store
            .iter()
            .map(|(name, t)| (name.to_string(), Tensor::zeros(t.shape())))
            .collect();
        Self { by_name }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.by_name.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    /// `self += factor * other`, parameter by parameter.
    pub fn accumulate(&mut self, other: &Gradients, factor: f64) -> Result<(), NumError> {
        for (name, g) in &other.by_name {
            let slot = self
                .by_name
                .get_mut(name)
                .ok_or_else(|| NumError::Usage(format!("unknown gradient entry `{name}`")))?;
            if slot.shape() != g.shape() {
                return Err(NumError::Usage(format!(
                    "gradient shape mismatch for `{name}`"
                )));
            }
            slot.add_assign_scaled(g, factor);
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.by_name.values().fold(0.0, |m, t| m.max(t.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.by_name.values().all(Tensor::is_finite)
    }
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self {
            id: NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn node(&self, v: Var) -> Result<&Node, NumError> {
        if v.graph != self.id {
            return Err(NumError::Usage("variable belongs to a different graph".into()));
        }
        self.nodes
            .get(v.index)
            .ok_or_else(|| NumError::Usage(format!("unknown node {}", v.index)))
    }

    pub fn value(&self, v: Var) -> Result<&Tensor, NumError> {
        self.node(v).map(|n| n.value.as_ref())
    }

    /// Shared handle to a node value, for reuse as a constant in another graph.
    pub fn value_arc(&self, v: Var) -> Result<Arc<Tensor>, NumError> {
        self.node(v).map(|n| Arc::clone(&n.value))
    }

    fn shape(&self, v: Var) -> Result<&[usize], NumError> {
        self.value(v).map(Tensor::shape)
    }

    fn push(&mut self, op_name: &'static str, value: Tensor, op: Op) -> Result<Var, NumError> {
        if cfg!(debug_assertions) {
            if let Some(index) = value.data().iter().position(|v| !v.is_finite()) {
                return Err(NumError::NonFinite { op: op_name, index });
            }
        }
        self.nodes.push(Node {
            value: Arc::new(value),
            op,
        });
        Ok(Var {
            graph: self.id,
            index: self.nodes.len() - 1,
        })
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.constant_arc(Arc::new(value))
    }

    pub fn constant_arc(&mut self, value: Arc<Tensor>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Constant,
        });
        Var {
            graph: self.id,
            index: self.nodes.len() - 1,
        }
    }

    /// Records a learnable parameter leaf whose gradient is reported by
    /// [`Graph::backward`] under `name`.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var, NumError> {
        let value = store
            .get_arc(name)
            .ok_or_else(|| NumError::Usage(format!("no parameter named `{name}`")))?;
        self.nodes.push(Node {
            value,
            op: Op::Param(name.to_string()),
        });
        Ok(Var {
            graph: self.id,
            index: self.nodes.len() - 1,
        })
    }

    /// 2-D convolution over `[T, E, Cin]` with kernel `[kT, kE, Cin, Cout]`.
    pub fn conv2d(
        &mut self,
        input: Var,
        kernel: Var,
        bias: Var,
        padding: Padding,
    ) -> Result<Var, NumError> {
        let ishape = self.shape(input)?;
        let kshape = self.shape(kernel)?;
        let bshape = self.shape(bias)?;
        if ishape.len() != 3 {
            return Err(NumError::rank("conv2d", "input", 3, ishape.len()));
        }
        if kshape.len() != 4 {
            return Err(NumError::rank("conv2d", "kernel", 4, kshape.len()));
        }
        let (t_in, e_in, c_in) = (ishape[0], ishape[1], ishape[2]);
        let (kt, ke, kc, c_out) = (kshape[0], kshape[1], kshape[2], kshape[3]);
        if kc != c_in {
            return Err(NumError::dim("conv2d", "input channels", kc, c_in));
        }
        if bshape != [c_out] {
            return Err(NumError::dim("conv2d", "bias length", c_out, bshape.iter().product()));
        }
        if ke > e_in {
            return Err(NumError::dim("conv2d", "electrode (kernel height > input)", ke, e_in));
        }
        let (pad_left, pad_right) = match padding {
            Padding::Valid => (0, 0),
            Padding::SameTime => ((kt - 1) / 2, kt - 1 - (kt - 1) / 2),
        };
        if kt > t_in + pad_left + pad_right {
            return Err(NumError::dim("conv2d", "time (kernel length > input)", kt, t_in));
        }
        let geom = ConvGeom {
            t_in,
            e_in,
            c_in,
            kt,
            ke,
            c_out,
            pad_left,
            pad_right,
            t_out: t_in + pad_left + pad_right - kt + 1,
            e_out: e_in - ke + 1,
        };
        let out = kernels::conv2d_forward(
            self.value(input)?.data(),
            self.value(kernel)?.data(),
            self.value(bias)?.data(),
            &geom,
        );
        let value = Tensor::from_parts(vec![geom.t_out, geom.e_out, c_out], out);
        self.push(
            "conv2d",
            value,
            Op::Conv2d {
                input,
                kernel,
                bias,
                geom,
            },
        )
    }

    /// Max pooling along time of a `[T, E, C]` tensor.
    pub fn maxpool_time(&mut self, input: Var, window: usize, stride: usize) -> Result<Var, NumError> {
        let shape = self.shape(input)?.to_vec();
        if shape.len() != 3 {
            return Err(NumError::rank("maxpool_time", "input", 3, shape.len()));
        }
        if window == 0 || stride == 0 {
            return Err(NumError::Usage("pooling window and stride must be positive".into()));
        }
        if window > shape[0] {
            return Err(NumError::dim("maxpool_time", "time (window > input)", window, shape[0]));
        }
        let inner = shape[1] * shape[2];
        let (out, argmax) =
            kernels::maxpool_time_forward(self.value(input)?.data(), shape[0], inner, window, stride);
        let t_out = (shape[0] - window) / stride + 1;
        let value = Tensor::from_parts(vec![t_out, shape[1], shape[2]], out);
        self.push("maxpool_time", value, Op::MaxPoolTime { input, argmax })
    }

    /// Affine map `x·W + b` for a flat input of length `D` and `W: [D, M]`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var, NumError> {
        let d = self.value(input)?.len();
        let wshape = self.shape(weight)?;
        if wshape.len() != 2 {
            return Err(NumError::rank("dense", "weight", 2, wshape.len()));
        }
        let (rows, m) = (wshape[0], wshape[1]);
        if rows != d {
            return Err(NumError::dim("dense", "input length vs weight rows", rows, d));
        }
        if self.value(bias)?.len() != m {
            return Err(NumError::dim("dense", "bias length", m, self.value(bias)?.len()));
        }
        let y = kernels::dense_forward(
            self.value(input)?.data(),
            self.value(weight)?.data(),
            self.value(bias)?.data(),
        );
        self.push("dense", Tensor::from_parts(vec![m], y), Op::Dense { input, weight, bias })
    }

    fn map_unary(&mut self, input: Var, name: &'static str, f: impl Fn(f64) -> f64, op: Op) -> Result<Var, NumError> {
        let x = self.value(input)?;
        let value = Tensor::from_parts(x.shape().to_vec(), x.data().iter().map(|&v| f(v)).collect());
        self.push(name, value, op)
    }

    pub fn relu(&mut self, input: Var) -> Result<Var, NumError> {
        self.map_unary(input, "relu", |v| v.max(0.0), Op::Relu(input))
    }

    pub fn sigmoid(&mut self, input: Var) -> Result<Var, NumError> {
        self.map_unary(input, "sigmoid", kernels::sigmoid, Op::Sigmoid(input))
    }

    /// Softmax over all elements, computed with max-subtraction.
    pub fn softmax(&mut self, input: Var) -> Result<Var, NumError> {
        let x = self.value(input)?;
        let value = Tensor::from_parts(x.shape().to_vec(), kernels::softmax(x.data()));
        self.push("softmax", value, Op::Softmax(input))
    }

    /// `[T, E, C]` → `[E·C]`, the mean over time.
    pub fn global_avg_pool_time(&mut self, input: Var) -> Result<Var, NumError> {
        let x = self.value(input)?;
        if x.rank() != 3 {
            return Err(NumError::rank("global_avg_pool_time", "input", 3, x.rank()));
        }
        let t = x.shape()[0];
        let inner = x.shape()[1] * x.shape()[2];
        let mut out = vec![0.0; inner];
        for row in x.data().chunks_exact(inner) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        let inv = 1.0 / t as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        self.push("global_avg_pool_time", Tensor::from_parts(vec![inner], out), Op::GlobalAvgPoolTime(input))
    }

    /// Concatenates `[T, E, Ci]` tensors along the channel axis.
    pub fn concat_channels(&mut self, inputs: &[Var]) -> Result<Var, NumError> {
        let first = inputs
            .first()
            .ok_or_else(|| NumError::Usage("concat_channels needs at least one input".into()))?;
        let s0 = self.shape(*first)?.to_vec();
        if s0.len() != 3 {
            return Err(NumError::rank("concat_channels", "input", 3, s0.len()));
        }
        let mut channels = Vec::with_capacity(inputs.len());
        for &v in inputs {
            let s = self.shape(v)?;
            if s.len() != 3 {
                return Err(NumError::rank("concat_channels", "input", 3, s.len()));
            }
            if s[0] != s0[0] {
                return Err(NumError::dim("concat_channels", "time", s0[0], s[0]));
            }
            if s[1] != s0[1] {
                return Err(NumError::dim("concat_channels", "electrode", s0[1], s[1]));
            }
            channels.push(s[2]);
        }
        let total: usize = channels.iter().sum();
        let rows = s0[0] * s0[1];
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&v, &c) in inputs.iter().zip(&channels) {
                out.extend_from_slice(&self.value(v)?.data()[r * c..(r + 1) * c]);
            }
        }
        self.push(
            "concat_channels",
            Tensor::from_parts(vec![s0[0], s0[1], total], out),
            Op::ConcatChannels(inputs.to_vec()),
        )
    }

    /// `Σⱼ wⱼ·itemⱼ / Σⱼ wⱼ` for a weight vector of length K and K equally
    /// shaped items. The weights must have a strictly positive sum.
    ///
    /// Terms are summed in a canonical order (by weight, then by item
    /// values), so permuting the (weight, item) pairs gives a bit-identical
    /// result. A single item is returned unchanged.
    pub fn weighted_average(&mut self, weights: Var, items: &[Var]) -> Result<Var, NumError> {
        if items.is_empty() {
            return Err(NumError::Usage("weighted_average needs at least one item".into()));
        }
        let w = self.value(weights)?.data().to_vec();
        if w.len() != items.len() {
            return Err(NumError::dim("weighted_average", "weight count", items.len(), w.len()));
        }
        let shape = self.shape(items[0])?.to_vec();
        let len: usize = shape.iter().product();
        for &item in items {
            let v = self.value(item)?;
            if v.shape() != shape.as_slice() {
                return Err(NumError::dim("weighted_average", "item length", len, v.len()));
            }
        }
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.sort_by(|&a, &b| {
            w[a].total_cmp(&w[b]).then_with(|| {
                let (va, vb) = (&self.nodes[items[a].index].value, &self.nodes[items[b].index].value);
                va.data()
                    .iter()
                    .zip(vb.data())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let total: f64 = order.iter().map(|&j| w[j]).sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(NumError::Usage("weighted_average weights must sum to a positive value".into()));
        }
        let out = if items.len() == 1 {
            self.value(items[0])?.data().to_vec()
        } else {
            let mut out = vec![0.0; len];
            for &j in &order {
                let v = self.value(items[j])?;
                for (o, x) in out.iter_mut().zip(v.data()) {
                    *o += w[j] * x;
                }
            }
            let inv = 1.0 / total;
            out.iter_mut().for_each(|o| *o *= inv);
            out
        };
        self.push(
            "weighted_average",
            Tensor::from_parts(shape, out),
            Op::WeightedAverage {
                weights,
                items: items.to_vec(),
            },
        )
    }

    /// Stacks single-element nodes into a vector.
    pub fn stack(&mut self, scalars: &[Var]) -> Result<Var, NumError> {
        if scalars.is_empty() {
            return Err(NumError::Usage("stack needs at least one input".into()));
        }
        let mut out = Vec::with_capacity(scalars.len());
        for &s in scalars {
            let v = self.value(s)?;
            out.push(v.item().ok_or_else(|| NumError::dim("stack", "element count", 1, v.len()))?);
        }
        self.push("stack", Tensor::from_parts(vec![out.len()], out), Op::Stack(scalars.to_vec()))
    }

    /// Natural log of `max(x, floor)`.
    pub fn log_clamped(&mut self, input: Var, floor: f64) -> Result<Var, NumError> {
        self.map_unary(input, "log_clamped", move |v| v.max(floor).ln(), Op::LogClamped { input, floor })
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var, NumError> {
        let (x, y) = (self.value(a)?, self.value(b)?);
        if x.shape() != y.shape() {
            return Err(NumError::dim(name, "operand length", x.len(), y.len()));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        let value = Tensor::from_parts(x.shape().to_vec(), data);
        self.push(name, value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.binary(a, b, "add", |p, q| p + q, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.binary(a, b, "mul", |p, q| p * q, Op::Mul(a, b))
    }

    /// `scale·x + shift`, elementwise.
    pub fn affine(&mut self, input: Var, scale: f64, shift: f64) -> Result<Var, NumError> {
        self.map_unary(input, "affine", move |v| scale * v + shift, Op::Affine { input, scale })
    }

    pub fn sum(&mut self, input: Var) -> Result<Var, NumError> {
        let s = self.value(input)?.sum();
        self.push("sum", Tensor::from_parts(vec![1], vec![s]), Op::Sum(input))
    }

    /// Reverse sweep from a scalar node. The result holds a gradient for
    /// every parameter in `store`; parameters the loss does not reach get
    /// zeros.
    pub fn backward(&self, loss: Var, store: &ParamStore) -> Result<Gradients, NumError> {
        self.backward_scaled(loss, 1.0, store)
    }

    /// As [`Graph::backward`] with the loss gradient seeded to `seed`.
    pub fn backward_scaled(&self, loss: Var, seed: f64, store: &ParamStore) -> Result<Gradients, NumError> {
        if self.nodes.is_empty() {
            return Err(NumError::Usage("backward called before any forward operation".into()));
        }
        let loss_value = self.value(loss)?;
        if loss_value.len() != 1 {
            return Err(NumError::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss_value.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.index + 1];
        grads[loss.index] = Some(vec![seed]);
        let mut out = Gradients::zeros_like(store);

        for index in (0..=loss.index).rev() {
            let Some(g) = grads[index].take() else { continue };
            let node = &self.nodes[index];
            let x = |v: &Var| self.nodes[v.index].value.data();
            match &node.op {
                Op::Constant => {}
                Op::Param(name) => {
                    let slot = out.by_name.get_mut(name).ok_or_else(|| {
                        NumError::Usage(format!("parameter `{name}` is not in the store"))
                    })?;
                    for (s, v) in slot.data_mut().iter_mut().zip(&g) {
                        *s += v;
                    }
                }
                Op::Conv2d { input, kernel, bias, geom } => {
                    let cg = kernels::conv2d_backward(x(input), x(kernel), &g, geom);
                    accumulate(&mut grads, *input, cg.input);
                    accumulate(&mut grads, *kernel, cg.kernel);
                    accumulate(&mut grads, *bias, cg.bias);
                }
                Op::MaxPoolTime { input, argmax } => {
                    let mut gi = vec![0.0; x(input).len()];
                    for (&src, gv) in argmax.iter().zip(&g) {
                        gi[src] += gv;
                    }
                    accumulate(&mut grads, *input, gi);
                }
                Op::Dense { input, weight, bias } => {
                    let (gx, gw) = kernels::dense_backward(x(input), x(weight), &g);
                    accumulate(&mut grads, *input, gx);
                    accumulate(&mut grads, *weight, gw);
                    accumulate(&mut grads, *bias, g);
                }
                Op::Relu(input) => {
                    let gi = x(input)
                        .iter()
                        .zip(&g)
                        .map(|(&v, &gv)| if v > 0.0 { gv } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *input, gi);
                }
                Op::Sigmoid(input) => {
                    let y = node.value.data();
                    let gi = y.iter().zip(&g).map(|(&s, &gv)| gv * s * (1.0 - s)).collect();
                    accumulate(&mut grads, *input, gi);
                }
                Op::Softmax(input) => {
                    let y = node.value.data();
                    let inner: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
                    let gi = y.iter().zip(&g).map(|(&s, &gv)| s * (gv - inner)).collect();
                    accumulate(&mut grads, *input, gi);
                }
                Op::GlobalAvgPoolTime(input) => {
                    let n = x(input).len();
                    let inner = g.len();
                    let inv = 1.0 / (n / inner) as f64;
                    let gi = (0..n).map(|i| g[i % inner] * inv).collect();
                    accumulate(&mut grads, *input, gi);
                }
                Op::ConcatChannels(inputs) => {
                    let channels: Vec<usize> = inputs
                        .iter()
                        .map(|v| self.nodes[v.index].value.shape()[2])
                        .collect();
                    let total: usize = channels.iter().sum();
                    let rows = g.len() / total;
                    let mut parts: Vec<Vec<f64>> =
                        channels.iter().map(|&c| Vec::with_capacity(rows * c)).collect();
                    for row in g.chunks_exact(total) {
                        let mut offset = 0;
                        for (part, &c) in parts.iter_mut().zip(&channels) {
                            part.extend_from_slice(&row[offset..offset + c]);
                            offset += c;
                        }
                    }
                    for (v, part) in inputs.iter().zip(parts) {
                        accumulate(&mut grads, *v, part);
                    }
                }
                Op::WeightedAverage { weights, items } => {
                    let w = x(weights);
                    let total: f64 = w.iter().sum();
                    let avg = node.value.data();
                    let mut gw = Vec::with_capacity(w.len());
                    for (&wj, item) in w.iter().zip(items) {
                        let z = x(item);
                        let mut acc = 0.0;
                        for ((gv, zv), av) in g.iter().zip(z).zip(avg) {
                            acc += gv * (zv - av);
                        }
                        gw.push(acc / total);
                        accumulate(&mut grads, *item, g.iter().map(|gv| gv * wj / total).collect());
                    }
                    accumulate(&mut grads, *weights, gw);
                }
                Op::Stack(scalars) => {
                    for (s, &gv) in scalars.iter().zip(&g) {
                        accumulate(&mut grads, *s, vec![gv]);
                    }
                }
                Op::LogClamped { input, floor } => {
                    let gi = x(input)
                        .iter()
                        .zip(&g)
                        .map(|(&v, &gv)| if v > *floor { gv / v } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *input, gi);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.iter().zip(x(b)).map(|(gv, bv)| gv * bv).collect();
                    let gb = g.iter().zip(x(a)).map(|(gv, av)| gv * av).collect();
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Affine { input, scale } => {
                    accumulate(&mut grads, *input, g.iter().map(|gv| gv * scale).collect());
                }
                Op::Sum(input) => {
                    let n = x(input).len();
                    accumulate(&mut grads, *input, vec![g[0]; n]);
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, g: Vec<f64>) {
    match &mut grads[v.index] {
        Some(existing) => {
            for (e, x) in existing.iter_mut().zip(&g) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, t: Tensor) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert(name, t).unwrap();
        s
    }

    #[test]
    fn sum_gradient_is_ones() {
        let store = store_with("p", Tensor::vector(vec![1.0, -2.0, 3.0]).unwrap());
        let mut g = Graph::new();
        let p = g.param(&store, "p").unwrap();
        let s = g.sum(p).unwrap();
        let grads = g.backward(s, &store).unwrap();
        assert_eq!(grads.get("p").unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_sum_gradient_is_twice_value() {
        let v = vec![0.5, -1.5, 2.0, 4.0];
        let store = store_with("p", Tensor::vector(v.clone()).unwrap());
        let mut g = Graph::new();
        let p = g.param(&store, "p").unwrap();
        let sq = g.mul(p, p).unwrap();
        let s = g.sum(sq).unwrap();
        let grads = g.backward(s, &store).unwrap();
        let expect: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        assert_eq!(grads.get("p").unwrap().data(), expect.as_slice());
    }

    #[test]
    fn unused_parameters_get_zero_gradient() {
        let mut store = store_with("used", Tensor::vector(vec![1.0]).unwrap());
        store.insert("unused", Tensor::vector(vec![3.0, 4.0]).unwrap()).unwrap();
        let mut g = Graph::new();
        let p = g.param(&store, "used").unwrap();
        let s = g.sum(p).unwrap();
        let grads = g.backward(s, &store).unwrap();
        assert_eq!(grads.get("unused").unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_usage_errors() {
        let store = ParamStore::new();
        let g = Graph::new();
        let mut other = Graph::new();
        let v = other.constant(Tensor::vector(vec![1.0]).unwrap());
        assert!(matches!(g.backward(v, &store), Err(NumError::Usage(_))));

        let mut g = Graph::new();
        let c = g.constant(Tensor::vector(vec![1.0, 2.0]).unwrap());
        assert!(matches!(g.backward(c, &store), Err(NumError::Usage(_))));
        assert!(matches!(g.backward(v, &store), Err(NumError::Usage(_))));
    }

    #[test]
    fn conv_shape_errors_name_the_axis() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[10, 3, 2]));
        let k = g.constant(Tensor::zeros(&[3, 1, 4, 5]));
        let b = g.constant(Tensor::zeros(&[5]));
        let err = g.conv2d(x, k, b, Padding::Valid).unwrap_err();
        assert!(err.to_string().contains("input channels"), "{err}");

        let k = g.constant(Tensor::zeros(&[11, 1, 2, 5]));
        let err = g.conv2d(x, k, b, Padding::Valid).unwrap_err();
        assert!(err.to_string().contains("time"), "{err}");
    }

    #[test]
    fn conv_all_zero_input_gives_zero_output() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[20, 3, 1]));
        let k = g.constant(Tensor::full(&[5, 1, 1, 4], 0.3));
        let b = g.constant(Tensor::zeros(&[4]));
        let y = g.conv2d(x, k, b, Padding::SameTime).unwrap();
        let out = g.value(y).unwrap();
        assert_eq!(out.shape(), &[20, 3, 4]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn maxpool_examples() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![12, 1, 1], (1..=12).map(f64::from).collect()).unwrap());
        let y = g.maxpool_time(x, 6, 6).unwrap();
        assert_eq!(g.value(y).unwrap().data(), &[6.0, 12.0]);

        let c = g.constant(Tensor::full(&[30, 2, 3], 1.25));
        let y = g.maxpool_time(c, 6, 6).unwrap();
        assert_eq!(g.value(y).unwrap().shape(), &[5, 2, 3]);
        assert!(g.value(y).unwrap().data().iter().all(|&v| v == 1.25));

        assert!(g.maxpool_time(x, 13, 1).is_err());
    }

    #[test]
    fn dense_identity_and_bias_only() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![1.0, -2.0, 3.5]).unwrap());
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let w = g.constant(Tensor::new(vec![3, 3], eye).unwrap());
        let b0 = g.constant(Tensor::zeros(&[3]));
        let y = g.dense(x, w, b0).unwrap();
        assert_eq!(g.value(y).unwrap().data(), &[1.0, -2.0, 3.5]);

        let wz = g.constant(Tensor::zeros(&[3, 2]));
        let b = g.constant(Tensor::vector(vec![0.25, -7.0]).unwrap());
        let y = g.dense(x, wz, b).unwrap();
        assert_eq!(g.value(y).unwrap().data(), &[0.25, -7.0]);

        let bad = g.constant(Tensor::zeros(&[4, 2]));
        assert!(g.dense(x, bad, b).is_err());
    }

    #[test]
    fn dense_matches_hand_dot_products() {
        let xs = [0.3, -1.2, 2.5];
        let ws = [0.5, -0.1, 1.5, 0.7, -2.0, 0.25];
        let bs = [0.05, -0.3];
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(xs.to_vec()).unwrap());
        let w = g.constant(Tensor::new(vec![3, 2], ws.to_vec()).unwrap());
        let b = g.constant(Tensor::vector(bs.to_vec()).unwrap());
        let y = g.dense(x, w, b).unwrap();
        let expect0 = 0.3 * 0.5 + -1.2 * 1.5 + 2.5 * -2.0 + 0.05;
        let expect1 = 0.3 * -0.1 + -1.2 * 0.7 + 2.5 * 0.25 - 0.3;
        let got = g.value(y).unwrap().data();
        assert!((got[0] - expect0).abs() < 1e-12);
        assert!((got[1] - expect1).abs() < 1e-12);
    }

    #[test]
    fn activation_examples() {
        let mut g = Graph::new();
        let z = g.constant(Tensor::vector(vec![0.0, 0.0]).unwrap());
        let s = g.softmax(z).unwrap();
        assert_eq!(g.value(s).unwrap().data(), &[0.5, 0.5]);
        let sg = g.sigmoid(z).unwrap();
        assert_eq!(g.value(sg).unwrap().data(), &[0.5, 0.5]);

        let c = g.constant(Tensor::full(&[7, 2, 3], -0.75));
        let p = g.global_avg_pool_time(c).unwrap();
        assert_eq!(g.value(p).unwrap().shape(), &[6]);
        assert!(g.value(p).unwrap().data().iter().all(|&v| (v + 0.75).abs() < 1e-15));

        let big = g.constant(Tensor::vector(vec![-40.0, 40.0]).unwrap());
        let sg = g.sigmoid(big).unwrap();
        let v = g.value(sg).unwrap().data();
        assert!(v[0] > 0.0 && v[0] < 1e-17);
        assert!(v[1] <= 1.0);
    }
}
