//! Reverse-mode differentiation over a per-forward-pass tape.
//!
//! Each forward pass builds a fresh `Tape`; ops append nodes that record the
//! operands they need for the backward sweep. Recorded activations are never
//! mutated in place. `backward` walks the tape in reverse and accumulates
//! gradients for every parameter leaf, which callers then fold into a
//! [`ParamStore`](super::ParamStore).

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Affine { x: usize, mul: f64 },
    MatMul(usize, usize),
    Transpose(usize),
    Tanh(usize),
    Sigmoid(usize),
    Relu(usize),
    Exp(usize),
    Embed { table: usize, ids: Vec<u32> },
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    AddRowBroadcast { mat: usize, row: usize },
    MeanRows(usize),
    Softmax(usize),
    LogSoftmax(usize),
    CrossEntropy { logits: usize, target: usize },
    Pick { x: usize, row: usize, col: usize },
    Sum(usize),
    Scale { x: usize, c: f64 },
}

struct Node {
    value: Tensor,
    op: Op,
    /// Parameter name when this leaf mirrors a ParamStore entry.
    param: Option<String>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

/// Row-wise numerically stable softmax.
fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = &x.data[r * x.cols..(r + 1) * x.cols];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for (c, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out.set(r, c, e);
            denom += e;
        }
        for c in 0..x.cols {
            out.set(r, c, out.get(r, c) / denom);
        }
    }
    out
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, param: Option<String>) -> Result<NodeId> {
        // Op-boundary finiteness check, active in debug/test builds only.
        #[cfg(debug_assertions)]
        if !value.all_finite() {
            return Err(Error::training(format!(
                "non-finite value produced by {:?}",
                op
            )));
        }
        self.nodes.push(Node { value, op, param });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Constant leaf: participates in the graph but receives no gradient name.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            param: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Parameter leaf: gradient is reported under `name` after backward.
    pub fn param(&mut self, name: impl Into<String>, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            param: Some(name.into()),
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("add", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let mut out = ta.clone();
        out.add_assign(tb);
        self.push(out, Op::Add(a.0, b.0), None)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("sub", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x - y).collect();
        let out = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(out, Op::Sub(a.0, b.0), None)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("mul", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let out = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(out, Op::Mul(a.0, b.0), None)
    }

    /// Elementwise `mul * x + add`.
    pub fn affine(&mut self, x: NodeId, mul: f64, add: f64) -> Result<NodeId> {
        let t = self.value(x);
        let data = t.data.iter().map(|v| mul * v + add).collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(out, Op::Affine { x: x.0, mul }, None)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let t = self.value(x);
        let data = t.data.iter().map(|v| c * v).collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(out, Op::Scale { x: x.0, c }, None)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.cols != tb.rows {
            return Err(shape_err(
                "matmul",
                format!("{:?} x {:?}", ta.shape(), tb.shape()),
            ));
        }
        let out = ta.matmul(tb);
        self.push(out, Op::MatMul(a.0, b.0), None)
    }

    pub fn transpose(&mut self, x: NodeId) -> Result<NodeId> {
        let out = self.value(x).transpose();
        self.push(out, Op::Transpose(x.0), None)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        let data = t.data.iter().map(|v| v.tanh()).collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(out, Op::Tanh(x.0), None)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        let data = t
            .data
            .iter()
            .map(|v| {
                if *v >= 0.0 {
                    1.0 / (1.0 + (-v).exp())
                } else {
                    let e = v.exp();
                    e / (1.0 + e)
                }
            })
            .collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(out, Op::Sigmoid(x.0), None)
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        let data = t.data.iter().map(|v| v.max(0.0)).collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(out, Op::Relu(x.0), None)
    }

    pub fn exp(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        let data = t.data.iter().map(|v| v.exp()).collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(out, Op::Exp(x.0), None)
    }

    /// Look up rows of an embedding table: (V, E) indexed by ids -> (n, E).
    pub fn embed(&mut self, table: NodeId, ids: &[u32]) -> Result<NodeId> {
        let t = self.value(table);
        if ids.is_empty() {
            return Err(shape_err("embed", "empty id sequence".to_string()));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= t.rows) {
            return Err(shape_err(
                "embed",
                format!("id {} out of range for table with {} rows", bad, t.rows),
            ));
        }
        let cols = t.cols;
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            let r = id as usize;
            data.extend_from_slice(&t.data[r * cols..(r + 1) * cols]);
        }
        let out = Tensor::from_vec(ids.len(), cols, data);
        self.push(
            out,
            Op::Embed {
                table: table.0,
                ids: ids.to_vec(),
            },
            None,
        )
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(shape_err("concat_rows", "no inputs".to_string()));
        }
        let cols = self.value(parts[0]).cols;
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols != cols {
                return Err(shape_err(
                    "concat_rows",
                    format!("column mismatch: {} vs {}", t.cols, cols),
                ));
            }
            rows += t.rows;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for &p in parts {
            data.extend_from_slice(&self.value(p).data);
        }
        let out = Tensor::from_vec(rows, cols, data);
        self.push(out, Op::ConcatRows(parts.iter().map(|p| p.0).collect()), None)
    }

    /// Concatenate matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(shape_err("concat_cols", "no inputs".to_string()));
        }
        let rows = self.value(parts[0]).rows;
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows != rows {
                return Err(shape_err(
                    "concat_cols",
                    format!("row mismatch: {} vs {}", t.rows, rows),
                ));
            }
            cols += t.cols;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                let t = self.value(p);
                data.extend_from_slice(&t.data[r * t.cols..(r + 1) * t.cols]);
            }
        }
        let out = Tensor::from_vec(rows, cols, data);
        self.push(out, Op::ConcatCols(parts.iter().map(|p| p.0).collect()), None)
    }

    /// mat (n, m) + row (1, m) broadcast over rows.
    pub fn add_row_broadcast(&mut self, mat: NodeId, row: NodeId) -> Result<NodeId> {
        let (tm, tr) = (self.value(mat), self.value(row));
        if tr.rows != 1 || tr.cols != tm.cols {
            return Err(shape_err(
                "add_row_broadcast",
                format!("{:?} + {:?}", tm.shape(), tr.shape()),
            ));
        }
        let mut out = tm.clone();
        for r in 0..out.rows {
            for c in 0..out.cols {
                let v = out.get(r, c) + tr.data[c];
                out.set(r, c, v);
            }
        }
        self.push(
            out,
            Op::AddRowBroadcast {
                mat: mat.0,
                row: row.0,
            },
            None,
        )
    }

    /// Column means over all rows: (n, m) -> (1, m).
    pub fn mean_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        if t.rows == 0 {
            return Err(shape_err("mean_rows", "zero rows".to_string()));
        }
        let mut out = Tensor::zeros(1, t.cols);
        for r in 0..t.rows {
            for c in 0..t.cols {
                out.data[c] += t.get(r, c);
            }
        }
        let n = t.rows as f64;
        out.data.iter_mut().for_each(|v| *v /= n);
        self.push(out, Op::MeanRows(x.0), None)
    }

    /// Row-wise softmax (stable).
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let out = softmax_rows(self.value(x));
        self.push(out, Op::Softmax(x.0), None)
    }

    /// Row-wise log-softmax (stable).
    pub fn log_softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        let mut out = Tensor::zeros(t.rows, t.cols);
        for r in 0..t.rows {
            let row = &t.data[r * t.cols..(r + 1) * t.cols];
            let lse = log_sum_exp(row);
            for c in 0..t.cols {
                out.set(r, c, row[c] - lse);
            }
        }
        self.push(out, Op::LogSoftmax(x.0), None)
    }

    /// Negative log-likelihood of `target` under softmax(logits); logits 1xV.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> Result<NodeId> {
        let t = self.value(logits);
        if t.rows != 1 {
            return Err(shape_err(
                "cross_entropy",
                format!("logits must be 1xV, got {:?}", t.shape()),
            ));
        }
        if target >= t.cols {
            return Err(shape_err(
                "cross_entropy",
                format!("target {} out of range for {} classes", target, t.cols),
            ));
        }
        let loss = log_sum_exp(&t.data) - t.data[target];
        self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits: logits.0,
                target,
            },
            None,
        )
    }

    /// Select one element as a scalar node.
    pub fn pick(&mut self, x: NodeId, row: usize, col: usize) -> Result<NodeId> {
        let t = self.value(x);
        if row >= t.rows || col >= t.cols {
            return Err(shape_err(
                "pick",
                format!("({}, {}) out of range for {:?}", row, col, t.shape()),
            ));
        }
        let v = t.get(row, col);
        self.push(Tensor::scalar(v), Op::Pick { x: x.0, row, col }, None)
    }

    /// Sum of all elements as a scalar node.
    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let total: f64 = self.value(x).data.iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(x.0), None)
    }

    /// Reverse sweep from a scalar loss. Returns per-parameter gradients,
    /// keyed by the names given to [`Tape::param`]. Parameters not reachable
    /// from the loss are simply absent (their gradient is zero).
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(shape_err(
                "backward",
                format!("loss must be scalar, got {:?}", self.value(loss).shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }

        let mut by_name = std::collections::BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let (Some(name), Some(grad)) = (&node.param, &grads[i]) {
                by_name
                    .entry(name.clone())
                    .or_insert_with(|| Tensor::zeros(grad.rows, grad.cols))
                    .add_assign(grad);
            }
        }
        Ok(Gradients { by_name })
    }

    fn accumulate(grads: &mut [Option<Tensor>], idx: usize, shape: (usize, usize), adder: impl FnOnce(&mut Tensor)) {
        let slot = grads[idx].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1));
        adder(slot);
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let val = |idx: usize| &self.nodes[idx].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                Self::accumulate(grads, *a, val(*a).shape(), |t| t.add_assign(g));
                Self::accumulate(grads, *b, val(*b).shape(), |t| t.add_assign(g));
            }
            Op::Sub(a, b) => {
                Self::accumulate(grads, *a, val(*a).shape(), |t| t.add_assign(g));
                Self::accumulate(grads, *b, val(*b).shape(), |t| {
                    for (x, y) in t.data.iter_mut().zip(&g.data) {
                        *x -= y;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a).clone(), val(*b).clone());
                Self::accumulate(grads, *a, va.shape(), |t| {
                    for ((x, gy), y) in t.data.iter_mut().zip(&g.data).zip(&vb.data) {
                        *x += gy * y;
                    }
                });
                Self::accumulate(grads, *b, vb.shape(), |t| {
                    for ((x, gy), y) in t.data.iter_mut().zip(&g.data).zip(&va.data) {
                        *x += gy * y;
                    }
                });
            }
            Op::Affine { x, mul } => {
                let m = *mul;
                Self::accumulate(grads, *x, val(*x).shape(), |t| {
                    for (a, b) in t.data.iter_mut().zip(&g.data) {
                        *a += m * b;
                    }
                });
            }
            Op::Scale { x, c } => {
                let c = *c;
                Self::accumulate(grads, *x, val(*x).shape(), |t| {
                    for (a, b) in t.data.iter_mut().zip(&g.data) {
                        *a += c * b;
                    }
                });
            }
            Op::MatMul(a, b) => {
                let da = g.matmul(&val(*b).transpose());
                let db = val(*a).transpose().matmul(g);
                Self::accumulate(grads, *a, val(*a).shape(), |t| t.add_assign(&da));
                Self::accumulate(grads, *b, val(*b).shape(), |t| t.add_assign(&db));
            }
            Op::Transpose(x) => {
                let dx = g.transpose();
                Self::accumulate(grads, *x, val(*x).shape(), |t| t.add_assign(&dx));
            }
            Op::Tanh(x) => {
                let y = &self.nodes[i].value;
                Self::accumulate(grads, *x, val(*x).shape(), |t| {
                    for ((a, gy), yv) in t.data.iter_mut().zip(&g.data).zip(&y.data) {
                        *a += gy * (1.0 - yv * yv);
                    }
                });
            }
            Op::Sigmoid(x) => {
                let y = &self.nodes[i].value;
                Self::accumulate(grads, *x, val(*x).shape(), |t| {
                    for ((a, gy), yv) in t.data.iter_mut().zip(&g.data).zip(&y.data) {
                        *a += gy * yv * (1.0 - yv);
                    }
                });
            }
            Op::Relu(x) => {
                let xv = val(*x).clone();
                Self::accumulate(grads, *x, xv.shape(), |t| {
                    for ((a, gy), v) in t.data.iter_mut().zip(&g.data).zip(&xv.data) {
                        if *v > 0.0 {
                            *a += gy;
                        }
                    }
                });
            }
            Op::Exp(x) => {
                let y = &self.nodes[i].value;
                Self::accumulate(grads, *x, val(*x).shape(), |t| {
                    for ((a, gy), yv) in t.data.iter_mut().zip(&g.data).zip(&y.data) {
                        *a += gy * yv;
                    }
                });
            }
            Op::Embed { table, ids } => {
                let cols = val(*table).cols;
                let shape = val(*table).shape();
                Self::accumulate(grads, *table, shape, |t| {
                    for (row, &id) in ids.iter().enumerate() {
                        let dst = id as usize * cols;
                        for c in 0..cols {
                            t.data[dst + c] += g.data[row * cols + c];
                        }
                    }
                });
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let shape = val(p).shape();
                    let rows = shape.0;
                    let cols = shape.1;
                    Self::accumulate(grads, p, shape, |t| {
                        for r in 0..rows {
                            for c in 0..cols {
                                t.data[r * cols + c] += g.get(offset + r, c);
                            }
                        }
                    });
                    offset += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let shape = val(p).shape();
                    let (rows, cols) = shape;
                    Self::accumulate(grads, p, shape, |t| {
                        for r in 0..rows {
                            for c in 0..cols {
                                t.data[r * cols + c] += g.get(r, offset + c);
                            }
                        }
                    });
                    offset += cols;
                }
            }
            Op::AddRowBroadcast { mat, row } => {
                Self::accumulate(grads, *mat, val(*mat).shape(), |t| t.add_assign(g));
                let cols = g.cols;
                Self::accumulate(grads, *row, val(*row).shape(), |t| {
                    for r in 0..g.rows {
                        for c in 0..cols {
                            t.data[c] += g.get(r, c);
                        }
                    }
                });
            }
            Op::MeanRows(x) => {
                let shape = val(*x).shape();
                let n = shape.0 as f64;
                Self::accumulate(grads, *x, shape, |t| {
                    for r in 0..shape.0 {
                        for c in 0..shape.1 {
                            t.data[r * shape.1 + c] += g.data[c] / n;
                        }
                    }
                });
            }
            Op::Softmax(x) => {
                let y = &self.nodes[i].value;
                let shape = val(*x).shape();
                Self::accumulate(grads, *x, shape, |t| {
                    for r in 0..shape.0 {
                        let mut dot = 0.0;
                        for c in 0..shape.1 {
                            dot += g.get(r, c) * y.get(r, c);
                        }
                        for c in 0..shape.1 {
                            t.data[r * shape.1 + c] += y.get(r, c) * (g.get(r, c) - dot);
                        }
                    }
                });
            }
            Op::LogSoftmax(x) => {
                let y = &self.nodes[i].value;
                let shape = val(*x).shape();
                Self::accumulate(grads, *x, shape, |t| {
                    for r in 0..shape.0 {
                        let gsum: f64 = (0..shape.1).map(|c| g.get(r, c)).sum();
                        for c in 0..shape.1 {
                            let p = y.get(r, c).exp();
                            t.data[r * shape.1 + c] += g.get(r, c) - p * gsum;
                        }
                    }
                });
            }
            Op::CrossEntropy { logits, target } => {
                let probs = softmax_rows(val(*logits));
                let gs = g.item();
                let tgt = *target;
                Self::accumulate(grads, *logits, probs.shape(), |t| {
                    for c in 0..probs.cols {
                        let onehot = if c == tgt { 1.0 } else { 0.0 };
                        t.data[c] += gs * (probs.data[c] - onehot);
                    }
                });
            }
            Op::Pick { x, row, col } => {
                let shape = val(*x).shape();
                let gs = g.item();
                let (r, c) = (*row, *col);
                Self::accumulate(grads, *x, shape, |t| {
                    t.data[r * shape.1 + c] += gs;
                });
            }
            Op::Sum(x) => {
                let gs = g.item();
                Self::accumulate(grads, *x, val(*x).shape(), |t| {
                    t.data.iter_mut().for_each(|v| *v += gs);
                });
            }
        }
    }
}

/// Parameter gradients produced by one backward sweep.
pub struct Gradients {
    by_name: std::collections::BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.by_name.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::row(&[0.0, 0.0]));
        let s = tape.softmax(x).unwrap();
        assert_eq!(tape.value(s).data, vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(2, 3, vec![1.0, -2.0, 0.5, 10.0, 10.0, 10.0]));
        let s = tape.softmax(x).unwrap();
        for r in 0..2 {
            let sum: f64 = (0..3).map(|c| tape.value(s).get(r, c)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_softmax_matches_log_of_softmax() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::row(&[0.3, -1.2, 2.0, 0.0]));
        let s = tape.softmax(x).unwrap();
        let ls = tape.log_softmax(x).unwrap();
        for c in 0..4 {
            let diff = (tape.value(s).data[c].ln() - tape.value(ls).data[c]).abs();
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn cross_entropy_uniform_is_ln_v() {
        for v in [2usize, 5, 17] {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::zeros(1, v));
            let ce = tape.cross_entropy(x, v - 1).unwrap();
            assert!((tape.value(ce).item() - (v as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_gradient_is_softmax_minus_onehot() {
        let mut tape = Tape::new();
        let logits = Tensor::row(&[0.5, -0.2, 1.5]);
        let x = tape.param("logits", logits.clone());
        let ce = tape.cross_entropy(x, 1).unwrap();
        let grads = tape.backward(ce).unwrap();
        let g = grads.get("logits").unwrap();
        let probs = softmax_rows(&logits);
        for c in 0..3 {
            let expect = probs.data[c] - if c == 1 { 1.0 } else { 0.0 };
            assert!((g.data[c] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let x = tape.param("p", Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]));
        let s = tape.sum(x).unwrap();
        let grads = tape.backward(s).unwrap();
        assert_eq!(grads.get("p").unwrap().data, vec![1.0; 4]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.param("p", Tensor::row(&[1.0, 2.0]));
        let y = tape.tanh(x).unwrap();
        assert!(matches!(
            tape.backward(y),
            Err(Error::Shape { op: "backward", .. })
        ));
    }

    #[test]
    fn shape_mismatch_names_op() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(2, 3));
        let b = tape.leaf(Tensor::zeros(3, 3));
        match tape.add(a, b) {
            Err(Error::Shape { op, .. }) => assert_eq!(op, "add"),
            other => panic!("expected shape error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn shared_leaf_accumulates_both_paths() {
        // loss = sum(x*x) + sum(x) -> grad = 2x + 1
        let mut tape = Tape::new();
        let x = tape.param("x", Tensor::row(&[1.5, -2.0]));
        let sq = tape.mul(x, x).unwrap();
        let s1 = tape.sum(sq).unwrap();
        let s2 = tape.sum(x).unwrap();
        let loss = tape.add(s1, s2).unwrap();
        let grads = tape.backward(loss).unwrap();
        let g = grads.get("x").unwrap();
        assert!((g.data[0] - 4.0).abs() < 1e-12);
        assert!((g.data[1] - (-3.0)).abs() < 1e-12);
    }
}
