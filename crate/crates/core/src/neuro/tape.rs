//! Reverse-mode gradient tape over [`Array2`] values.
//!
//! Nodes are appended in evaluation order, so the node vector is already a
//! topological order and the backward sweep simply walks it in reverse.
//! Parameters are borrowed, not copied: binding a model to a fresh tape per
//! training instance costs one pointer per array.

use std::borrow::Cow;

use super::array::{sigmoid, Array2};
use super::NeuroError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// `m x n` plus an `m x 1` column added to every column.
    AddColumn(NodeId, NodeId),
    Scale(NodeId, f64),
    /// Array times a `1 x 1` node.
    ScaleBy(NodeId, NodeId),
    OneMinus(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    ConcatRows(Vec<NodeId>),
    ConcatCols(Vec<NodeId>),
    Transpose(NodeId),
    /// Row `r` of a matrix, returned as a column vector.
    RowAsColumn(NodeId, usize),
    Softmax(NodeId),
    PadRows(NodeId),
    /// `out[targets[j]] += in[j]`.
    Scatter(NodeId, Vec<usize>),
    Sum(NodeId),
    AddN(Vec<NodeId>),
    CrossEntropy { dist: NodeId, target: usize },
}

struct Node<'a> {
    value: Cow<'a, Array2>,
    op: Op,
}

/// Added to the target probability before taking the log.
pub const CROSS_ENTROPY_EPS: f64 = 1e-12;

/// Ordered record of primitive applications.
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
    params: Vec<NodeId>,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of a scalar with respect to every registered parameter, in
/// registration order.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Array2>,
}

impl Gradients {
    pub fn get(&self, param_index: usize) -> Option<&Array2> {
        self.grads.get(param_index)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array2> {
        self.grads.iter()
    }

    pub fn into_vec(self) -> Vec<Array2> {
        self.grads
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Array2 {
        &self.nodes[id.0].value
    }

    pub fn scalar_value(&self, id: NodeId) -> Option<f64> {
        self.value(id).item()
    }

    fn push(&mut self, value: Array2, op: Op) -> NodeId {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Registers a borrowed trainable array. Its gradient is reported by
    /// [`Tape::backward`] at the position of this call among all `param` calls.
    pub fn param(&mut self, value: &'a Array2) -> NodeId {
        self.nodes.push(Node {
            value: Cow::Borrowed(value),
            op: Op::Leaf,
        });
        let id = NodeId(self.nodes.len() - 1);
        self.params.push(id);
        id
    }

    /// Records a value that receives no reported gradient.
    pub fn constant(&mut self, value: Array2) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn elementwise_mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        let v = self.value(a).elementwise_mul(self.value(b))?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn add_column(&mut self, matrix: NodeId, column: NodeId) -> Result<NodeId, NeuroError> {
        let m = self.value(matrix);
        let c = self.value(column);
        if c.cols() != 1 || c.rows() != m.rows() {
            return Err(NeuroError::shape("add_column", m.shape(), c.shape()));
        }
        let mut v = m.clone();
        for r in 0..v.rows() {
            let b = c.get(r, 0);
            v.row_mut(r).iter_mut().for_each(|x| *x += b);
        }
        Ok(self.push(v, Op::AddColumn(matrix, column)))
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.value(a).scale(k);
        self.push(v, Op::Scale(a, k))
    }

    pub fn scale_by(&mut self, a: NodeId, s: NodeId) -> Result<NodeId, NeuroError> {
        let Some(k) = self.scalar_value(s) else {
            return Err(NeuroError::shape("scale_by", self.value(a).shape(), self.value(s).shape()));
        };
        let v = self.value(a).scale(k);
        Ok(self.push(v, Op::ScaleBy(a, s)))
    }

    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| 1.0 - x);
        self.push(v, Op::OneMinus(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).tanh();
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId, NeuroError> {
        let vals: Vec<&Array2> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Array2::concat_rows(&vals)?;
        Ok(self.push(v, Op::ConcatRows(parts.to_vec())))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, NeuroError> {
        let vals: Vec<&Array2> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Array2::concat_cols(&vals)?;
        Ok(self.push(v, Op::ConcatCols(parts.to_vec())))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    /// Embedding lookup: row `r` of `table` as a column vector.
    pub fn row_as_column(&mut self, table: NodeId, r: usize) -> Result<NodeId, NeuroError> {
        let t = self.value(table);
        if r >= t.rows() {
            return Err(NeuroError::IndexOutOfRange {
                op: "row_as_column",
                index: r,
                len: t.rows(),
            });
        }
        let v = Array2::column(t.row(r));
        Ok(self.push(v, Op::RowAsColumn(table, r)))
    }

    /// Softmax over a column vector. Masked-out entries (`false`) get
    /// probability exactly zero and receive no gradient.
    pub fn softmax(&mut self, logits: NodeId, mask: Option<&[bool]>) -> Result<NodeId, NeuroError> {
        let v = softmax(self.value(logits), mask)?;
        Ok(self.push(v, Op::Softmax(logits)))
    }

    /// Extends a column vector with zeros up to `len` rows.
    pub fn pad_rows(&mut self, a: NodeId, len: usize) -> Result<NodeId, NeuroError> {
        let x = self.value(a);
        if x.cols() != 1 || x.rows() > len {
            return Err(NeuroError::shape("pad_rows", x.shape(), (len, 1)));
        }
        let mut data = x.data().to_vec();
        data.resize(len, 0.0);
        Ok(self.push(Array2::column(&data), Op::PadRows(a)))
    }

    /// Scatter-add a column vector into a zero vector of length `len`.
    pub fn scatter(&mut self, a: NodeId, targets: &[usize], len: usize) -> Result<NodeId, NeuroError> {
        let x = self.value(a);
        if x.cols() != 1 || x.rows() != targets.len() {
            return Err(NeuroError::shape("scatter", x.shape(), (targets.len(), 1)));
        }
        let mut out = vec![0.0; len];
        for (&t, &v) in targets.iter().zip(x.data()) {
            if t >= len {
                return Err(NeuroError::IndexOutOfRange {
                    op: "scatter",
                    index: t,
                    len,
                });
            }
            out[t] += v;
        }
        Ok(self.push(Array2::column(&out), Op::Scatter(a, targets.to_vec())))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Array2::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    pub fn add_n(&mut self, parts: &[NodeId]) -> Result<NodeId, NeuroError> {
        let Some(&first) = parts.first() else {
            return Err(NeuroError::Empty("add_n"));
        };
        let mut v = self.value(first).clone();
        for &p in &parts[1..] {
            v.add_assign(self.value(p))?;
        }
        Ok(self.push(v, Op::AddN(parts.to_vec())))
    }

    /// `-ln(dist[target] + 1e-12)` for a probability column vector.
    pub fn cross_entropy(&mut self, dist: NodeId, target: usize) -> Result<NodeId, NeuroError> {
        let d = self.value(dist);
        if d.cols() != 1 || target >= d.rows() {
            return Err(NeuroError::IndexOutOfRange {
                op: "cross_entropy",
                index: target,
                len: d.rows(),
            });
        }
        let v = cross_entropy(d.data(), target);
        Ok(self.push(Array2::scalar(v), Op::CrossEntropy { dist, target }))
    }

    /// Propagates d(loss)/d(node) back to every registered parameter.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, NeuroError> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(NeuroError::NonScalarLoss(shape.0, shape.1));
        }
        let mut grads: Vec<Option<Array2>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Array2::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul_t(self.value(*b))?;
                    let db = self.value(*a).t_matmul(&g)?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.scale(-1.0))?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Mul(a, b) => {
                    let da = g.elementwise_mul(self.value(*b))?;
                    let db = g.elementwise_mul(self.value(*a))?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::AddColumn(m, c) => {
                    let sums: Vec<f64> = (0..g.rows()).map(|r| g.row(r).iter().sum()).collect();
                    accumulate(&mut grads, *c, Array2::column(&sums))?;
                    accumulate(&mut grads, *m, g)?;
                }
                Op::Scale(a, k) => accumulate(&mut grads, *a, g.scale(*k))?,
                Op::ScaleBy(a, s) => {
                    let k = self.value(*s).data()[0];
                    let ds = g.elementwise_mul(self.value(*a))?.sum();
                    accumulate(&mut grads, *s, Array2::scalar(ds))?;
                    accumulate(&mut grads, *a, g.scale(k))?;
                }
                Op::OneMinus(a) => accumulate(&mut grads, *a, g.scale(-1.0))?,
                Op::Tanh(a) => {
                    let y = &node.value;
                    let da = g.elementwise_mul(&y.map(|t| 1.0 - t * t))?;
                    accumulate(&mut grads, *a, da)?;
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let da = g.elementwise_mul(&y.map(|s| s * (1.0 - s)))?;
                    accumulate(&mut grads, *a, da)?;
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (r, c) = self.value(p).shape();
                        let slice = g.data()[offset * c..(offset + r) * c].to_vec();
                        accumulate(&mut grads, p, Array2::from_vec(r, c, slice)?)?;
                        offset += r;
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (r, c) = self.value(p).shape();
                        let mut part = Array2::zeros(r, c);
                        for row in 0..r {
                            part.row_mut(row)
                                .copy_from_slice(&g.row(row)[offset..offset + c]);
                        }
                        accumulate(&mut grads, p, part)?;
                        offset += c;
                    }
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, g.transpose())?,
                Op::RowAsColumn(table, r) => {
                    let (rows, cols) = self.value(*table).shape();
                    let slot = grads[table.0].get_or_insert_with(|| Array2::zeros(rows, cols));
                    for (dst, src) in slot.row_mut(*r).iter_mut().zip(g.data()) {
                        *dst += src;
                    }
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let dot: f64 = y.data().iter().zip(g.data()).map(|(p, d)| p * d).sum();
                    let da: Vec<f64> = y
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(p, d)| p * (d - dot))
                        .collect();
                    accumulate(&mut grads, *a, Array2::column(&da))?;
                }
                Op::PadRows(a) => {
                    let n = self.value(*a).rows();
                    accumulate(&mut grads, *a, Array2::column(&g.data()[..n]))?;
                }
                Op::Scatter(a, targets) => {
                    let da: Vec<f64> = targets.iter().map(|&t| g.data()[t]).collect();
                    accumulate(&mut grads, *a, Array2::column(&da))?;
                }
                Op::Sum(a) => {
                    let (r, c) = self.value(*a).shape();
                    accumulate(&mut grads, *a, Array2::filled(r, c, g.data()[0]))?;
                }
                Op::AddN(parts) => {
                    for &p in parts {
                        accumulate(&mut grads, p, g.clone())?;
                    }
                }
                Op::CrossEntropy { dist, target } => {
                    let d = self.value(*dist);
                    let mut dd = Array2::zeros(d.rows(), 1);
                    dd.set(
                        *target,
                        0,
                        -g.data()[0] / (d.get(*target, 0) + CROSS_ENTROPY_EPS),
                    );
                    accumulate(&mut grads, *dist, dd)?;
                }
            }
        }

        let out = self
            .params
            .iter()
            .map(|&p| match grads.get_mut(p.0).and_then(Option::take) {
                Some(g) => g,
                None => {
                    let (r, c) = self.value(p).shape();
                    Array2::zeros(r, c)
                }
            })
            .collect();
        Ok(Gradients { grads: out })
    }
}

fn accumulate(grads: &mut [Option<Array2>], id: NodeId, g: Array2) -> Result<(), NeuroError> {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Masked, max-shifted softmax over a column vector.
pub fn softmax(logits: &Array2, mask: Option<&[bool]>) -> Result<Array2, NeuroError> {
    if logits.cols() != 1 {
        return Err(NeuroError::shape("softmax", logits.shape(), (logits.rows(), 1)));
    }
    let n = logits.rows();
    if let Some(m) = mask {
        if m.len() != n {
            return Err(NeuroError::shape("softmax", logits.shape(), (m.len(), 1)));
        }
    }
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let max = (0..n)
        .filter(|&i| keep(i))
        .map(|i| logits.data()[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(NeuroError::AllMasked);
    }
    let mut out = vec![0.0; n];
    let mut total = 0.0;
    for (i, o) in out.iter_mut().enumerate() {
        if keep(i) {
            *o = (logits.data()[i] - max).exp();
            total += *o;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(Array2::column(&out))
}

/// `-ln(dist[target] + 1e-12)`.
pub fn cross_entropy(dist: &[f64], target: usize) -> f64 {
    -(dist[target] + CROSS_ENTROPY_EPS).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&Array2::column(&[1.0, 1.0, 1.0]), None).unwrap();
        assert!(p.data().iter().all(|&v| close(v, 1.0 / 3.0, 1e-15)));

        let p = softmax(&Array2::column(&[0.0, 123.0, 0.0]), Some(&[true, false, true])).unwrap();
        assert_eq!(p.data()[1], 0.0);
        assert!(close(p.data()[0], 0.5, 1e-15) && close(p.data()[2], 0.5, 1e-15));

        let logits = Array2::column(&[1f64.ln(), 2f64.ln(), 3f64.ln()]);
        let p = softmax(&logits, None).unwrap();
        for (got, want) in p.data().iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!(close(*got, want, 1e-15));
        }
    }

    #[test]
    fn softmax_all_masked_is_an_error() {
        let err = softmax(&Array2::column(&[1.0, 2.0]), Some(&[false, false]));
        assert!(matches!(err, Err(NeuroError::AllMasked)));
    }

    #[test]
    fn cross_entropy_examples() {
        assert!(cross_entropy(&[1.0, 0.0, 0.0], 0).abs() < 1e-11);
        assert!(close(cross_entropy(&[0.25; 4], 2), 4f64.ln(), 1e-10));
        assert!(close(cross_entropy(&[0.7, 0.3], 1), -(0.3f64.ln()), 1e-10));
    }

    #[test]
    fn backward_of_sum_is_ones() {
        let a = Array2::from_vec(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let mut tape = Tape::new();
        let x = tape.param(&a);
        let s = tape.sum(x);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(0).unwrap(), &Array2::filled(2, 2, 1.0));
    }

    #[test]
    fn backward_of_sum_of_squares_is_twice_input() {
        let a = Array2::from_vec(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let mut tape = Tape::new();
        let x = tape.param(&a);
        let sq = tape.elementwise_mul(x, x).unwrap();
        let s = tape.sum(sq);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(0).unwrap(), &a.scale(2.0));
    }

    #[test]
    fn unreached_parameters_get_zero_gradient() {
        let a = Array2::scalar(2.0);
        let b = Array2::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let mut tape = Tape::new();
        let x = tape.param(&a);
        let _unused = tape.param(&b);
        let y = tape.elementwise_mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(0).unwrap().item(), Some(4.0));
        assert_eq!(g.get(1).unwrap(), &Array2::zeros(1, 3));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let a = Array2::zeros(2, 1);
        let mut tape = Tape::new();
        let x = tape.param(&a);
        assert!(matches!(tape.backward(x), Err(NeuroError::NonScalarLoss(2, 1))));
    }
}
