//! Reverse-mode differentiation over a flat, append-only tape.
//!
//! Every value is a dense 2-D array; scalars are `1 x 1`. Operations record
//! their inputs by index, so the tape is acyclic by construction.

use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};

use crate::aggregate::sigmoid;
use crate::error::{Error, Result};
use crate::graph::{CsrMatrix, Graph};

/// Handle to a value on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A constant sparse left operand together with its transpose.
#[derive(Debug, Clone)]
pub struct SparseOperand {
    matrix: Arc<CsrMatrix>,
    transpose: Arc<CsrMatrix>,
}

impl SparseOperand {
    pub fn new(matrix: CsrMatrix) -> Self {
        let transpose = matrix.transpose();
        SparseOperand {
            matrix: Arc::new(matrix),
            transpose: Arc::new(transpose),
        }
    }

    /// For symmetric matrices; the transpose shares storage.
    pub fn symmetric(matrix: CsrMatrix) -> Self {
        debug_assert!(matrix.is_symmetric(0.0));
        let matrix = Arc::new(matrix);
        SparseOperand {
            transpose: Arc::clone(&matrix),
            matrix,
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
}

/// Closed neighborhoods `Ñ(i)` laid out like CSR rows.
///
/// Entry `e` of the flat layout pairs `sources[e] = i` with `targets[e] = j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhoods {
    pub offsets: Vec<usize>,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
}

impl Neighborhoods {
    pub fn closed(graph: &Graph) -> Self {
        let mut offsets = vec![0];
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        for i in 0..graph.num_nodes() {
            for j in graph.closed_neighborhood(i) {
                sources.push(i);
                targets.push(j);
            }
            offsets.push(targets.len());
        }
        Neighborhoods {
            offsets,
            sources,
            targets,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_entries(&self) -> usize {
        self.targets.len()
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(SparseOperand, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Recip(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    NeighborSoftmax(Var, Arc<Neighborhoods>),
    NeighborVariance(Var, Arc<Neighborhoods>),
    GatherRows(Var, Arc<Vec<usize>>),
    ScatterAddRows(Var, Arc<Vec<usize>>),
    SoftmaxCrossEntropy(Var, Arc<Vec<(usize, usize)>>),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

/// Gradients of a scalar with respect to the trainable leaves of a tape.
#[derive(Debug, Clone)]
pub struct Gradients(Vec<Option<Array2<f64>>>);

impl Gradients {
    /// `None` for constants, intermediates and leaves the loss does not depend on.
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.0.get(v.0).and_then(Option::as_ref)
    }

    /// Like [`Gradients::get`] but zero-filled where no gradient flowed.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Array2<f64> {
        self.get(v).cloned().unwrap_or_else(|| Array2::zeros(shape))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape(a: &Array2<f64>) -> (usize, usize) {
    a.dim()
}

fn broadcast_dim(a: usize, b: usize) -> Option<usize> {
    match (a, b) {
        _ if a == b => Some(a),
        (1, _) => Some(b),
        (_, 1) => Some(a),
        _ => None,
    }
}

/// Sums `g` down to `target` along broadcast axes.
fn reduce_to(g: Array2<f64>, target: (usize, usize)) -> Array2<f64> {
    let mut g = g;
    if target.0 == 1 && g.nrows() != 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if target.1 == 1 && g.ncols() != 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
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

    /// A trainable input.
    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// The single entry of a `1 x 1` value.
    pub fn scalar(&self, v: Var) -> Result<f64> {
        let val = self.value(v);
        if val.dim() != (1, 1) {
            return Err(Error::Autodiff(format!("expected a scalar, found shape {:?}", val.dim())));
        }
        Ok(val[[0, 0]])
    }

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn unary(&mut self, x: Var, value: Array2<f64>, op: Op) -> Var {
        let rg = self.needs(&[x]);
        self.push(value, op, rg)
    }

    fn binary(&mut self, a: Var, b: Var, value: Array2<f64>, op: Op) -> Var {
        let rg = self.needs(&[a, b]);
        self.push(value, op, rg)
    }

    fn broadcast_check(&self, a: Var, b: Var, context: &'static str) -> Result<()> {
        let (sa, sb) = (shape(self.value(a)), shape(self.value(b)));
        if broadcast_dim(sa.0, sb.0).is_none() || broadcast_dim(sa.1, sb.1).is_none() {
            return Err(Error::ShapeMismatch {
                context,
                expected: sa,
                found: sb,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.ncols() != vb.nrows() {
            return Err(Error::ShapeMismatch {
                context: "matmul inner dimension",
                expected: (va.ncols(), vb.ncols()),
                found: vb.dim(),
            });
        }
        let value = va.dot(vb);
        Ok(self.binary(a, b, value, Op::MatMul(a, b)))
    }

    /// `M x` for a constant sparse `M`.
    pub fn spmm(&mut self, m: &SparseOperand, x: Var) -> Result<Var> {
        let value = m.matrix.spmm(self.value(x).view())?;
        Ok(self.unary(x, value, Op::SpMM(m.clone(), x)))
    }

    /// Elementwise sum; a `1`-sized axis broadcasts.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_check(a, b, "add")?;
        let value = self.value(a) + self.value(b);
        Ok(self.binary(a, b, value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_check(a, b, "sub")?;
        let value = self.value(a) - self.value(b);
        Ok(self.binary(a, b, value, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_check(a, b, "mul")?;
        let value = self.value(a) * self.value(b);
        Ok(self.binary(a, b, value, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let value = self.value(x) * k;
        self.unary(x, value, Op::Scale(x, k))
    }

    pub fn add_scalar(&mut self, x: Var, k: f64) -> Var {
        let value = self.value(x) + k;
        self.unary(x, value, Op::AddScalar(x))
    }

    pub fn recip(&mut self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::recip);
        self.unary(x, value, Op::Recip(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).mapv(|v| v.max(0.0));
        self.unary(x, value, Op::Relu(x))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let value = self.value(x).mapv(|v| if v > 0.0 { v } else { slope * v });
        self.unary(x, value, Op::LeakyRelu(x, slope))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).mapv(sigmoid);
        self.unary(x, value, Op::Sigmoid(x))
    }

    /// Softmax of an `E x 1` column within each neighborhood segment.
    pub fn neighbor_softmax(&mut self, x: Var, hoods: &Arc<Neighborhoods>) -> Result<Var> {
        let v = self.value(x);
        if v.dim() != (hoods.num_entries(), 1) {
            return Err(Error::ShapeMismatch {
                context: "neighborhood softmax input",
                expected: (hoods.num_entries(), 1),
                found: v.dim(),
            });
        }
        let mut out = Array2::zeros(v.dim());
        for i in 0..hoods.num_nodes() {
            let r = hoods.range(i);
            let max = r.clone().map(|e| v[[e, 0]]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for e in r.clone() {
                let w = (v[[e, 0]] - max).exp();
                out[[e, 0]] = w;
                total += w;
            }
            for e in r {
                out[[e, 0]] /= total;
            }
        }
        Ok(self.unary(x, out, Op::NeighborSoftmax(x, Arc::clone(hoods))))
    }

    /// Population variance of each channel over every neighborhood.
    pub fn neighbor_variance(&mut self, x: Var, hoods: &Arc<Neighborhoods>) -> Result<Var> {
        let v = self.value(x);
        if v.nrows() != hoods.num_nodes() {
            return Err(Error::ShapeMismatch {
                context: "neighborhood variance input",
                expected: (hoods.num_nodes(), v.ncols()),
                found: v.dim(),
            });
        }
        let mean = neighborhood_mean(v, hoods);
        let mut out = Array2::zeros(v.dim());
        for i in 0..hoods.num_nodes() {
            let r = hoods.range(i);
            let n = r.len() as f64;
            for k in 0..v.ncols() {
                let m = mean[[i, k]];
                out[[i, k]] = r.clone().map(|e| (v[[hoods.targets[e], k]] - m).powi(2)).sum::<f64>() / n;
            }
        }
        Ok(self.unary(x, out, Op::NeighborVariance(x, Arc::clone(hoods))))
    }

    /// Row `e` of the output is row `idx[e]` of `x`.
    pub fn gather_rows(&mut self, x: Var, idx: &Arc<Vec<usize>>) -> Result<Var> {
        let v = self.value(x);
        if let Some(&bad) = idx.iter().find(|&&i| i >= v.nrows()) {
            return Err(Error::Autodiff(format!("gather index {bad} out of {} rows", v.nrows())));
        }
        let value = v.select(Axis(0), idx);
        Ok(self.unary(x, value, Op::GatherRows(x, Arc::clone(idx))))
    }

    /// Row `e` of `x` is added into output row `idx[e]`; the output has `rows` rows.
    pub fn scatter_add_rows(&mut self, x: Var, idx: &Arc<Vec<usize>>, rows: usize) -> Result<Var> {
        let v = self.value(x);
        if v.nrows() != idx.len() {
            return Err(Error::ShapeMismatch {
                context: "scatter rows vs index length",
                expected: (idx.len(), v.ncols()),
                found: v.dim(),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(Error::Autodiff(format!("scatter index {bad} out of {rows} rows")));
        }
        let mut out = Array2::zeros((rows, v.ncols()));
        for (e, &i) in idx.iter().enumerate() {
            let mut row = out.row_mut(i);
            row += &v.row(e);
        }
        Ok(self.unary(x, out, Op::ScatterAddRows(x, Arc::clone(idx))))
    }

    /// Mean softmax cross-entropy over `(row, class)` targets.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &Arc<Vec<(usize, usize)>>) -> Result<Var> {
        let v = self.value(logits);
        if targets.is_empty() {
            return Err(Error::EmptySplit("cross-entropy targets".into()));
        }
        if let Some(&(r, c)) = targets.iter().find(|&&(r, c)| r >= v.nrows() || c >= v.ncols()) {
            return Err(Error::Autodiff(format!("target ({r}, {c}) outside logits {:?}", v.dim())));
        }
        let total: f64 = targets
            .iter()
            .map(|&(r, c)| {
                let row = v.row(r);
                let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
                lse - row[c]
            })
            .sum();
        let value = Array2::from_elem((1, 1), total / targets.len() as f64);
        Ok(self.unary(logits, value, Op::SoftmaxCrossEntropy(logits, Arc::clone(targets))))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Array2::from_elem((1, 1), self.value(x).sum());
        self.unary(x, value, Op::Sum(x))
    }

    /// Gradients of the scalar `loss` with respect to every leaf upstream of it.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).dim() != (1, 1) {
            return Err(Error::Autodiff(format!(
                "backward needs a scalar loss, found shape {:?}",
                self.value(loss).dim()
            )));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Array2::ones((1, 1)));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let mut acc = |v: Var, delta: Array2<f64>| {
                if !self.nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => *existing += &delta,
                    slot => *slot = Some(delta),
                }
            };
            match &node.op {
                Op::Leaf => unreachable!("leaves are skipped above"),
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    acc(*a, g.dot(&vb.t()));
                    acc(*b, va.t().dot(&g));
                }
                Op::SpMM(m, x) => acc(*x, m.transpose.spmm(g.view())?),
                Op::Add(a, b) => {
                    acc(*a, reduce_to(g.clone(), shape(self.value(*a))));
                    acc(*b, reduce_to(g, shape(self.value(*b))));
                }
                Op::Sub(a, b) => {
                    acc(*a, reduce_to(g.clone(), shape(self.value(*a))));
                    acc(*b, reduce_to(-g, shape(self.value(*b))));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    acc(*a, reduce_to(&g * vb, shape(va)));
                    acc(*b, reduce_to(&g * va, shape(vb)));
                }
                Op::Scale(x, k) => acc(*x, g * *k),
                Op::AddScalar(x) => acc(*x, g),
                Op::Recip(x) => {
                    let y = &node.value;
                    acc(*x, -(g * y * y));
                }
                Op::Relu(x) => {
                    let mut d = g;
                    Zip::from(&mut d).and(self.value(*x)).for_each(|d, &v| {
                        if v <= 0.0 {
                            *d = 0.0
                        }
                    });
                    acc(*x, d);
                }
                Op::LeakyRelu(x, slope) => {
                    let mut d = g;
                    Zip::from(&mut d).and(self.value(*x)).for_each(|d, &v| {
                        if v <= 0.0 {
                            *d *= slope
                        }
                    });
                    acc(*x, d);
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    acc(*x, g * &y.mapv(|s| s * (1.0 - s)));
                }
                Op::NeighborSoftmax(x, hoods) => {
                    let y = &node.value;
                    let mut d = Array2::zeros(y.dim());
                    for i in 0..hoods.num_nodes() {
                        let r = hoods.range(i);
                        let dot: f64 = r.clone().map(|e| y[[e, 0]] * g[[e, 0]]).sum();
                        for e in r {
                            d[[e, 0]] = y[[e, 0]] * (g[[e, 0]] - dot);
                        }
                    }
                    acc(*x, d);
                }
                Op::NeighborVariance(x, hoods) => {
                    let v = self.value(*x);
                    let mean = neighborhood_mean(v, hoods);
                    let mut d = Array2::zeros(v.dim());
                    for i in 0..hoods.num_nodes() {
                        let r = hoods.range(i);
                        let n = r.len() as f64;
                        for e in r {
                            let j = hoods.targets[e];
                            for k in 0..v.ncols() {
                                d[[j, k]] += g[[i, k]] * 2.0 * (v[[j, k]] - mean[[i, k]]) / n;
                            }
                        }
                    }
                    acc(*x, d);
                }
                Op::GatherRows(x, gidx) => {
                    let mut d = Array2::zeros(self.value(*x).dim());
                    for (e, &i) in gidx.iter().enumerate() {
                        let mut row = d.row_mut(i);
                        row += &g.row(e);
                    }
                    acc(*x, d);
                }
                Op::ScatterAddRows(x, sidx) => acc(*x, g.select(Axis(0), sidx)),
                Op::SoftmaxCrossEntropy(x, targets) => {
                    let v = self.value(*x);
                    let scale = g[[0, 0]] / targets.len() as f64;
                    let mut d = Array2::zeros(v.dim());
                    for &(r, c) in targets.iter() {
                        let row = v.row(r);
                        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                        let total: f64 = row.iter().map(|x| (x - max).exp()).sum();
                        for k in 0..v.ncols() {
                            d[[r, k]] += scale * (v[[r, k]] - max).exp() / total;
                        }
                        d[[r, c]] -= scale;
                    }
                    acc(*x, d);
                }
                Op::Sum(x) => acc(*x, Array2::from_elem(self.value(*x).dim(), g[[0, 0]])),
            }
        }
        Ok(Gradients(grads))
    }
}

fn neighborhood_mean(v: &Array2<f64>, hoods: &Neighborhoods) -> Array2<f64> {
    let mut mean = Array2::zeros((hoods.num_nodes(), v.ncols()));
    for i in 0..hoods.num_nodes() {
        let r = hoods.range(i);
        let n = r.len() as f64;
        for e in r {
            let mut row = mean.row_mut(i);
            row += &v.row(hoods.targets[e]);
        }
        mean.row_mut(i).mapv_inplace(|m| m / n);
    }
    mean
}
