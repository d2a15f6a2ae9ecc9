//! Feature aggregation operators and their denoising counterparts.
//!
//! Every aggregator takes the transformed features `X'` (one row per node)
//! and returns `H` with the same number of columns.

mod certify;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use certify::{certify_theorems, CertificationReport, CertifyConfig, Fault, TheoremCheck, TheoremId, Violation};

use crate::denoise::{cg, AdaptiveKernel};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph};
use crate::Signal;

/// Default LeakyReLU negative slope for attention logits.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

/// Affine head `h1` mapping the channel-variance vector to a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SmoothnessHead {
    pub fn zeros(dim: usize) -> Self {
        SmoothnessHead {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AggregatorSpec {
    Gcn,
    Gat { a1: Vec<f64>, a2: Vec<f64>, leaky_slope: f64 },
    Ppnp { alpha: f64 },
    Appnp { alpha: f64, k: usize },
    AdaUgnn { s: f64, head: SmoothnessHead, k: usize },
}

impl AggregatorSpec {
    pub fn aggregate(&self, xp: ArrayView2<f64>, graph: &Graph) -> Result<Signal> {
        match self {
            AggregatorSpec::Gcn => gcn_aggregate(xp, graph),
            AggregatorSpec::Gat { a1, a2, leaky_slope } => gat_aggregate(xp, graph, a1, a2, *leaky_slope),
            AggregatorSpec::Ppnp { alpha } => ppnp_aggregate(xp, *alpha, graph),
            AggregatorSpec::Appnp { alpha, k } => appnp_aggregate(xp, *alpha, *k, graph),
            AggregatorSpec::AdaUgnn { s, head, k } => ada_ugnn_aggregate(xp, *s, head, *k, graph),
        }
    }
}

/// `H = Ã X'`.
pub fn gcn_aggregate(xp: ArrayView2<f64>, graph: &Graph) -> Result<Signal> {
    check_rows(xp, graph)?;
    normalized_adjacency(graph).spmm(xp)
}

/// Single-head attention weights over each closed neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// Row offsets into `targets`/`weights`, one segment per node.
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Attention {
    /// `(j, α_ij)` pairs for node `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.targets[span.clone()].iter().copied().zip(self.weights[span].iter().copied())
    }
}

/// Raw logits `e_ij = LeakyReLU(X'_i·a1 + X'_j·a2)` laid out like [`Attention`].
pub fn gat_logits(xp: ArrayView2<f64>, graph: &Graph, a1: &[f64], a2: &[f64], leaky_slope: f64) -> Result<Attention> {
    check_rows(xp, graph)?;
    if a1.len() != xp.ncols() || a2.len() != xp.ncols() {
        return Err(Error::ShapeMismatch {
            context: "attention vectors vs feature dimension",
            expected: (xp.ncols(), 2),
            found: (a1.len(), a2.len()),
        });
    }
    let src = xp.dot(&ArrayView1::from(a1));
    let dst = xp.dot(&ArrayView1::from(a2));
    let mut offsets = vec![0];
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    for i in 0..graph.num_nodes() {
        for j in graph.closed_neighborhood(i) {
            let z = src[i] + dst[j];
            targets.push(j);
            weights.push(if z >= 0.0 { z } else { leaky_slope * z });
        }
        offsets.push(targets.len());
    }
    Ok(Attention { offsets, targets, weights })
}

/// Normalizes per-node logits with a max-shifted softmax.
pub fn neighborhood_softmax(mut logits: Attention) -> Attention {
    for i in 0..logits.offsets.len() - 1 {
        let seg = &mut logits.weights[logits.offsets[i]..logits.offsets[i + 1]];
        let max = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for w in seg.iter_mut() {
            *w = (*w - max).exp();
            total += *w;
        }
        for w in seg.iter_mut() {
            *w /= total;
        }
    }
    logits
}

/// `α_ij = softmax_{j∈Ñ(i)} e_ij`.
pub fn gat_attention(xp: ArrayView2<f64>, graph: &Graph, a1: &[f64], a2: &[f64], leaky_slope: f64) -> Result<Attention> {
    Ok(neighborhood_softmax(gat_logits(xp, graph, a1, a2, leaky_slope)?))
}

/// `H_i = Σ_{j∈Ñ(i)} α_ij X'_j`.
pub fn gat_aggregate(xp: ArrayView2<f64>, graph: &Graph, a1: &[f64], a2: &[f64], leaky_slope: f64) -> Result<Signal> {
    let att = gat_attention(xp, graph, a1, a2, leaky_slope)?;
    Ok(aggregate_with(&att, xp))
}

/// Weighted neighborhood sum with arbitrary per-edge weights.
pub fn aggregate_with(att: &Attention, xp: ArrayView2<f64>) -> Signal {
    let mut out = Signal::zeros(xp.dim());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        for (j, w) in att.row(i) {
            row.scaled_add(w, &xp.row(j));
        }
    }
    out
}

/// `H = α (I − (1−α) Ã)⁻¹ X'`, via conjugate gradients.
pub fn ppnp_aggregate(xp: ArrayView2<f64>, alpha: f64, graph: &Graph) -> Result<Signal> {
    check_rows(xp, graph)?;
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(xp.to_owned());
    }
    let rhs = &xp * alpha;
    cg::solve_shifted(&normalized_adjacency(graph), 1.0, -(1.0 - alpha), rhs.view())
}

/// `H⁽ᵏ⁾ = (1−α) Ã H⁽ᵏ⁻¹⁾ + α X'` for `k = 1..K`, `H⁽⁰⁾ = X'`.
pub fn appnp_aggregate(xp: ArrayView2<f64>, alpha: f64, k: usize, graph: &Graph) -> Result<Signal> {
    Ok(appnp_trajectory(xp, alpha, k, graph)?.pop().expect("k >= 1"))
}

/// Every iterate `H⁽¹⁾..H⁽ᴷ⁾` of APPNP propagation.
pub fn appnp_trajectory(xp: ArrayView2<f64>, alpha: f64, k: usize, graph: &Graph) -> Result<Vec<Signal>> {
    check_rows(xp, graph)?;
    check_alpha(alpha)?;
    check_k(k)?;
    let a_norm = normalized_adjacency(graph);
    let anchor = &xp * alpha;
    let mut h = xp.to_owned();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        h = a_norm.spmm(h.view())? * (1.0 - alpha) + &anchor;
        out.push(h.clone());
    }
    Ok(out)
}

/// Learned smoothness factors `C_i ∈ (0, s)` and their stepsizes `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessFactors {
    pub c: Vec<f64>,
    pub b: Vec<f64>,
}

/// Population variance of each channel over `{X'_j : j ∈ Ñ(i)}`, one row per node.
pub fn neighborhood_channel_variance(xp: ArrayView2<f64>, graph: &Graph) -> Result<Signal> {
    check_rows(xp, graph)?;
    let mut out = Signal::zeros(xp.dim());
    for i in 0..graph.num_nodes() {
        let hood = graph.closed_neighborhood(i);
        let n = hood.len() as f64;
        let rows = xp.select(Axis(0), &hood);
        let var = rows.map_axis(Axis(0), |col| {
            let m = col.sum() / n;
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
        });
        out.row_mut(i).assign(&var);
    }
    Ok(out)
}

/// `C_i = s · σ(h1(h2({X'_j : j ∈ Ñ(i)})))` with `h2` the channel-wise
/// variance; `b_i = 1 / (2 + Σ_{j∈Ñ(i)} (C_i + C_j) / d_i)`.
pub fn compute_smoothness_factors(
    xp: ArrayView2<f64>,
    graph: &Graph,
    head: &SmoothnessHead,
    s: f64,
) -> Result<SmoothnessFactors> {
    check_s(s)?;
    if head.weights.len() != xp.ncols() {
        return Err(Error::ShapeMismatch {
            context: "smoothness head weights vs feature dimension",
            expected: (xp.ncols(), 1),
            found: (head.weights.len(), 1),
        });
    }
    let var = neighborhood_channel_variance(xp, graph)?;
    let score: Array1<f64> = var.dot(&ArrayView1::from(&head.weights[..])) + head.bias;
    let c: Vec<f64> = score.iter().map(|&z| s * sigmoid(z)).collect();
    let b = AdaptiveKernel::new(&c, graph)?.stepsizes;
    Ok(SmoothnessFactors { c, b })
}

/// Adaptive-smoothness aggregation: compute `C` once from `X'`, then run
/// `K` steps of the degree-normalized adaptive iteration from `H⁽⁰⁾ = X'`.
pub fn ada_ugnn_aggregate(xp: ArrayView2<f64>, s: f64, head: &SmoothnessHead, k: usize, graph: &Graph) -> Result<Signal> {
    check_k(k)?;
    let factors = compute_smoothness_factors(xp, graph, head, s)?;
    propagate_with_factors(xp, &factors.c, k, graph)
}

/// The propagation half of [`ada_ugnn_aggregate`] for given factors.
pub fn propagate_with_factors(xp: ArrayView2<f64>, c: &[f64], k: usize, graph: &Graph) -> Result<Signal> {
    check_rows(xp, graph)?;
    check_k(k)?;
    let kernel = AdaptiveKernel::new(c, graph)?;
    let mut h = xp.to_owned();
    for _ in 0..k {
        h = kernel.step(xp, h.view())?;
    }
    Ok(h)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_rows(xp: ArrayView2<f64>, graph: &Graph) -> Result<()> {
    if xp.nrows() != graph.num_nodes() {
        return Err(Error::ShapeMismatch {
            context: "feature rows vs graph nodes",
            expected: (graph.num_nodes(), xp.ncols()),
            found: xp.dim(),
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidParameter("propagation steps K must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("upper bound s must be positive, got {s}")))
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn gcn_isolated_and_edge() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let x = array![[1.0], [0.0], [7.0]];
        let h = gcn_aggregate(x.view(), &g).unwrap();
        assert_eq!(h, array![[0.5], [0.5], [7.0]]);
    }

    #[test]
    fn gat_zero_vectors_give_uniform_attention() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let x = array![[1.0, 2.0], [0.0, 1.0], [3.0, 3.0], [-1.0, 0.5]];
        let att = gat_attention(x.view(), &g, &[0.0, 0.0], &[0.0, 0.0], 0.2).unwrap();
        for (_, w) in att.row(0) {
            assert!((w - 0.25).abs() < 1e-15);
        }
        for (_, w) in att.row(1) {
            assert!((w - 0.5).abs() < 1e-15);
        }
        let h = gat_aggregate(x.view(), &g, &[0.0, 0.0], &[0.0, 0.0], 0.2).unwrap();
        assert!((h[[0, 0]] - 0.75).abs() < 1e-15);
        assert!((h[[0, 1]] - 1.625).abs() < 1e-15);
    }

    #[test]
    fn gat_rejects_wrong_vector_length() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let x = Signal::zeros((2, 3));
        assert!(gat_attention(x.view(), &g, &[0.0; 2], &[0.0; 3], 0.2).is_err());
    }

    #[test]
    fn ppnp_alpha_one_is_identity() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let x = array![[1.0], [2.0], [3.0]];
        assert_eq!(ppnp_aggregate(x.view(), 1.0, &g).unwrap(), x);
        assert!(ppnp_aggregate(x.view(), 0.0, &g).is_err());
        assert!(ppnp_aggregate(x.view(), 1.5, &g).is_err());
    }

    #[test]
    fn appnp_single_step() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let x = array![[1.0, 0.0], [2.0, 1.0], [3.0, -1.0]];
        let alpha = 0.3;
        let h = appnp_aggregate(x.view(), alpha, 1, &g).unwrap();
        let expected = normalized_adjacency(&g).to_dense().dot(&x) * (1.0 - alpha) + &x * alpha;
        assert!(h.iter().zip(expected.iter()).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(appnp_aggregate(x.view(), alpha, 0, &g).is_err());
    }

    #[test]
    fn smoothness_factors_zero_head() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let x = array![[1.0, 5.0], [2.0, 0.0], [3.0, 3.0]];
        let f = compute_smoothness_factors(x.view(), &g, &SmoothnessHead::zeros(2), 9.0).unwrap();
        assert!(f.c.iter().all(|&c| c == 4.5));
    }

    #[test]
    fn smoothness_factors_constant_features() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let x = array![[1.0, -2.0], [1.0, -2.0], [1.0, -2.0]];
        let head = SmoothnessHead {
            weights: vec![10.0, -4.0],
            bias: 0.7,
        };
        let f = compute_smoothness_factors(x.view(), &g, &head, 2.0).unwrap();
        for c in f.c {
            assert!((c - 2.0 * sigmoid(0.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn channel_variance_population() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let x = array![[0.0, 1.0], [2.0, 1.0]];
        let v = neighborhood_channel_variance(x.view(), &g).unwrap();
        assert_eq!(v, array![[1.0, 0.0], [1.0, 0.0]]);
        let g = Graph::from_edges(1, &[]).unwrap();
        let v = neighborhood_channel_variance(array![[3.0]].view(), &g).unwrap();
        assert_eq!(v, array![[0.0]]);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
