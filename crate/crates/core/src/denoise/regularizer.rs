use ndarray::{Array2, ArrayView2, Axis};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, CsrMatrix, Graph, LaplacianKind};

/// Smoothness prior `r(C, F, G)` added to the fidelity term `‖F − S‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegularizerSpec {
    /// `c · tr(Fᵀ L F)`
    GlobalLaplacian { c: f64, kind: LaplacianKind },
    /// `½ Σ_i c_i Σ_{j∈Ñ(i)} ‖F_i − F_j‖²`
    NodeAdaptive { c: Vec<f64> },
    /// `½ Σ_i C_i Σ_{j∈Ñ(i)} ‖F_i/√d_i − F_j/√d_j‖²` with self-loop degrees.
    DegreeNormalizedAdaptive { c: Vec<f64> },
    /// `C_p Σ_{E} ‖F_i − F_j‖² − C_n Σ_{∉E} ‖F_i − F_j‖²` over unordered pairs.
    PairNorm { cp: f64, cn: f64 },
    /// `Σ_{E} C_ij ‖F_i − F_j‖²`, `C_ij ~ Bernoulli(1 − q)` drawn once from `seed`.
    DropEdge { q: f64, seed: u64 },
    /// `c · ‖L F‖₁` with the unnormalized Laplacian. Evaluation only.
    TrendFilter { c: f64 },
}

impl RegularizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RegularizerSpec::GlobalLaplacian { .. } => "global-laplacian",
            RegularizerSpec::NodeAdaptive { .. } => "node-adaptive",
            RegularizerSpec::DegreeNormalizedAdaptive { .. } => "degree-normalized-adaptive",
            RegularizerSpec::PairNorm { .. } => "pairnorm",
            RegularizerSpec::DropEdge { .. } => "dropedge",
            RegularizerSpec::TrendFilter { .. } => "trend-filter",
        }
    }

    /// Checks parameter ranges against `graph`.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be a finite nonnegative number, got {v}")))
            }
        };
        let per_node = |c: &[f64]| {
            if c.len() != graph.num_nodes() {
                return Err(Error::ShapeMismatch {
                    context: "per-node smoothness weights",
                    expected: (graph.num_nodes(), 1),
                    found: (c.len(), 1),
                });
            }
            c.iter().try_for_each(|&v| nonneg("c_i", v))
        };
        match self {
            RegularizerSpec::GlobalLaplacian { c, .. } | RegularizerSpec::TrendFilter { c } => nonneg("c", *c),
            RegularizerSpec::NodeAdaptive { c } | RegularizerSpec::DegreeNormalizedAdaptive { c } => per_node(c),
            RegularizerSpec::PairNorm { cp, cn } => {
                if *cp > 0.0 && *cn > 0.0 && cp.is_finite() && cn.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("PairNorm weights must be positive, got ({cp}, {cn})")))
                }
            }
            RegularizerSpec::DropEdge { q, .. } => {
                if (0.0..=1.0).contains(q) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("DropEdge rate must lie in [0, 1], got {q}")))
                }
            }
        }
    }

    /// Value of `r(C, F, G)`.
    pub fn value(&self, f: ArrayView2<f64>, graph: &Graph) -> Result<f64> {
        check_rows(f, graph)?;
        Ok(match self {
            RegularizerSpec::GlobalLaplacian { c, kind } => {
                let lf = laplacian(graph, *kind).spmm(f)?;
                c * (&f * &lf).sum()
            }
            RegularizerSpec::NodeAdaptive { c } => {
                weighted_edge_sum(f, graph, |i, j| 0.5 * (c[i] + c[j]), |_| 1.0)
            }
            RegularizerSpec::DegreeNormalizedAdaptive { c } => {
                let inv_sqrt = inv_sqrt_self_loop_degrees(graph);
                weighted_edge_sum(f, graph, |i, j| 0.5 * (c[i] + c[j]), |i| inv_sqrt[i])
            }
            RegularizerSpec::PairNorm { cp, cn } => {
                let edge = edge_difference_sum(f, graph);
                cp * edge - cn * non_edge_difference_sum(f, graph, edge)
            }
            RegularizerSpec::DropEdge { q, seed } => {
                let mask = dropedge_mask(graph.num_edges(), *q, *seed);
                graph
                    .edges()
                    .iter()
                    .zip(&mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(&(i, j), _)| row_distance_sq(f, i, j))
                    .sum()
            }
            RegularizerSpec::TrendFilter { c } => {
                let lf = laplacian(graph, LaplacianKind::Unnormalized).spmm(f)?;
                c * lf.iter().map(|v| v.abs()).sum::<f64>()
            }
        })
    }

    /// Gradient of `r` with respect to `F`.
    pub fn gradient(&self, f: ArrayView2<f64>, graph: &Graph) -> Result<Array2<f64>> {
        check_rows(f, graph)?;
        match self {
            RegularizerSpec::GlobalLaplacian { c, kind } => Ok(laplacian(graph, *kind).spmm(f)? * (2.0 * c)),
            RegularizerSpec::NodeAdaptive { c } => {
                Ok(weighted_laplacian(graph, |i, j| c[i] + c[j], None).spmm(f)?)
            }
            RegularizerSpec::DegreeNormalizedAdaptive { c } => {
                let inv_sqrt = inv_sqrt_self_loop_degrees(graph);
                Ok(weighted_laplacian(graph, |i, j| c[i] + c[j], Some(&inv_sqrt)).spmm(f)?)
            }
            RegularizerSpec::PairNorm { cp, cn } => {
                let n = graph.num_nodes() as f64;
                let lf = laplacian(graph, LaplacianKind::Unnormalized).spmm(f)?;
                let col_sum = f.sum_axis(Axis(0));
                // ∂/∂F of Σ_{i<j}‖F_i − F_j‖² is 2N F − 2·1·(Σ_i F_i)ᵀ
                let all_pairs = (&f * (2.0 * n)) - &(col_sum.insert_axis(Axis(0)) * 2.0);
                let non_edge = all_pairs - &lf * 2.0;
                Ok(&lf * (2.0 * cp) - non_edge * *cn)
            }
            RegularizerSpec::DropEdge { q, seed } => {
                let mask = dropedge_mask(graph.num_edges(), *q, *seed);
                Ok(masked_laplacian(graph, &mask).spmm(f)? * 2.0)
            }
            RegularizerSpec::TrendFilter { .. } => Err(Error::UnsupportedSolver("trend-filter")),
        }
    }

    /// Upper bound on the spectral norm of the Hessian of the full objective
    /// `‖F − S‖² + r`; a stepsize of `1 / bound` guarantees descent.
    pub fn smoothness_bound(&self, graph: &Graph) -> Result<f64> {
        let n = graph.num_nodes();
        let dmax = (0..n).map(|i| graph.degree(i)).max().unwrap_or(0) as f64;
        let reg = match self {
            RegularizerSpec::GlobalLaplacian { c, kind } => {
                let lmax = match kind {
                    LaplacianKind::SymNormalizedSelfLoop => 2.0,
                    _ => 2.0 * dmax,
                };
                2.0 * c * lmax
            }
            RegularizerSpec::NodeAdaptive { c } => (0..n)
                .map(|i| 2.0 * graph.neighbors(i).iter().map(|&j| c[i] + c[j]).sum::<f64>())
                .fold(0.0, f64::max),
            RegularizerSpec::DegreeNormalizedAdaptive { c } => {
                let inv_sqrt = inv_sqrt_self_loop_degrees(graph);
                (0..n)
                    .map(|i| {
                        graph
                            .neighbors(i)
                            .iter()
                            .map(|&j| (c[i] + c[j]) * inv_sqrt[i] * (inv_sqrt[i] + inv_sqrt[j]))
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            }
            RegularizerSpec::PairNorm { cp, cn } => 4.0 * cp * dmax + 4.0 * cn * n as f64,
            RegularizerSpec::DropEdge { .. } => 4.0 * dmax,
            RegularizerSpec::TrendFilter { .. } => return Err(Error::UnsupportedSolver("trend-filter")),
        };
        Ok(2.0 + reg)
    }
}

/// Edge-centric form of `tr(Fᵀ L F)`: `Σ_{(i,j)∈E} ‖F_i/√w_i − F_j/√w_j‖²`,
/// with `w ≡ 1` for the unnormalized variants and the self-loop degree for
/// the symmetric-normalized one.
pub fn laplacian_edge_form(f: ArrayView2<f64>, graph: &Graph, kind: LaplacianKind) -> Result<f64> {
    check_rows(f, graph)?;
    Ok(match kind {
        LaplacianKind::Unnormalized | LaplacianKind::UnnormalizedSelfLoop => edge_difference_sum(f, graph),
        LaplacianKind::SymNormalizedSelfLoop => {
            let inv_sqrt = inv_sqrt_self_loop_degrees(graph);
            weighted_edge_sum(f, graph, |_, _| 1.0, |i| inv_sqrt[i])
        }
    })
}

/// Sum of `‖F_i − F_j‖²` over unordered non-adjacent pairs `i ≠ j`,
/// from the all-pairs identity `Σ_{i<j} ‖F_i − F_j‖² = N Σ‖F_i‖² − ‖Σ F_i‖²`.
pub fn pairnorm_non_edge_term(f: ArrayView2<f64>, graph: &Graph) -> Result<f64> {
    check_rows(f, graph)?;
    Ok(non_edge_difference_sum(f, graph, edge_difference_sum(f, graph)))
}

/// Per-edge keep indicators for DropEdge.
///
/// Edge `e` (index into [`Graph::edges`]) is kept iff `u_e < 1 − q`, where
/// `u_e` is the `e`-th 64-bit word of a ChaCha8 stream keyed by `seed`; the
/// draw depends only on `(seed, e)`.
pub fn dropedge_mask(num_edges: usize, q: f64, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_edges)
        .map(|e| {
            rng.set_word_pos(2 * e as u128);
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            u < 1.0 - q
        })
        .collect()
}

pub(crate) fn inv_sqrt_self_loop_degrees(graph: &Graph) -> Vec<f64> {
    (0..graph.num_nodes())
        .map(|i| 1.0 / (graph.self_loop_degree(i) as f64).sqrt())
        .collect()
}

fn check_rows(f: ArrayView2<f64>, graph: &Graph) -> Result<()> {
    if f.nrows() != graph.num_nodes() {
        return Err(Error::ShapeMismatch {
            context: "signal rows vs graph nodes",
            expected: (graph.num_nodes(), f.ncols()),
            found: f.dim(),
        });
    }
    Ok(())
}

fn row_distance_sq(f: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    f.row(i).iter().zip(f.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn edge_difference_sum(f: ArrayView2<f64>, graph: &Graph) -> f64 {
    graph.edges().iter().map(|&(i, j)| row_distance_sq(f, i, j)).sum()
}

fn non_edge_difference_sum(f: ArrayView2<f64>, graph: &Graph, edge_sum: f64) -> f64 {
    let n = graph.num_nodes() as f64;
    let sq_norms: f64 = f.iter().map(|v| v * v).sum();
    let col_sum = f.sum_axis(Axis(0));
    let all_pairs = n * sq_norms - col_sum.dot(&col_sum);
    all_pairs - edge_sum
}

/// `Σ_{(i,j)∈E} weight(i,j) ‖F_i s_i − F_j s_j‖²` where `s = scale(·)`.
fn weighted_edge_sum(
    f: ArrayView2<f64>,
    graph: &Graph,
    weight: impl Fn(usize, usize) -> f64,
    scale: impl Fn(usize) -> f64,
) -> f64 {
    // the closed-neighborhood double sum counts each edge twice and the
    // diagonal terms vanish, so ½ Σ_i w_i Σ_{j∈Ñ(i)} reduces to Σ_E (w_i + w_j)/2
    graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            let (si, sj) = (scale(i), scale(j));
            let d: f64 = f
                .row(i)
                .iter()
                .zip(f.row(j))
                .map(|(a, b)| (a * si - b * sj) * (a * si - b * sj))
                .sum();
            weight(i, j) * d
        })
        .sum()
}

/// Hessian-per-channel of `½ Σ_E w_ij ‖F_i s_i − F_j s_j‖²·2`, i.e. the
/// matrix whose product with `F` gives `Σ_{j∈N(i)} w_ij s_i (s_i F_i − s_j F_j)`.
fn weighted_laplacian(graph: &Graph, weight: impl Fn(usize, usize) -> f64, scale: Option<&[f64]>) -> CsrMatrix {
    let s = |i: usize| scale.map_or(1.0, |s| s[i]);
    let mut triplets = Vec::with_capacity(2 * graph.num_edges() + graph.num_nodes());
    for i in 0..graph.num_nodes() {
        let mut diag = 0.0;
        for &j in graph.neighbors(i) {
            let w = weight(i, j);
            diag += w * s(i) * s(i);
            triplets.push((i, j, -w * s(i) * s(j)));
        }
        triplets.push((i, i, diag));
    }
    CsrMatrix::from_triplets(graph.num_nodes(), graph.num_nodes(), &triplets).expect("indices in range")
}

fn masked_laplacian(graph: &Graph, mask: &[bool]) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(4 * graph.num_edges());
    for (&(i, j), _) in graph.edges().iter().zip(mask).filter(|(_, &keep)| keep) {
        triplets.push((i, i, 1.0));
        triplets.push((j, j, 1.0));
        triplets.push((i, j, -1.0));
        triplets.push((j, i, -1.0));
    }
    CsrMatrix::from_triplets(graph.num_nodes(), graph.num_nodes(), &triplets).expect("indices in range")
}
