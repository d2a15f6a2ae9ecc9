//! Graph signal denoising: `argmin_F ‖F − S‖² + r(C, F, G)`.
//!
//! [`objective`] evaluates the problem for any [`RegularizerSpec`]. The
//! solvers cover the closed form for Laplacian regularization, plain and
//! theorem-stepsize gradient descent, the one-step adaptive update, the
//! degree-normalized adaptive iteration used by the adaptive-smoothness
//! model, and generic gradient descent for the remaining differentiable
//! regularizers.

pub mod cg;
mod regularizer;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use regularizer::{dropedge_mask, laplacian_edge_form, pairnorm_non_edge_term, RegularizerSpec};

use crate::error::{Error, Result};
use crate::graph::{laplacian, normalized_adjacency, CsrMatrix, Graph, LaplacianKind};
use crate::Signal;

/// Stepsize rule for the gradient-descent solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepSize {
    Fixed { b: f64 },
    /// `b = 1 / (2 + 2c)`, which turns each step into an APPNP update.
    Theorem,
    /// Per-node stepsizes; only meaningful for the adaptive solvers.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub steps: usize,
    pub stepsize: StepSize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseResult {
    pub signal: Signal,
    /// Objective at `F⁽⁰⁾ = S` followed by the objective after each step.
    pub objective_trace: Vec<f64>,
}

/// `‖F − S‖²_F + r(C, F, G)`.
pub fn objective(f: ArrayView2<f64>, s: ArrayView2<f64>, reg: &RegularizerSpec, graph: &Graph) -> Result<f64> {
    if f.dim() != s.dim() {
        return Err(Error::ShapeMismatch {
            context: "objective F vs S",
            expected: s.dim(),
            found: f.dim(),
        });
    }
    reg.validate(graph)?;
    let fidelity: f64 = f.iter().zip(s.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(fidelity + reg.value(f, graph)?)
}

/// `F* = (I + cL)⁻¹ S`, solved column-wise by conjugate gradients.
pub fn closed_form_denoise(s: ArrayView2<f64>, c: f64, graph: &Graph, kind: LaplacianKind) -> Result<Signal> {
    check_signal(s, graph)?;
    check_c(c)?;
    if c == 0.0 {
        return Ok(s.to_owned());
    }
    cg::solve_shifted(&laplacian(graph, kind), 1.0, c, s)
}

/// Gradient descent on Problem 1 with `L = I − Ã`, starting from `F⁽⁰⁾ = S`.
///
/// With [`StepSize::Theorem`] each step is exactly
/// `F⁽ᵏ⁾ = S/(1+c) + c/(1+c) · Ã F⁽ᵏ⁻¹⁾`.
pub fn gd_denoise(s: ArrayView2<f64>, c: f64, config: &DenoiseConfig, graph: &Graph) -> Result<DenoiseResult> {
    check_signal(s, graph)?;
    check_c(c)?;
    check_steps(config.steps)?;
    let a_norm = normalized_adjacency(graph);
    let reg = RegularizerSpec::GlobalLaplacian {
        c,
        kind: LaplacianKind::SymNormalizedSelfLoop,
    };
    let step: Box<dyn Fn(&Signal) -> Result<Signal>> = match config.stepsize {
        StepSize::Theorem => {
            let (keep, mix) = (1.0 / (1.0 + c), c / (1.0 + c));
            Box::new(move |f| Ok(&s * keep + a_norm.spmm(f.view())? * mix))
        }
        StepSize::Fixed { b } => {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("stepsize must be positive, got {b}")));
            }
            Box::new(move |f| {
                // ∂/∂F = 2(F − S) + 2c(F − ÃF)
                let grad = (f - &s) * 2.0 + (f - &a_norm.spmm(f.view())?) * (2.0 * c);
                Ok(f - &(grad * b))
            })
        }
        StepSize::Adaptive => {
            return Err(Error::InvalidParameter(
                "adaptive stepsizes apply to the node-adaptive solvers only".into(),
            ))
        }
    };
    iterate(s, config.steps, &reg, graph, step)
}

/// Per-node coefficient matrix `P_ij = b_i (c_i + c_j)` over `j ∈ Ñ(i)`,
/// with `b_i = 1 / Σ_{j∈Ñ(i)} (c_i + c_j)`. Each row sums to one.
pub fn adaptive_step_coefficients(c: &[f64], graph: &Graph) -> Result<CsrMatrix> {
    check_node_weights(c, graph)?;
    let n = graph.num_nodes();
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for i in 0..n {
        let hood = graph.closed_neighborhood(i);
        let total: f64 = hood.iter().map(|&j| c[i] + c[j]).sum();
        if total <= 0.0 {
            return Err(Error::DegenerateNode { node: i });
        }
        let b = 1.0 / total;
        for j in hood {
            cols.push(j);
            vals.push(b * (c[i] + c[j]));
        }
        row_offsets.push(cols.len());
    }
    CsrMatrix::from_parts(n, n, row_offsets, cols, vals)
}

/// One gradient step from `S` on the node-adaptive problem with stepsize
/// `b_i`: `F_i = Σ_{j∈Ñ(i)} b_i (c_i + c_j) S_j`.
pub fn adaptive_gd_step(s: ArrayView2<f64>, c: &[f64], graph: &Graph) -> Result<Signal> {
    check_signal(s, graph)?;
    adaptive_step_coefficients(c, graph)?.spmm(s)
}

/// Kernel of the degree-normalized adaptive iteration.
///
/// `anchor[i] = 2 b_i` and `propagation[i, j] = b_i (C_i + C_j) / √(d_i d_j)`
/// over `j ∈ Ñ(i)`, where `b_i = 1 / (2 + Σ_{j∈Ñ(i)} (C_i + C_j) / d_i)` and
/// `d` is the self-loop degree. One step is `F ← anchor ⊙ S + propagation · F`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveKernel {
    pub stepsizes: Vec<f64>,
    pub anchor: Vec<f64>,
    pub propagation: CsrMatrix,
}

impl AdaptiveKernel {
    pub fn new(c: &[f64], graph: &Graph) -> Result<Self> {
        check_node_weights(c, graph)?;
        let n = graph.num_nodes();
        let deg: Vec<f64> = graph.self_loop_degrees().into_iter().map(|d| d as f64).collect();
        let mut stepsizes = Vec::with_capacity(n);
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            let hood = graph.closed_neighborhood(i);
            let b = 1.0 / (2.0 + hood.iter().map(|&j| (c[i] + c[j]) / deg[i]).sum::<f64>());
            stepsizes.push(b);
            for j in hood {
                cols.push(j);
                vals.push(b * (c[i] + c[j]) / (deg[i] * deg[j]).sqrt());
            }
            row_offsets.push(cols.len());
        }
        let anchor = stepsizes.iter().map(|b| 2.0 * b).collect();
        Ok(AdaptiveKernel {
            stepsizes,
            anchor,
            propagation: CsrMatrix::from_parts(n, n, row_offsets, cols, vals)?,
        })
    }

    pub fn step(&self, s: ArrayView2<f64>, f: ArrayView2<f64>) -> Result<Signal> {
        let mut out = self.propagation.spmm(f)?;
        for (mut row, (&a, s_row)) in out.rows_mut().into_iter().zip(self.anchor.iter().zip(s.rows())) {
            row.scaled_add(a, &s_row);
        }
        Ok(out)
    }
}

/// Gradient descent with per-node stepsizes on the degree-normalized
/// adaptive problem; `F⁽⁰⁾ = S`.
pub fn degree_normalized_adaptive_denoise(
    s: ArrayView2<f64>,
    c: &[f64],
    steps: usize,
    graph: &Graph,
) -> Result<DenoiseResult> {
    check_signal(s, graph)?;
    check_steps(steps)?;
    let kernel = AdaptiveKernel::new(c, graph)?;
    let reg = RegularizerSpec::DegreeNormalizedAdaptive { c: c.to_vec() };
    iterate(s, steps, &reg, graph, |f| kernel.step(s, f.view()))
}

/// Plain gradient descent `F ← F − b (2(F − S) + ∇r(F))` from `F⁽⁰⁾ = S`.
pub fn generic_gd_denoise(
    s: ArrayView2<f64>,
    reg: &RegularizerSpec,
    steps: usize,
    stepsize: f64,
    graph: &Graph,
) -> Result<DenoiseResult> {
    check_signal(s, graph)?;
    check_steps(steps)?;
    reg.validate(graph)?;
    if let RegularizerSpec::TrendFilter { .. } = reg {
        return Err(Error::UnsupportedSolver("trend-filter"));
    }
    if !(stepsize > 0.0 && stepsize.is_finite()) {
        return Err(Error::InvalidParameter(format!("stepsize must be positive, got {stepsize}")));
    }
    iterate(s, steps, reg, graph, |f| {
        let grad = (f - &s) * 2.0 + reg.gradient(f.view(), graph)?;
        Ok(f - &(grad * stepsize))
    })
}

fn iterate(
    s: ArrayView2<f64>,
    steps: usize,
    reg: &RegularizerSpec,
    graph: &Graph,
    step: impl Fn(&Signal) -> Result<Signal>,
) -> Result<DenoiseResult> {
    let mut f: Array2<f64> = s.to_owned();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(objective(f.view(), s, reg, graph)?);
    for _ in 0..steps {
        f = step(&f)?;
        trace.push(objective(f.view(), s, reg, graph)?);
    }
    Ok(DenoiseResult {
        signal: f,
        objective_trace: trace,
    })
}

fn check_signal(s: ArrayView2<f64>, graph: &Graph) -> Result<()> {
    if s.nrows() != graph.num_nodes() {
        return Err(Error::ShapeMismatch {
            context: "signal rows vs graph nodes",
            expected: (graph.num_nodes(), s.ncols()),
            found: s.dim(),
        });
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("c must be finite and nonnegative, got {c}")))
    }
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        Err(Error::InvalidParameter("number of steps must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_node_weights(c: &[f64], graph: &Graph) -> Result<()> {
    if c.len() != graph.num_nodes() {
        return Err(Error::ShapeMismatch {
            context: "per-node smoothness weights",
            expected: (graph.num_nodes(), 1),
            found: (c.len(), 1),
        });
    }
    if let Some(bad) = c.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidParameter(format!("smoothness weights must be nonnegative, got {bad}")));
    }
    Ok(())
}
