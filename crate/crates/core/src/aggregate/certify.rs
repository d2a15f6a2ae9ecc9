//! Randomized numerical certification that each aggregator coincides with
//! the denoising solver it is claimed to implement.
//!
//! Each trial draws a connected random graph with `3..=max_nodes` nodes and
//! a random signal, then runs five independent comparisons:
//!
//! | id | aggregator                | denoising counterpart                          | tol     |
//! |----|---------------------------|------------------------------------------------|---------|
//! | T1 | PPNP                      | closed form `(I + cL)⁻¹ S`, `c = 1/α − 1`      | 1e-8    |
//! | T2 | APPNP, every iterate      | gradient descent, `b = 1/(2+2c)`               | 1e-12   |
//! | T3 | GCN                       | one gradient step, `b = 1/(2c)`                | 1e-12   |
//! | T4 | adaptive one-step update  | explicit gradient step with `b_i`; rows sum 1  | 1e-12   |
//! | T5 | degree-normalized adaptive| dense explicit-gradient iteration              | 1e-10   |

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{appnp_trajectory, gcn_aggregate, ppnp_aggregate};
use crate::denoise::{
    adaptive_gd_step, adaptive_step_coefficients, closed_form_denoise, degree_normalized_adaptive_denoise, gd_denoise,
    DenoiseConfig, StepSize,
};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph, LaplacianKind};
use crate::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TheoremId {
    pub const ALL: [TheoremId; 5] = [TheoremId::T1, TheoremId::T2, TheoremId::T3, TheoremId::T4, TheoremId::T5];

    pub fn tolerance(self) -> f64 {
        match self {
            TheoremId::T1 => 1e-8,
            TheoremId::T2 | TheoremId::T3 | TheoremId::T4 => 1e-12,
            TheoremId::T5 => 1e-10,
        }
    }

    fn description(self) -> &'static str {
        match self {
            TheoremId::T1 => "PPNP equals the closed-form denoiser with c = 1/alpha - 1",
            TheoremId::T2 => "APPNP iterates equal gradient descent with b = 1/(2+2c)",
            TheoremId::T3 => "GCN equals one gradient step with b = 1/(2c)",
            TheoremId::T4 => "adaptive one-step update equals an explicit gradient step with b_i",
            TheoremId::T5 => "degree-normalized adaptive iteration equals explicit gradient descent with b_i",
        }
    }
}

/// Deliberate defects for negative-control runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Use `b = 1/(4c)` instead of `1/(2c)` in the GCN comparison.
    WrongGcnStepsize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub seed: u64,
    pub trials: usize,
    pub max_nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            seed: 0,
            trials: 100,
            max_nodes: 8,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub theorem: TheoremId,
    pub description: String,
    pub tolerance: f64,
    pub max_abs_deviation: f64,
    /// Trials in which the check ran.
    pub trials: usize,
    pub skipped: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub status: String,
}

/// A failing comparison together with the instance that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub theorem: TheoremId,
    pub trial: usize,
    pub deviation: f64,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub signal: Vec<Vec<f64>>,
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub config: CertifyConfig,
    pub checks: Vec<TheoremCheck>,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl CertificationReport {
    pub fn check(&self, theorem: TheoremId) -> &TheoremCheck {
        self.checks.iter().find(|c| c.theorem == theorem).expect("all theorems are reported")
    }
}

struct Tally {
    max_dev: f64,
    trials: usize,
    skipped: usize,
}

/// Runs the five comparisons on `config.trials` random instances.
pub fn certify_theorems(config: &CertifyConfig) -> Result<CertificationReport> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if config.max_nodes < 3 {
        return Err(Error::InvalidParameter("max_nodes must be at least 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tallies: Vec<Tally> = TheoremId::ALL
        .iter()
        .map(|_| Tally {
            max_dev: 0.0,
            trials: 0,
            skipped: 0,
        })
        .collect();
    let mut violations = Vec::new();

    for trial in 0..config.trials {
        let graph = random_connected_graph(&mut rng, 3, config.max_nodes);
        let dim = rng.random_range(1..=3);
        let s = Signal::from_shape_fn((graph.num_nodes(), dim), |_| rng.random_range(-1.0..1.0));

        let mut record = |id: TheoremId, outcome: Option<(f64, serde_json::Value)>| {
            let tally = &mut tallies[id as usize];
            match outcome {
                None => tally.skipped += 1,
                Some((dev, params)) => {
                    tally.trials += 1;
                    // NaN deviations count as failures
                    if !(dev <= tally.max_dev) {
                        tally.max_dev = if dev.is_nan() { f64::INFINITY } else { dev };
                    }
                    if !(dev <= id.tolerance()) {
                        violations.push(Violation {
                            theorem: id,
                            trial,
                            deviation: dev,
                            num_nodes: graph.num_nodes(),
                            edges: graph.edges().to_vec(),
                            signal: s.rows().into_iter().map(|r| r.to_vec()).collect(),
                            parameters: params,
                        });
                    }
                }
            }
        };

        // T1
        let alpha: f64 = rng.random_range(0.05..1.0);
        let c = 1.0 / alpha - 1.0;
        let ppnp = ppnp_aggregate(s.view(), alpha, &graph)?;
        let closed = closed_form_denoise(s.view(), c, &graph, LaplacianKind::SymNormalizedSelfLoop)?;
        record(TheoremId::T1, Some((max_abs_diff(&ppnp, &closed), serde_json::json!({ "alpha": alpha, "c": c }))));

        // T2
        let alpha: f64 = rng.random_range(0.05..1.0);
        let c = 1.0 / alpha - 1.0;
        let k = rng.random_range(1..=10);
        let appnp = appnp_trajectory(s.view(), alpha, k, &graph)?;
        let mut dev: f64 = 0.0;
        for (step, h) in appnp.iter().enumerate() {
            let gd = gd_denoise(
                s.view(),
                c,
                &DenoiseConfig {
                    steps: step + 1,
                    stepsize: StepSize::Theorem,
                },
                &graph,
            )?;
            dev = dev.max(max_abs_diff(h, &gd.signal));
        }
        record(TheoremId::T2, Some((dev, serde_json::json!({ "alpha": alpha, "c": c, "k": k }))));

        // T3: every tenth trial draws the excluded c = 0 case
        let c: f64 = if trial % 10 == 9 { 0.0 } else { rng.random_range(0.1..10.0) };
        if c == 0.0 {
            record(TheoremId::T3, None);
        } else {
            let b = match config.fault {
                Some(Fault::WrongGcnStepsize) => 1.0 / (4.0 * c),
                None => 1.0 / (2.0 * c),
            };
            let gcn = gcn_aggregate(s.view(), &graph)?;
            let step = gd_denoise(
                s.view(),
                c,
                &DenoiseConfig {
                    steps: 1,
                    stepsize: StepSize::Fixed { b },
                },
                &graph,
            )?;
            record(TheoremId::T3, Some((max_abs_diff(&gcn, &step.signal), serde_json::json!({ "c": c, "b": b }))));
        }

        // T4
        let weights: Vec<f64> = (0..graph.num_nodes()).map(|_| rng.random_range(0.0..3.0)).collect();
        let coeffs = adaptive_step_coefficients(&weights, &graph)?;
        let row_dev = coeffs.row_sums().iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        let step = adaptive_gd_step(s.view(), &weights, &graph)?;
        let oracle = explicit_adaptive_step(s.view(), &weights, &graph);
        let dev = row_dev.max(max_abs_diff(&step, &oracle));
        record(TheoremId::T4, Some((dev, serde_json::json!({ "c": weights }))));

        // T5
        let weights: Vec<f64> = (0..graph.num_nodes()).map(|_| rng.random_range(0.0..5.0)).collect();
        let k = rng.random_range(1..=6);
        let oracle = explicit_degree_normalized_descent(s.view(), &weights, k, &graph);
        let mut dev: f64 = 0.0;
        for (step, expected) in oracle.iter().enumerate() {
            let got = degree_normalized_adaptive_denoise(s.view(), &weights, step + 1, &graph)?;
            dev = dev.max(max_abs_diff(&got.signal, expected));
        }
        record(TheoremId::T5, Some((dev, serde_json::json!({ "c": weights, "k": k }))));
    }

    let checks: Vec<TheoremCheck> = TheoremId::ALL
        .iter()
        .zip(&tallies)
        .map(|(&id, t)| {
            let failed = violations.iter().any(|v| v.theorem == id);
            TheoremCheck {
                theorem: id,
                description: id.description().to_string(),
                tolerance: id.tolerance(),
                max_abs_deviation: t.max_dev,
                trials: t.trials,
                skipped: t.skipped,
                note: (id == TheoremId::T3 && t.skipped > 0)
                    .then(|| format!("{} trial(s) with c = 0 skipped: b = 1/(2c) is undefined", t.skipped)),
                status: if failed { "fail" } else { "pass" }.to_string(),
            }
        })
        .collect();
    let passed = violations.is_empty();
    Ok(CertificationReport {
        config: config.clone(),
        checks,
        violations,
        passed,
    })
}

/// Erdős–Rényi graph with `min..=max` nodes, redrawn until connected.
pub(crate) fn random_connected_graph(rng: &mut ChaCha8Rng, min_nodes: usize, max_nodes: usize) -> Graph {
    loop {
        let n = rng.random_range(min_nodes..=max_nodes);
        let p: f64 = rng.random_range(0.3..0.8);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).expect("valid endpoints");
        if g.is_connected() {
            return g;
        }
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, |m, d| if d > m || d.is_nan() { d } else { m })
}

/// `S_i − b_i Σ_{j∈Ñ(i)} (c_i + c_j)(S_i − S_j)`, straight from the gradient.
fn explicit_adaptive_step(s: ArrayView2<f64>, c: &[f64], graph: &Graph) -> Signal {
    let mut out = s.to_owned();
    for i in 0..graph.num_nodes() {
        let hood = graph.closed_neighborhood(i);
        let b = 1.0 / hood.iter().map(|&j| c[i] + c[j]).sum::<f64>();
        let mut grad = ndarray::Array1::<f64>::zeros(s.ncols());
        for &j in &hood {
            grad += &((&s.row(i) - &s.row(j)) * (c[i] + c[j]));
        }
        out.row_mut(i).scaled_add(-b, &grad);
    }
    out
}

/// Dense gradient descent on `‖F − S‖² + ½ Σ_i C_i Σ_{j∈Ñ(i)} ‖F_i/√d_i − F_j/√d_j‖²`
/// with per-node stepsizes; returns every iterate.
fn explicit_degree_normalized_descent(s: ArrayView2<f64>, c: &[f64], steps: usize, graph: &Graph) -> Vec<Signal> {
    let n = graph.num_nodes();
    let a_hat = normalized_adjacency(graph).to_dense().mapv(|v| if v != 0.0 { 1.0 } else { 0.0 });
    let d: Vec<f64> = (0..n).map(|i| a_hat.row(i).sum()).collect();
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let total: f64 = (0..n).filter(|&j| a_hat[[i, j]] != 0.0).map(|j| (c[i] + c[j]) / d[i]).sum();
            1.0 / (2.0 + total)
        })
        .collect();
    let mut f = s.to_owned();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut grad = (&f - &s) * 2.0;
        for i in 0..n {
            for j in 0..n {
                if a_hat[[i, j]] == 0.0 {
                    continue;
                }
                let w = (c[i] + c[j]) / d[i].sqrt();
                let diff = &f.row(i) / d[i].sqrt() - &f.row(j) / d[j].sqrt();
                grad.row_mut(i).scaled_add(w, &diff);
            }
        }
        for i in 0..n {
            let g = grad.row(i).to_owned();
            f.row_mut(i).scaled_add(-b[i], &g);
        }
        out.push(f.clone());
    }
    out
}
