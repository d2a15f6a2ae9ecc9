use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Neighborhoods, SparseOperand, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{adjacency_with_self_loops, normalized_adjacency, CsrMatrix, Graph};
use crate::Signal;

/// Model family and its propagation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Architecture {
    /// Two graph-convolution layers.
    Gcn,
    /// Two single-head attention layers.
    Gat { leaky_slope: f64 },
    /// Two-layer MLP followed by `k` personalized-PageRank steps.
    Appnp { alpha: f64, k: usize },
    /// Two-layer MLP followed by `k` adaptive-smoothness steps with `C_i < s`.
    AdaUgnn { s: f64, k: usize },
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Gcn => "gcn",
            Architecture::Gat { .. } => "gat",
            Architecture::Appnp { .. } => "appnp",
            Architecture::AdaUgnn { .. } => "ada-ugnn",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Architecture::Gcn => Ok(()),
            Architecture::Gat { leaky_slope } if leaky_slope.is_finite() => Ok(()),
            Architecture::Gat { leaky_slope } => Err(Error::InvalidParameter(format!("leaky slope {leaky_slope}"))),
            Architecture::Appnp { alpha, k } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
                }
                check_k(k)
            }
            Architecture::AdaUgnn { s, k } => {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
                }
                check_k(k)
            }
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("propagation steps K must be at least 1".into()));
    }
    Ok(())
}

/// Affine map `x W + b`; `bias` is a `1 x out` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array2<f64>,
}

impl Dense {
    fn uniform(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: uniform(rng, (fan_in, fan_out), fan_in),
            bias: Array2::zeros((1, fan_out)),
        }
    }
}

/// Attention vectors of one GAT layer, each `out x 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionVectors {
    pub a1: Array2<f64>,
    pub a2: Array2<f64>,
}

/// Learnable parameters of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub architecture: Architecture,
    /// Two layers: input to hidden, hidden to classes.
    pub layers: Vec<Dense>,
    /// One entry per layer for GAT, empty otherwise.
    pub attention: Vec<AttentionVectors>,
    /// Maps channel-wise logit variance to the smoothness score; ADA-UGNN only.
    pub head: Option<Dense>,
    /// Whether inputs are row-normalized before the first layer.
    #[serde(default)]
    pub row_normalize: bool,
}

fn uniform(rng: &mut ChaCha8Rng, shape: (usize, usize), fan_in: usize) -> Array2<f64> {
    let r = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn(shape, || rng.random_range(-r..r))
}

impl ModelParams {
    /// Seeded uniform initialization in `±1/sqrt(fan_in)`; biases start at zero.
    pub fn init(architecture: Architecture, input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Result<Self> {
        architecture.validate()?;
        if input_dim == 0 || hidden == 0 || classes == 0 {
            return Err(Error::InvalidParameter(format!(
                "layer sizes must be positive: input {input_dim}, hidden {hidden}, classes {classes}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vec![Dense::uniform(&mut rng, input_dim, hidden), Dense::uniform(&mut rng, hidden, classes)];
        let attention = match architecture {
            Architecture::Gat { .. } => [hidden, classes]
                .into_iter()
                .map(|d| AttentionVectors {
                    a1: uniform(&mut rng, (d, 1), d),
                    a2: uniform(&mut rng, (d, 1), d),
                })
                .collect(),
            _ => Vec::new(),
        };
        let head = matches!(architecture, Architecture::AdaUgnn { .. }).then(|| Dense::uniform(&mut rng, classes, 1));
        Ok(ModelParams {
            architecture,
            layers,
            attention,
            head,
            row_normalize: false,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[1].weight.ncols()
    }

    /// Every tensor with a stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = Vec::new();
        for (l, d) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.weight"), &d.weight));
            out.push((format!("layer{l}.bias"), &d.bias));
        }
        for (l, a) in self.attention.iter().enumerate() {
            out.push((format!("attention{l}.a1"), &a.a1));
            out.push((format!("attention{l}.a2"), &a.a2));
        }
        if let Some(h) = &self.head {
            out.push(("head.weight".into(), &h.weight));
            out.push(("head.bias".into(), &h.bias));
        }
        out
    }

    /// Same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = Vec::new();
        for d in &mut self.layers {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        for a in &mut self.attention {
            out.push(&mut a.a1);
            out.push(&mut a.a2);
        }
        if let Some(h) = &mut self.head {
            out.push(&mut h.weight);
            out.push(&mut h.bias);
        }
        out
    }

    /// Whether a tensor takes weight decay; biases do not.
    pub fn decays(&self) -> Vec<bool> {
        self.tensors().iter().map(|(name, _)| !name.ends_with("bias")).collect()
    }
}

/// Graph operators and features shared by every forward pass on one graph.
#[derive(Debug, Clone)]
pub struct ModelInput {
    num_nodes: usize,
    features: CsrMatrix,
    features_op: SparseOperand,
    normalized: SparseOperand,
    row_normalized: SparseOperand,
    hoods: Arc<Neighborhoods>,
    sources: Arc<Vec<usize>>,
    targets: Arc<Vec<usize>>,
}

impl ModelInput {
    pub fn new(features: ArrayView2<f64>, graph: &Graph) -> Result<Self> {
        if features.nrows() != graph.num_nodes() {
            return Err(Error::ShapeMismatch {
                context: "feature rows vs graph nodes",
                expected: (graph.num_nodes(), features.ncols()),
                found: features.dim(),
            });
        }
        let d = graph.self_loop_degrees();
        let row_normalized = adjacency_with_self_loops(graph).map_values(|i, _, v| v / d[i] as f64);
        let hoods = Neighborhoods::closed(graph);
        let features = CsrMatrix::from_dense(features);
        Ok(ModelInput {
            num_nodes: graph.num_nodes(),
            features_op: SparseOperand::new(features.clone()),
            features,
            normalized: SparseOperand::symmetric(normalized_adjacency(graph)),
            row_normalized: SparseOperand::new(row_normalized),
            sources: Arc::new(hoods.sources.clone()),
            targets: Arc::new(hoods.targets.clone()),
            hoods: Arc::new(hoods),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }
}

/// Dropout applied in training mode: rate and the generator drawing masks.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut ChaCha8Rng,
}

impl Dropout<'_> {
    fn keep_scale(&self) -> f64 {
        1.0 / (1.0 - self.rate)
    }

    fn mask(&mut self, shape: (usize, usize)) -> Array2<f64> {
        let (rate, scale) = (self.rate, self.keep_scale());
        Array2::from_shape_simple_fn(shape, || if self.rng.random::<f64>() < rate { 0.0 } else { scale })
    }
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Var,
    /// Leaves in [`ModelParams::tensors`] order.
    pub params: Vec<Var>,
    /// `N x 1` smoothness factors for ADA-UGNN.
    pub factors: Option<Var>,
}

/// Records a forward pass on `tape`. Dropout is active iff `dropout` is given
/// with a positive rate.
pub fn build_forward(
    params: &ModelParams,
    input: &ModelInput,
    tape: &mut Tape,
    mut dropout: Option<Dropout<'_>>,
) -> Result<Forward> {
    if params.input_dim() != input.num_features() {
        return Err(Error::ShapeMismatch {
            context: "model input dimension vs features",
            expected: (input.num_nodes(), params.input_dim()),
            found: (input.num_nodes(), input.num_features()),
        });
    }
    if let Some(d) = &dropout {
        if !(0.0..1.0).contains(&d.rate) {
            return Err(Error::InvalidParameter(format!("dropout must lie in [0, 1), got {}", d.rate)));
        }
    }
    if dropout.as_ref().is_some_and(|d| d.rate == 0.0) {
        dropout = None;
    }
    let vars: Vec<Var> = params.tensors().into_iter().map(|(_, t)| tape.leaf(t.clone())).collect();
    let (w0, b0, w1, b1) = (vars[0], vars[1], vars[2], vars[3]);

    // first layer: sparse features times W0, dropout on the feature values
    let features = match dropout.as_mut() {
        Some(d) => {
            let scale = d.keep_scale();
            let rate = d.rate;
            let dropped = input
                .features
                .map_values(|_, _, v| if d.rng.random::<f64>() < rate { 0.0 } else { v * scale });
            SparseOperand::new(dropped)
        }
        None => input.features_op.clone(),
    };
    let xw = tape.spmm(&features, w0)?;
    let mut factors = None;
    let logits = match params.architecture {
        Architecture::Gcn => {
            let h = tape.spmm(&input.normalized, xw)?;
            let h = tape.add(h, b0)?;
            let h = tape.relu(h);
            let h = apply_dropout(tape, h, dropout.as_mut())?;
            let hw = tape.matmul(h, w1)?;
            let out = tape.spmm(&input.normalized, hw)?;
            tape.add(out, b1)?
        }
        Architecture::Gat { leaky_slope } => {
            let h = gat_layer(tape, input, xw, vars[4], vars[5], leaky_slope)?;
            let h = tape.add(h, b0)?;
            let h = tape.relu(h);
            let h = apply_dropout(tape, h, dropout.as_mut())?;
            let hw = tape.matmul(h, w1)?;
            let out = gat_layer(tape, input, hw, vars[6], vars[7], leaky_slope)?;
            tape.add(out, b1)?
        }
        Architecture::Appnp { alpha, k } => {
            let z = mlp_tail(tape, xw, b0, w1, b1, dropout.as_mut())?;
            appnp_propagation(tape, input, z, alpha, k)?
        }
        Architecture::AdaUgnn { s, k } => {
            let z = mlp_tail(tape, xw, b0, w1, b1, dropout.as_mut())?;
            let (h, c) = ada_propagation(tape, input, z, vars[4], vars[5], s, k)?;
            factors = Some(c);
            h
        }
    };
    Ok(Forward {
        logits,
        params: vars,
        factors,
    })
}

fn mlp_tail(tape: &mut Tape, xw: Var, b0: Var, w1: Var, b1: Var, dropout: Option<&mut Dropout<'_>>) -> Result<Var> {
    let h = tape.add(xw, b0)?;
    let h = tape.relu(h);
    let h = apply_dropout(tape, h, dropout)?;
    let z = tape.matmul(h, w1)?;
    tape.add(z, b1)
}

fn apply_dropout(tape: &mut Tape, x: Var, dropout: Option<&mut Dropout<'_>>) -> Result<Var> {
    match dropout {
        Some(d) => {
            let mask = tape.constant(d.mask(tape.value(x).dim()));
            tape.mul(x, mask)
        }
        None => Ok(x),
    }
}

/// Single-head attention aggregation of `xp` over closed neighborhoods.
pub fn gat_layer(tape: &mut Tape, input: &ModelInput, xp: Var, a1: Var, a2: Var, leaky_slope: f64) -> Result<Var> {
    let s1 = tape.matmul(xp, a1)?;
    let s2 = tape.matmul(xp, a2)?;
    let from = tape.gather_rows(s1, &input.sources)?;
    let to = tape.gather_rows(s2, &input.targets)?;
    let e = tape.add(from, to)?;
    let e = tape.leaky_relu(e, leaky_slope);
    let alpha = tape.neighbor_softmax(e, &input.hoods)?;
    let messages = tape.gather_rows(xp, &input.targets)?;
    let weighted = tape.mul(messages, alpha)?;
    tape.scatter_add_rows(weighted, &input.sources, input.num_nodes)
}

/// `K` steps of `H ← (1-α) Ã H + α Z` from `H = Z`.
pub fn appnp_propagation(tape: &mut Tape, input: &ModelInput, z: Var, alpha: f64, k: usize) -> Result<Var> {
    check_k(k)?;
    let anchor = tape.scale(z, alpha);
    let mut h = z;
    for _ in 0..k {
        let p = tape.spmm(&input.normalized, h)?;
        let p = tape.scale(p, 1.0 - alpha);
        h = tape.add(p, anchor)?;
    }
    Ok(h)
}

/// Adaptive-smoothness propagation of `xp`, returning `(H, C)`.
///
/// `C = s·σ(var(xp) w + b)` is computed once. With
/// `b_i = 1 / (2 + C_i + (D̂⁻¹ Â C)_i)` each step is
/// `H ← 2b ⊙ X' + b ⊙ (C ⊙ Ã H + Ã (C ⊙ H))`.
pub fn ada_propagation(
    tape: &mut Tape,
    input: &ModelInput,
    xp: Var,
    head_weight: Var,
    head_bias: Var,
    s: f64,
    k: usize,
) -> Result<(Var, Var)> {
    check_k(k)?;
    let var = tape.neighbor_variance(xp, &input.hoods)?;
    let score = tape.matmul(var, head_weight)?;
    let score = tape.add(score, head_bias)?;
    let c = tape.sigmoid(score);
    let c = tape.scale(c, s);
    let mean_c = tape.spmm(&input.row_normalized, c)?;
    let denom = tape.add(c, mean_c)?;
    let denom = tape.add_scalar(denom, 2.0);
    let b = tape.recip(denom);
    let two_b = tape.scale(b, 2.0);
    let anchor = tape.mul(two_b, xp)?;
    let mut h = xp;
    for _ in 0..k {
        let ah = tape.spmm(&input.normalized, h)?;
        let left = tape.mul(c, ah)?;
        let ch = tape.mul(c, h)?;
        let right = tape.spmm(&input.normalized, ch)?;
        let inner = tape.add(left, right)?;
        let inner = tape.mul(b, inner)?;
        h = tape.add(anchor, inner)?;
    }
    Ok((h, c))
}

/// Logits of a forward pass. Training mode draws dropout masks from `seed`.
pub fn forward_model(params: &ModelParams, input: &ModelInput, train_mode: Option<(f64, u64)>) -> Result<Signal> {
    let mut tape = Tape::new();
    let fwd = match train_mode {
        Some((rate, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            build_forward(params, input, &mut tape, Some(Dropout { rate, rng: &mut rng }))?
        }
        None => build_forward(params, input, &mut tape, None)?,
    };
    Ok(tape.value(fwd.logits).clone())
}

/// Learned per-node smoothness factors `C_i` (evaluation mode); `None`
/// unless the model is ADA-UGNN.
pub fn smoothness_scores(params: &ModelParams, input: &ModelInput) -> Result<Option<Vec<f64>>> {
    let mut tape = Tape::new();
    let fwd = build_forward(params, input, &mut tape, None)?;
    Ok(fwd.factors.map(|c| tape.value(c).iter().copied().collect()))
}
