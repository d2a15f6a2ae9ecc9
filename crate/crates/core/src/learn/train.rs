use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, grouped_accuracy_of, pearson, predictions, GroupedAccuracy};
use super::model::{build_forward, smoothness_scores, Architecture, Dropout, ModelInput, ModelParams};
use super::tape::Tape;
use crate::error::{Error, Result};
use crate::graph::local_label_smoothness;
use crate::io::{Dataset, SplitKind};
use crate::Signal;

/// Parameter update rule. Weight decay enters as an L2 term `wd·W` on the gradient
/// of every non-bias tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Gd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    /// Upper bound on epochs; `0` evaluates the initial parameters.
    pub epochs: usize,
    /// Stop after this many epochs without a validation improvement.
    pub patience: usize,
    pub seed: u64,
    pub hidden: usize,
    pub optimizer: Optimizer,
    /// Scale each feature row to sum to one before training.
    pub row_normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::Gcn,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            epochs: 1000,
            patience: 50,
            seed: 0,
            hidden: 64,
            optimizer: Optimizer::Gd,
            row_normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight decay must be nonnegative, got {}", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidParameter("hidden dimension must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Mean cross-entropy over the validation nodes.
    pub val_loss: f64,
    pub test_accuracy: f64,
    /// Test accuracy grouped by local label smoothness.
    pub grouped: GroupedAccuracy,
    /// Pearson `r` between learned `C_i` and local label smoothness (ADA-UGNN).
    pub correlation: Option<f64>,
    /// Epoch of the returned checkpoint; `0` is the initialization.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub loss_curve: Vec<f64>,
    pub val_accuracy_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: Metrics,
}

/// Features as the model sees them.
pub fn model_features(params: &ModelParams, data: &Dataset) -> Signal {
    if params.row_normalize {
        data.row_normalized_features()
    } else {
        data.features.clone()
    }
}

pub fn model_input(params: &ModelParams, data: &Dataset) -> Result<ModelInput> {
    ModelInput::new(model_features(params, data).view(), &data.graph)
}

struct OptimizerState {
    step: i32,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl OptimizerState {
    fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Array2<f64>> = params.tensors().iter().map(|(_, t)| Array2::zeros(t.dim())).collect();
        OptimizerState {
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    fn apply(&mut self, config: &TrainConfig, params: &mut ModelParams, grads: Vec<Array2<f64>>) {
        let decays = params.decays();
        let lr = config.learning_rate;
        self.step += 1;
        for (i, (t, mut g)) in params.tensors_mut().into_iter().zip(grads).enumerate() {
            if decays[i] && config.weight_decay > 0.0 {
                g.scaled_add(config.weight_decay, t);
            }
            match config.optimizer {
                Optimizer::Gd => t.scaled_add(-lr, &g),
                Optimizer::Momentum { beta } => {
                    let v = &mut self.first[i];
                    *v *= beta;
                    *v += &g;
                    t.scaled_add(-lr, v);
                }
                Optimizer::Adam { beta1, beta2, eps } => {
                    let (m, v) = (&mut self.first[i], &mut self.second[i]);
                    *m *= beta1;
                    m.scaled_add(1.0 - beta1, &g);
                    *v *= beta2;
                    v.scaled_add(1.0 - beta2, &(&g * &g));
                    let c1 = 1.0 - beta1.powi(self.step);
                    let c2 = 1.0 - beta2.powi(self.step);
                    ndarray::Zip::from(t).and(&*m).and(&*v).for_each(|t, &m, &v| {
                        *t -= lr * (m / c1) / ((v / c2).sqrt() + eps);
                    });
                }
            }
        }
    }
}

fn targets(data: &Dataset, kind: SplitKind) -> Arc<Vec<(usize, usize)>> {
    Arc::new(data.split.nodes(kind).iter().map(|&i| (i, data.labels[i] as usize)).collect())
}

/// Full-batch training with early stopping on validation accuracy.
///
/// Returns the parameters of the best validation epoch (ties broken by lower
/// validation loss, then by the earlier epoch) and their metrics. The run is
/// deterministic in `(config, data)`.
pub fn train(config: &TrainConfig, data: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    if data.num_classes == 0 {
        return Err(Error::InvalidDataset("no labeled nodes".into()));
    }
    let mut params = ModelParams::init(
        config.architecture,
        data.num_features(),
        config.hidden,
        data.num_classes,
        config.seed,
    )?;
    params.row_normalize = config.row_normalize;
    let input = model_input(&params, data)?;
    let train_targets = targets(data, SplitKind::Train);
    let val_targets = targets(data, SplitKind::Val);
    if train_targets.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if val_targets.is_empty() {
        return Err(Error::EmptySplit("val".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut state = OptimizerState::new(&params);

    let (mut best_acc, mut best_loss) = validation(&params, &input, data, &val_targets)?;
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut loss_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut epochs_run = 0;
    for epoch in 1..=config.epochs {
        epochs_run = epoch;
        let mut tape = Tape::new();
        let fwd = build_forward(
            &params,
            &input,
            &mut tape,
            Some(Dropout {
                rate: config.dropout,
                rng: &mut rng,
            }),
        )?;
        let loss = tape.softmax_cross_entropy(fwd.logits, &train_targets)?;
        let loss_value = tape.scalar(loss)?;
        if !loss_value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                loss: loss_value,
            });
        }
        let grads = tape.backward(loss)?;
        let grads: Vec<Array2<f64>> = fwd
            .params
            .iter()
            .zip(params.tensors())
            .map(|(&v, (_, t))| grads.get_or_zeros(v, t.dim()))
            .collect();
        state.apply(config, &mut params, grads);
        loss_curve.push(loss_value);

        let (acc, vloss) = validation(&params, &input, data, &val_targets)?;
        val_curve.push(acc);
        if acc > best_acc || (acc == best_acc && vloss < best_loss) {
            best_acc = acc;
            best_loss = vloss;
            best = params.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    let mut metrics = evaluate_all(&best, &input, data, best_loss)?;
    metrics.best_epoch = best_epoch;
    metrics.epochs_run = epochs_run;
    metrics.loss_curve = loss_curve;
    metrics.val_accuracy_curve = val_curve;
    Ok(TrainOutcome { params: best, metrics })
}

fn validation(
    params: &ModelParams,
    input: &ModelInput,
    data: &Dataset,
    val: &Arc<Vec<(usize, usize)>>,
) -> Result<(f64, f64)> {
    let mut tape = Tape::new();
    let fwd = build_forward(params, input, &mut tape, None)?;
    let loss = tape.softmax_cross_entropy(fwd.logits, val)?;
    let pred = predictions(tape.value(fwd.logits).view());
    let acc = accuracy(&pred, &data.labels, &data.split.val, "val")?;
    Ok((acc, tape.scalar(loss)?))
}

fn evaluate_all(params: &ModelParams, input: &ModelInput, data: &Dataset, val_loss: f64) -> Result<Metrics> {
    let logits = super::model::forward_model(params, input, None)?;
    let pred = predictions(logits.view());
    let split_acc = |kind: SplitKind, name: &str| accuracy(&pred, &data.labels, data.split.nodes(kind), name);
    let ls = local_label_smoothness(&data.graph, &data.labels);
    let grouped = grouped_accuracy_of(&pred, &data.labels, &ls.values, &data.split.test, 0.5);
    let correlation = match smoothness_scores(params, input)? {
        Some(c) => correlation_on_labeled(&c, &ls.values, &ls.isolated, &data.labels).ok(),
        None => None,
    };
    Ok(Metrics {
        train_accuracy: split_acc(SplitKind::Train, "train")?,
        val_accuracy: split_acc(SplitKind::Val, "val")?,
        val_loss,
        test_accuracy: split_acc(SplitKind::Test, "test")?,
        grouped,
        correlation,
        best_epoch: 0,
        epochs_run: 0,
        loss_curve: Vec::new(),
        val_accuracy_curve: Vec::new(),
    })
}

/// Pearson `r` of `C_i` against `ls(i)` over labeled, non-isolated nodes.
pub fn correlation_on_labeled(c: &[f64], ls: &[f64], isolated: &[bool], labels: &[i64]) -> Result<f64> {
    let keep: Vec<usize> = (0..c.len()).filter(|&i| labels[i] >= 0 && !isolated[i]).collect();
    let x: Vec<f64> = keep.iter().map(|&i| c[i]).collect();
    let y: Vec<f64> = keep.iter().map(|&i| ls[i]).collect();
    pearson(&x, &y)
}

/// Accuracy of `params` on one split of `data`.
pub fn evaluate(params: &ModelParams, data: &Dataset, split: SplitKind) -> Result<f64> {
    let input = model_input(params, data)?;
    let logits = super::model::forward_model(params, &input, None)?;
    let name = format!("{split:?}").to_lowercase();
    accuracy(&predictions(logits.view()), &data.labels, data.split.nodes(split), &name)
}

/// Test accuracy split at local label smoothness `threshold`.
pub fn grouped_accuracy(params: &ModelParams, data: &Dataset, threshold: f64) -> Result<GroupedAccuracy> {
    let input = model_input(params, data)?;
    let logits = super::model::forward_model(params, &input, None)?;
    let ls = local_label_smoothness(&data.graph, &data.labels);
    Ok(grouped_accuracy_of(
        &predictions(logits.view()),
        &data.labels,
        &ls.values,
        &data.split.test,
        threshold,
    ))
}

/// Learned `C_i` of an ADA-UGNN model on `data`.
pub fn learned_smoothness(params: &ModelParams, data: &Dataset) -> Result<Option<Vec<f64>>> {
    smoothness_scores(params, &model_input(params, data)?)
}
