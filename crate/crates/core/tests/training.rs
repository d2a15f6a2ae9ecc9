use std::sync::Arc;

use graphden::io::synthetic::{two_cluster_toy, PlantedPartition};
use graphden::io::{Dataset, SplitKind};
use graphden::learn::{
    build_forward, evaluate, forward_model, load_checkpoint, model_input, save_checkpoint, train, Architecture,
    ModelParams, Optimizer, Tape, TrainConfig,
};
use ndarray::Array2;

fn small_dataset() -> Dataset {
    PlantedPartition {
        classes: 3,
        nodes_per_class: 20,
        p_in: 0.3,
        p_out: 0.02,
        vocabulary: 30,
        words_per_node: 5,
        topic_prob: 0.6,
        train_per_class: 3,
        num_val: 15,
        num_test: 30,
        seed: 4,
    }
    .generate()
    .unwrap()
}

fn architectures() -> [Architecture; 4] {
    [
        Architecture::Gcn,
        Architecture::Gat { leaky_slope: 0.2 },
        Architecture::Appnp { alpha: 0.1, k: 5 },
        Architecture::AdaUgnn { s: 9.0, k: 5 },
    ]
}

fn config(architecture: Architecture, weight_decay: f64) -> TrainConfig {
    TrainConfig {
        architecture,
        learning_rate: 0.2,
        weight_decay,
        dropout: 0.0,
        epochs: 15,
        patience: 1000,
        seed: 3,
        hidden: 8,
        optimizer: Optimizer::Gd,
        row_normalize: true,
    }
}

/// Plain full-batch gradient descent on `CE + wd/2 ·‖W‖²` over non-bias tensors.
fn manual_gd(config: &TrainConfig, data: &Dataset) -> Vec<f64> {
    let mut params = ModelParams::init(
        config.architecture,
        data.num_features(),
        config.hidden,
        data.num_classes,
        config.seed,
    )
    .unwrap();
    params.row_normalize = config.row_normalize;
    let input = model_input(&params, data).unwrap();
    let targets = Arc::new(data.split.train.iter().map(|&i| (i, data.labels[i] as usize)).collect::<Vec<_>>());
    let mut losses = Vec::new();
    for _ in 0..config.epochs {
        let mut tape = Tape::new();
        let fwd = build_forward(&params, &input, &mut tape, None).unwrap();
        let loss = tape.softmax_cross_entropy(fwd.logits, &targets).unwrap();
        losses.push(tape.scalar(loss).unwrap());
        let grads = tape.backward(loss).unwrap();
        let decays = params.decays();
        let grads: Vec<Array2<f64>> = fwd
            .params
            .iter()
            .zip(params.tensors())
            .map(|(&v, (_, t))| grads.get_or_zeros(v, t.dim()))
            .collect();
        for (i, (t, g)) in params.tensors_mut().into_iter().zip(grads).enumerate() {
            let mut step = g;
            if decays[i] {
                step.scaled_add(config.weight_decay, t);
            }
            t.scaled_add(-config.learning_rate, &step);
        }
    }
    losses
}

#[test]
fn zero_weight_decay_is_plain_gradient_descent() {
    let data = small_dataset();
    for arch in architectures() {
        let cfg = config(arch, 0.0);
        let out = train(&cfg, &data).unwrap();
        assert_eq!(out.metrics.loss_curve, manual_gd(&cfg, &data), "{}", arch.name());
    }
}

#[test]
fn weight_decay_matches_l2_penalized_descent() {
    let data = small_dataset();
    for arch in architectures() {
        let cfg = config(arch, 5e-2);
        let out = train(&cfg, &data).unwrap();
        let manual = manual_gd(&cfg, &data);
        for (a, b) in out.metrics.loss_curve.iter().zip(&manual) {
            assert!((a - b).abs() < 1e-12, "{}: {a} vs {b}", arch.name());
        }
    }
}

#[test]
fn training_is_deterministic_for_every_model() {
    let data = small_dataset();
    for arch in architectures() {
        for optimizer in [Optimizer::Gd, Optimizer::Momentum { beta: 0.9 }, Optimizer::adam()] {
            let cfg = TrainConfig {
                dropout: 0.5,
                optimizer,
                learning_rate: 0.01,
                epochs: 20,
                ..config(arch, 5e-4)
            };
            let a = train(&cfg, &data).unwrap();
            let b = train(&cfg, &data).unwrap();
            assert_eq!(a.params, b.params);
            assert_eq!(a.metrics, b.metrics);
            let other = train(&TrainConfig { seed: 4, ..cfg }, &data).unwrap();
            assert_ne!(a.metrics.loss_curve, other.metrics.loss_curve);
        }
    }
}

#[test]
fn checkpoint_reproduces_predictions() {
    let data = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    for arch in architectures() {
        let out = train(&config(arch, 5e-4), &data).unwrap();
        let path = dir.path().join(format!("{}.json", arch.name()));
        save_checkpoint(&path, &out.params).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, out.params);
        let input = model_input(&loaded, &data).unwrap();
        let before = forward_model(&out.params, &input, None).unwrap();
        let after = forward_model(&loaded, &input, None).unwrap();
        assert_eq!(before, after);
        assert_eq!(evaluate(&loaded, &data, SplitKind::Test).unwrap(), out.metrics.test_accuracy);
    }
}

#[test]
fn every_model_separates_the_toy_clusters() {
    let data = two_cluster_toy();
    for arch in architectures() {
        let cfg = TrainConfig {
            learning_rate: 0.5,
            weight_decay: 0.0,
            dropout: 0.0,
            epochs: 200,
            hidden: 8,
            ..TrainConfig {
                architecture: arch,
                ..TrainConfig::default()
            }
        };
        let out = train(&cfg, &data).unwrap();
        assert_eq!(out.metrics.test_accuracy, 1.0, "{}", arch.name());
    }
}

#[test]
fn best_checkpoint_has_best_validation_accuracy() {
    let data = small_dataset();
    let cfg = TrainConfig {
        epochs: 60,
        patience: 10,
        ..config(Architecture::Gcn, 5e-4)
    };
    let out = train(&cfg, &data).unwrap();
    let m = &out.metrics;
    assert!(m.epochs_run <= cfg.epochs);
    let best_seen = m.val_accuracy_curve.iter().copied().fold(0.0, f64::max);
    assert!(m.val_accuracy >= best_seen);
    if m.best_epoch > 0 {
        assert_eq!(m.val_accuracy_curve[m.best_epoch - 1], m.val_accuracy);
    }
    assert_eq!(m.val_accuracy_curve.len(), m.epochs_run);
}
