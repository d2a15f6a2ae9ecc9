use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-wise argmax; ties go to the lowest class index.
pub fn predictions(logits: ArrayView2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Fraction of `nodes` whose prediction equals the label.
pub fn accuracy(predicted: &[usize], labels: &[i64], nodes: &[usize], split: &str) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::EmptySplit(split.to_string()));
    }
    let correct = nodes.iter().filter(|&&i| labels[i] >= 0 && predicted[i] == labels[i] as usize).count();
    Ok(correct as f64 / nodes.len() as f64)
}

/// Accuracy split by local label smoothness: `ls ≤ threshold` is low.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedAccuracy {
    pub threshold: f64,
    /// `None` when no evaluated node falls in the group.
    pub low: Option<f64>,
    pub high: Option<f64>,
    pub low_count: usize,
    pub high_count: usize,
}

pub fn grouped_accuracy_of(
    predicted: &[usize],
    labels: &[i64],
    smoothness: &[f64],
    nodes: &[usize],
    threshold: f64,
) -> GroupedAccuracy {
    let (low, high): (Vec<usize>, Vec<usize>) = nodes.iter().partition(|&&i| smoothness[i] <= threshold);
    let acc = |group: &[usize]| accuracy(predicted, labels, group, "group").ok();
    GroupedAccuracy {
        threshold,
        low: acc(&low),
        high: acc(&high),
        low_count: low.len(),
        high_count: high.len(),
    }
}

/// Pearson correlation of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            context: "correlation samples",
            expected: (x.len(), 1),
            found: (y.len(), 1),
        });
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if x.is_empty() || sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first sample"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second sample"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
