//! Shared inputs for the propagation benchmarks.

use graphden::io::synthetic::PlantedPartition;
use graphden::io::Dataset;
use ndarray::Array2;

/// A planted-partition graph with roughly `classes * per_class` nodes.
pub fn citation_like(classes: usize, per_class: usize, seed: u64) -> Dataset {
    let n = classes * per_class;
    PlantedPartition {
        classes,
        nodes_per_class: per_class,
        p_in: 8.0 / per_class as f64,
        p_out: 1.0 / n as f64,
        vocabulary: 64 * classes,
        words_per_node: 12,
        topic_prob: 0.6,
        train_per_class: 20.min(per_class / 4),
        num_val: n / 10,
        num_test: n / 5,
        seed,
    }
    .generate()
    .expect("valid benchmark configuration")
}

/// Deterministic dense signal with `cols` channels.
pub fn signal(rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(i, j)| (((i * 31 + j * 17) % 97) as f64 / 97.0) - 0.5)
}
