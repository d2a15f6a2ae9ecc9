//! Small seeded datasets for tests, examples and desk-scale experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::Signal;

/// Two 5-cliques joined by a single bridge edge `(0, 5)`.
///
/// Nodes `0..5` carry label 0 and feature `[1, 0]`, nodes `5..10` label 1 and
/// `[0, 1]`, each perturbed by a small deterministic offset.
pub fn two_cluster_toy() -> Dataset {
    let mut edges = vec![(0, 5)];
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((base + i, base + j));
            }
        }
    }
    let graph = Graph::from_edges(10, &edges).expect("valid toy graph");
    let features = Signal::from_shape_fn((10, 2), |(i, k)| {
        let hot = usize::from(i >= 5) == k;
        let jitter = 0.05 * ((i * 7 + k * 3) % 5) as f64;
        if hot {
            1.0 - jitter
        } else {
            jitter
        }
    });
    let labels = (0..10).map(|i| i64::from(i >= 5)).collect();
    let split = Split {
        train: vec![1, 6],
        val: vec![2, 7],
        test: vec![0, 3, 4, 5, 8, 9],
    };
    Dataset::new(graph, features, labels, split).expect("valid toy dataset")
}

/// Path `0 - 1 - 2` labelled `[0, 0, 1]`.
pub fn path_fixture() -> Dataset {
    let graph = Graph::from_edges(3, &[(0, 1), (1, 2)]).expect("valid path");
    let features = Signal::from_shape_vec((3, 2), vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).expect("shape");
    let split = Split {
        train: vec![0],
        val: vec![1],
        test: vec![2],
    };
    Dataset::new(graph, features, vec![0, 0, 1], split).expect("valid path dataset")
}

/// Parameters of a planted-partition citation-like graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPartition {
    pub classes: usize,
    pub nodes_per_class: usize,
    /// Edge probability inside a class.
    pub p_in: f64,
    /// Edge probability across classes.
    pub p_out: f64,
    /// Bag-of-words vocabulary size; each class owns an equal slice of it.
    pub vocabulary: usize,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the node's own class slice.
    pub topic_prob: f64,
    pub train_per_class: usize,
    pub num_val: usize,
    pub num_test: usize,
    pub seed: u64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        PlantedPartition {
            classes: 3,
            nodes_per_class: 60,
            p_in: 0.12,
            p_out: 0.005,
            vocabulary: 60,
            words_per_node: 6,
            topic_prob: 0.5,
            train_per_class: 5,
            num_val: 45,
            num_test: 90,
            seed: 0,
        }
    }
}

impl PlantedPartition {
    /// Samples the graph, binary features and a Planetoid-style split.
    pub fn generate(&self) -> Result<Dataset> {
        let j = self.classes;
        let n = j * self.nodes_per_class;
        if j < 2 || self.nodes_per_class == 0 {
            return Err(Error::InvalidParameter("need at least two non-empty classes".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out), ("topic_prob", self.topic_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.vocabulary < j {
            return Err(Error::InvalidParameter("vocabulary smaller than class count".into()));
        }
        if j * self.train_per_class + self.num_val + self.num_test > n {
            return Err(Error::InvalidParameter(format!("split sizes exceed {n} nodes")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let labels: Vec<i64> = (0..n).map(|i| (i / self.nodes_per_class) as i64).collect();

        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let p = if labels[u] == labels[v] { self.p_in } else { self.p_out };
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let graph = Graph::from_edges(n, &edges)?;

        let slice = self.vocabulary / j;
        let mut features = Signal::zeros((n, self.vocabulary));
        for i in 0..n {
            let class = labels[i] as usize;
            for _ in 0..self.words_per_node {
                let word = if rng.random::<f64>() < self.topic_prob {
                    class * slice + rng.random_range(0..slice)
                } else {
                    rng.random_range(0..self.vocabulary)
                };
                features[[i, word]] = 1.0;
            }
        }

        let mut split = Split::default();
        let mut rest = Vec::new();
        for class in 0..j {
            let mut members: Vec<usize> = (class * self.nodes_per_class..(class + 1) * self.nodes_per_class).collect();
            members.shuffle(&mut rng);
            split.train.extend_from_slice(&members[..self.train_per_class]);
            rest.extend_from_slice(&members[self.train_per_class..]);
        }
        rest.shuffle(&mut rng);
        split.val = rest[..self.num_val].to_vec();
        split.test = rest[self.num_val..self.num_val + self.num_test].to_vec();
        for part in [&mut split.train, &mut split.val, &mut split.test] {
            part.sort_unstable();
        }
        Dataset::new(graph, features, labels, split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::local_label_smoothness;

    #[test]
    fn toy_shapes() {
        let d = two_cluster_toy();
        assert_eq!(d.num_nodes(), 10);
        assert_eq!(d.graph.num_edges(), 21);
        assert_eq!(d.num_classes, 2);
    }

    #[test]
    fn planted_partition_is_homophilic_and_seeded() {
        let cfg = PlantedPartition::default();
        let a = cfg.generate().unwrap();
        assert_eq!(a, cfg.generate().unwrap());
        assert_eq!(a.split.train.len(), 15);
        assert!(local_label_smoothness(&a.graph, &a.labels).mean() > 0.7);
        let b = PlantedPartition { seed: 1, ..cfg }.generate().unwrap();
        assert_ne!(a.graph, b.graph);
    }
}
