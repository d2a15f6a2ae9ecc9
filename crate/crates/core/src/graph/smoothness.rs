use super::Graph;

/// Per-node local label smoothness.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSmoothness {
    /// Fraction of (self-exclusive) neighbors sharing the node's label.
    pub values: Vec<f64>,
    /// Nodes without neighbors; their value is fixed at `1.0`.
    pub isolated: Vec<bool>,
}

impl LabelSmoothness {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// `ls(i) = |{j ∈ N(i) : l(j) = l(i)}| / |N(i)|`.
///
/// Isolated nodes are vacuously smooth (`1.0`) and flagged.
pub fn local_label_smoothness(graph: &Graph, labels: &[i64]) -> LabelSmoothness {
    assert_eq!(labels.len(), graph.num_nodes(), "one label per node");
    let mut values = Vec::with_capacity(labels.len());
    let mut isolated = Vec::with_capacity(labels.len());
    for i in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(i);
        if nbrs.is_empty() {
            values.push(1.0);
            isolated.push(true);
        } else {
            let same = nbrs.iter().filter(|&&j| labels[j] == labels[i]).count();
            values.push(same as f64 / nbrs.len() as f64);
            isolated.push(false);
        }
    }
    LabelSmoothness { values, isolated }
}

/// Counts of values in `bins` equal-width bins over `[0, 1]`; the last bin is closed.
pub fn smoothness_histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_labels() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let ls = local_label_smoothness(&g, &[0, 0, 1]);
        assert_eq!(ls.values, vec![1.0, 0.5, 0.0]);
        assert_eq!(ls.isolated, vec![false; 3]);
    }

    #[test]
    fn isolated_is_flagged() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let ls = local_label_smoothness(&g, &[0, 1, 2]);
        assert_eq!(ls.values, vec![0.0, 0.0, 1.0]);
        assert_eq!(ls.isolated, vec![false, false, true]);
    }

    #[test]
    fn histogram_bins() {
        let h = smoothness_histogram(&[0.0, 0.04, 0.05, 0.5, 0.95, 1.0], 20);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[10], 1);
        assert_eq!(h[19], 2);
        assert_eq!(h.iter().sum::<usize>(), 6);
    }
}
