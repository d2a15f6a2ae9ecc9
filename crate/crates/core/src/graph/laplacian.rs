use serde::{Deserialize, Serialize};

use super::{CsrMatrix, Graph};

/// Which Laplacian a regularizer or solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `D - A`
    Unnormalized,
    /// `D̂ - Â` with `Â = A + I`; numerically equal to `D - A`.
    UnnormalizedSelfLoop,
    /// `I - Ã` with `Ã = D̂^{-1/2} Â D̂^{-1/2}`.
    SymNormalizedSelfLoop,
}

/// Binary adjacency `A`, symmetric.
pub fn adjacency(graph: &Graph) -> CsrMatrix {
    build(graph, false, |_, _| 1.0)
}

/// `Â = A + I`.
pub fn adjacency_with_self_loops(graph: &Graph) -> CsrMatrix {
    build(graph, true, |_, _| 1.0)
}

/// `Ã = D̂^{-1/2} Â D̂^{-1/2}`; entry `(i, j)` is `1 / sqrt(d_i d_j)` on the
/// closed neighborhood, with `d` the self-loop degree.
pub fn normalized_adjacency(graph: &Graph) -> CsrMatrix {
    let d = graph.self_loop_degrees();
    build(graph, true, |i, j| 1.0 / ((d[i] * d[j]) as f64).sqrt())
}

pub fn laplacian(graph: &Graph, kind: LaplacianKind) -> CsrMatrix {
    match kind {
        LaplacianKind::Unnormalized | LaplacianKind::UnnormalizedSelfLoop => {
            // the self-loop contributes +1 to both D̂ and Â and cancels
            build(graph, true, |i, j| {
                if i == j {
                    graph.degree(i) as f64
                } else {
                    -1.0
                }
            })
        }
        LaplacianKind::SymNormalizedSelfLoop => {
            normalized_adjacency(graph).map_values(|i, j, v| if i == j { 1.0 - v } else { -v })
        }
    }
}

fn build(graph: &Graph, self_loops: bool, weight: impl Fn(usize, usize) -> f64) -> CsrMatrix {
    let n = graph.num_nodes();
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::with_capacity(2 * graph.num_edges() + n);
    let mut values = Vec::with_capacity(col_indices.capacity());
    for i in 0..n {
        let nbrs = graph.neighbors(i);
        let split = nbrs.partition_point(|&j| j < i);
        let diag = self_loops.then_some(i);
        for &j in nbrs[..split].iter().chain(diag.iter()).chain(nbrs[split..].iter()) {
            col_indices.push(j);
            values.push(weight(i, j));
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix::from_parts(n, n, row_offsets, col_indices, values).expect("graph rows are sorted")
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn unnormalized_path() {
        let l = laplacian(&path3(), LaplacianKind::Unnormalized).to_dense();
        assert_eq!(l, array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]);
        assert_eq!(l, laplacian(&path3(), LaplacianKind::UnnormalizedSelfLoop).to_dense());
    }

    #[test]
    fn isolated_node_normalized_adjacency() {
        let g = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(normalized_adjacency(&g).to_dense(), array![[1.0]]);
    }

    #[test]
    fn edge_pair_normalized_adjacency() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(normalized_adjacency(&g).to_dense(), array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn triangle_sym_normalized_laplacian() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let l = laplacian(&g, LaplacianKind::SymNormalizedSelfLoop).to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 - 1.0 / 3.0 } else { -1.0 / 3.0 };
                assert!((l[[i, j]] - expected).abs() < 1e-15);
            }
        }
    }
}
