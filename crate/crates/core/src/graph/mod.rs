//! Graph structure, sparse matrices and graph-derived operators.

mod laplacian;
mod smoothness;
mod sparse;
mod structure;

pub use laplacian::{adjacency, adjacency_with_self_loops, laplacian, normalized_adjacency, LaplacianKind};
pub use smoothness::{local_label_smoothness, smoothness_histogram, LabelSmoothness};
pub use sparse::CsrMatrix;
pub use structure::Graph;

/// Convenience wrapper around [`Graph::from_edges`].
pub fn build_graph(edge_list: &[(usize, usize)], num_nodes: usize) -> crate::Result<Graph> {
    Graph::from_edges(num_nodes, edge_list)
}
