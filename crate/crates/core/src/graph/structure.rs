use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected, unweighted simple graph.
///
/// Edges are stored once in canonical `(min, max)` order, sorted and
/// deduplicated. Self-loops in the input are dropped; the self-loop of
/// `A + I` is implied by [`Graph::self_loop_degree`] and by the matrix
/// builders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    // CSR-style neighbor lists (self excluded), sorted per node
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list.
    ///
    /// Both orientations of an edge, repeated edges and self-loops are
    /// accepted; the result is symmetrized, deduplicated and loop-free.
    pub fn from_edges(num_nodes: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::EndpointOutOfRange { u, v, num_nodes });
            }
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut neighbors = vec![0usize; 2 * edges.len()];
        for &(u, v) in &edges {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..num_nodes {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Graph {
            num_nodes,
            edges,
            offsets,
            neighbors,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges (each stored once).
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical `(min, max)` edges in sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbors of `node`, excluding the node itself, sorted ascending.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Closed neighborhood `N(i) ∪ {i}`, sorted ascending.
    pub fn closed_neighborhood(&self, node: usize) -> Vec<usize> {
        let open = self.neighbors(node);
        let mut out = Vec::with_capacity(open.len() + 1);
        let split = open.partition_point(|&j| j < node);
        out.extend_from_slice(&open[..split]);
        out.push(node);
        out.extend_from_slice(&open[split..]);
        out
    }

    /// Degree in `A`.
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Degree in `A + I`, i.e. `degree(node) + 1`.
    pub fn self_loop_degree(&self, node: usize) -> usize {
        self.degree(node) + 1
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|i| self.degree(i)).collect()
    }

    pub fn self_loop_degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|i| self.self_loop_degree(i)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && v < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Connectivity by breadth-first search.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_nodes];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.num_nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g.self_loop_degrees(), vec![3, 3, 3]);
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn self_loops_dropped() {
        let g = Graph::from_edges(2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert!(!g.has_edge(0, 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Graph::from_edges(0, &[]), Err(Error::EmptyGraph)));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(Error::EndpointOutOfRange { u: 0, v: 2, num_nodes: 2 })
        ));
    }

    #[test]
    fn closed_neighborhood_is_sorted_and_self_inclusive() {
        let g = Graph::from_edges(4, &[(2, 0), (2, 3), (1, 2)]).unwrap();
        assert_eq!(g.closed_neighborhood(2), vec![0, 1, 2, 3]);
        assert_eq!(g.closed_neighborhood(0), vec![0, 2]);
        assert!(g.is_connected());
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(!g.is_connected());
    }
}
