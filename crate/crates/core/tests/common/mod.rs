#![allow(dead_code)]

use graphden::{Graph, Signal};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi graph with `2 ≤ n ≤ max_nodes` and edge probability in [0.2, 0.8).
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.random_range(2..=max_nodes);
    let p = rng.random_range(0.2..0.8);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_signal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Signal {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Graph on up to `max_nodes` nodes drawn as an arbitrary edge subset.
pub fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = Graph> {
    (1..=max_nodes).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let m = pairs.len();
        proptest::collection::vec(any::<bool>(), m).prop_map(move |keep| {
            let edges: Vec<_> = pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e).collect();
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

pub fn graph_and_signal(max_nodes: usize, cols: usize) -> impl Strategy<Value = (Graph, Signal)> {
    graph_strategy(max_nodes).prop_flat_map(move |g| {
        let n = g.num_nodes();
        proptest::collection::vec(-2.0f64..2.0, n * cols)
            .prop_map(move |v| (g.clone(), Array2::from_shape_vec((n, cols), v).unwrap()))
    })
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense Gaussian elimination with partial pivoting, `A X = B`.
pub fn dense_solve(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs())).unwrap();
        for k in 0..n {
            a.swap([col, k], [piv, k]);
        }
        for k in 0..x.ncols() {
            x.swap([col, k], [piv, k]);
        }
        for r in 0..n {
            if r != col {
                let f = a[[r, col]] / a[[col, col]];
                for k in 0..n {
                    a[[r, k]] -= f * a[[col, k]];
                }
                for k in 0..x.ncols() {
                    x[[r, k]] -= f * x[[col, k]];
                }
            }
        }
    }
    for r in 0..n {
        let d = a[[r, r]];
        x.row_mut(r).mapv_inplace(|v| v / d);
    }
    x
}

/// Dense `A + I` with the self-loop degree vector.
pub fn dense_adjacency(g: &Graph) -> Array2<f64> {
    let n = g.num_nodes();
    let mut a = Array2::zeros((n, n));
    for &(u, v) in g.edges() {
        a[[u, v]] = 1.0;
        a[[v, u]] = 1.0;
    }
    a
}
