use std::collections::HashSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::read_edge_list;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PerturbationMode {
    /// Remove same-label edges and insert cross-label non-edges in equal number.
    RandomFlip,
    /// Replace the edge set with one read from an edge file.
    LoadPrecomputed { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub rate: f64,
    pub mode: PerturbationMode,
    pub seed: u64,
}

/// Applies a structural perturbation, keeping the node set.
///
/// `RandomFlip` removes `⌈rate·|E|/2⌉` edges whose endpoints share a label and
/// adds as many non-edges whose endpoints carry different labels. Without
/// labels any edge may be removed and any non-edge added. Unlabeled (`-1`)
/// nodes never take part.
pub fn perturb_graph(graph: &Graph, spec: &PerturbationSpec, labels: Option<&[i64]>) -> Result<Graph> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::InvalidParameter(format!("perturbation rate must lie in [0, 1], got {}", spec.rate)));
    }
    match &spec.mode {
        PerturbationMode::LoadPrecomputed { path } => {
            let edges = read_edge_list(path)?;
            Graph::from_edges(graph.num_nodes(), &edges)
        }
        PerturbationMode::RandomFlip => random_flip(graph, spec.rate, spec.seed, labels),
    }
}

fn random_flip(graph: &Graph, rate: f64, seed: u64, labels: Option<&[i64]>) -> Result<Graph> {
    if rate == 0.0 {
        return Ok(graph.clone());
    }
    let m = graph.num_edges();
    if rate * (m as f64) < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "rate {rate} flips less than one of {m} edges"
        )));
    }
    if let Some(l) = labels {
        if l.len() != graph.num_nodes() {
            return Err(Error::ShapeMismatch {
                context: "labels vs graph nodes",
                expected: (graph.num_nodes(), 1),
                found: (l.len(), 1),
            });
        }
    }
    let flips = (rate * m as f64 / 2.0 - 1e-9).ceil() as usize;
    let same = |u: usize, v: usize| labels.map_or(true, |l| l[u] >= 0 && l[u] == l[v]);
    let cross = |u: usize, v: usize| labels.map_or(true, |l| l[u] >= 0 && l[v] >= 0 && l[u] != l[v]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removable: Vec<(usize, usize)> = graph.edges().iter().copied().filter(|&(u, v)| same(u, v)).collect();
    if removable.len() < flips {
        return Err(Error::InsufficientCandidates(format!(
            "{} removable edges, {flips} needed",
            removable.len()
        )));
    }
    removable.partial_shuffle(&mut rng, flips);
    let removed: HashSet<(usize, usize)> = removable[..flips].iter().copied().collect();

    let n = graph.num_nodes();
    let eligible = |u: usize, v: usize, chosen: &HashSet<(usize, usize)>| {
        u != v && !graph.has_edge(u, v) && cross(u, v) && !chosen.contains(&(u.min(v), u.max(v)))
    };
    let mut added: HashSet<(usize, usize)> = HashSet::with_capacity(flips);
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(flips);
    let mut attempts = 0;
    while order.len() < flips && attempts < 50 * flips + 1000 {
        attempts += 1;
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if eligible(u, v, &added) {
            let key = (u.min(v), u.max(v));
            added.insert(key);
            order.push(key);
        }
    }
    if order.len() < flips {
        let mut pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| eligible(u, v, &added))
            .collect();
        let missing = flips - order.len();
        if pool.len() < missing {
            return Err(Error::InsufficientCandidates(format!(
                "{} insertable non-edges, {missing} more needed",
                pool.len()
            )));
        }
        pool.partial_shuffle(&mut rng, missing);
        order.extend_from_slice(&pool[..missing]);
    }

    let edges: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .copied()
        .filter(|e| !removed.contains(e))
        .chain(order)
        .collect();
    Graph::from_edges(n, &edges)
}
