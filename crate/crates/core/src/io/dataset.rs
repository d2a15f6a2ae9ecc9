use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::signal::{format_real, parse_real};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::Signal;

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const SPLIT_FILE: &str = "split.json";

/// Node ids of the train/validation/test splits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn nodes(&self, kind: SplitKind) -> &[usize] {
        match kind {
            SplitKind::Train => &self.train,
            SplitKind::Val => &self.val,
            SplitKind::Test => &self.test,
        }
    }

    /// Boolean membership mask of one split.
    pub fn mask(&self, kind: SplitKind, num_nodes: usize) -> Vec<bool> {
        let mut m = vec![false; num_nodes];
        for &i in self.nodes(kind) {
            m[i] = true;
        }
        m
    }
}

/// A node-classification dataset: graph, features, labels and split.
///
/// Labels are class ids in `0..num_classes`; `-1` marks an unlabeled node,
/// which may not appear in any split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: Signal,
    pub labels: Vec<i64>,
    pub num_classes: usize,
    pub split: Split,
}

impl Dataset {
    /// Validates the parts and derives the class count from the labels.
    pub fn new(graph: Graph, features: Signal, labels: Vec<i64>, split: Split) -> Result<Self> {
        let n = graph.num_nodes();
        if features.nrows() != n || labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "row counts disagree: graph {n}, features {}, labels {}",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidDataset("features need at least one column".into()));
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l < -1) {
            return Err(Error::InvalidDataset(format!("label {l} of node {i} out of range")));
        }
        let num_classes = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
        let mut owner: Vec<Option<&str>> = vec![None; n];
        for (name, kind) in [("train", SplitKind::Train), ("val", SplitKind::Val), ("test", SplitKind::Test)] {
            for &i in split.nodes(kind) {
                if i >= n {
                    return Err(Error::InvalidDataset(format!("{name} node {i} out of range")));
                }
                if labels[i] < 0 {
                    return Err(Error::InvalidDataset(format!("{name} node {i} is unlabeled")));
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::InvalidDataset(format!("node {i} is in both {prev} and {name}")));
                }
                owner[i] = Some(name);
            }
        }
        Ok(Dataset {
            graph,
            features,
            labels,
            num_classes,
            split,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    /// Same dataset on a different edge set over the same nodes.
    pub fn with_graph(&self, graph: Graph) -> Result<Self> {
        if graph.num_nodes() != self.num_nodes() {
            return Err(Error::InvalidDataset(format!(
                "graph has {} nodes, dataset has {}",
                graph.num_nodes(),
                self.num_nodes()
            )));
        }
        Ok(Dataset {
            graph,
            ..self.clone()
        })
    }

    /// Features scaled so every nonzero row sums to one.
    pub fn row_normalized_features(&self) -> Signal {
        let mut x = self.features.clone();
        for mut row in x.rows_mut() {
            let total: f64 = row.sum();
            if total != 0.0 {
                row /= total;
            }
        }
        x
    }
}

/// Reads `edges.tsv`, `features.tsv`, `labels.tsv` and `split.json` from `dir`.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let labels = read_labels(&dir.join(LABELS_FILE))?;
    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidDataset("labels.tsv lists no nodes".into()));
    }
    let features = read_features(&dir.join(FEATURES_FILE))?;
    let edges = read_edge_list(dir.join(EDGES_FILE))?;
    let graph = Graph::from_edges(n, &edges)?;
    let split_path = dir.join(SPLIT_FILE);
    let split: Split = serde_json::from_str(&read(&split_path)?)?;
    Dataset::new(graph, features, labels, split)
}

/// Writes a dataset in the directory layout read by [`load_dataset`].
pub fn write_dataset(dir: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_edge_list(dir.join(EDGES_FILE), data.graph.edges())?;
    write_lines(&dir.join(FEATURES_FILE), data.features.rows().into_iter().map(|row| {
        row.iter().map(|v| format_real(*v)).collect::<Vec<_>>().join("\t")
    }))?;
    write_lines(&dir.join(LABELS_FILE), data.labels.iter().map(|l| l.to_string()))?;
    let split_path = dir.join(SPLIT_FILE);
    fs::write(&split_path, serde_json::to_string(&data.split)?).map_err(|e| Error::io(&split_path, e))
}

/// Parses a `u<TAB>v` edge file; blank lines and `#` comments are skipped.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t').map(str::trim);
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, idx + 1, "expected `u<TAB>v`"));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(path, idx + 1, format!("bad node id `{s}`")));
        edges.push((parse(u)?, parse(v)?));
    }
    Ok(edges)
}

pub fn write_edge_list(path: impl AsRef<Path>, edges: &[(usize, usize)]) -> Result<()> {
    write_lines(path.as_ref(), edges.iter().map(|(u, v)| format!("{u}\t{v}")))
}

fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim()
                .parse::<i64>()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad label `{}`", l.trim())))
        })
        .collect()
}

fn read_features(path: &Path) -> Result<Signal> {
    let text = read(path)?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split('\t') {
            values.push(parse_real(field).ok_or_else(|| Error::parse(path, idx + 1, format!("bad real `{field}`")))?);
        }
        let arity = values.len() - before;
        match width {
            None => width = Some(arity),
            Some(w) if w != arity => {
                return Err(Error::parse(path, idx + 1, format!("row {rows} has {arity} values, expected {w}")))
            }
            _ => {}
        }
        rows += 1;
    }
    let width = width.unwrap_or(0);
    Ok(Signal::from_shape_vec((rows, width), values).expect("arity checked"))
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let go = || -> std::io::Result<()> {
        for line in lines {
            writeln!(w, "{line}")?;
        }
        w.flush()
    };
    go().map_err(|e| Error::io(path, e))
}
