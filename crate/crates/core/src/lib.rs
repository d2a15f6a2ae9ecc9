//! Graph signal denoising as a common lens on GNN feature aggregation.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`graph`]: graph construction, CSR matrices, Laplacian variants and
//!   local label smoothness.
//! * [`denoise`]: the fidelity-plus-regularizer objective, its regularizer
//!   family, and closed-form / gradient-descent solvers.
//! * [`aggregate`]: GCN, GAT, PPNP, APPNP and adaptive-smoothness
//!   aggregation, plus a randomized harness that checks each aggregator
//!   against the denoising solver it corresponds to.
//! * [`learn`]: a small reverse-mode gradient engine, model assembly,
//!   full-batch training and evaluation metrics.
//! * [`io`]: dataset and signal file formats, graph perturbation and
//!   synthetic fixtures.

pub mod aggregate;
pub mod denoise;
pub mod error;
pub mod graph;
pub mod io;
pub mod learn;

pub use error::{Error, Result};
pub use graph::{CsrMatrix, Graph, LaplacianKind};

/// Dense `N x d` real matrix holding node signals (one row per node).
pub type Signal = ndarray::Array2<f64>;
