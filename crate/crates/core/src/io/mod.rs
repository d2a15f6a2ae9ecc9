//! File formats, graph perturbation and synthetic fixtures.

mod dataset;
mod perturb;
mod signal;
pub mod synthetic;

pub use dataset::{
    load_dataset, read_edge_list, write_dataset, write_edge_list, Dataset, Split, SplitKind, EDGES_FILE,
    FEATURES_FILE, LABELS_FILE, SPLIT_FILE,
};
pub use perturb::{perturb_graph, PerturbationMode, PerturbationSpec};
pub use signal::{load_signal, save_signal};
