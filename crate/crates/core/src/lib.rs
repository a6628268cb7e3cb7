//! Multi-view clustering on sample–anchor bipartite graphs.
//!
//! Each view gets its own anchor graph; the graphs are fused into one
//! consensus graph constrained to have exactly `c` connected components,
//! which are read off directly as the cluster labels.

pub mod anchors;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod graphs;
pub mod linalg;
pub mod metrics;
pub mod numerics;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Mat<f64>;
pub type Dataset = dataset::MultiViewDataset<f64>;
pub type State = solver::SolverState<f64>;
pub type ViewGraph = graphs::ViewBipartiteGraph<f64>;
pub type ConsensusGraph = graphs::ConsensusBipartiteGraph<f64>;
