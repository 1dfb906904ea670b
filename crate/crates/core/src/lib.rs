//! Causal structure discovery with a greedy equivalence search that is
//! steered by conditional dependence measures instead of a graph score.
//!
//! The pieces:
//!
//! * [`graph`]: DAGs, CPDAGs, consistent extension, d-separation and the
//!   validity conditions of the GES operators.
//! * [`search`]: forward/backward equivalence search driven by any
//!   [`measures::ConditionalDependence`] implementation and a threshold `tau`.
//! * [`measures`]: the rank-based dependence coefficient, a d-separation
//!   oracle and a Gaussian partial correlation baseline.
//! * [`neural`] and [`ncd`]: a small MLP engine and the neural conditional
//!   dependence estimator built on it.
//! * [`synth`] and [`metrics`]: benchmark data and SHD / F1 evaluation.
//! * [`experiments`]: the oracle check and benchmark sweeps used by the CLI.

pub mod dataset;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod measures;
pub mod metrics;
pub mod ncd;
pub mod neural;
pub mod rng;
pub mod search;
pub mod synth;

pub use dataset::Dataset;
pub use graph::{Cpdag, Dag, NodeSet, Pdag};
