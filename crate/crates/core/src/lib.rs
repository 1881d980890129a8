//! Density-evolution thresholds for standard and multi-edge-type LDPC
//! ensembles, and population-based optimizers that search degree
//! distributions and degree structures for the largest threshold.
//!
//! The crate is organized bottom-up:
//!
//! * [`ensemble`]: ensemble types, constraint validation and the
//!   free-vector parameterization used by every optimizer.
//! * [`bec`] and [`awgn`]: density evolution on the erasure channel and
//!   (quantized) on the binary-input AWGN channel.
//! * [`threshold`]: bisection of a convergence predicate into a threshold,
//!   plus the search-effort counters.
//! * [`optimizer`]: Adaptive Range, differential evolution (with binomial
//!   crossover or discrete recombination) and random search.
//! * [`structure`]: the outer integer search over degree sets and MET
//!   structures, and cost-surface export.
//! * [`experiment`]: config-driven multi-trial runs with CSV output.

pub mod awgn;
pub mod bec;
pub mod ensemble;
pub mod experiment;
pub mod optimizer;
mod poly;
pub mod rng;
pub mod structure;
pub mod threshold;

pub use ensemble::{
    DegreeDistribution, Embedding, Ensemble, EnsembleError, MetEnsemble, Parameterization,
    ValidationReport,
};
pub use threshold::{Channel, EvalConfig};
