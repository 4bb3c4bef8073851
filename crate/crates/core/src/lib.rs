//! Decentralized continuous greedy (DCG) for maximizing monotone submodular
//! objectives over a connected network of nodes.
//!
//! Every node holds a local objective. Nodes exchange their iterates and their
//! gradient estimates with their neighbors through a doubly stochastic mixing
//! matrix, and each takes conditional-gradient steps over a down-closed body.
//! The discrete variant works on the multilinear extension of set functions and
//! finishes with pipage rounding.
//!
//! Module map:
//!
//! * [`topology`]: communication graphs, Metropolis mixing weights, spectral checks
//! * [`setfn`]: set functions, the facility-location objective, brute-force checkers
//! * [`multilinear`]: multilinear extension, exact and sampled gradients
//! * [`polytope`]: matroid polytopes and boxes (linear oracle, membership, diameter)
//! * [`engine`]: the synchronous-round simulator for both DCG variants
//! * [`rounding`]: pipage and randomized rounding
//! * [`baselines`]: centralized greedy and centralized continuous greedy
//! * [`metrics`]: theory constants and the consensus/gradient bound checks
//! * [`harness`]: ratings ingestion, experiments, CSV/JSON/SVG output

pub mod baselines;
pub mod engine;
mod error;
pub mod harness;
pub mod metrics;
pub mod multilinear;
pub mod polytope;
pub mod rounding;
pub mod scalar;
pub mod setfn;
pub mod topology;

pub use error::{Error, Result};
pub use scalar::Scalar;
