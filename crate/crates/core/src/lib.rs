//! Simulation and exact-enumeration toolkit for the dilute mean-field Ising
//! ferromagnet `H(σ) = −Σ_{ν≤K} σ_{i_ν} σ_{j_ν}` with `K ~ Poisson(αN)` and
//! uniform random site pairs.
//!
//! * [`disorder`] draws the random multigraph from counter-based [`rng`] streams.
//! * [`model`] holds bit-packed spins, energies, magnetization and overlaps.
//! * [`exact`] enumerates all `2^N` states for small `N`.
//! * [`sampler`] runs heat-bath dynamics with replicas for large `N`.
//! * [`theory`] gives the closed-form high-temperature predictions.
//! * [`stats`] turns thermal and disorder samples into estimates.
//! * [`experiments`] runs the parameter scans that compare the two.

pub mod disorder;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod theory;

pub use disorder::{empirical_pgf, poisson_sample, sample_graph, DiluteGraph};
pub use error::{Error, Result};
pub use model::{energy, energy_delta, magnetization, multi_overlap, ModelParams, SpinConfig};
pub use rng::{substream, RngStream};
pub use sampler::{run_chain, ChainOutput, SamplerConfig};
pub use stats::Estimate;
pub use theory::Prediction;
