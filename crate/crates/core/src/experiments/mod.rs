//! Parameter scans over disorder realizations, producing measured-vs-predicted
//! rows.
//!
//! Row `k` of a study draws its realizations from substreams
//! `k·M .. (k+1)·M` of the master seed, where `M` is the number of disorder
//! draws, so rows are statistically independent and each row can be
//! reproduced on its own. Within a realization `r`, the graph comes from
//! `substream(seed, r)` and all thermal noise from labelled children of it.
//! Realizations run in parallel and are collected in index order, so results
//! do not depend on the thread count.

mod fluctuations;
mod pressure;

pub use fluctuations::{
    fluctuation_point, fluctuation_scan, overlap_covariance_study, scaling_study, standard_overlap_probes, CharFnRow,
    FluctuationRow, MethodChoice, OverlapProbe, OverlapRow, ScalingRow, CHAR_FN_GRID,
    NEAR_CRITICAL_BETA_PRIME,
};
pub use pressure::{
    cw_limit_study, derivative_identity_study, perturbed_pressure_study, perturbed_proof_lambda,
    pressure_gap_study, CwLimitRow, DerivativeRow, PerturbedRow, PressureGapRow,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{sample_graph, DiluteGraph};
use crate::error::{param, Result};
use crate::model::ModelParams;
use crate::rng::{substream, RngStream};
use crate::sampler::{config_from_tau, pilot_tau, SamplerConfig};

pub(crate) const LABEL_THERMAL: u64 = 0x5448;
pub(crate) const LABEL_PILOT: u64 = 0x5049;

/// Model inputs of a row. `beta_prime` is always computed from `alpha` and
/// `beta`, never supplied independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub n_sites: usize,
    pub alpha: f64,
    pub beta: f64,
    pub beta_prime: f64,
}

impl From<&ModelParams> for Point {
    fn from(p: &ModelParams) -> Self {
        Self {
            n_sites: p.n_sites(),
            alpha: p.alpha(),
            beta: p.beta(),
            beta_prime: p.beta_prime(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampler,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sampler => "sampler",
        }
    }
}

/// What is needed to reproduce a row: realizations `first_substream ..
/// first_substream + n_disorder` of `master_seed`, and the sampler schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub master_seed: u64,
    pub first_substream: u64,
    pub n_disorder: usize,
    pub method: Method,
    pub sampler: Option<SamplerConfig>,
    /// Mean integrated autocorrelation time of `m` over realizations, in sweeps.
    pub tau: Option<f64>,
}

impl RowMeta {
    fn exact(master_seed: u64, first_substream: u64, n_disorder: usize) -> Self {
        Self {
            master_seed,
            first_substream,
            n_disorder,
            method: Method::Exact,
            sampler: None,
            tau: None,
        }
    }
}

/// How long to run chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SamplerPlan {
    /// Measure `τ` on the row's first realization and derive burn-in and
    /// thinning from it.
    Auto { n_measurements: usize, n_replicas: usize },
    Fixed(SamplerConfig),
}

impl Default for SamplerPlan {
    fn default() -> Self {
        SamplerPlan::Auto {
            n_measurements: 20,
            n_replicas: 1,
        }
    }
}

impl SamplerPlan {
    /// The schedule for one row, with at least `min_replicas` replicas.
    fn resolve(
        &self,
        params: &ModelParams,
        master_seed: u64,
        first_substream: u64,
        min_replicas: usize,
    ) -> Result<SamplerConfig> {
        let config = match *self {
            SamplerPlan::Fixed(c) => SamplerConfig {
                n_replicas: c.n_replicas.max(min_replicas),
                ..c
            },
            SamplerPlan::Auto {
                n_measurements,
                n_replicas,
            } => {
                let base = substream(master_seed, first_substream);
                let graph = sample_graph(params, &mut base.clone())?;
                let tau = pilot_tau(&graph, params.beta(), &base.derive(LABEL_PILOT));
                config_from_tau(tau, n_measurements, n_replicas.max(min_replicas))
            }
        };
        config.validate()?;
        Ok(config)
    }
}

/// Substream offset of row `row` when every row uses `n_disorder` draws.
pub(crate) fn row_offset(row: usize, n_disorder: usize) -> u64 {
    (row as u64) * (n_disorder as u64)
}

/// Runs `f(graph, realization_stream)` over `n_disorder` realizations in
/// parallel and returns results in index order.
pub(crate) fn over_realizations<T, F>(
    params: &ModelParams,
    master_seed: u64,
    first_substream: u64,
    n_disorder: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&DiluteGraph, &RngStream) -> Result<T> + Sync,
{
    (first_substream..first_substream + n_disorder as u64)
        .into_par_iter()
        .map(|r| {
            let stream = substream(master_seed, r);
            let graph = sample_graph(params, &mut stream.clone())?;
            f(&graph, &stream)
        })
        .collect()
}

pub(crate) fn require_disorder(n_disorder: usize, needed: usize) -> Result<()> {
    if n_disorder < needed {
        return Err(param(format!("need at least {needed} disorder draws, got {n_disorder}")));
    }
    Ok(())
}

/// Flat table view of a row, used by CSV writers. Columns are fixed per type.
pub trait TableRow {
    fn columns() -> &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
