//! Single-site heat-bath (Glauber) dynamics with replicas.
//!
//! A sweep is `N` updates at independently chosen uniform sites. Each update
//! resamples the spin from its conditional law given the local field, so the
//! Gibbs measure `exp(−βH)/Z` is invariant and detailed balance holds.
//! Replicas share the graph and draw thermal noise from their own streams.

use serde::{Deserialize, Serialize};

use crate::disorder::{DiluteGraph, FieldLists};
use crate::error::{param, Error, Result};
use crate::model::{overlap_sum, SpinConfig};
use crate::rng::RngStream;
use crate::stats::integrated_autocorrelation_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in_sweeps: usize,
    pub measure_sweeps: usize,
    /// Sweeps between measurements.
    pub thin: usize,
    pub n_replicas: usize,
}

impl SamplerConfig {
    pub fn new(burn_in_sweeps: usize, measure_sweeps: usize, thin: usize, n_replicas: usize) -> Result<Self> {
        let cfg = Self {
            burn_in_sweeps,
            measure_sweeps,
            thin,
            n_replicas,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(param("thin must be at least 1"));
        }
        if self.measure_sweeps < self.thin {
            return Err(param("measure_sweeps must be at least thin"));
        }
        if self.n_replicas == 0 {
            return Err(param("need at least one replica"));
        }
        Ok(())
    }

    pub fn n_measurements(&self) -> usize {
        self.measure_sweeps / self.thin
    }
}

/// Thinned measurements from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    /// `m_series[t][a]`: magnetization of replica `a` at measurement `t`.
    pub m_series: Vec<Vec<f64>>,
    /// `q_series[t][s]`: overlap of subset `s` at measurement `t`.
    pub q_series: Vec<Vec<f64>>,
    /// Integrated autocorrelation time of `m`, in sweeps.
    pub tau_est: f64,
}

impl ChainOutput {
    /// The magnetization series of one replica.
    pub fn replica_series(&self, replica: usize) -> Vec<f64> {
        self.m_series.iter().map(|row| row[replica]).collect()
    }

    /// The overlap series of one subset.
    pub fn subset_series(&self, subset: usize) -> Vec<f64> {
        self.q_series.iter().map(|row| row[subset]).collect()
    }
}

/// Probability that the heat-bath update sets a spin to +1 in field `h`.
pub fn heat_bath_probability(beta: f64, field: i64) -> f64 {
    1.0 / (1.0 + (-2.0 * beta * field as f64).exp())
}

/// Precomputed update kernel for one graph at one temperature.
#[derive(Debug, Clone)]
pub struct HeatBath {
    n_sites: usize,
    fields: FieldLists,
    max_field: i64,
    prob_up: Vec<f64>,
}

impl HeatBath {
    pub fn new(graph: &DiluteGraph, beta: f64) -> Self {
        let max_field = i64::from(graph.max_field_degree());
        let prob_up = (-max_field..=max_field).map(|h| heat_bath_probability(beta, h)).collect();
        Self {
            n_sites: graph.n_sites(),
            fields: graph.field_lists(),
            max_field,
            prob_up,
        }
    }

    #[inline]
    fn update(&self, spins: &mut [i8], site: usize, u: f64) {
        let mut h = 0i32;
        for e in self.fields.range(site) {
            h += self.fields.weights[e] * i32::from(spins[self.fields.partners[e] as usize]);
        }
        let p = self.prob_up[(i64::from(h) + self.max_field) as usize];
        spins[site] = if u < p { 1 } else { -1 };
    }

    /// One sweep on an unpacked `±1` vector; the hot loop of every chain.
    pub fn sweep_spins(&self, spins: &mut [i8], stream: &mut RngStream) {
        debug_assert_eq!(spins.len(), self.n_sites);
        let n = self.n_sites as u64;
        for _ in 0..self.n_sites {
            let site = stream.next_below(n) as usize;
            let u = stream.next_f64();
            self.update(spins, site, u);
        }
    }

    pub fn sweep(&self, sigma: &mut SpinConfig, stream: &mut RngStream) {
        let mut spins: Vec<i8> = sigma.spins().collect();
        self.sweep_spins(&mut spins, stream);
        *sigma = pack(&spins);
    }
}

fn pack(spins: &[i8]) -> SpinConfig {
    SpinConfig::from_spins(spins).expect("sampler spins are always ±1")
}

/// One sweep of `N` heat-bath updates at uniformly random sites.
pub fn glauber_sweep(graph: &DiluteGraph, sigma: &mut SpinConfig, beta: f64, stream: &mut RngStream) -> Result<()> {
    if graph.n_sites() != sigma.n_sites() {
        return Err(Error::SizeMismatch {
            expected: graph.n_sites(),
            found: sigma.n_sites(),
        });
    }
    HeatBath::new(graph, beta).sweep(sigma, stream);
    Ok(())
}

fn check_subsets(subsets: &[Vec<usize>], n_replicas: usize) -> Result<()> {
    for s in subsets {
        if s.is_empty() {
            return Err(param("empty replica subset"));
        }
        if let Some(&bad) = s.iter().find(|&&a| a >= n_replicas) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                limit: n_replicas,
            });
        }
    }
    Ok(())
}

/// Runs `config.n_replicas` independent chains on `graph` from random starts.
/// Replica `a` uses `stream.derive(a)`, so the output depends only on
/// `(graph, beta, config, subsets, stream)`.
pub fn run_chain(
    graph: &DiluteGraph,
    beta: f64,
    config: &SamplerConfig,
    subsets: &[Vec<usize>],
    stream: &RngStream,
) -> Result<ChainOutput> {
    config.validate()?;
    check_subsets(subsets, config.n_replicas)?;
    let n = graph.n_sites();
    let kernel = HeatBath::new(graph, beta);

    let mut streams: Vec<RngStream> = (0..config.n_replicas as u64).map(|a| stream.derive(a)).collect();
    let mut replicas: Vec<Vec<i8>> = streams
        .iter_mut()
        .map(|s| SpinConfig::random(n, s).spins().collect())
        .collect();
    for (spins, s) in replicas.iter_mut().zip(&mut streams) {
        for _ in 0..config.burn_in_sweeps {
            kernel.sweep_spins(spins, s);
        }
    }

    let n_meas = config.n_measurements();
    let mut m_series = Vec::with_capacity(n_meas);
    let mut q_series = Vec::with_capacity(n_meas);
    for _ in 0..n_meas {
        for (spins, s) in replicas.iter_mut().zip(&mut streams) {
            for _ in 0..config.thin {
                kernel.sweep_spins(spins, s);
            }
        }
        m_series.push(
            replicas
                .iter()
                .map(|r| r.iter().map(|&x| i64::from(x)).sum::<i64>() as f64 / n as f64)
                .collect::<Vec<_>>(),
        );
        if subsets.is_empty() {
            q_series.push(Vec::new());
            continue;
        }
        let packed: Vec<SpinConfig> = replicas.iter().map(|r| pack(r)).collect();
        q_series.push(
            subsets
                .iter()
                .map(|s| {
                    let refs: Vec<&SpinConfig> = s.iter().map(|&a| &packed[a]).collect();
                    overlap_sum(&refs) as f64 / n as f64
                })
                .collect::<Vec<_>>(),
        );
    }

    let tau = (0..config.n_replicas)
        .map(|a| integrated_autocorrelation_time(&m_series.iter().map(|row| row[a]).collect::<Vec<_>>()))
        .sum::<f64>()
        / config.n_replicas as f64;

    Ok(ChainOutput {
        m_series,
        q_series,
        tau_est: tau * config.thin as f64,
    })
}

/// Per-subset overlap series, all taken from the same measurement snapshots.
pub fn replica_overlap_samples(
    graph: &DiluteGraph,
    beta: f64,
    subsets: &[Vec<usize>],
    config: &SamplerConfig,
    stream: &RngStream,
) -> Result<Vec<Vec<f64>>> {
    let out = run_chain(graph, beta, config, subsets, stream)?;
    Ok((0..subsets.len()).map(|s| out.subset_series(s)).collect())
}

const PILOT_BURN_IN: usize = 100;
const PILOT_SWEEPS: usize = 1000;

/// Integrated autocorrelation time of `m` (in sweeps) from a short
/// single-replica pilot run.
pub fn pilot_tau(graph: &DiluteGraph, beta: f64, stream: &RngStream) -> f64 {
    let config = SamplerConfig {
        burn_in_sweeps: PILOT_BURN_IN,
        measure_sweeps: PILOT_SWEEPS,
        thin: 1,
        n_replicas: 1,
    };
    run_chain(graph, beta, &config, &[], stream)
        .map(|out| out.tau_est)
        .unwrap_or(0.5)
}

/// Default schedule from a pilot estimate: burn-in `max(100, 20τ)` sweeps and
/// one measurement every `ceil(2τ)` sweeps.
pub fn config_from_tau(tau: f64, n_measurements: usize, n_replicas: usize) -> SamplerConfig {
    let thin = ((2.0 * tau).ceil() as usize).max(1);
    SamplerConfig {
        burn_in_sweeps: ((20.0 * tau).ceil() as usize).max(100),
        measure_sweeps: thin * n_measurements.max(1),
        thin,
        n_replicas,
    }
}
