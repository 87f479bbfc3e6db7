//! Brute-force enumeration over all `2^N` configurations.
//!
//! A Gray-code walk visits every state flipping one spin per step, so the
//! energy is updated from the local field in O(degree). States are binned by
//! exact integer energy `H` and spin sum `M`; partition functions, moments of
//! `m`, and the perturbed pressure are then stable log-sum-exps over the
//! occupied bins. Pair correlations come from a Walsh–Hadamard transform of
//! the per-state Gibbs weights.
//!
//! State `c` (an integer) encodes `σ_i = +1` when bit `i` of `c` is set,
//! matching [`SpinConfig`](crate::model::SpinConfig).

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::disorder::{draw_pairs, poisson_sample, sample_graph, DiluteGraph};
use crate::error::{param, Error, Result};
use crate::model::ModelParams;
use crate::rng::substream;
use crate::stats::{disorder_average, Estimate};

/// Largest `N` enumerated unless a caller raises it (16.7M states).
pub const DEFAULT_ENUMERATION_CAP: usize = 24;
/// Hard ceiling: state indices are `u32`.
const MAX_ENUMERATION_CAP: usize = 31;

/// Streaming `ln Σ exp(x_k)` with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled_sum += (x - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.scaled_sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

fn check_cap(n_sites: usize, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_ENUMERATION_CAP);
    if n_sites > cap {
        return Err(Error::Capacity { n_sites, cap });
    }
    Ok(())
}

/// Calls `visit(state, energy, up_count)` for every configuration in Gray-code
/// order, starting from all spins down.
fn gray_walk<F: FnMut(u32, i64, usize)>(graph: &DiluteGraph, mut visit: F) {
    let n = graph.n_sites();
    let fields = graph.field_lists();
    let mut state: u32 = 0;
    // all spins equal: every pair, self-pairs included, contributes −1
    let mut energy = -(graph.n_edges() as i64);
    let mut up = 0usize;
    visit(state, energy, up);
    for step in 1u64..(1u64 << n) {
        let site = step.trailing_zeros() as usize;
        let mut field = 0i64;
        for e in fields.range(site) {
            let bit = (state >> fields.partners[e]) & 1;
            field += i64::from(fields.weights[e]) * (2 * i64::from(bit) - 1);
        }
        let spin = 2 * i64::from((state >> site) & 1) - 1;
        energy += 2 * spin * field;
        state ^= 1 << site;
        if spin < 0 {
            up += 1;
        } else {
            up -= 1;
        }
        visit(state, energy, up);
    }
}

/// Number of states per (energy, spin sum) bin for one graph.
#[derive(Debug, Clone)]
pub struct DensityOfStates {
    n_sites: usize,
    n_edges: usize,
    // counts[(H + K) * (N + 1) + up]
    counts: Vec<u64>,
}

impl DensityOfStates {
    pub fn enumerate(graph: &DiluteGraph, cap: usize) -> Result<Self> {
        check_cap(graph.n_sites(), cap)?;
        let n = graph.n_sites();
        let k = graph.n_edges();
        let width = n + 1;
        let mut counts = vec![0u64; (2 * k + 1) * width];
        gray_walk(graph, |_, energy, up| {
            counts[(energy + k as i64) as usize * width + up] += 1;
        });
        Ok(Self {
            n_sites: n,
            n_edges: k,
            counts,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Occupied bins as `(count, energy, spin_sum)`.
    pub fn bins(&self) -> impl Iterator<Item = (u64, i64, i64)> + '_ {
        let width = self.n_sites + 1;
        let k = self.n_edges as i64;
        let n = self.n_sites as i64;
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(idx, &c)| {
            let energy = (idx / width) as i64 - k;
            let up = (idx % width) as i64;
            (c, energy, 2 * up - n)
        })
    }

    fn log_sum<F: Fn(i64, i64) -> f64>(&self, exponent: F) -> f64 {
        let mut acc = LogSumExp::default();
        for (count, energy, m) in self.bins() {
            acc.push((count as f64).ln() + exponent(energy, m));
        }
        acc.value()
    }

    /// `ln Z = ln Σ_σ exp(−βH(σ))`.
    pub fn log_z(&self, beta: f64) -> f64 {
        if beta == 0.0 {
            // every weight is 1: Z counts the states exactly
            return self.n_sites as f64 * LN_2;
        }
        self.log_sum(|energy, _| -beta * energy as f64)
    }

    /// `(1/N) ln Σ_σ exp(−βH(σ) + λ N m²/2)`.
    pub fn perturbed_pressure(&self, beta: f64, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return self.log_z(beta) / self.n_sites as f64;
        }
        let n = self.n_sites as f64;
        self.log_sum(|energy, m| -beta * energy as f64 + lambda * (m * m) as f64 / (2.0 * n)) / n
    }

    /// Gibbs moments `(Ω(m²), Ω(m⁴))`.
    pub fn magnetization_moments(&self, beta: f64) -> (f64, f64) {
        let log_z = self.log_z(beta);
        let n = self.n_sites as f64;
        let (mut m2, mut m4) = (0.0, 0.0);
        for (count, energy, m) in self.bins() {
            let w = ((count as f64).ln() - beta * energy as f64 - log_z).exp();
            let x2 = (m as f64 / n).powi(2);
            m2 += w * x2;
            m4 += w * x2 * x2;
        }
        (m2, m4)
    }
}

/// Exact Gibbs averages for one graph at one `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSummary {
    pub log_z: f64,
    /// `ln Z / N`.
    pub pressure_contrib: f64,
    /// `Ω(σ_i σ_j)`, present when requested.
    pub pair_expectations: Option<Vec<Vec<f64>>>,
    pub m2: f64,
    pub m4: f64,
}

/// Exact energy of every state, indexed by state.
pub fn state_energies(graph: &DiluteGraph) -> Result<Vec<i32>> {
    check_cap(graph.n_sites(), DEFAULT_ENUMERATION_CAP)?;
    let mut energies = vec![0i32; 1usize << graph.n_sites()];
    gray_walk(graph, |state, energy, _| energies[state as usize] = energy as i32);
    Ok(energies)
}

/// The exact Gibbs distribution `exp(−βH(c))/Z` over states `c`.
pub fn gibbs_distribution(graph: &DiluteGraph, beta: f64) -> Result<Vec<f64>> {
    let energies = state_energies(graph)?;
    let k = graph.n_edges() as i64;
    // shift by the smallest possible energy −K so no weight overflows
    let table: Vec<f64> = (-k..=k).map(|e| (-beta * (e + k) as f64).exp()).collect();
    let mut weights: Vec<f64> = energies.iter().map(|&e| table[(i64::from(e) + k) as usize]).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

// In-place Walsh–Hadamard transform: v[S] ← Σ_c v[c] (−1)^{|c ∧ S|}.
fn walsh_hadamard(v: &mut [f64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `Ω(σ_i σ_j)` for all pairs. Since `σ_i σ_j = (−1)^{b_i + b_j}` in terms of
/// the state bits, the correlation is the transform coefficient at `{i, j}`.
pub fn pair_correlations(graph: &DiluteGraph, beta: f64) -> Result<Vec<Vec<f64>>> {
    let mut weights = gibbs_distribution(graph, beta)?;
    walsh_hadamard(&mut weights);
    let n = graph.n_sites();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { weights[(1 << i) | (1 << j)] })
                .collect()
        })
        .collect())
}

/// `ln Z_N(β)` of one graph.
pub fn partition_function(graph: &DiluteGraph, beta: f64) -> Result<f64> {
    Ok(DensityOfStates::enumerate(graph, DEFAULT_ENUMERATION_CAP)?.log_z(beta))
}

pub fn gibbs_summary(graph: &DiluteGraph, beta: f64, want_pairs: bool) -> Result<GibbsSummary> {
    let dos = DensityOfStates::enumerate(graph, DEFAULT_ENUMERATION_CAP)?;
    let log_z = dos.log_z(beta);
    let (m2, m4) = dos.magnetization_moments(beta);
    let pair_expectations = if want_pairs {
        Some(pair_correlations(graph, beta)?)
    } else {
        None
    };
    Ok(GibbsSummary {
        log_z,
        pressure_contrib: log_z / graph.n_sites() as f64,
        pair_expectations,
        m2,
        m4,
    })
}

/// `Ā(λ)` of one graph (the disorder average is left to the caller).
pub fn perturbed_pressure(graph: &DiluteGraph, beta: f64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(param(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(DensityOfStates::enumerate(graph, DEFAULT_ENUMERATION_CAP)?.perturbed_pressure(beta, lambda))
}

/// Finite-size Curie–Weiss pressure `(1/N) ln Σ_σ exp(β' N m²/2)`, summed
/// over the magnetization shells.
pub fn cw_pressure_finite(n_sites: usize, beta_prime: f64) -> f64 {
    let n = n_sites as f64;
    let mut acc = LogSumExp::default();
    for up in 0..=n_sites {
        let m = (2 * up) as f64 - n;
        acc.push(ln_binomial(n_sites as u64, up as u64) + beta_prime * m * m / (2.0 * n));
    }
    acc.value() / n
}

/// Disorder-sampled `A_N(α, β)` with the spin sum done exactly.
/// Realization `r` draws its graph from `substream(master_seed, r)`.
pub fn quenched_pressure(params: &ModelParams, n_disorder: usize, master_seed: u64) -> Result<Estimate> {
    if n_disorder < 2 {
        return Err(param("quenched_pressure needs at least 2 disorder draws"));
    }
    check_cap(params.n_sites(), DEFAULT_ENUMERATION_CAP)?;
    let values = (0..n_disorder as u64)
        .into_par_iter()
        .map(|r| {
            let graph = sample_graph(params, &mut substream(master_seed, r))?;
            Ok(partition_function(&graph, params.beta())? / params.n_sites() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    disorder_average(&values)
}

const LABEL_COUNTS: u64 = 1;
const LABEL_PAIRS: u64 = 2;
const LABEL_CAVITY: u64 = 3;

/// Both sides of `∂A_N/∂α = ln cosh β + E ln[1 + Ω(σ_{i0}σ_{j0}) tanh β]`.
///
/// The left side is a central difference over `[α − dα, α + dα]` (clipped at
/// zero) on coupled graphs: the upper graph extends the lower one by a
/// Poisson number of extra pairs from the same pair stream. The right side
/// averages over all `N²` pairs `(i0, j0)` on independently drawn graphs.
pub fn alpha_derivative_check(
    params: &ModelParams,
    n_disorder: usize,
    d_alpha: f64,
    master_seed: u64,
) -> Result<(Estimate, Estimate)> {
    if !(d_alpha > 0.0 && d_alpha.is_finite()) {
        return Err(param(format!("d_alpha must be positive, got {d_alpha}")));
    }
    if n_disorder < 2 {
        return Err(param("alpha_derivative_check needs at least 2 disorder draws"));
    }
    let n = params.n_sites();
    check_cap(n, DEFAULT_ENUMERATION_CAP)?;
    let beta = params.beta();
    let lo = (params.alpha() - d_alpha).max(0.0);
    let hi = params.alpha() + d_alpha;
    let tanh_b = beta.tanh();
    let ln_cosh_b = beta.cosh().ln();

    let per_realization = (0..n_disorder as u64)
        .into_par_iter()
        .map(|r| {
            let base = substream(master_seed, r);
            let mut counts = base.derive(LABEL_COUNTS);
            let k_lo = poisson_sample(lo * n as f64, &mut counts)? as usize;
            let k_extra = poisson_sample((hi - lo) * n as f64, &mut counts)? as usize;
            let pairs = draw_pairs(n, k_lo + k_extra, &mut base.derive(LABEL_PAIRS));
            let g_lo = DiluteGraph::from_edges(n, pairs[..k_lo].to_vec())?;
            let g_hi = DiluteGraph::from_edges(n, pairs)?;
            let lhs = (partition_function(&g_hi, beta)? - partition_function(&g_lo, beta)?)
                / (n as f64 * (hi - lo));

            let rhs = if beta == 0.0 {
                0.0
            } else {
                let g = sample_graph(params, &mut base.derive(LABEL_CAVITY))?;
                let pairs = pair_correlations(&g, beta)?;
                let mean_log = pairs
                    .iter()
                    .flatten()
                    .map(|&c| (1.0 + c * tanh_b).ln())
                    .sum::<f64>()
                    / (n * n) as f64;
                ln_cosh_b + mean_log
            };
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let (lhs, rhs): (Vec<f64>, Vec<f64>) = per_realization.into_iter().unzip();
    Ok((disorder_average(&lhs)?, disorder_average(&rhs)?))
}
