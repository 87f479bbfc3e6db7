use serde::{Deserialize, Serialize};

use super::{
    fmt_opt, over_realizations, require_disorder, row_offset, Method, Point, RowMeta, SamplerPlan,
    TableRow, LABEL_THERMAL,
};
use crate::error::{param, Result};
use crate::exact::{DensityOfStates, DEFAULT_ENUMERATION_CAP};
use crate::model::ModelParams;
use crate::sampler::{run_chain, SamplerConfig};
use crate::stats::{disorder_average, kurtosis_ratio_grouped, Estimate};
use crate::theory::{gaussian_char_fn, predicted_mu_variance};

/// Points at which the characteristic function of `√N m` is sampled.
pub const CHAR_FN_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Rows at or above this `β'` are reported but flagged: finite-size effects
/// dominate there.
pub const NEAR_CRITICAL_BETA_PRIME: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharFnRow {
    pub u: f64,
    pub re: Estimate,
    pub im: Estimate,
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRow {
    pub point: Point,
    /// `N⟨m²⟩`
    pub variance: Estimate,
    pub predicted_variance: Option<f64>,
    /// `⟨μ⁴⟩/⟨μ²⟩²` over all `√N m` samples
    pub kurtosis: Estimate,
    pub predicted_kurtosis: Option<f64>,
    pub char_fn: Vec<CharFnRow>,
    pub near_critical: bool,
    pub meta: RowMeta,
}

impl TableRow for FluctuationRow {
    fn columns() -> &'static [&'static str] {
        &[
            "beta_prime",
            "n_measured_variance",
            "stderr",
            "predicted_variance",
            "kurtosis",
            "kurtosis_err",
            "tau",
            "seed",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.point.beta_prime.to_string(),
            self.variance.mean.to_string(),
            self.variance.std_error.to_string(),
            fmt_opt(self.predicted_variance),
            self.kurtosis.mean.to_string(),
            self.kurtosis.std_error.to_string(),
            fmt_opt(self.meta.tau),
            self.meta.master_seed.to_string(),
        ]
    }
}

struct MomentSample {
    mu2: f64,
    mu4: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    tau: f64,
}

fn mean_tau(samples: &[MomentSample]) -> f64 {
    samples.iter().map(|s| s.tau).sum::<f64>() / samples.len() as f64
}

/// Sampler measurement of `√N m` at one parameter point, with no
/// restriction to the high-temperature region.
pub fn fluctuation_point(
    params: &ModelParams,
    n_disorder: usize,
    plan: &SamplerPlan,
    master_seed: u64,
    first_substream: u64,
) -> Result<FluctuationRow> {
    require_disorder(n_disorder, 10)?;
    let config = plan.resolve(params, master_seed, first_substream, 1)?;
    let beta = params.beta();
    let sqrt_n = (params.n_sites() as f64).sqrt();

    let samples = over_realizations(params, master_seed, first_substream, n_disorder, |graph, stream| {
        let out = run_chain(graph, beta, &config, &[], &stream.derive(LABEL_THERMAL))?;
        let mus: Vec<f64> = out.m_series.iter().flatten().map(|m| m * sqrt_n).collect();
        let k = mus.len() as f64;
        let avg = |f: &dyn Fn(f64) -> f64| mus.iter().map(|&x| f(x)).sum::<f64>() / k;
        Ok(MomentSample {
            mu2: avg(&|x| x * x),
            mu4: avg(&|x| x.powi(4)),
            cos: CHAR_FN_GRID.iter().map(|&u| avg(&|x| (u * x).cos())).collect(),
            sin: CHAR_FN_GRID.iter().map(|&u| avg(&|x| (u * x).sin())).collect(),
            tau: out.tau_est,
        })
    })?;

    let mu2: Vec<f64> = samples.iter().map(|s| s.mu2).collect();
    let mu4: Vec<f64> = samples.iter().map(|s| s.mu4).collect();
    let prediction = predicted_mu_variance(1, params.alpha(), beta).checked();
    let char_fn = CHAR_FN_GRID
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let cos: Vec<f64> = samples.iter().map(|s| s.cos[j]).collect();
            let sin: Vec<f64> = samples.iter().map(|s| s.sin[j]).collect();
            Ok(CharFnRow {
                u,
                re: disorder_average(&cos)?,
                im: disorder_average(&sin)?,
                predicted: prediction.map(|v| gaussian_char_fn(u, v)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FluctuationRow {
        point: params.into(),
        variance: disorder_average(&mu2)?,
        predicted_variance: prediction,
        kurtosis: kurtosis_ratio_grouped(&mu4, &mu2)?,
        predicted_kurtosis: prediction.map(|_| 3.0),
        char_fn,
        near_critical: params.beta_prime() >= NEAR_CRITICAL_BETA_PRIME,
        meta: RowMeta {
            master_seed,
            first_substream,
            n_disorder,
            method: Method::Sampler,
            sampler: Some(config),
            tau: Some(mean_tau(&samples)),
        },
    })
}

/// Distribution of `√N m` along `β'` at fixed `α`, with `β = atanh(β'/2α)`.
pub fn fluctuation_scan(
    n_sites: usize,
    beta_primes: &[f64],
    alpha: f64,
    n_disorder: usize,
    plan: &SamplerPlan,
    master_seed: u64,
) -> Result<Vec<FluctuationRow>> {
    let points = beta_primes
        .iter()
        .map(|&bp| {
            if !(bp < 1.0) {
                return Err(param(format!("fluctuation scan needs beta' < 1, got {bp}")));
            }
            ModelParams::from_beta_prime(n_sites, alpha, bp)
        })
        .collect::<Result<Vec<_>>>()?;
    points
        .iter()
        .enumerate()
        .map(|(k, p)| fluctuation_point(p, n_disorder, plan, master_seed, row_offset(k, n_disorder)))
        .collect()
}

/// Which engine measures `N⟨m²⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    /// Exact enumeration up to and including `crossover` sites, sampler above.
    Auto { crossover: usize },
    Exact,
    Sampler,
}

impl Default for MethodChoice {
    fn default() -> Self {
        MethodChoice::Auto { crossover: 20 }
    }
}

impl MethodChoice {
    fn for_size(self, n_sites: usize) -> Method {
        match self {
            MethodChoice::Auto { crossover } if n_sites <= crossover => Method::Exact,
            MethodChoice::Auto { .. } | MethodChoice::Sampler => Method::Sampler,
            MethodChoice::Exact => Method::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub point: Point,
    /// `N⟨m²⟩`
    pub variance: Estimate,
    /// The `N → ∞` limit `1/(1 − β')`.
    pub predicted_variance: Option<f64>,
    pub meta: RowMeta,
}

impl TableRow for ScalingRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "alpha",
            "beta",
            "beta_prime",
            "method",
            "n_measured_variance",
            "stderr",
            "predicted_variance",
            "tau",
            "seed",
            "first_substream",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.point.n_sites.to_string(),
            self.point.alpha.to_string(),
            self.point.beta.to_string(),
            self.point.beta_prime.to_string(),
            self.meta.method.as_str().to_string(),
            self.variance.mean.to_string(),
            self.variance.std_error.to_string(),
            fmt_opt(self.predicted_variance),
            fmt_opt(self.meta.tau),
            self.meta.master_seed.to_string(),
            self.meta.first_substream.to_string(),
        ]
    }
}

/// `N⟨m²⟩` across system sizes at fixed `(α, β)`.
pub fn scaling_study(
    n_grid: &[usize],
    alpha: f64,
    beta: f64,
    n_disorder: usize,
    method: MethodChoice,
    plan: &SamplerPlan,
    master_seed: u64,
) -> Result<Vec<ScalingRow>> {
    require_disorder(n_disorder, 2)?;
    if let MethodChoice::Auto { crossover } = method {
        if crossover > DEFAULT_ENUMERATION_CAP {
            return Err(param(format!(
                "crossover {crossover} exceeds the enumeration cap {DEFAULT_ENUMERATION_CAP}"
            )));
        }
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let params = ModelParams::new(n, alpha, beta)?;
            if !params.is_high_temperature() {
                return Err(param(format!(
                    "scaling study needs beta' < 1, got {}",
                    params.beta_prime()
                )));
            }
            let first = row_offset(k, n_disorder);
            let predicted = predicted_mu_variance(1, alpha, beta).checked();
            match method.for_size(n) {
                Method::Exact => {
                    let values = over_realizations(&params, master_seed, first, n_disorder, |graph, _| {
                        let dos = DensityOfStates::enumerate(graph, DEFAULT_ENUMERATION_CAP)?;
                        Ok(dos.magnetization_moments(beta).0 * n as f64)
                    })?;
                    Ok(ScalingRow {
                        point: (&params).into(),
                        variance: disorder_average(&values)?,
                        predicted_variance: predicted,
                        meta: RowMeta::exact(master_seed, first, n_disorder),
                    })
                }
                Method::Sampler => {
                    let row = fluctuation_point(&params, n_disorder, plan, master_seed, first)?;
                    Ok(ScalingRow {
                        point: row.point,
                        variance: row.variance,
                        predicted_variance: predicted,
                        meta: row.meta,
                    })
                }
            }
        })
        .collect()
}

/// A pair of replica subsets whose rescaled overlaps are correlated;
/// identical subsets give a variance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapProbe {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl OverlapProbe {
    pub fn variance(subset: Vec<usize>) -> Self {
        Self {
            a: subset.clone(),
            b: subset,
        }
    }

    pub fn covariance(a: Vec<usize>, b: Vec<usize>) -> Self {
        Self { a, b }
    }

    pub fn is_variance(&self) -> bool {
        self.a == self.b
    }

    fn n_replicas(&self) -> usize {
        self.a.iter().chain(&self.b).max().map_or(0, |m| m + 1)
    }
}

fn subset_label(s: &[usize]) -> String {
    s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

/// For each order `n`: the variance of `q_{0⋯n−1}`, its covariance with the
/// disjoint `q_{n⋯2n−1}`, and (for `n ≥ 2`) with the shifted `q_{1⋯n}`;
/// plus, for consecutive orders `n < m`, the covariance of `q_{0⋯n−1}` with
/// `q_{0⋯m−1}`, which share replicas.
pub fn standard_overlap_probes(n_values: &[usize]) -> Vec<OverlapProbe> {
    let range = |lo: usize, hi: usize| (lo..hi).collect::<Vec<_>>();
    let mut probes = Vec::new();
    for &n in n_values {
        probes.push(OverlapProbe::variance(range(0, n)));
        probes.push(OverlapProbe::covariance(range(0, n), range(n, 2 * n)));
        if n >= 2 {
            probes.push(OverlapProbe::covariance(range(0, n), range(1, n + 1)));
        }
    }
    for w in n_values.windows(2) {
        if w[0] != w[1] {
            probes.push(OverlapProbe::covariance(range(0, w[0]), range(0, w[1])));
        }
    }
    probes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub point: Point,
    pub subset_a: Vec<usize>,
    pub subset_b: Vec<usize>,
    /// `N⟨q_a q_b⟩`
    pub measured: Estimate,
    pub predicted: Option<f64>,
    pub meta: RowMeta,
}

impl TableRow for OverlapRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "alpha",
            "beta",
            "beta_prime",
            "subset_a",
            "subset_b",
            "order_a",
            "order_b",
            "kind",
            "measured",
            "stderr",
            "predicted",
            "tau",
            "seed",
        ]
    }

    fn record(&self) -> Vec<String> {
        let kind = if self.subset_a == self.subset_b {
            "variance"
        } else {
            "covariance"
        };
        vec![
            self.point.n_sites.to_string(),
            self.point.alpha.to_string(),
            self.point.beta.to_string(),
            self.point.beta_prime.to_string(),
            subset_label(&self.subset_a),
            subset_label(&self.subset_b),
            self.subset_a.len().to_string(),
            self.subset_b.len().to_string(),
            kind.to_string(),
            self.measured.mean.to_string(),
            self.measured.std_error.to_string(),
            fmt_opt(self.predicted),
            fmt_opt(self.meta.tau),
            self.meta.master_seed.to_string(),
        ]
    }
}

/// Variances and cross-covariances of rescaled multi-overlaps, all measured
/// on the same replica snapshots.
///
/// Unlike the other scans this does not reject `β' ≥ 1`: overlaps of order
/// `n ≥ 2` stay finite past the critical line of `m`, and predictions carry
/// their own validity.
pub fn overlap_covariance_study(
    probes: &[OverlapProbe],
    params: &ModelParams,
    n_disorder: usize,
    plan: &SamplerPlan,
    master_seed: u64,
) -> Result<Vec<OverlapRow>> {
    require_disorder(n_disorder, 2)?;
    if probes.is_empty() {
        return Err(param("no overlap probes given"));
    }
    if probes.iter().any(|p| p.a.is_empty() || p.b.is_empty()) {
        return Err(param("empty replica subset"));
    }
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let mut index_of = |s: &Vec<usize>| match subsets.iter().position(|t| t == s) {
        Some(i) => i,
        None => {
            subsets.push(s.clone());
            subsets.len() - 1
        }
    };
    let pairs: Vec<(usize, usize)> = probes.iter().map(|p| (index_of(&p.a), index_of(&p.b))).collect();
    let min_replicas = probes.iter().map(OverlapProbe::n_replicas).max().unwrap_or(1);
    let config: SamplerConfig = plan.resolve(params, master_seed, 0, min_replicas)?;
    let beta = params.beta();
    let n = params.n_sites() as f64;

    let per_realization = over_realizations(params, master_seed, 0, n_disorder, |graph, stream| {
        let out = run_chain(graph, beta, &config, &subsets, &stream.derive(LABEL_THERMAL))?;
        let k = out.q_series.len() as f64;
        let products = pairs
            .iter()
            .map(|&(i, j)| out.q_series.iter().map(|q| n * q[i] * q[j]).sum::<f64>() / k)
            .collect::<Vec<f64>>();
        Ok((products, out.tau_est))
    })?;

    let tau = per_realization.iter().map(|(_, t)| t).sum::<f64>() / n_disorder as f64;
    let alpha = params.alpha();
    probes
        .iter()
        .enumerate()
        .map(|(j, probe)| {
            let values: Vec<f64> = per_realization.iter().map(|(v, _)| v[j]).collect();
            let va = predicted_mu_variance(probe.a.len() as u32, alpha, beta);
            let vb = predicted_mu_variance(probe.b.len() as u32, alpha, beta);
            let predicted = if probe.is_variance() {
                va.checked()
            } else {
                (va.valid && vb.valid).then_some(0.0)
            };
            Ok(OverlapRow {
                point: params.into(),
                subset_a: probe.a.clone(),
                subset_b: probe.b.clone(),
                measured: disorder_average(&values)?,
                predicted,
                meta: RowMeta {
                    master_seed,
                    first_substream: 0,
                    n_disorder,
                    method: Method::Sampler,
                    sampler: Some(config),
                    tau: Some(tau),
                },
            })
        })
        .collect()
}
