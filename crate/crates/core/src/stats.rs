//! Estimators over thermal and disorder samples.
//!
//! Quenched averages `⟨·⟩ = EΩ(·)` are formed in two levels: each disorder
//! realization contributes its thermal mean, and the error bar comes from the
//! scatter of those means across realizations. That scatter already contains
//! the thermal noise of each mean, so no separate propagation is needed.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// A mean with its standard error and the number of samples behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            n_samples: 1,
        }
    }

    /// True when the error bar is zero because there was nothing to scatter:
    /// one sample, or all samples identical.
    pub fn is_degenerate(&self) -> bool {
        self.std_error == 0.0
    }

    /// `sqrt(σ_a² + σ_b²)`, the error of a difference of independent estimates.
    pub fn joint_error(&self, other: &Estimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// `self − other` assuming independence.
    pub fn minus(&self, other: &Estimate) -> Estimate {
        Estimate {
            mean: self.mean - other.mean,
            std_error: self.joint_error(other),
            n_samples: self.n_samples.min(other.n_samples),
        }
    }

    pub fn shifted(&self, offset: f64) -> Estimate {
        Estimate {
            mean: self.mean + offset,
            ..*self
        }
    }

    pub fn scaled(&self, factor: f64) -> Estimate {
        Estimate {
            mean: self.mean * factor,
            std_error: self.std_error * factor.abs(),
            n_samples: self.n_samples,
        }
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean and `s/√M` over per-realization values.
pub fn disorder_average(values: &[f64]) -> Result<Estimate> {
    if values.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    let m = values.len();
    let mu = mean(values);
    if m == 1 {
        return Ok(Estimate::exact(mu));
    }
    let ss: f64 = values.iter().map(|x| (x - mu).powi(2)).sum();
    Ok(Estimate {
        mean: mu,
        std_error: (ss / (m - 1) as f64 / m as f64).sqrt(),
        n_samples: m,
    })
}

fn jackknife_from_replicates(full: f64, replicates: &[f64]) -> Estimate {
    let n = replicates.len() as f64;
    let avg = mean(replicates);
    let ss: f64 = replicates.iter().map(|t| (t - avg).powi(2)).sum();
    Estimate {
        mean: n * full - (n - 1.0) * avg,
        std_error: ((n - 1.0) / n * ss).sqrt(),
        n_samples: replicates.len(),
    }
}

/// Leave-one-out jackknife of an arbitrary reduction. The returned mean is
/// the bias-corrected `nθ − (n−1)θ̄`.
pub fn jackknife<F>(values: &[f64], statistic: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    if values.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            found: values.len(),
        });
    }
    let full = statistic(values);
    let mut scratch = Vec::with_capacity(values.len() - 1);
    let replicates: Vec<f64> = (0..values.len())
        .map(|i| {
            scratch.clear();
            scratch.extend_from_slice(&values[..i]);
            scratch.extend_from_slice(&values[i + 1..]);
            statistic(&scratch)
        })
        .collect();
    Ok(jackknife_from_replicates(full, &replicates))
}

/// Leave-one-out jackknife of `f(mean(a), mean(b))` in O(n), for statistics
/// that only depend on two sample means.
pub fn jackknife_two_means<F>(a: &[f64], b: &[f64], f: F) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
{
    if a.len() != b.len() {
        return Err(param("paired inputs differ in length"));
    }
    let n = a.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: n });
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let full = f(sa / n as f64, sb / n as f64);
    let m = (n - 1) as f64;
    let replicates: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| f((sa - x) / m, (sb - y) / m))
        .collect();
    Ok(jackknife_from_replicates(full, &replicates))
}

/// `⟨x⁴⟩/⟨x²⟩²` from per-unit fourth and second moments, jackknifed over
/// units. Equals 3 for a centered Gaussian.
pub fn kurtosis_ratio_grouped(fourth: &[f64], second: &[f64]) -> Result<Estimate> {
    if fourth.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            found: fourth.len(),
        });
    }
    if second.iter().all(|&x| x == 0.0) {
        return Err(param("kurtosis ratio of a zero-variance sample"));
    }
    jackknife_two_means(fourth, second, |m4, m2| m4 / (m2 * m2))
}

/// `⟨x⁴⟩/⟨x²⟩²` of raw samples with a leave-one-out jackknife error.
pub fn kurtosis_ratio(samples: &[f64]) -> Result<Estimate> {
    let second: Vec<f64> = samples.iter().map(|x| x * x).collect();
    let fourth: Vec<f64> = second.iter().map(|x| x * x).collect();
    kurtosis_ratio_grouped(&fourth, &second)
}

/// Estimates of `E cos(ux)` and `E sin(ux)` at one `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFnPoint {
    pub u: f64,
    pub re: Estimate,
    pub im: Estimate,
}

/// Empirical characteristic function on `u_grid`.
pub fn empirical_char_fn(samples: &[f64], u_grid: &[f64]) -> Result<Vec<CharFnPoint>> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    u_grid
        .iter()
        .map(|&u| {
            let cos: Vec<f64> = samples.iter().map(|x| (u * x).cos()).collect();
            let sin: Vec<f64> = samples.iter().map(|x| (u * x).sin()).collect();
            Ok(CharFnPoint {
                u,
                re: disorder_average(&cos)?,
                im: disorder_average(&sin)?,
            })
        })
        .collect()
}

/// Integrated autocorrelation time `τ = 1/2 + Σ_{t≥1} ρ(t)` of a series,
/// in units of its sampling interval, using Sokal's self-consistent window
/// `W ≥ c·τ(W)` with `c = 6`. An uncorrelated series gives about 1/2.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    const WINDOW_FACTOR: f64 = 6.0;
    let n = series.len();
    if n < 4 {
        return 0.5;
    }
    let mu = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - mu).collect();
    let c0 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let ct = centered[..n - t]
            .iter()
            .zip(&centered[t..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if t as f64 >= WINDOW_FACTOR * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Mean of a correlated time series with error `sqrt(2τ s²/n)`.
pub fn time_series_mean(series: &[f64]) -> Result<Estimate> {
    let naive = disorder_average(series)?;
    let tau = integrated_autocorrelation_time(series);
    Ok(Estimate {
        std_error: naive.std_error * (2.0 * tau).sqrt(),
        ..naive
    })
}
