use serde::{Deserialize, Serialize};

use super::{fmt_opt, over_realizations, require_disorder, row_offset, Point, RowMeta, TableRow};
use crate::error::{param, Error, Result};
use crate::exact::{alpha_derivative_check, cw_pressure_finite, partition_function, DensityOfStates, DEFAULT_ENUMERATION_CAP};
use crate::model::ModelParams;
use crate::stats::{disorder_average, Estimate};
use crate::theory::{cw_pressure, symmetric_pressure};

fn check_size(n_sites: usize) -> Result<()> {
    if n_sites > DEFAULT_ENUMERATION_CAP {
        return Err(Error::Capacity {
            n_sites,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    Ok(())
}

fn quenched_row_pressure(params: &ModelParams, n_disorder: usize, master_seed: u64, first: u64) -> Result<Estimate> {
    let n = params.n_sites() as f64;
    let beta = params.beta();
    let values = over_realizations(params, master_seed, first, n_disorder, |graph, _| {
        Ok(partition_function(graph, beta)? / n)
    })?;
    disorder_average(&values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwLimitRow {
    pub point: Point,
    /// `A_N(α, β(α))`
    pub pressure: Estimate,
    pub symmetric: f64,
    /// `A^CW_N(β')` by enumeration over magnetization shells
    pub cw_finite: f64,
    /// `N → ∞` Curie–Weiss pressure
    pub cw_infinite: f64,
    /// `A_N − A^CW_N`
    pub gap: Estimate,
    pub meta: RowMeta,
}

impl TableRow for CwLimitRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "alpha",
            "beta",
            "beta_prime",
            "pressure",
            "stderr",
            "symmetric_pressure",
            "cw_finite",
            "cw_infinite",
            "gap",
            "gap_err",
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
            self.pressure.mean.to_string(),
            self.pressure.std_error.to_string(),
            self.symmetric.to_string(),
            self.cw_finite.to_string(),
            self.cw_infinite.to_string(),
            self.gap.mean.to_string(),
            self.gap.std_error.to_string(),
            self.meta.master_seed.to_string(),
            self.meta.first_substream.to_string(),
        ]
    }
}

/// Quenched pressure along increasing `α` at fixed `β'`, against the
/// Curie–Weiss pressure at the same `β'`.
pub fn cw_limit_study(
    beta_prime: f64,
    alphas: &[f64],
    n_sites: usize,
    n_disorder: usize,
    master_seed: u64,
) -> Result<Vec<CwLimitRow>> {
    require_disorder(n_disorder, 2)?;
    check_size(n_sites)?;
    let cw_finite = cw_pressure_finite(n_sites, beta_prime);
    alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let params = ModelParams::from_beta_prime(n_sites, alpha, beta_prime)?;
            let first = row_offset(k, n_disorder);
            let pressure = quenched_row_pressure(&params, n_disorder, master_seed, first)?;
            Ok(CwLimitRow {
                point: (&params).into(),
                pressure,
                symmetric: symmetric_pressure(alpha, params.beta()),
                cw_finite,
                cw_infinite: cw_pressure(beta_prime),
                gap: pressure.shifted(-cw_finite),
                meta: RowMeta::exact(master_seed, first, n_disorder),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureGapRow {
    pub point: Point,
    pub pressure: Estimate,
    pub symmetric: f64,
    /// `A_N − Ã_S`, non-negative in expectation
    pub gap: Estimate,
    /// `N (A_N − Ã_S)`
    pub n_gap: Estimate,
    /// `A^CW_N(β') − ln 2`
    pub cw_gap: f64,
    /// `(A^CW_N(β') − ln 2) − (A_N − Ã_S)`, non-negative in expectation
    pub margin: Estimate,
    pub meta: RowMeta,
}

impl TableRow for PressureGapRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "alpha",
            "beta",
            "beta_prime",
            "pressure",
            "stderr",
            "symmetric_pressure",
            "gap",
            "gap_err",
            "n_gap",
            "n_gap_err",
            "cw_gap",
            "margin",
            "margin_err",
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
            self.pressure.mean.to_string(),
            self.pressure.std_error.to_string(),
            self.symmetric.to_string(),
            self.gap.mean.to_string(),
            self.gap.std_error.to_string(),
            self.n_gap.mean.to_string(),
            self.n_gap.std_error.to_string(),
            self.cw_gap.to_string(),
            self.margin.mean.to_string(),
            self.margin.std_error.to_string(),
            self.meta.master_seed.to_string(),
            self.meta.first_substream.to_string(),
        ]
    }
}

/// `A_N` against the symmetric pressure and the Curie–Weiss comparison bound
/// across system sizes.
pub fn pressure_gap_study(
    n_grid: &[usize],
    alpha: f64,
    beta: f64,
    n_disorder: usize,
    master_seed: u64,
) -> Result<Vec<PressureGapRow>> {
    require_disorder(n_disorder, 2)?;
    for &n in n_grid {
        check_size(n)?;
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let params = ModelParams::new(n, alpha, beta)?;
            let first = row_offset(k, n_disorder);
            let pressure = quenched_row_pressure(&params, n_disorder, master_seed, first)?;
            let symmetric = symmetric_pressure(alpha, beta);
            let gap = pressure.shifted(-symmetric);
            let cw_gap = cw_pressure_finite(n, params.beta_prime()) - std::f64::consts::LN_2;
            Ok(PressureGapRow {
                point: (&params).into(),
                pressure,
                symmetric,
                gap,
                n_gap: gap.scaled(n as f64),
                cw_gap,
                margin: gap.scaled(-1.0).shifted(cw_gap),
                meta: RowMeta::exact(master_seed, first, n_disorder),
            })
        })
        .collect()
}

/// `λ(α) = λ₀ − β'`, the perturbation strength at which `Ā` stays within
/// `O(1/N)` of the symmetric pressure.
pub fn perturbed_proof_lambda(lambda0: f64, beta_prime: f64) -> Result<f64> {
    if !(beta_prime < lambda0 && lambda0 < 1.0) {
        return Err(param(format!(
            "need beta' < lambda0 < 1, got beta' = {beta_prime}, lambda0 = {lambda0}"
        )));
    }
    Ok(lambda0 - beta_prime)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedRow {
    pub point: Point,
    pub lambda: f64,
    /// `Ā(λ)`
    pub pressure: Estimate,
    /// `N (Ā(λ) − A_N)`, paired per realization
    pub n_excess: Estimate,
    /// `N (Ā(λ) − Ã_S)`
    pub n_excess_symmetric: Estimate,
    /// Upper bound on `E N(Ā(λ) − Ã_S)`, `½ ln(1/(1 − λ₀))`, attached when
    /// `λ ≤ λ₀ − β'`.
    pub bound: Option<f64>,
    /// Realizations with `Ā(λ) < Ā(0)`
    pub monotone_violations: usize,
    /// Realizations where the slope of `Ā` decreases across this grid point
    pub convexity_violations: usize,
    pub meta: RowMeta,
}

impl TableRow for PerturbedRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "alpha",
            "beta",
            "beta_prime",
            "lambda",
            "pressure",
            "stderr",
            "n_excess",
            "n_excess_err",
            "n_excess_symmetric",
            "n_excess_symmetric_err",
            "bound",
            "monotone_violations",
            "convexity_violations",
            "seed",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.point.n_sites.to_string(),
            self.point.alpha.to_string(),
            self.point.beta.to_string(),
            self.point.beta_prime.to_string(),
            self.lambda.to_string(),
            self.pressure.mean.to_string(),
            self.pressure.std_error.to_string(),
            self.n_excess.mean.to_string(),
            self.n_excess.std_error.to_string(),
            self.n_excess_symmetric.mean.to_string(),
            self.n_excess_symmetric.std_error.to_string(),
            fmt_opt(self.bound),
            self.monotone_violations.to_string(),
            self.convexity_violations.to_string(),
            self.meta.master_seed.to_string(),
        ]
    }
}

// Relative slack for comparisons that hold exactly in real arithmetic.
const EXACT_SLACK: f64 = 1e-12;

/// `Ā(λ) = (1/N) E ln Σ exp(−βH + λN m²/2)` on a strictly increasing grid in
/// `[0, 1]`, with per-realization monotonicity and convexity checks. All
/// grid points share the same realizations.
pub fn perturbed_pressure_study(
    lambdas: &[f64],
    lambda0: Option<f64>,
    params: &ModelParams,
    n_disorder: usize,
    master_seed: u64,
) -> Result<Vec<PerturbedRow>> {
    require_disorder(n_disorder, 2)?;
    check_size(params.n_sites())?;
    if !params.is_high_temperature() {
        return Err(param(format!("perturbed pressure needs beta' < 1, got {}", params.beta_prime())));
    }
    if lambdas.is_empty() {
        return Err(param("empty lambda grid"));
    }
    if let Some(&bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(param(format!("lambda must lie in [0, 1], got {bad}")));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("lambda grid must be strictly increasing"));
    }
    let proof_lambda = lambda0.map(|l0| perturbed_proof_lambda(l0, params.beta_prime())).transpose()?;

    let n = params.n_sites() as f64;
    let beta = params.beta();
    let per_realization = over_realizations(params, master_seed, 0, n_disorder, |graph, _| {
        let dos = DensityOfStates::enumerate(graph, DEFAULT_ENUMERATION_CAP)?;
        let a0 = dos.perturbed_pressure(beta, 0.0);
        let values: Vec<f64> = lambdas.iter().map(|&l| dos.perturbed_pressure(beta, l)).collect();
        Ok((a0, values))
    })?;

    let symmetric = symmetric_pressure(params.alpha(), beta);
    let k = lambdas.len();
    let mut monotone = vec![0usize; k];
    let mut convex = vec![0usize; k];
    for (a0, values) in &per_realization {
        for j in 0..k {
            if values[j] < a0 - EXACT_SLACK * a0.abs() {
                monotone[j] += 1;
            }
            if j > 0 && j + 1 < k {
                let left = (values[j] - values[j - 1]) / (lambdas[j] - lambdas[j - 1]);
                let right = (values[j + 1] - values[j]) / (lambdas[j + 1] - lambdas[j]);
                let scale = values[j].abs() / (lambdas[j + 1] - lambdas[j - 1]);
                if right < left - EXACT_SLACK * scale {
                    convex[j] += 1;
                }
            }
        }
    }

    (0..k)
        .map(|j| {
            let pressure: Vec<f64> = per_realization.iter().map(|(_, v)| v[j]).collect();
            let excess: Vec<f64> = per_realization.iter().map(|(a0, v)| n * (v[j] - a0)).collect();
            let pressure = disorder_average(&pressure)?;
            Ok(PerturbedRow {
                point: params.into(),
                lambda: lambdas[j],
                pressure,
                n_excess: disorder_average(&excess)?,
                n_excess_symmetric: pressure.shifted(-symmetric).scaled(n),
                bound: match (lambda0, proof_lambda) {
                    (Some(l0), Some(pl)) if lambdas[j] <= pl + EXACT_SLACK => Some(0.5 * (1.0 / (1.0 - l0)).ln()),
                    _ => None,
                },
                monotone_violations: monotone[j],
                convexity_violations: convex[j],
                meta: RowMeta::exact(master_seed, 0, n_disorder),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRow {
    pub point: Point,
    pub d_alpha: f64,
    /// Central difference of `A_N` in `α`
    pub lhs: Estimate,
    /// `ln cosh β + E ln(1 + Ω(σ_{i0}σ_{j0}) tanh β)`
    pub rhs: Estimate,
    pub difference: Estimate,
    pub meta: RowMeta,
}

impl TableRow for DerivativeRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "alpha",
            "beta",
            "beta_prime",
            "d_alpha",
            "lhs",
            "lhs_err",
            "rhs",
            "rhs_err",
            "difference",
            "difference_err",
            "seed",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.point.n_sites.to_string(),
            self.point.alpha.to_string(),
            self.point.beta.to_string(),
            self.point.beta_prime.to_string(),
            self.d_alpha.to_string(),
            self.lhs.mean.to_string(),
            self.lhs.std_error.to_string(),
            self.rhs.mean.to_string(),
            self.rhs.std_error.to_string(),
            self.difference.mean.to_string(),
            self.difference.std_error.to_string(),
            self.meta.master_seed.to_string(),
        ]
    }
}

/// Both sides of the `α`-derivative identity as a reportable row.
pub fn derivative_identity_study(
    params: &ModelParams,
    d_alpha: f64,
    n_disorder: usize,
    master_seed: u64,
) -> Result<DerivativeRow> {
    let (lhs, rhs) = alpha_derivative_check(params, n_disorder, d_alpha, master_seed)?;
    Ok(DerivativeRow {
        point: params.into(),
        d_alpha,
        lhs,
        rhs,
        difference: lhs.minus(&rhs),
        meta: RowMeta::exact(master_seed, 0, n_disorder),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn free_spins_have_no_gap() {
        let rows = pressure_gap_study(&[6, 10], 0.0, 0.7, 4, 1).unwrap();
        for r in rows {
            assert!(r.gap.mean.abs() < 1e-12, "{r:?}");
            assert_eq!(r.meta.n_disorder, 4);
        }
    }

    #[test]
    fn gap_rows_reject_large_systems() {
        assert!(matches!(
            pressure_gap_study(&[8, 40], 1.0, 0.1, 4, 1),
            Err(Error::Capacity { n_sites: 40, .. })
        ));
    }

    #[test]
    fn cw_rows_share_the_reference() {
        let rows = cw_limit_study(0.5, &[0.5, 2.0], 8, 20, 4).unwrap();
        assert_eq!(rows[0].cw_finite, rows[1].cw_finite);
        assert_eq!(rows[0].cw_infinite, LN_2);
        assert_eq!(rows[1].meta.first_substream, 20);
        for r in &rows {
            assert!((r.gap.mean - (r.pressure.mean - r.cw_finite)).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_grid_checks() {
        let params = ModelParams::from_beta_prime(10, 1.0, 0.5).unwrap();
        let grid = [0.0, 0.1, 0.25, 0.5, 0.75, 1.0];
        let rows = perturbed_pressure_study(&grid, Some(0.75), &params, 30, 2).unwrap();
        assert_eq!(rows[0].n_excess.mean, 0.0);
        assert_eq!(rows[0].n_excess.std_error, 0.0);
        for r in &rows {
            assert_eq!(r.monotone_violations, 0);
            assert_eq!(r.convexity_violations, 0);
            assert_eq!(r.bound.is_some(), r.lambda <= 0.25 + 1e-12);
        }
        let strictly = rows.windows(2).all(|w| w[1].pressure.mean > w[0].pressure.mean);
        assert!(strictly);
    }

    #[test]
    fn perturbed_input_validation() {
        let params = ModelParams::from_beta_prime(8, 1.0, 0.5).unwrap();
        assert!(perturbed_pressure_study(&[0.0, 1.5], None, &params, 4, 1).is_err());
        assert!(perturbed_pressure_study(&[0.5, 0.2], None, &params, 4, 1).is_err());
        assert!(perturbed_pressure_study(&[0.0], Some(0.4), &params, 4, 1).is_err());
        let hot = ModelParams::from_beta_prime(8, 1.0, 1.2).unwrap();
        assert!(perturbed_pressure_study(&[0.0], None, &hot, 4, 1).is_err());
        assert_eq!(perturbed_proof_lambda(0.75, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn derivative_row_at_infinite_temperature() {
        let params = ModelParams::new(8, 0.5, 0.0).unwrap();
        let row = derivative_identity_study(&params, 0.1, 20, 3).unwrap();
        assert!(row.lhs.mean.abs() < 1e-12);
        assert_eq!(row.rhs.mean, 0.0);
    }
}
