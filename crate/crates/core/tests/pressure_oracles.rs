use std::f64::consts::LN_2;

use dilute::exact::{
    alpha_derivative_check, cw_pressure_finite, partition_function, quenched_pressure, DensityOfStates,
    DEFAULT_ENUMERATION_CAP,
};
use dilute::experiments::{perturbed_pressure_study, perturbed_proof_lambda, scaling_study, MethodChoice, SamplerPlan};
use dilute::theory::{beta_from_beta_prime, symmetric_pressure};
use dilute::{sample_graph, substream, DiluteGraph, ModelParams};

#[test]
fn derivative_identity_without_edges() {
    // with no edges Ω(σ_iσ_j) = δ_ij, so only the N diagonal pairs contribute
    let (n, beta) = (12, 0.3f64);
    let params = ModelParams::new(n, 0.0, beta).unwrap();
    let (lhs, rhs) = alpha_derivative_check(&params, 20_000, 0.05, 4).unwrap();
    let expected = beta.cosh().ln() + (1.0 + beta.tanh()).ln() / n as f64;
    assert!((rhs.mean - expected).abs() < 1e-12, "{rhs:?} vs {expected}");
    assert!(rhs.std_error < 1e-12);
    assert!((lhs.mean - rhs.mean).abs() < 3.0 * lhs.joint_error(&rhs), "{lhs:?} vs {rhs:?}");
}

#[test]
fn derivative_identity_at_finite_connectivity() {
    let params = ModelParams::new(12, 0.5, 0.3).unwrap();
    let (lhs, rhs) = alpha_derivative_check(&params, 10_000, 0.05, 8).unwrap();
    assert!((lhs.mean - rhs.mean).abs() < 4.0 * lhs.joint_error(&rhs), "{lhs:?} vs {rhs:?}");
}

#[test]
fn quenched_pressure_is_seed_stable() {
    let params = ModelParams::new(16, 1.0, 0.4).unwrap();
    let a = quenched_pressure(&params, 10_000, 1).unwrap();
    let b = quenched_pressure(&params, 10_000, 2).unwrap();
    assert!((a.mean - b.mean).abs() < 4.0 * a.joint_error(&b), "{a:?} vs {b:?}");
    assert!(a.mean >= symmetric_pressure(1.0, 0.4) - 4.0 * a.std_error);
}

#[test]
fn log_partition_function_is_convex_in_beta() {
    let params = ModelParams::new(10, 1.5, 1.0).unwrap();
    let h = 0.05;
    for r in 0..50 {
        let g = sample_graph(&params, &mut substream(31, r)).unwrap();
        for k in 1..30 {
            let b = k as f64 * h;
            let second = partition_function(&g, b + h).unwrap() - 2.0 * partition_function(&g, b).unwrap()
                + partition_function(&g, b - h).unwrap();
            assert!(second >= -1e-10, "realization {r}, beta {b}: {second}");
        }
    }
}

#[test]
fn rescaled_magnetization_stays_bounded_on_small_sizes() {
    let beta = beta_from_beta_prime(1.0, 0.5).unwrap();
    let rows = scaling_study(&[8, 12, 16, 20], 1.0, beta, 500, MethodChoice::default(), &SamplerPlan::default(), 5)
        .unwrap();
    for r in rows {
        let cap = 1.2 / (1.0 - 0.5);
        assert!(r.variance.mean <= cap + 4.0 * r.variance.std_error, "{r:?}");
    }
}

#[test]
fn curie_weiss_enumeration_is_ln2_plus_order_one_over_n() {
    // Gaussian linearization gives N(A^CW_N − ln 2) ≤ ½ ln(1/(1 − β')) for β' < 1
    for n in [4usize, 16, 64, 256, 1024] {
        for bp in [0.2, 0.5, 0.9] {
            let excess = n as f64 * (cw_pressure_finite(n, bp) - LN_2);
            assert!(excess > 0.0 && excess <= 0.5 * (1.0 / (1.0 - bp)).ln() + 1e-12, "n {n} bp {bp}: {excess}");
        }
    }
    let n16 = 16.0 * (cw_pressure_finite(16, 0.5) - LN_2);
    assert!(n16 < 1.0);
}

#[test]
fn symmetric_pressure_approaches_ln2_along_fixed_beta_prime() {
    // α ln cosh(atanh(β'/2α)) = β'²/(8α) + O(α⁻³)
    let bp: f64 = 0.5;
    for alpha in [4.0, 16.0, 64.0, 256.0] {
        let beta = beta_from_beta_prime(alpha, bp).unwrap();
        let excess = symmetric_pressure(alpha, beta) - LN_2;
        let leading = bp * bp / (8.0 * alpha);
        assert!((excess / leading - 1.0).abs() < 0.2 / (alpha * alpha), "alpha {alpha}: {excess} vs {leading}");
    }
}

#[test]
fn perturbed_pressure_without_edges_is_curie_weiss() {
    let g = DiluteGraph::from_edges(14, vec![]).unwrap();
    let dos = DensityOfStates::enumerate(&g, DEFAULT_ENUMERATION_CAP).unwrap();
    for lambda in [0.0, 0.3, 0.75, 1.0] {
        let a = dos.perturbed_pressure(0.8, lambda);
        assert!((a - cw_pressure_finite(14, lambda)).abs() < 1e-12, "lambda {lambda}");
    }
}

#[test]
fn perturbed_pressure_obeys_its_bound() {
    let lambda0 = 0.75;
    for (alpha, n) in [(0.5, 10), (2.0, 12)] {
        let params = ModelParams::from_beta_prime(n, alpha, 0.5).unwrap();
        let pl = perturbed_proof_lambda(lambda0, 0.5).unwrap();
        let rows = perturbed_pressure_study(&[0.0, pl / 2.0, pl], Some(lambda0), &params, 1000, 3).unwrap();
        for r in rows {
            let bound = r.bound.expect("grid lies below λ0 − β'");
            let e = r.n_excess_symmetric;
            assert!(e.mean <= bound + 4.0 * e.std_error, "{r:?}");
            assert!(r.n_excess.mean >= 0.0);
        }
    }
}
