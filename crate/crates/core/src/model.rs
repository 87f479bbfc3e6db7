//! Spin configurations and observables on a fixed [`DiluteGraph`].
//!
//! Spins are bit-packed: bit `i` set means `σ_i = +1`. Padding bits past
//! `n_sites` in the last word are always zero.

use serde::{Deserialize, Serialize};

use crate::disorder::DiluteGraph;
use crate::error::{param, Error, Result};
use crate::rng::RngStream;

/// `(N, α, β)` of one model instance. `β' = 2α tanh β` is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n_sites: usize,
    alpha: f64,
    beta: f64,
}

impl ModelParams {
    pub fn new(n_sites: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(param("N must be at least 1"));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(param(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(param(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self {
            n_sites,
            alpha,
            beta,
        })
    }

    /// Parameters on the line `2α tanh β = β'` at fixed `α`.
    pub fn from_beta_prime(n_sites: usize, alpha: f64, beta_prime: f64) -> Result<Self> {
        let beta = crate::theory::beta_from_beta_prime(alpha, beta_prime)?;
        Self::new(n_sites, alpha, beta)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_prime(&self) -> f64 {
        crate::theory::beta_prime(self.alpha, self.beta)
    }

    pub fn is_high_temperature(&self) -> bool {
        self.beta_prime() < 1.0
    }

    pub fn with_n_sites(&self, n_sites: usize) -> Result<Self> {
        Self::new(n_sites, self.alpha, self.beta)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.n_sites, alpha, self.beta)
    }
}

/// One Ising configuration `σ ∈ {−1, +1}^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    n_sites: usize,
    words: Vec<u64>,
}

impl SpinConfig {
    fn n_words(n_sites: usize) -> usize {
        n_sites.div_ceil(64)
    }

    fn tail_mask(n_sites: usize) -> u64 {
        match n_sites % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    pub fn all_up(n_sites: usize) -> Self {
        let mut words = vec![u64::MAX; Self::n_words(n_sites)];
        if let Some(last) = words.last_mut() {
            *last &= Self::tail_mask(n_sites);
        }
        Self { n_sites, words }
    }

    pub fn all_down(n_sites: usize) -> Self {
        Self {
            n_sites,
            words: vec![0; Self::n_words(n_sites)],
        }
    }

    /// Independent fair spins.
    pub fn random(n_sites: usize, stream: &mut RngStream) -> Self {
        let mut words: Vec<u64> = (0..Self::n_words(n_sites)).map(|_| stream.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            *last &= Self::tail_mask(n_sites);
        }
        Self { n_sites, words }
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut cfg = Self::all_down(spins.len());
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => cfg.set(i, 1),
                -1 => {}
                other => return Err(param(format!("spin {i} is {other}, expected ±1"))),
            }
        }
        Ok(cfg)
    }

    /// The low `n_sites` bits of `bits` as a configuration; used by
    /// enumeration, where a state is an integer.
    pub fn from_bits(n_sites: usize, bits: u64) -> Self {
        assert!(n_sites <= 64);
        let mask = if n_sites == 64 { u64::MAX } else { (1u64 << n_sites) - 1 };
        Self {
            n_sites,
            words: vec![bits & mask],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        if (self.words[i >> 6] >> (i & 63)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, spin: i8) {
        let bit = 1u64 << (i & 63);
        if spin > 0 {
            self.words[i >> 6] |= bit;
        } else {
            self.words[i >> 6] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn negated(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= Self::tail_mask(self.n_sites);
        }
        Self {
            n_sites: self.n_sites,
            words,
        }
    }

    /// `Σ_i σ_i` as an exact integer.
    pub fn spin_sum(&self) -> i64 {
        let up: u32 = self.words.iter().map(|w| w.count_ones()).sum();
        2 * i64::from(up) - self.n_sites as i64
    }

    pub fn spins(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.n_sites).map(move |i| self.get(i))
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

fn check_size(graph: &DiluteGraph, sigma: &SpinConfig) -> Result<()> {
    if graph.n_sites() != sigma.n_sites() {
        return Err(Error::SizeMismatch {
            expected: graph.n_sites(),
            found: sigma.n_sites(),
        });
    }
    Ok(())
}

/// `H(σ) = −Σ_edges σ_i σ_j`, self-pairs contributing −1 each.
pub fn energy(graph: &DiluteGraph, sigma: &SpinConfig) -> Result<f64> {
    check_size(graph, sigma)?;
    let sum: i64 = graph
        .edges()
        .iter()
        .map(|&(i, j)| i64::from(sigma.get(i as usize) * sigma.get(j as usize)))
        .sum();
    Ok(-sum as f64)
}

/// Sum of neighbour spins weighted by multiplicity, self-pairs excluded.
pub fn local_field(graph: &DiluteGraph, sigma: &SpinConfig, site: usize) -> i64 {
    graph
        .incidence(site)
        .filter(|&(p, _)| p != site)
        .map(|(p, m)| i64::from(m) * i64::from(sigma.get(p)))
        .sum()
}

/// `H(σ with site flipped) − H(σ) = 2 σ_site h_site`.
pub fn energy_delta(graph: &DiluteGraph, sigma: &SpinConfig, site: usize) -> Result<f64> {
    check_size(graph, sigma)?;
    if site >= sigma.n_sites() {
        return Err(Error::IndexOutOfRange {
            index: site,
            limit: sigma.n_sites(),
        });
    }
    let h = local_field(graph, sigma, site);
    Ok((2 * i64::from(sigma.get(site)) * h) as f64)
}

pub fn magnetization(sigma: &SpinConfig) -> f64 {
    sigma.spin_sum() as f64 / sigma.n_sites() as f64
}

/// `Σ_i Π_a σ_i^(a)` over the replicas in `configs`, word by word.
///
/// With bit 1 meaning +1, the product at a site is −1 exactly when an odd
/// number of replicas hold a 0 bit there; XOR-ing the words gives the parity
/// of the 1 bits, from which the parity of the 0 bits follows from `n`.
pub(crate) fn overlap_sum(configs: &[&SpinConfig]) -> i64 {
    let n_sites = configs[0].n_sites;
    let n_words = configs[0].words.len();
    let flip_parity = configs.len() % 2 == 1;
    let mut agree = 0u64;
    for w in 0..n_words {
        let mut x = 0u64;
        for c in configs {
            x ^= c.words[w];
        }
        if !flip_parity {
            x = !x;
        }
        if w + 1 == n_words {
            x &= SpinConfig::tail_mask(n_sites);
        }
        agree += u64::from(x.count_ones());
    }
    2 * agree as i64 - n_sites as i64
}

/// `q_{1⋯n} = (1/N) Σ_i Π_a σ_i^(a)`; for one replica this is the
/// magnetization.
pub fn multi_overlap(configs: &[SpinConfig]) -> Result<f64> {
    let first = configs.first().ok_or_else(|| param("multi_overlap of an empty list"))?;
    for c in configs {
        if c.n_sites != first.n_sites {
            return Err(Error::SizeMismatch {
                expected: first.n_sites,
                found: c.n_sites,
            });
        }
    }
    let refs: Vec<&SpinConfig> = configs.iter().collect();
    Ok(overlap_sum(&refs) as f64 / first.n_sites as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::sample_graph;
    use crate::rng::substream;
    use proptest::prelude::*;

    fn pair_graph() -> DiluteGraph {
        DiluteGraph::from_edges(2, vec![(0, 1)]).unwrap()
    }

    #[test]
    fn params_validate_and_derive() {
        assert!(ModelParams::new(0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(3, -1.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1.0, f64::NAN).is_err());
        let p = ModelParams::new(10, 0.25, 0.5f64.atanh()).unwrap();
        assert!((p.beta_prime() - 0.25).abs() < 1e-15);
        assert!(p.is_high_temperature());
        let q = ModelParams::from_beta_prime(10, 2.0, 0.5).unwrap();
        assert!((q.beta_prime() - 0.5).abs() < 1e-12);
        assert!(ModelParams::from_beta_prime(10, 0.2, 0.5).is_err());
    }

    #[test]
    fn empty_graph_has_zero_energy() {
        let g = DiluteGraph::from_edges(5, vec![]).unwrap();
        let mut s = substream(1, 0);
        for _ in 0..10 {
            let sigma = SpinConfig::random(5, &mut s);
            assert_eq!(energy(&g, &sigma).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_edge_energies() {
        let g = pair_graph();
        let up = SpinConfig::from_spins(&[1, 1]).unwrap();
        let mixed = SpinConfig::from_spins(&[1, -1]).unwrap();
        assert_eq!(energy(&g, &up).unwrap(), -1.0);
        assert_eq!(energy(&g, &mixed).unwrap(), 1.0);
        assert_eq!(energy_delta(&g, &up, 0).unwrap(), 2.0);
    }

    #[test]
    fn self_loops_shift_energy_only() {
        let g = DiluteGraph::from_edges(2, vec![(0, 0), (0, 1)]).unwrap();
        let up = SpinConfig::from_spins(&[1, 1]).unwrap();
        let mixed = SpinConfig::from_spins(&[-1, 1]).unwrap();
        assert_eq!(energy(&g, &up).unwrap(), -2.0);
        assert_eq!(energy(&g, &mixed).unwrap(), 0.0);
        assert_eq!(energy_delta(&g, &up, 0).unwrap(), 2.0);
    }

    #[test]
    fn isolated_site_delta_is_zero() {
        let g = DiluteGraph::from_edges(3, vec![(0, 1), (2, 2)]).unwrap();
        let sigma = SpinConfig::from_spins(&[1, -1, 1]).unwrap();
        assert_eq!(energy_delta(&g, &sigma, 2).unwrap(), 0.0);
        assert!(energy_delta(&g, &sigma, 3).is_err());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let g = pair_graph();
        let sigma = SpinConfig::all_up(3);
        assert!(matches!(energy(&g, &sigma), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn delta_matches_recomputation() {
        let p = ModelParams::new(40, 1.5, 0.3).unwrap();
        let mut s = substream(21, 0);
        for _ in 0..1000 {
            let g = sample_graph(&p, &mut s).unwrap();
            let sigma = SpinConfig::random(40, &mut s);
            let site = s.next_below(40) as usize;
            let mut flipped = sigma.clone();
            flipped.flip(site);
            let brute = energy(&g, &flipped).unwrap() - energy(&g, &sigma).unwrap();
            assert_eq!(energy_delta(&g, &sigma, site).unwrap(), brute);
        }
    }

    #[test]
    fn magnetization_basics() {
        assert_eq!(magnetization(&SpinConfig::all_up(7)), 1.0);
        assert_eq!(magnetization(&SpinConfig::all_up(130)), 1.0);
        let alt: Vec<i8> = (0..10).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        assert_eq!(magnetization(&SpinConfig::from_spins(&alt).unwrap()), 0.0);
    }

    #[test]
    fn overlap_special_cases() {
        let mut s = substream(4, 4);
        let sigma = SpinConfig::random(77, &mut s);
        assert_eq!(multi_overlap(&[sigma.clone()]).unwrap(), magnetization(&sigma));
        assert_eq!(multi_overlap(&[sigma.clone(), sigma.clone()]).unwrap(), 1.0);
        assert_eq!(multi_overlap(&[sigma.clone(), sigma.negated()]).unwrap(), -1.0);
        assert!(multi_overlap(&[]).is_err());
        assert!(multi_overlap(&[sigma, SpinConfig::all_up(5)]).is_err());
    }

    fn naive_overlap(configs: &[SpinConfig]) -> f64 {
        let n = configs[0].n_sites();
        let total: i64 = (0..n)
            .map(|i| configs.iter().map(|c| i64::from(c.get(i))).product::<i64>())
            .sum();
        total as f64 / n as f64
    }

    #[test]
    fn packed_overlap_matches_naive() {
        let mut s = substream(5, 5);
        for case in 0..1000 {
            let n = 1 + s.next_below(200) as usize;
            let reps = 1 + case % 5;
            let configs: Vec<SpinConfig> = (0..reps).map(|_| SpinConfig::random(n, &mut s)).collect();
            assert_eq!(multi_overlap(&configs).unwrap(), naive_overlap(&configs));
        }
    }

    proptest! {
        #[test]
        fn flip_is_an_involution(seed in any::<u64>(), n in 1usize..300, site in 0usize..300) {
            let site = site % n;
            let sigma = SpinConfig::random(n, &mut substream(seed, 0));
            let mut twice = sigma.clone();
            twice.flip(site);
            prop_assert_ne!(&twice, &sigma);
            twice.flip(site);
            prop_assert_eq!(twice, sigma);
        }

        #[test]
        fn global_flip_symmetries(seed in any::<u64>(), n in 1usize..80, alpha in 0.0f64..4.0) {
            let mut s = substream(seed, 1);
            let g = sample_graph(&ModelParams::new(n, alpha, 1.0).unwrap(), &mut s).unwrap();
            let sigma = SpinConfig::random(n, &mut s);
            let neg = sigma.negated();
            prop_assert_eq!(energy(&g, &sigma).unwrap(), energy(&g, &neg).unwrap());
            prop_assert_eq!(magnetization(&sigma), -magnetization(&neg));
            prop_assert!(energy(&g, &sigma).unwrap().abs() <= g.n_edges() as f64);
        }

        #[test]
        fn energy_is_relabeling_invariant(seed in any::<u64>(), n in 2usize..40) {
            let mut s = substream(seed, 2);
            let g = sample_graph(&ModelParams::new(n, 1.5, 1.0).unwrap(), &mut s).unwrap();
            let sigma = SpinConfig::random(n, &mut s);
            // Fisher-Yates permutation
            let mut perm: Vec<u32> = (0..n as u32).collect();
            for i in (1..n).rev() {
                let j = s.next_below(i as u64 + 1) as usize;
                perm.swap(i, j);
            }
            let relabeled = DiluteGraph::from_edges(
                n,
                g.edges().iter().map(|&(i, j)| (perm[i as usize], perm[j as usize])).collect(),
            ).unwrap();
            let mut moved = SpinConfig::all_down(n);
            for i in 0..n {
                moved.set(perm[i] as usize, sigma.get(i));
            }
            prop_assert_eq!(energy(&g, &sigma).unwrap(), energy(&relabeled, &moved).unwrap());
        }

        #[test]
        fn energy_is_lipschitz_in_hamming(seed in any::<u64>(), n in 2usize..60, flips in 0usize..10) {
            let mut s = substream(seed, 3);
            let g = sample_graph(&ModelParams::new(n, 2.0, 1.0).unwrap(), &mut s).unwrap();
            let sigma = SpinConfig::random(n, &mut s);
            let mut other = sigma.clone();
            for _ in 0..flips {
                other.flip(s.next_below(n as u64) as usize);
            }
            let max_degree = (0..n).map(|i| g.degree(i)).max().unwrap_or(0);
            let bound = 2.0 * f64::from(max_degree) * f64::from(sigma.hamming(&other));
            let gap = (energy(&g, &sigma).unwrap() - energy(&g, &other).unwrap()).abs();
            prop_assert!(gap <= bound);
        }
    }
}
