//! Quenched randomness: Poisson edge counts and uniform site pairs.
//!
//! Sites are 0-indexed. Pairs are stored as drawn (ordered); since the
//! coupling `σ_i σ_j` is symmetric the orientation carries no physics.
//! Self-pairs and repeated pairs are kept, giving multigraph semantics.

use statrs::function::factorial::ln_factorial;

use crate::error::{param, Error, Result};
use crate::model::ModelParams;
use crate::rng::RngStream;
use crate::stats::{disorder_average, Estimate};

/// Means below this use sequential inversion, at or above it PTRS.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Draw `K ~ Poisson(mean)`.
pub fn poisson_sample(mean: f64, stream: &mut RngStream) -> Result<u64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(param(format!("Poisson mean must be finite and >= 0, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < POISSON_INVERSION_LIMIT {
        Ok(poisson_inversion(mean, stream))
    } else {
        Ok(poisson_ptrs(mean, stream))
    }
}

fn poisson_inversion(mean: f64, stream: &mut RngStream) -> u64 {
    let u = stream.next_f64();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        // the tail underflowed before the cdf reached u through rounding
        if p == 0.0 {
            break;
        }
    }
    k
}

// Hörmann's transformed rejection with squeeze.
fn poisson_ptrs(mean: f64, stream: &mut RngStream) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = stream.next_f64() - 0.5;
        let v = stream.next_f64();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Means `ζ` and arguments `a` of the generating-function grid
/// `E a^K = e^{−ζ(1−a)}`.
pub const PGF_MEANS: [f64; 3] = [0.5, 2.0, 8.0];
pub const PGF_ARGS: [f64; 3] = [0.1, 0.5, 0.9];

/// Empirical `E a^K` over `n_samples` draws of `K ~ Poisson(mean)`.
pub fn empirical_pgf(mean: f64, a: f64, n_samples: usize, stream: &mut RngStream) -> Result<Estimate> {
    let values = (0..n_samples)
        .map(|_| Ok(a.powf(poisson_sample(mean, stream)? as f64)))
        .collect::<Result<Vec<f64>>>()?;
    disorder_average(&values)
}

/// One quenched disorder sample: `K` site pairs on `N` sites, with a
/// compressed incidence table for O(degree) local-field queries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiluteGraph {
    n_sites: usize,
    edges: Vec<(u32, u32)>,
    // CSR incidence: partners of site i live in offsets[i]..offsets[i + 1]
    offsets: Vec<u32>,
    partners: Vec<u32>,
    multiplicity: Vec<u32>,
    self_loops: usize,
}

impl DiluteGraph {
    /// Build a graph from an explicit pair list.
    pub fn from_edges(n_sites: usize, edges: Vec<(u32, u32)>) -> Result<Self> {
        if n_sites == 0 {
            return Err(param("a graph needs at least one site"));
        }
        if n_sites > u32::MAX as usize {
            return Err(param("too many sites"));
        }
        for &(i, j) in &edges {
            let bad = i.max(j) as usize;
            if bad >= n_sites {
                return Err(Error::IndexOutOfRange { index: bad, limit: n_sites });
            }
        }

        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n_sites];
        let mut self_loops = 0;
        for &(i, j) in &edges {
            if i == j {
                self_loops += 1;
                // both endpoints land on the same site
                adjacency[i as usize].push(i);
                adjacency[i as usize].push(i);
            } else {
                adjacency[i as usize].push(j);
                adjacency[j as usize].push(i);
            }
        }

        let mut offsets = Vec::with_capacity(n_sites + 1);
        let mut partners = Vec::new();
        let mut multiplicity = Vec::new();
        offsets.push(0u32);
        for list in &mut adjacency {
            list.sort_unstable();
            let start = partners.len();
            for &p in list.iter() {
                if partners.len() > start && partners[partners.len() - 1] == p {
                    *multiplicity.last_mut().unwrap() += 1;
                } else {
                    partners.push(p);
                    multiplicity.push(1);
                }
            }
            offsets.push(partners.len() as u32);
        }

        Ok(Self {
            n_sites,
            edges,
            offsets,
            partners,
            multiplicity,
            self_loops,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn self_loops(&self) -> usize {
        self.self_loops
    }

    /// `(partner, multiplicity)` pairs for `site`, including the site itself
    /// when it carries self-pairs (each self-pair counts twice).
    pub fn incidence(&self, site: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let lo = self.offsets[site] as usize;
        let hi = self.offsets[site + 1] as usize;
        self.partners[lo..hi]
            .iter()
            .zip(&self.multiplicity[lo..hi])
            .map(|(&p, &m)| (p as usize, m))
    }

    /// Number of edge endpoints at `site`.
    pub fn degree(&self, site: usize) -> u32 {
        self.incidence(site).map(|(_, m)| m).sum()
    }

    /// Largest number of endpoints at any site, self-pairs excluded.
    pub fn max_field_degree(&self) -> u32 {
        (0..self.n_sites)
            .map(|i| self.incidence(i).filter(|&(p, _)| p != i).map(|(_, m)| m).sum())
            .max()
            .unwrap_or(0)
    }

    /// Neighbour lists with self-pairs removed, in a flat layout suited to
    /// tight update loops.
    pub(crate) fn field_lists(&self) -> FieldLists {
        let mut offsets = Vec::with_capacity(self.n_sites + 1);
        let mut partners = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for i in 0..self.n_sites {
            for (p, m) in self.incidence(i) {
                if p != i {
                    partners.push(p as u32);
                    weights.push(m as i32);
                }
            }
            offsets.push(partners.len() as u32);
        }
        FieldLists {
            offsets,
            partners,
            weights,
        }
    }
}

/// Self-pair-free adjacency in CSR form.
#[derive(Debug, Clone)]
pub(crate) struct FieldLists {
    pub offsets: Vec<u32>,
    pub partners: Vec<u32>,
    pub weights: Vec<i32>,
}

impl FieldLists {
    #[inline]
    pub fn range(&self, site: usize) -> std::ops::Range<usize> {
        self.offsets[site] as usize..self.offsets[site + 1] as usize
    }
}

/// Draw `K ~ Poisson(αN)` and `K` independent uniform pairs from `{0..N-1}²`.
pub fn sample_graph(params: &ModelParams, stream: &mut RngStream) -> Result<DiluteGraph> {
    let n = params.n_sites();
    let k = poisson_sample(params.alpha() * n as f64, stream)?;
    let edges = draw_pairs(n, k as usize, stream);
    DiluteGraph::from_edges(n, edges)
}

pub(crate) fn draw_pairs(n_sites: usize, count: usize, stream: &mut RngStream) -> Vec<(u32, u32)> {
    let n = n_sites as u64;
    (0..count)
        .map(|_| {
            let i = stream.next_below(n) as u32;
            let j = stream.next_below(n) as u32;
            (i, j)
        })
        .collect()
}
