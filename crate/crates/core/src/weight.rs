//! Polymer weights `w_gamma = (-1)^|gamma| sum_{T subset gamma} (-1)^|T| g(T)`.
//!
//! `g(T)` is the ratio of truncated traces over the polymer support with
//! hopping switched on for the edges of `T` only, relative to the on-site
//! Hamiltonian on the same support.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::RegionSectors;
use crate::lattice::{Edge, ModelInstance};
use crate::numeric::CompensatedSum;
use crate::polymer::Polymer;

/// Largest polymer (in edges) whose `2^|gamma|` subsets we evaluate.
pub const MAX_POLYMER_EDGES: usize = 24;

#[derive(Debug, Clone)]
pub struct WeightRequest<'a> {
    pub polymer: &'a Polymer,
    pub model: &'a ModelInstance,
    pub q: u32,
    /// Overrides `model.beta` when set.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightResult {
    pub value: f64,
    /// Inclusion-exclusion terms, `2^|gamma|`.
    pub terms: usize,
    pub max_block_dim: usize,
    pub elapsed: Duration,
}

/// `g(T) = exp(log Z[V_gamma, T] - log Z[V_gamma, {}])` on a fixed region.
pub fn g_ratio(sectors: &RegionSectors, subset: &[Edge], model: &ModelInstance) -> Result<f64> {
    let reference = sectors.log_partition(model, &[])?;
    g_ratio_with_reference(sectors, subset, model, reference)
}

fn g_ratio_with_reference(sectors: &RegionSectors, subset: &[Edge], model: &ModelInstance, reference: f64) -> Result<f64> {
    if subset.is_empty() {
        return Ok(1.0);
    }
    let log_z = sectors.log_partition(model, subset)?;
    let g = (log_z - reference).exp();
    if !g.is_finite() {
        return Err(Error::Numerical(format!("g ratio overflowed (log ratio {})", log_z - reference)));
    }
    Ok(g)
}

pub fn polymer_weight(req: &WeightRequest<'_>) -> Result<WeightResult> {
    let start = Instant::now();
    let model_owned;
    let model = match req.beta {
        Some(b) if b != req.model.beta => {
            model_owned = req.model.with_beta(b)?;
            &model_owned
        }
        _ => req.model,
    };
    let edges = req.polymer.edges();
    if edges.len() > MAX_POLYMER_EDGES {
        return Err(Error::ResourceCap {
            what: "polymer size for inclusion-exclusion".into(),
            required: edges.len(),
            allowed: MAX_POLYMER_EDGES,
        });
    }
    if req.q == 0 {
        return Err(Error::InvalidInput("weights need a boson cutoff q >= 1".into()));
    }
    let sectors = RegionSectors::new(req.polymer.support(), req.q)?;
    let reference = sectors.log_partition(model, &[])?;
    let k = edges.len();
    let mut sum = CompensatedSum::new();
    let mut subset = Vec::with_capacity(k);
    for mask in 0u32..(1u32 << k) {
        subset.clear();
        subset.extend((0..k).filter(|b| mask >> b & 1 == 1).map(|b| edges[b]));
        let g = g_ratio_with_reference(&sectors, &subset, model, reference)?;
        let sign = if (k - subset.len()) % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * g);
    }
    Ok(WeightResult {
        value: sum.value(),
        terms: 1 << k,
        max_block_dim: sectors.max_block_dim(),
        elapsed: start.elapsed(),
    })
}

/// Weights keyed by polymer, stored in input order.
#[derive(Debug, Clone, Default)]
pub struct WeightTable {
    polymers: Vec<Polymer>,
    results: Vec<WeightResult>,
}

impl WeightTable {
    pub fn len(&self) -> usize {
        self.polymers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polymers.is_empty()
    }

    pub fn get(&self, polymer: &Polymer) -> Option<&WeightResult> {
        self.polymers.iter().position(|p| p == polymer).map(|k| &self.results[k])
    }

    /// Result for the `k`-th input polymer.
    pub fn at(&self, k: usize) -> &WeightResult {
        &self.results[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Polymer, &WeightResult)> {
        self.polymers.iter().zip(&self.results)
    }

    pub fn values(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.value).collect()
    }
}

/// Evaluates every polymer's weight in parallel; results do not depend on
/// scheduling. Duplicate inputs are rejected.
pub fn weight_table(polymers: &[Polymer], model: &ModelInstance, q: u32, beta: Option<f64>) -> Result<WeightTable> {
    let mut seen = HashSet::with_capacity(polymers.len());
    for p in polymers {
        if !seen.insert(p) {
            return Err(Error::InvalidInput(format!("duplicate polymer {p} in weight table input")));
        }
    }
    let results = polymers
        .par_iter()
        .map(|p| {
            polymer_weight(&WeightRequest { polymer: p, model, q, beta }).map_err(|e| match e {
                Error::Numerical(msg) => Error::Numerical(format!("polymer {p}: {msg}")),
                Error::InvalidInput(msg) => Error::InvalidInput(format!("polymer {p}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightTable {
        polymers: polymers.to_vec(),
        results,
    })
}
