//! The truncated cluster expansion `T_m`, the on-site reference
//! `log Z_W^(q)`, the estimate `f_beta = log Z_W^(q) + T_m`, and convergence
//! diagnostics.
//!
//! The Kotecky-Preiss diagnostic only sums polymers up to the truncation
//! size, so it is a lower bound of the true criterion sum: a violated
//! inequality certifies failure, a satisfied one certifies nothing.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{restricted_log_partition, truncated_dimension};
use crate::lattice::ModelInstance;
use crate::numeric::{log_sum_exp, CompensatedSum};
use crate::polymer::{enumerate_clusters, enumerate_polymers, expanded_incompatibility_graph, Polymer};
use crate::ursell::{cluster_coefficient, UrsellCache, DEFAULT_MEMO_CAP};
use crate::weight::{weight_table, WeightTable};

/// How the boson cutoff `q` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum QPolicy {
    Explicit { q: u32 },
    /// `q = ceil(prefactor (theta + 1) ln N / sqrt(beta))`, at least 1.
    Auto { theta: f64, prefactor: f64 },
}

impl QPolicy {
    pub const DEFAULT_PREFACTOR: f64 = 2.0;

    pub fn resolve(&self, model: &ModelInstance) -> Result<u32> {
        match *self {
            QPolicy::Explicit { q } => {
                if q == 0 {
                    return Err(Error::InvalidInput("q must be >= 1".into()));
                }
                Ok(q)
            }
            QPolicy::Auto { theta, prefactor } => {
                if !(prefactor > 0.0) || !(theta >= 0.0) || !(model.beta > 0.0) {
                    return Err(Error::InvalidInput(
                        "auto q needs prefactor > 0, theta >= 0 and beta > 0".into(),
                    ));
                }
                let n = model.num_sites() as f64;
                let q = (prefactor * (theta + 1.0) * n.ln() / model.beta.sqrt()).ceil();
                Ok((q.max(1.0)).min(f64::from(u32::MAX)) as u32)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Truncation order: clusters with total size `<= m`.
    pub m: usize,
    pub q_policy: QPolicy,
    /// Couplings with `|J| <= polymer_threshold` are dropped from the alphabet.
    pub polymer_threshold: f64,
    /// Polymers with `|w| <` this are pruned before clustering; `None` keeps all.
    pub prune_threshold: Option<f64>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub ursell_cap: usize,
}

impl ExpansionConfig {
    pub fn new(m: usize, q: u32) -> Self {
        Self {
            m,
            q_policy: QPolicy::Explicit { q },
            polymer_threshold: 0.0,
            prune_threshold: None,
            workers: 0,
            ursell_cap: DEFAULT_MEMO_CAP,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.m == 0 {
            errs.push("expansion.m must be >= 1".to_string());
        }
        if let QPolicy::Explicit { q: 0 } = self.q_policy {
            errs.push("expansion.q must be >= 1".to_string());
        }
        if !(self.polymer_threshold >= 0.0) {
            errs.push("expansion.threshold must be >= 0".to_string());
        }
        if let Some(p) = self.prune_threshold {
            if !(p >= 0.0) {
                errs.push("expansion.prune must be >= 0".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Runs `f` on a pool of `workers` threads (or the global pool for 0).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `sum_x log sum_{n<=q} exp(-beta W_x(n))`.
pub fn onsite_log_partition(model: &ModelInstance, q: u32) -> f64 {
    let mut total = CompensatedSum::new();
    for site in 0..model.num_sites() {
        let exps: Vec<f64> = (0..=q).map(|n| -model.beta * model.onsite.energy(site, n)).collect();
        total.add(log_sum_exp(&exps));
    }
    total.value()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderTerm {
    /// Total cluster size `s`.
    pub order: usize,
    pub contribution: f64,
    pub clusters: usize,
}

/// `T_m` with its per-order breakdown and the objects it was built from.
#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    pub t_m: f64,
    pub per_order: Vec<OrderTerm>,
    pub polymers: Vec<Polymer>,
    pub weights: WeightTable,
    pub q: u32,
}

/// Polymers of size `<= m` and their weights.
pub fn polymer_weights(model: &ModelInstance, cfg: &ExpansionConfig, q: u32) -> Result<(Vec<Polymer>, WeightTable)> {
    let edges = model.couplings.interaction_edges(cfg.polymer_threshold);
    let polymers = enumerate_polymers(&edges, cfg.m, None);
    let weights = weight_table(&polymers, model, q, None)?;
    Ok((polymers, weights))
}

/// Sums `phi(G*) / prod mu! * prod w^mu` over clusters with total size `<= m`.
pub fn series_from_weights(polymers: &[Polymer], weights: &[f64], m: usize, ursell_cap: usize) -> Result<Vec<OrderTerm>> {
    let clusters = enumerate_clusters(polymers, m);
    let cache = UrsellCache::new(ursell_cap);
    let terms: Vec<f64> = clusters
        .par_iter()
        .map(|c| {
            let phi = cache.get(&expanded_incompatibility_graph(c, polymers))?;
            let coeff = cluster_coefficient(phi, c.members().iter().map(|mb| mb.multiplicity));
            let prod: f64 = c
                .members()
                .iter()
                .map(|mb| weights[mb.polymer].powi(mb.multiplicity as i32))
                .product();
            Ok(coeff * prod)
        })
        .collect::<Result<_>>()?;
    let mut per_order: Vec<OrderTerm> = (1..=m)
        .map(|order| OrderTerm { order, contribution: 0.0, clusters: 0 })
        .collect();
    let mut sums = vec![CompensatedSum::new(); m];
    for (c, t) in clusters.iter().zip(&terms) {
        let k = c.total_size() - 1;
        sums[k].add(*t);
        per_order[k].clusters += 1;
    }
    for (term, s) in per_order.iter_mut().zip(&sums) {
        term.contribution = s.value();
    }
    Ok(per_order)
}

fn total(per_order: &[OrderTerm]) -> f64 {
    per_order.iter().map(|o| o.contribution).sum()
}

pub fn truncated_log_ratio(model: &ModelInstance, cfg: &ExpansionConfig) -> Result<TruncatedSeries> {
    cfg.validate()?;
    let q = cfg.q_policy.resolve(model)?;
    with_workers(cfg.workers, || {
        let (polymers, weights) = polymer_weights(model, cfg, q)?;
        let (kept, kept_w) = prune(&polymers, &weights, cfg.prune_threshold);
        let per_order = series_from_weights(&kept, &kept_w, cfg.m, cfg.ursell_cap)?;
        Ok(TruncatedSeries {
            t_m: total(&per_order),
            per_order,
            polymers,
            weights,
            q,
        })
    })?
}

fn prune(polymers: &[Polymer], weights: &WeightTable, threshold: Option<f64>) -> (Vec<Polymer>, Vec<f64>) {
    let values = weights.values();
    match threshold {
        None => (polymers.to_vec(), values),
        Some(t) => polymers
            .iter()
            .zip(values)
            .filter(|(_, w)| w.abs() >= t)
            .map(|(p, w)| (p.clone(), w))
            .unzip(),
    }
}

/// One site's truncated Kotecky-Preiss sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpEntry {
    pub site: usize,
    /// `sum_{gamma containing site, |gamma|<=m} |w| exp(|V_gamma|/2 + |gamma|)`,
    /// a lower bound on the untruncated sum.
    pub lhs: f64,
    /// `delta_1` of a single site, `1/k = 1/2`.
    pub rhs: f64,
    pub satisfied: bool,
}

pub const KP_RHS: f64 = 0.5;

pub fn kp_from_weights(polymers: &[Polymer], weights: &[f64], probe_sites: &[usize]) -> Vec<KpEntry> {
    probe_sites
        .iter()
        .map(|&site| {
            let lhs: CompensatedSum = polymers
                .iter()
                .zip(weights)
                .filter(|(p, _)| p.contains_site(site))
                .map(|(p, w)| w.abs() * (p.support().len() as f64 / 2.0 + p.size() as f64).exp())
                .collect();
            let lhs = lhs.value();
            KpEntry { site, lhs, rhs: KP_RHS, satisfied: lhs <= KP_RHS }
        })
        .collect()
}

pub fn kp_diagnostic(model: &ModelInstance, cfg: &ExpansionConfig, probe_sites: &[usize]) -> Result<Vec<KpEntry>> {
    cfg.validate()?;
    if let Some(&s) = probe_sites.iter().find(|&&s| s >= model.num_sites()) {
        return Err(Error::InvalidInput(format!("probe site {s} outside lattice")));
    }
    let q = cfg.q_policy.resolve(model)?;
    let (polymers, weights) = with_workers(cfg.workers, || polymer_weights(model, cfg, q))??;
    Ok(kp_from_weights(&polymers, &weights.values(), probe_sites))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub f_beta: f64,
    pub log_z_w: f64,
    pub t_m: f64,
    pub per_order: Vec<OrderTerm>,
    pub kp_margin: Vec<KpEntry>,
    /// True when some probed site violates the truncated KP inequality.
    pub kp_violated: bool,
    pub polymer_count: usize,
    pub cluster_count: usize,
    pub m: usize,
    pub q: u32,
    pub beta: f64,
    pub num_sites: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

pub fn approximate_log_partition(model: &ModelInstance, cfg: &ExpansionConfig) -> Result<ExpansionReport> {
    let start = Instant::now();
    let series = truncated_log_ratio(model, cfg)?;
    let log_z_w = onsite_log_partition(model, series.q);
    let sites: Vec<usize> = (0..model.num_sites()).collect();
    let kp = kp_from_weights(&series.polymers, &series.weights.values(), &sites);
    Ok(ExpansionReport {
        f_beta: log_z_w + series.t_m,
        log_z_w,
        t_m: series.t_m,
        kp_violated: kp.iter().any(|k| !k.satisfied),
        kp_margin: kp,
        polymer_count: series.polymers.len(),
        cluster_count: series.per_order.iter().map(|o| o.clusters).sum(),
        per_order: series.per_order,
        m: cfg.m,
        q: series.q,
        beta: model.beta,
        num_sites: model.num_sites(),
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// `N e^{-m}`; holds only when the KP criterion holds.
    pub m_error: f64,
    pub m_error_conditional: bool,
    /// Target `N^{-theta}` for the cutoff error.
    pub q_error_target: f64,
    /// Measured `|log Z^(q) - log Z^(q + delta)|` when an oracle was run.
    pub q_error_proxy: Option<f64>,
}

/// `m_error = N e^{-m}`.
pub fn m_error_bound(num_sites: usize, m: usize) -> f64 {
    num_sites as f64 * (-(m as f64)).exp()
}

/// `|log Z^(q) - log Z^(q + delta)|` by exact traces over the whole lattice.
pub fn q_error_proxy(model: &ModelInstance, q: u32, delta: u32, dimension_cap: usize) -> Result<f64> {
    let n = model.num_sites();
    let required = truncated_dimension(n, q + delta).unwrap_or(usize::MAX);
    if required > dimension_cap {
        return Err(Error::ResourceCap {
            what: format!("exact trace at q = {}", q + delta),
            required,
            allowed: dimension_cap,
        });
    }
    let region: Vec<usize> = (0..n).collect();
    let edges = model.couplings.interaction_edges(0.0);
    let a = restricted_log_partition(model, &region, &edges, q)?;
    let b = restricted_log_partition(model, &region, &edges, q + delta)?;
    Ok((a - b).abs())
}

pub fn error_budget(model: &ModelInstance, cfg: &ExpansionConfig, theta: f64, q_error_proxy: Option<f64>) -> ErrorBudget {
    let n = model.num_sites();
    ErrorBudget {
        m_error: m_error_bound(n, cfg.m),
        m_error_conditional: true,
        q_error_target: (n as f64).powf(-theta),
        q_error_proxy,
    }
}
