//! Subcommand bodies. Each returns the rendered document; the binary decides
//! where it goes.
//!
//! CSV columns:
//! - `approx`: `order,contribution,clusters`
//! - `exact`: `quantity,site,index,value`
//! - `compare`: `m,q,f_beta,oracle_log_z,abs_error,m_error_bound`
//! - `clustering`: `i,j,distance,correlation,bound_ref,ratio`
//! - `moments`: `beta,site,l,moment`
//! - `kp`: `site,lhs,rhs,satisfied`

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Command, OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::expansion::{
    approximate_log_partition, error_budget, kp_diagnostic, m_error_bound, q_error_proxy, with_workers, ErrorBudget,
    ExpansionConfig, ExpansionReport, KpEntry, QPolicy,
};
use crate::fock::{restricted_log_partition, truncated_dimension};
use crate::lattice::ModelInstance;
use crate::oracle::{
    clustering_scan, moments, mutual_information, occupation_distribution, thermalize, ClusteringScanRow, ScanFamily,
};
use crate::report::{to_csv, to_json, Document};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub report: ExpansionReport,
    pub error_budget: ErrorBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSeries {
    pub site: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualInformationEntry {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub q: u32,
    pub dimension: usize,
    pub log_z: f64,
    pub trace: f64,
    /// `<n^l>` for `l = 1..=l_max`.
    pub moments: Vec<SiteSeries>,
    /// `p_n` for `n = 0..=q`.
    pub occupation: Vec<SiteSeries>,
    pub mutual_information: Vec<MutualInformationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub quantity: String,
    pub site: Option<usize>,
    pub index: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub m: usize,
    pub q: u32,
    pub f_beta: f64,
    pub oracle_log_z: f64,
    pub abs_error: f64,
    pub m_error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDifference {
    pub q_low: u32,
    pub q_high: u32,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub rows: Vec<CompareRow>,
    /// `|log Z^(q) - log Z^(q')|` for consecutive entries of the q list.
    pub q_differences: Vec<QDifference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub family: ScanFamily,
    pub anchor: usize,
    pub q: u32,
    pub phi: f64,
    pub fitted_exponent: Option<f64>,
    pub rows: Vec<ClusteringScanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub beta: f64,
    pub site: usize,
    pub l: u32,
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsResult {
    pub q: u32,
    pub rows: Vec<MomentRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpResult {
    pub m: usize,
    pub q: u32,
    pub violated: bool,
    pub rows: Vec<KpEntry>,
}

fn render<T: Serialize, R: Serialize>(
    cfg: &RunConfig,
    command: Command,
    start: Instant,
    result: T,
    rows: impl FnOnce(&T) -> Vec<R>,
) -> Result<String> {
    match cfg.format {
        OutputFormat::Csv => to_csv(command.name(), &rows(&result)),
        OutputFormat::Json => to_json(&Document::new(
            command.name(),
            &cfg.model,
            result,
            start.elapsed().as_secs_f64(),
        )),
    }
}

/// Runs `command` on `cfg` inside a pool of `cfg.expansion.workers` threads.
pub fn run(command: Command, cfg: &RunConfig) -> Result<String> {
    with_workers(cfg.expansion.workers, || match command {
        Command::Approx => cmd_approx(cfg),
        Command::Exact => cmd_exact(cfg),
        Command::Compare => cmd_compare(cfg),
        Command::Clustering => cmd_clustering(cfg),
        Command::Moments => cmd_moments(cfg),
        Command::Kp => cmd_kp(cfg),
    })?
}

pub fn approx_result(cfg: &RunConfig) -> Result<ApproxResult> {
    let report = approximate_log_partition(&cfg.model, &cfg.expansion)?;
    let budget = error_budget(&cfg.model, &cfg.expansion, cfg.theta, None);
    Ok(ApproxResult { report, error_budget: budget })
}

pub fn cmd_approx(cfg: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let result = approx_result(cfg)?;
    render(cfg, Command::Approx, start, result, |r| r.report.per_order.clone())
}

pub fn exact_result(cfg: &RunConfig) -> Result<ExactResult> {
    let o = &cfg.oracle;
    let state = thermalize(&cfg.model, o.q, o.dimension_cap)?;
    let mut ms = Vec::new();
    let mut occ = Vec::new();
    for &site in &o.sites {
        ms.push(SiteSeries { site, values: moments(&state, site, o.l_max)?[1..].to_vec() });
        occ.push(SiteSeries { site, values: occupation_distribution(&state, site)? });
    }
    let mut mi = Vec::new();
    for (a, b) in &o.partitions {
        mi.push(MutualInformationEntry {
            a: a.clone(),
            b: b.clone(),
            value: mutual_information(&state, a, b, o.dimension_cap)?,
        });
    }
    Ok(ExactResult {
        q: o.q,
        dimension: state.dimension(),
        log_z: state.log_z,
        trace: state.trace(),
        moments: ms,
        occupation: occ,
        mutual_information: mi,
    })
}

fn exact_rows(r: &ExactResult) -> Vec<ExactRow> {
    let row = |quantity: &str, site, index, value| ExactRow { quantity: quantity.into(), site, index, value };
    let mut rows = vec![row("log_z", None, None, r.log_z), row("trace", None, None, r.trace)];
    for s in &r.moments {
        rows.extend(s.values.iter().enumerate().map(|(k, &v)| row("moment", Some(s.site), Some(k + 1), v)));
    }
    for s in &r.occupation {
        rows.extend(s.values.iter().enumerate().map(|(k, &v)| row("occupation", Some(s.site), Some(k), v)));
    }
    for (k, e) in r.mutual_information.iter().enumerate() {
        rows.push(row("mutual_information", None, Some(k), e.value));
    }
    rows
}

pub fn cmd_exact(cfg: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let result = exact_result(cfg)?;
    render(cfg, Command::Exact, start, result, exact_rows)
}

fn oracle_log_z(model: &ModelInstance, q: u32, cap: usize) -> Result<f64> {
    let n = model.num_sites();
    let required = truncated_dimension(n, q).unwrap_or(usize::MAX);
    if required > cap {
        return Err(Error::ResourceCap { what: format!("exact trace at q = {q}"), required, allowed: cap });
    }
    let region: Vec<usize> = (0..n).collect();
    restricted_log_partition(model, &region, &model.couplings.interaction_edges(0.0), q)
}

pub fn compare_result(cfg: &RunConfig) -> Result<CompareResult> {
    let q_list = if cfg.q_list.is_empty() { vec![cfg.oracle.q] } else { cfg.q_list.clone() };
    let mut rows = Vec::new();
    let mut logs = Vec::new();
    for &q in &q_list {
        let exact = oracle_log_z(&cfg.model, q, cfg.oracle.dimension_cap)?;
        logs.push(exact);
        for &m in &cfg.m_list {
            let ecfg = ExpansionConfig { m, q_policy: QPolicy::Explicit { q }, ..cfg.expansion.clone() };
            let rep = approximate_log_partition(&cfg.model, &ecfg)?;
            rows.push(CompareRow {
                m,
                q,
                f_beta: rep.f_beta,
                oracle_log_z: exact,
                abs_error: (rep.f_beta - exact).abs(),
                m_error_bound: m_error_bound(cfg.model.num_sites(), m),
            });
        }
    }
    let q_differences = q_list
        .windows(2)
        .zip(logs.windows(2))
        .map(|(q, z)| QDifference { q_low: q[0], q_high: q[1], abs_diff: (z[0] - z[1]).abs() })
        .collect();
    Ok(CompareResult { rows, q_differences })
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let result = compare_result(cfg)?;
    render(cfg, Command::Compare, start, result, |r| r.rows.clone())
}

pub fn clustering_result(cfg: &RunConfig) -> Result<ClusteringResult> {
    let state = thermalize(&cfg.model, cfg.oracle.q, cfg.oracle.dimension_cap)?;
    let scan = clustering_scan(&state, cfg.family, cfg.anchor)?;
    Ok(ClusteringResult {
        family: cfg.family,
        anchor: cfg.anchor,
        q: cfg.oracle.q,
        phi: scan.phi,
        fitted_exponent: scan.fitted_exponent,
        rows: scan.rows,
    })
}

pub fn cmd_clustering(cfg: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let result = clustering_result(cfg)?;
    render(cfg, Command::Clustering, start, result, |r| r.rows.clone())
}

pub fn moments_result(cfg: &RunConfig) -> Result<MomentsResult> {
    let betas = if cfg.oracle.betas.is_empty() { vec![cfg.model.beta] } else { cfg.oracle.betas.clone() };
    let mut rows = Vec::new();
    for beta in betas {
        let state = thermalize(&cfg.model.with_beta(beta)?, cfg.oracle.q, cfg.oracle.dimension_cap)?;
        for &site in &cfg.oracle.sites {
            let ms = moments(&state, site, cfg.oracle.l_max)?;
            rows.extend((1..=cfg.oracle.l_max).map(|l| MomentRow { beta, site, l, moment: ms[l as usize] }));
        }
    }
    Ok(MomentsResult { q: cfg.oracle.q, rows })
}

pub fn cmd_moments(cfg: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let result = moments_result(cfg)?;
    render(cfg, Command::Moments, start, result, |r| r.rows.clone())
}

pub fn kp_result(cfg: &RunConfig) -> Result<KpResult> {
    let sites: Vec<usize> = (0..cfg.model.num_sites()).collect();
    let rows = kp_diagnostic(&cfg.model, &cfg.expansion, &sites)?;
    Ok(KpResult {
        m: cfg.expansion.m,
        q: cfg.expansion.q_policy.resolve(&cfg.model)?,
        violated: rows.iter().any(|r| !r.satisfied),
        rows,
    })
}

pub fn cmd_kp(cfg: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let result = kp_result(cfg)?;
    render(cfg, Command::Kp, start, result, |r| r.rows.clone())
}

/// Adds a measured `|log Z^(q) - log Z^(q + delta_q)|` to an error budget.
pub fn budget_with_proxy(cfg: &RunConfig) -> Result<ErrorBudget> {
    let q = cfg.expansion.q_policy.resolve(&cfg.model)?;
    let proxy = q_error_proxy(&cfg.model, q, cfg.oracle.delta_q, cfg.oracle.dimension_cap)?;
    Ok(error_budget(&cfg.model, &cfg.expansion, cfg.theta, Some(proxy)))
}

