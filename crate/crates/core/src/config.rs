//! Run configuration for the CLI: a TOML document with `model`, `expansion`,
//! `oracle`, `compare`, `scan` and `output` sections.
//!
//! Validation reports every problem it finds, not just the first.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expansion::{ExpansionConfig, QPolicy};
use crate::lattice::{CouplingMatrix, CouplingSpec, Envelope, Lattice, ModelInstance, OnsiteParams};
use crate::oracle::{ScanFamily, DEFAULT_DIMENSION_CAP};
use crate::ursell::DEFAULT_MEMO_CAP;

/// Environment variable consulted when `expansion.workers` is absent.
pub const WORKERS_ENV: &str = "BHCLUSTER_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Approx,
    Exact,
    Compare,
    Clustering,
    Moments,
    Kp,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Approx => "approx",
            Command::Exact => "exact",
            Command::Compare => "compare",
            Command::Clustering => "clustering",
            Command::Moments => "moments",
            Command::Kp => "kp",
        }
    }

    fn needs_expansion(&self) -> bool {
        matches!(self, Command::Approx | Command::Compare | Command::Kp)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dims: Option<Vec<usize>>,
    periodic: Option<bool>,
    coupling: Option<String>,
    g: Option<f64>,
    alpha: Option<f64>,
    cutoff: Option<usize>,
    matrix: Option<Vec<Vec<f64>>>,
    envelope: Option<String>,
    u: Option<Scalars>,
    mu: Option<Scalars>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpansion {
    m: Option<usize>,
    q: Option<u32>,
    q_policy: Option<String>,
    theta: Option<f64>,
    prefactor: Option<f64>,
    threshold: Option<f64>,
    prune: Option<f64>,
    workers: Option<usize>,
    ursell_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    q: Option<u32>,
    dimension_cap: Option<usize>,
    l_max: Option<u32>,
    sites: Option<Vec<usize>>,
    partitions: Option<Vec<Vec<usize>>>,
    betas: Option<Vec<f64>>,
    delta_q: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    m_list: Option<Vec<usize>>,
    q_list: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    family: Option<String>,
    anchor: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: Option<String>,
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    expansion: Option<RawExpansion>,
    oracle: Option<RawOracle>,
    compare: Option<RawCompare>,
    scan: Option<RawScan>,
    output: Option<RawOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct OracleSection {
    pub q: u32,
    pub dimension_cap: usize,
    pub l_max: u32,
    pub sites: Vec<usize>,
    /// `(A, B)` bipartitions; `B` is the complement of the configured `A`.
    pub partitions: Vec<(Vec<usize>, Vec<usize>)>,
    pub betas: Vec<f64>,
    pub delta_q: u32,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelInstance,
    pub expansion: ExpansionConfig,
    pub theta: f64,
    pub oracle: OracleSection,
    pub m_list: Vec<usize>,
    pub q_list: Vec<u32>,
    pub family: ScanFamily,
    pub anchor: usize,
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
}

/// Applies `section.key=value` overrides to a parsed document. The value is
/// read as a TOML value, falling back to a bare string.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<()> {
    let mut errs = Vec::new();
    for item in overrides {
        let Some((path, value)) = item.split_once('=') else {
            errs.push(format!("override `{item}` is not of the form section.key=value"));
            continue;
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            errs.push(format!("override key `{path}` must be section.key"));
            continue;
        };
        let parsed = format!("v = {}", value.trim())
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.trim().to_string()));
        let entry = doc
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry {
            toml::Value::Table(t) => {
                t.insert(key.to_string(), parsed);
            }
            _ => errs.push(format!("`{section}` is not a section")),
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errs))
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path, overrides: &[String], command: Command) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml_str(&text, overrides, command)
    }

    pub fn from_toml_str(text: &str, overrides: &[String], command: Command) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![format!("parse error: {e}")]))?;
        apply_overrides(&mut doc, overrides)?;
        let raw: RawConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(vec![format!("schema error: {}", e.message())]))?;
        let env_workers = std::env::var(WORKERS_ENV).ok();
        validate(raw, command, env_workers.as_deref())
    }
}

fn expand(name: &str, v: Option<Scalars>, default: f64, n: usize, errs: &mut Vec<String>) -> Vec<f64> {
    match v {
        None => vec![default; n],
        Some(Scalars::One(x)) => vec![x; n],
        Some(Scalars::Many(xs)) => {
            if xs.len() != n {
                errs.push(format!("model.{name} has {} entries, lattice has {n} sites", xs.len()));
            }
            xs
        }
    }
}

/// Validates the `model` section; returns the model when it is complete and
/// the site count whenever the lattice itself is valid.
fn validate_model(m: RawModel, errs: &mut Vec<String>) -> (Option<ModelInstance>, Option<usize>) {
    let lattice = match &m.dims {
        None => {
            errs.push("model.dims is required".into());
            None
        }
        Some(d) => Lattice::new(d.clone(), m.periodic.unwrap_or(false))
            .map_err(|err| errs.push(format!("model.dims: {err}")))
            .ok(),
    };
    let beta = match m.beta {
        None => {
            errs.push("model.beta is required".into());
            None
        }
        Some(b) if !(b > 0.0 && b.is_finite()) => {
            errs.push(format!("model.beta must be positive, got {b}"));
            None
        }
        Some(b) => Some(b),
    };
    let need = |name: &str, v: Option<f64>, errs: &mut Vec<String>| -> Option<f64> {
        if v.is_none() {
            errs.push(format!("model.{name} is required for this coupling kind"));
        }
        v
    };
    let spec = match m.coupling.as_deref() {
        None => {
            errs.push("model.coupling is required (long_range | finite_range | explicit)".into());
            None
        }
        Some("long_range") => {
            let g = need("g", m.g, errs);
            let alpha = need("alpha", m.alpha, errs);
            g.zip(alpha).map(|(g, alpha)| CouplingSpec::LongRange { g, alpha })
        }
        Some("finite_range") => {
            let g = need("g", m.g, errs);
            if m.cutoff.is_none() {
                errs.push("model.cutoff is required for finite_range couplings".into());
            }
            g.zip(m.cutoff).map(|(g, cutoff)| CouplingSpec::FiniteRange { g, cutoff })
        }
        Some("explicit") => {
            let envelope = match m.envelope.as_deref() {
                None => None,
                Some("long_range") => need("g", m.g, errs)
                    .zip(need("alpha", m.alpha, errs))
                    .map(|(g, alpha)| Envelope::LongRange { g, alpha }),
                Some("finite_range") => {
                    if m.cutoff.is_none() {
                        errs.push("model.cutoff is required for a finite_range envelope".into());
                    }
                    need("g", m.g, errs)
                        .zip(m.cutoff)
                        .map(|(g, cutoff)| Envelope::FiniteRange { g, cutoff })
                }
                Some(other) => {
                    errs.push(format!("model.envelope `{other}` is not long_range or finite_range"));
                    None
                }
            };
            match m.matrix {
                None => {
                    errs.push("model.matrix is required for explicit couplings".into());
                    None
                }
                Some(matrix) => Some(CouplingSpec::Explicit { matrix, envelope }),
            }
        }
        Some(other) => {
            errs.push(format!("model.coupling `{other}` is not long_range, finite_range or explicit"));
            None
        }
    };
    let n = lattice.as_ref().map_or(0, Lattice::num_sites);
    let u = expand("u", m.u, 1.0, n, errs);
    let mu = expand("mu", m.mu, 0.0, n, errs);
    let couplings = match (&lattice, &spec) {
        (Some(l), Some(sp)) => CouplingMatrix::build(l, sp)
            .map_err(|err| errs.push(format!("model couplings: {err}")))
            .ok(),
        _ => None,
    };
    let onsite = if lattice.is_some() {
        OnsiteParams::new(u, mu).map_err(|err| errs.push(format!("model: {err}"))).ok()
    } else {
        None
    };
    let known = lattice.as_ref().map(Lattice::num_sites);
    let model = match (lattice, couplings, onsite, beta) {
        (Some(l), Some(c), Some(o), Some(b)) => ModelInstance::new(l, c, o, b)
            .map_err(|err| errs.push(format!("model: {err}")))
            .ok(),
        _ => None,
    };
    (model, known)
}

/// Parses and validates only the `[model]` section of a TOML document.
pub fn model_from_toml_str(text: &str) -> Result<ModelInstance> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(vec![format!("parse error: {}", e.message())]))?;
    let mut errs = Vec::new();
    let (model, _) = validate_model(raw.model.unwrap_or_default(), &mut errs);
    match model {
        Some(m) if errs.is_empty() => Ok(m),
        _ => Err(Error::Config(errs)),
    }
}

fn validate(raw: RawConfig, command: Command, env_workers: Option<&str>) -> Result<RunConfig> {
    let mut errs: Vec<String> = Vec::new();
    let e = raw.expansion.unwrap_or_default();
    let o = raw.oracle.unwrap_or_default();
    let c = raw.compare.unwrap_or_default();
    let s = raw.scan.unwrap_or_default();
    let out = raw.output.unwrap_or_default();
    let (model, known) = validate_model(raw.model.unwrap_or_default(), &mut errs);
    let n = known.unwrap_or(0);

    // expansion
    let workers = match e.workers {
        Some(w) => w,
        None => match env_workers {
            None => 0,
            Some(v) => v.trim().parse().unwrap_or_else(|_| {
                errs.push(format!("{WORKERS_ENV}=`{v}` is not a worker count"));
                0
            }),
        },
    };
    let theta = e.theta.unwrap_or(1.0);
    let q_policy = match e.q_policy.as_deref().unwrap_or("explicit") {
        "explicit" => match e.q {
            Some(0) => {
                errs.push("expansion.q must be >= 1".into());
                None
            }
            Some(q) => Some(QPolicy::Explicit { q }),
            None => {
                if command.needs_expansion() || o.q.is_none() {
                    errs.push("expansion.q is required (or set expansion.q_policy = \"auto\")".into());
                }
                None
            }
        },
        "auto" => {
            let prefactor = e.prefactor.unwrap_or(QPolicy::DEFAULT_PREFACTOR);
            if !(prefactor > 0.0) {
                errs.push("expansion.prefactor must be positive".into());
            }
            if !(theta >= 0.0) {
                errs.push("expansion.theta must be >= 0".into());
            }
            Some(QPolicy::Auto { theta, prefactor })
        }
        other => {
            errs.push(format!("expansion.q_policy `{other}` is not explicit or auto"));
            None
        }
    };
    let m_order = match e.m {
        Some(0) => {
            errs.push("expansion.m must be >= 1".into());
            1
        }
        Some(v) => v,
        None => {
            let listed = command == Command::Compare && c.m_list.as_ref().is_some_and(|l| !l.is_empty());
            if command.needs_expansion() && !listed {
                errs.push("expansion.m is required".into());
            }
            1
        }
    };
    let threshold = e.threshold.unwrap_or(0.0);
    if !(threshold >= 0.0) {
        errs.push("expansion.threshold must be >= 0".into());
    }
    if let Some(p) = e.prune {
        if !(p >= 0.0) {
            errs.push("expansion.prune must be >= 0".into());
        }
    }

    // oracle
    let dimension_cap = o.dimension_cap.unwrap_or(DEFAULT_DIMENSION_CAP);
    let l_max = o.l_max.unwrap_or(4);
    if l_max == 0 {
        errs.push("oracle.l_max must be >= 1".into());
    }
    let sites = o.sites.unwrap_or_else(|| vec![0]);
    for &st in &sites {
        if known.is_some() && st >= n {
            errs.push(format!("oracle.sites entry {st} outside lattice of {n} sites"));
        }
    }
    let mut partitions = Vec::new();
    for a in o.partitions.unwrap_or_default() {
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != a.len() {
            errs.push(format!("oracle.partitions entry {a:?} repeats a site"));
        }
        if a.is_empty() {
            errs.push("oracle.partitions entry is empty (A must be nonempty)".into());
        }
        if let Some(bad) = a.iter().find(|&&x| known.is_some() && x >= n) {
            errs.push(format!("oracle.partitions entry {a:?} has site {bad} outside the lattice"));
        }
        let b: Vec<usize> = (0..n).filter(|x| !sorted.contains(x)).collect();
        if known.is_some() && b.is_empty() {
            errs.push(format!("oracle.partitions entry {a:?} covers the whole lattice (B is empty)"));
        }
        partitions.push((a, b));
    }
    let betas = o.betas.unwrap_or_default();
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        errs.push(format!("oracle.betas entry {b} must be positive"));
    }
    let delta_q = o.delta_q.unwrap_or(2);
    if delta_q == 0 {
        errs.push("oracle.delta_q must be >= 1".into());
    }

    // compare
    let m_list = c.m_list.unwrap_or_else(|| vec![m_order]);
    if m_list.contains(&0) {
        errs.push("compare.m_list entries must be >= 1".into());
    }
    let q_list = c.q_list.unwrap_or_default();
    if q_list.contains(&0) {
        errs.push("compare.q_list entries must be >= 1".into());
    }
    if command == Command::Compare && q_list.is_empty() && q_policy.is_none() && o.q.is_none() {
        errs.push("compare needs compare.q_list or expansion.q".into());
    }

    // scan
    let family = match s.family.as_deref().unwrap_or("hopping") {
        "hopping" => ScanFamily::Hopping,
        "density" => ScanFamily::Density,
        other => {
            errs.push(format!("scan.family `{other}` is not hopping or density"));
            ScanFamily::Hopping
        }
    };
    let anchor = s.anchor.unwrap_or(0);
    if known.is_some() && anchor >= n {
        errs.push(format!("scan.anchor {anchor} outside lattice of {n} sites"));
    }

    // output
    let format = match out.format.as_deref() {
        None => match command {
            Command::Approx | Command::Exact => OutputFormat::Json,
            _ => OutputFormat::Csv,
        },
        Some("json") => OutputFormat::Json,
        Some("csv") => OutputFormat::Csv,
        Some(other) => {
            errs.push(format!("output.format `{other}` is not json or csv"));
            OutputFormat::Json
        }
    };

    let oracle_q = match (o.q, q_policy, &model) {
        (Some(0), _, _) => {
            errs.push("oracle.q must be >= 1".into());
            None
        }
        (Some(q), _, _) => Some(q),
        (None, Some(p), Some(md)) => p.resolve(md).map_err(|err| errs.push(format!("expansion: {err}"))).ok(),
        _ => None,
    };

    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let model = model.expect("validated");
    let expansion = ExpansionConfig {
        m: m_order,
        q_policy: q_policy.unwrap_or(QPolicy::Explicit { q: oracle_q.unwrap_or(1) }),
        polymer_threshold: threshold,
        prune_threshold: e.prune,
        workers,
        ursell_cap: e.ursell_cap.unwrap_or(DEFAULT_MEMO_CAP),
    };
    Ok(RunConfig {
        model,
        expansion,
        theta,
        oracle: OracleSection {
            q: oracle_q.unwrap_or(1),
            dimension_cap,
            l_max,
            sites,
            partitions,
            betas,
            delta_q,
        },
        m_list,
        q_list,
        family,
        anchor,
        format,
        path: out.path,
    })
}
