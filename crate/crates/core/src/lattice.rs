//! Lattice geometry, coupling matrices and the model definition.
//!
//! Sites are indexed row-major: the last extent varies fastest. Distances
//! are shortest-path lengths on the nearest-neighbour graph, with wrap-around
//! when the lattice is periodic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hypercubic `D`-dimensional lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dims: Vec<usize>,
    periodic: bool,
}

impl Lattice {
    pub fn new(dims: Vec<usize>, periodic: bool) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidInput("lattice needs at least one extent".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidInput(format!("lattice extent {pos} is zero")));
        }
        Ok(Self { dims, periodic })
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::new(vec![n], false)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn num_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn coords(&self, site: usize) -> Result<Vec<usize>> {
        self.check_site(site)?;
        let mut c = vec![0; self.dims.len()];
        let mut rest = site;
        for (k, &d) in self.dims.iter().enumerate().rev() {
            c[k] = rest % d;
            rest /= d;
        }
        Ok(c)
    }

    pub fn site(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dims.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.dims.len(),
                coords.len()
            )));
        }
        let mut idx = 0;
        for (&c, &d) in coords.iter().zip(&self.dims) {
            if c >= d {
                return Err(Error::InvalidInput(format!("coordinate {c} outside extent {d}")));
            }
            idx = idx * d + c;
        }
        Ok(idx)
    }

    /// Nearest neighbours of `site`, sorted and deduplicated.
    pub fn neighbors(&self, site: usize) -> Result<Vec<usize>> {
        let c = self.coords(site)?;
        let mut out = Vec::new();
        for (k, &d) in self.dims.iter().enumerate() {
            let mut step = |to: usize| {
                if to != c[k] {
                    let mut nc = c.clone();
                    nc[k] = to;
                    out.push(self.site(&nc).expect("in range"));
                }
            };
            if c[k] + 1 < d {
                step(c[k] + 1);
            } else if self.periodic {
                step(0);
            }
            if c[k] > 0 {
                step(c[k] - 1);
            } else if self.periodic {
                step(d - 1);
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Graph distance `d(i, j)` on the nearest-neighbour adjacency.
    pub fn distance(&self, i: usize, j: usize) -> Result<usize> {
        let (ci, cj) = (self.coords(i)?, self.coords(j)?);
        Ok(ci
            .iter()
            .zip(&cj)
            .zip(&self.dims)
            .map(|((&a, &b), &d)| {
                let delta = a.abs_diff(b);
                if self.periodic {
                    delta.min(d - delta)
                } else {
                    delta
                }
            })
            .sum())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.num_sites() {
            return Err(Error::InvalidInput(format!(
                "site {site} out of range for {} sites",
                self.num_sites()
            )));
        }
        Ok(())
    }
}

/// Bound on `|J_ij|` as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `|J_ij| <= g / (1 + d_ij)^alpha`.
    LongRange { g: f64, alpha: f64 },
    /// `|J_ij| <= g` for `d_ij <= cutoff`, zero beyond.
    FiniteRange { g: f64, cutoff: usize },
}

impl Envelope {
    pub fn bound(&self, distance: usize) -> f64 {
        match *self {
            Envelope::LongRange { g, alpha } => g / (1.0 + distance as f64).powf(alpha),
            Envelope::FiniteRange { g, cutoff } => {
                if distance <= cutoff {
                    g
                } else {
                    0.0
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Envelope::LongRange { .. } => "long_range",
            Envelope::FiniteRange { .. } => "finite_range",
        }
    }

    fn validate(&self, lattice: &Lattice) -> Result<()> {
        match *self {
            Envelope::LongRange { g, alpha } => {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidInput(format!("g must be positive, got {g}")));
                }
                let d = lattice.dimension() as f64;
                if !(alpha > d) {
                    return Err(Error::InvalidInput(format!(
                        "long-range decay exponent alpha = {alpha} must exceed the lattice dimension {d}"
                    )));
                }
            }
            Envelope::FiniteRange { g, cutoff } => {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidInput(format!("g must be positive, got {g}")));
                }
                if cutoff == 0 {
                    return Err(Error::InvalidInput("finite-range cutoff must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// How a coupling matrix is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CouplingSpec {
    /// Saturating long-range couplings `J_ij = g / (1 + d_ij)^alpha`.
    LongRange { g: f64, alpha: f64 },
    /// `J_ij = g` for `d_ij <= cutoff`, zero otherwise.
    FiniteRange { g: f64, cutoff: usize },
    /// A user matrix, optionally checked against an envelope.
    Explicit {
        matrix: Vec<Vec<f64>>,
        envelope: Option<Envelope>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    LongRange,
    FiniteRange,
    Explicit,
}

/// A symmetric, real, zero-diagonal hopping matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n: usize,
    entries: Vec<f64>,
    kind: CouplingKind,
    envelope: Option<Envelope>,
}

impl CouplingMatrix {
    pub fn build(lattice: &Lattice, spec: &CouplingSpec) -> Result<Self> {
        let n = lattice.num_sites();
        match spec {
            CouplingSpec::LongRange { g, alpha } => {
                let env = Envelope::LongRange { g: *g, alpha: *alpha };
                env.validate(lattice)?;
                Self::from_envelope(lattice, env, CouplingKind::LongRange)
            }
            CouplingSpec::FiniteRange { g, cutoff } => {
                let env = Envelope::FiniteRange { g: *g, cutoff: *cutoff };
                env.validate(lattice)?;
                Self::from_envelope(lattice, env, CouplingKind::FiniteRange)
            }
            CouplingSpec::Explicit { matrix, envelope } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidInput(format!(
                        "explicit coupling matrix must be {n}x{n}"
                    )));
                }
                if let Some(env) = envelope {
                    env.validate(lattice)?;
                }
                let mut entries = vec![0.0; n * n];
                for i in 0..n {
                    if matrix[i][i] != 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "coupling diagonal ({i}, {i}) must be zero"
                        )));
                    }
                    for j in 0..n {
                        let v = matrix[i][j];
                        if !v.is_finite() {
                            return Err(Error::InvalidInput(format!("coupling ({i}, {j}) is not finite")));
                        }
                        if v != matrix[j][i] {
                            return Err(Error::InvalidInput(format!(
                                "coupling matrix not symmetric at ({i}, {j})"
                            )));
                        }
                        if let Some(env) = envelope {
                            let bound = env.bound(lattice.distance(i, j)?);
                            if v.abs() > bound * (1.0 + 4.0 * f64::EPSILON) {
                                return Err(Error::CouplingBound {
                                    i,
                                    j,
                                    value: v,
                                    bound,
                                    kind: env.name(),
                                });
                            }
                        }
                        entries[i * n + j] = v;
                    }
                }
                Ok(Self {
                    n,
                    entries,
                    kind: CouplingKind::Explicit,
                    envelope: *envelope,
                })
            }
        }
    }

    fn from_envelope(lattice: &Lattice, env: Envelope, kind: CouplingKind) -> Result<Self> {
        let n = lattice.num_sites();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = env.bound(lattice.distance(i, j)?);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Ok(Self {
            n,
            entries,
            kind,
            envelope: Some(env),
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
            kind: CouplingKind::Explicit,
            envelope: None,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    /// Decay exponent when the couplings carry a long-range envelope.
    pub fn alpha(&self) -> Option<f64> {
        match self.envelope {
            Some(Envelope::LongRange { alpha, .. }) => Some(alpha),
            _ => None,
        }
    }

    /// All pairs `i < j` with `|J_ij| > threshold`, sorted.
    ///
    /// A positive threshold drops weak couplings and changes the model being
    /// expanded; it is an approximation knob.
    pub fn interaction_edges(&self, threshold: f64) -> Vec<Edge> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j).abs() > threshold {
                    out.push(Edge::new(i, j));
                }
            }
        }
        out
    }
}

/// Unordered site pair, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

impl Edge {
    pub fn new(i: usize, j: usize) -> Self {
        assert_ne!(i, j, "edge endpoints must differ");
        if i < j {
            Self { a: i, b: j }
        } else {
            Self { a: j, b: i }
        }
    }

    pub fn touches(&self, site: usize) -> bool {
        self.a == site || self.b == site
    }

    pub fn shares_site(&self, other: &Edge) -> bool {
        self.touches(other.a) || self.touches(other.b)
    }
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{}}}", self.a, self.b)
    }
}

/// On-site interaction `U_i` and chemical potential `mu_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsiteParams {
    u: Vec<f64>,
    mu: Vec<f64>,
}

impl OnsiteParams {
    pub fn new(u: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if u.len() != mu.len() {
            return Err(Error::InvalidInput(format!(
                "U has {} entries but mu has {}",
                u.len(),
                mu.len()
            )));
        }
        if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!("U[{i}] = {v} must be positive")));
        }
        if let Some((i, v)) = mu.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("mu[{i}] = {v} must be finite")));
        }
        Ok(Self { u, mu })
    }

    pub fn uniform(n: usize, u: f64, mu: f64) -> Result<Self> {
        Self::new(vec![u; n], vec![mu; n])
    }

    pub fn u(&self, site: usize) -> f64 {
        self.u[site]
    }

    pub fn mu(&self, site: usize) -> f64 {
        self.mu[site]
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `(U_min, U_max, mu_max)`.
    pub fn bounds(&self) -> (f64, f64, f64) {
        let umin = self.u.iter().copied().fold(f64::INFINITY, f64::min);
        let umax = self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mumax = self.mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (umin, umax, mumax)
    }

    /// `W_i(n) = U_i n (n - 1) / 2 - mu_i n`.
    pub fn energy(&self, site: usize, n: u32) -> f64 {
        onsite_energy(self.u[site], self.mu[site], n)
    }
}

/// `U n (n - 1) / 2 - mu n`.
pub fn onsite_energy(u: f64, mu: f64, n: u32) -> f64 {
    let n = f64::from(n);
    u * n * (n - 1.0) / 2.0 - mu * n
}

/// A canonical Bose-Hubbard model at inverse temperature `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInstance {
    pub lattice: Lattice,
    pub couplings: CouplingMatrix,
    pub onsite: OnsiteParams,
    pub beta: f64,
}

impl ModelInstance {
    /// `beta = 0` is accepted as the infinite-temperature limit.
    pub fn new(lattice: Lattice, couplings: CouplingMatrix, onsite: OnsiteParams, beta: f64) -> Result<Self> {
        let n = lattice.num_sites();
        if couplings.num_sites() != n {
            return Err(Error::InvalidInput(format!(
                "coupling matrix covers {} sites, lattice has {n}",
                couplings.num_sites()
            )));
        }
        if onsite.len() != n {
            return Err(Error::InvalidInput(format!(
                "on-site parameters cover {} sites, lattice has {n}",
                onsite.len()
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("beta = {beta} must be finite and >= 0")));
        }
        Ok(Self {
            lattice,
            couplings,
            onsite,
            beta,
        })
    }

    /// Uniform `U`, `mu` with couplings built from `spec`.
    pub fn uniform(lattice: Lattice, spec: &CouplingSpec, u: f64, mu: f64, beta: f64) -> Result<Self> {
        let couplings = CouplingMatrix::build(&lattice, spec)?;
        let onsite = OnsiteParams::uniform(lattice.num_sites(), u, mu)?;
        Self::new(lattice, couplings, onsite, beta)
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.lattice.clone(), self.couplings.clone(), self.onsite.clone(), beta)
    }

    pub fn coupling(&self, e: Edge) -> f64 {
        self.couplings.get(e.a, e.b)
    }
}
