//! Exact diagonalization of the boson-number-truncated model.
//!
//! The Gibbs state is kept as per-sector eigendecompositions plus the
//! per-sector density blocks `R_b = V diag(p) V^T`. All observables route
//! through these blocks; the full density matrix is only assembled by
//! [`dense_density_matrix`] for tiny systems.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_block_hamiltonian, sector_blocks, symmetric_eigen, truncated_dimension, SectorBlock};
use crate::lattice::ModelInstance;
use crate::numeric::{factorial, linear_fit, log_sum_exp, CompensatedSum};

pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Correlations at or below this magnitude count as zero in scans.
pub const NOISE_FLOOR: f64 = 1e-13;

const ENTROPY_CLAMP: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Ordered product of ladder operators; the rightmost factor acts first.
/// Each factor acts within the truncated space (creation on `n = q` gives 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonomialOperator {
    factors: Vec<(usize, Ladder)>,
}

impl MonomialOperator {
    pub fn identity() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn new(factors: Vec<(usize, Ladder)>) -> Self {
        Self { factors }
    }

    pub fn create(site: usize) -> Self {
        Self::new(vec![(site, Ladder::Create)])
    }

    pub fn annihilate(site: usize) -> Self {
        Self::new(vec![(site, Ladder::Annihilate)])
    }

    /// `n_i = a_i^dag a_i`.
    pub fn number(site: usize) -> Self {
        Self::new(vec![(site, Ladder::Create), (site, Ladder::Annihilate)])
    }

    /// `self * other`.
    pub fn then(&self, other: &Self) -> Self {
        let mut f = self.factors.clone();
        f.extend_from_slice(&other.factors);
        Self { factors: f }
    }

    pub fn factors(&self) -> &[(usize, Ladder)] {
        &self.factors
    }

    /// Number of ladder factors.
    pub fn op_count(&self) -> usize {
        self.factors.len()
    }

    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.factors.iter().map(|f| f.0).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Creations minus annihilations.
    pub fn number_shift(&self) -> i64 {
        self.factors
            .iter()
            .map(|f| if f.1 == Ladder::Create { 1 } else { -1 })
            .sum()
    }

    /// Applies the monomial to an occupation vector in place.
    fn apply(&self, occ: &mut [u32], q: u32) -> Option<f64> {
        let mut amp = 1.0;
        for &(site, kind) in self.factors.iter().rev() {
            let n = occ[site];
            match kind {
                Ladder::Annihilate => {
                    if n == 0 {
                        return None;
                    }
                    amp *= f64::from(n).sqrt();
                    occ[site] = n - 1;
                }
                Ladder::Create => {
                    if n == q {
                        return None;
                    }
                    amp *= f64::from(n + 1).sqrt();
                    occ[site] = n + 1;
                }
            }
        }
        Some(amp)
    }
}

#[derive(Debug, Clone)]
pub struct ThermalBlock {
    pub block: SectorBlock,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// `V diag(p) V^T` restricted to this sector.
    pub density: DMatrix<f64>,
}

/// Gibbs state `exp(-beta H) / Z` of the truncated model.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub model: ModelInstance,
    pub q: u32,
    pub blocks: Vec<ThermalBlock>,
    pub log_z: f64,
}

fn check_cap(num_sites: usize, q: u32, cap: usize) -> Result<usize> {
    let required = truncated_dimension(num_sites, q).unwrap_or(usize::MAX);
    if required > cap {
        return Err(Error::ResourceCap {
            what: format!("truncated Hilbert space of {num_sites} sites at q = {q}"),
            required,
            allowed: cap,
        });
    }
    Ok(required)
}

pub fn thermalize(model: &ModelInstance, q: u32, dimension_cap: usize) -> Result<ThermalState> {
    check_cap(model.num_sites(), q, dimension_cap)?;
    let region: Vec<usize> = (0..model.num_sites()).collect();
    let edges = model.couplings.interaction_edges(0.0);
    let blocks = sector_blocks(&region, q)?;
    let eigs: Vec<(SectorBlock, DVector<f64>, DMatrix<f64>)> = blocks
        .into_par_iter()
        .map(|b| {
            let h = build_block_hamiltonian(model, &edges, &b)?.entries;
            let eig = symmetric_eigen(h)?;
            Ok((b, eig.eigenvalues, eig.eigenvectors))
        })
        .collect::<Result<_>>()?;
    let exps: Vec<f64> = eigs
        .iter()
        .flat_map(|(_, vals, _)| vals.iter().map(|l| -model.beta * l))
        .collect();
    let log_z = log_sum_exp(&exps);
    let blocks: Vec<ThermalBlock> = eigs
        .into_par_iter()
        .map(|(block, eigenvalues, eigenvectors)| {
            let p = eigenvalues.map(|l| (-model.beta * l - log_z).exp());
            let scaled = DMatrix::from_fn(eigenvectors.nrows(), eigenvectors.ncols(), |r, c| eigenvectors[(r, c)] * p[c]);
            let density = &scaled * eigenvectors.transpose();
            ThermalBlock { block, eigenvalues, eigenvectors, density }
        })
        .collect();
    let state = ThermalState { model: model.clone(), q, blocks, log_z };
    let tr = state.trace();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!("thermal state trace {tr} differs from 1")));
    }
    Ok(state)
}

impl ThermalState {
    pub fn num_sites(&self) -> usize {
        self.model.num_sites()
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.block.dim()).sum()
    }

    pub fn trace(&self) -> f64 {
        let s: CompensatedSum = self
            .blocks
            .iter()
            .flat_map(|b| (0..b.block.dim()).map(move |k| b.density[(k, k)]))
            .collect();
        s.value()
    }

    /// Thermal probabilities of all eigenstates, in block order.
    pub fn probabilities(&self) -> Vec<f64> {
        let beta = self.model.beta;
        self.blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter().map(move |l| (-beta * l - self.log_z).exp()))
            .collect()
    }

    /// Von Neumann entropy of the full state from its spectrum.
    pub fn entropy(&self) -> f64 {
        entropy_of(self.probabilities())
    }

    /// `sum_x f(occupations of x) R[x, x]`.
    fn diagonal_average(&self, f: impl Fn(&[u32]) -> f64 + Sync) -> f64 {
        let parts: Vec<f64> = self
            .blocks
            .par_iter()
            .map(|b| {
                let s: CompensatedSum = b
                    .block
                    .states()
                    .enumerate()
                    .map(|(k, occ)| f(occ) * b.density[(k, k)])
                    .collect();
                s.value()
            })
            .collect();
        parts.into_iter().collect::<CompensatedSum>().value()
    }
}

fn entropy_of(ps: impl IntoIterator<Item = f64>) -> f64 {
    let s: CompensatedSum = ps
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.max(ENTROPY_CLAMP).ln())
        .collect();
    s.value()
}

fn check_sites(state: &ThermalState, sites: &[usize]) -> Result<()> {
    if let Some(&s) = sites.iter().find(|&&s| s >= state.num_sites()) {
        return Err(Error::InvalidInput(format!("site {s} outside lattice of {} sites", state.num_sites())));
    }
    Ok(())
}

/// `Tr(rho O)`. Monomials that change the total boson number vanish.
pub fn expectation(state: &ThermalState, op: &MonomialOperator) -> Result<f64> {
    check_sites(state, &op.support())?;
    if op.number_shift() != 0 {
        return Ok(0.0);
    }
    let q = state.q;
    let parts: Vec<f64> = state
        .blocks
        .par_iter()
        .map(|b| {
            let mut acc = CompensatedSum::new();
            let mut occ = vec![0u32; b.block.region().len()];
            for (x, base) in b.block.states().enumerate() {
                occ.copy_from_slice(base);
                if let Some(amp) = op.apply(&mut occ, q) {
                    let y = b.block.position(&occ).expect("number-conserving image stays in block");
                    // <v|O|v> summed with weights: sum_x amp R[x, y].
                    acc.add(amp * b.density[(x, y)]);
                }
            }
            acc.value()
        })
        .collect();
    Ok(parts.into_iter().collect::<CompensatedSum>().value())
}

/// `C = Tr(rho O_X O_Y) - Tr(rho O_X) Tr(rho O_Y)` for disjoint supports.
pub fn correlation(state: &ThermalState, ox: &MonomialOperator, oy: &MonomialOperator) -> Result<f64> {
    let (sx, sy) = (ox.support(), oy.support());
    if sx.iter().any(|s| sy.binary_search(s).is_ok()) {
        return Err(Error::InvalidInput(format!("operator supports {sx:?} and {sy:?} overlap")));
    }
    Ok(expectation(state, &ox.then(oy))? - expectation(state, ox)? * expectation(state, oy)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFamily {
    /// `O_X = a_anchor^dag`, `O_Y = a_j`.
    Hopping,
    /// `O_X = n_anchor`, `O_Y = n_j`.
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScanRow {
    pub i: usize,
    pub j: usize,
    pub distance: usize,
    pub correlation: f64,
    /// `Phi / (1 + d)^alpha` with unit constant; `None` without a decay exponent.
    pub bound_ref: Option<f64>,
    /// `|C| (1 + d)^alpha / Phi`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScan {
    pub rows: Vec<ClusteringScanRow>,
    /// Slope of `log|C|` against `log(1 + d)`; needs three rows above the noise floor.
    pub fitted_exponent: Option<f64>,
    pub phi: f64,
}

/// `Phi = sqrt(N_X!) sqrt(N_Y!) beta^{-(N_X + N_Y)/4}`.
pub fn phi_factor(ox: &MonomialOperator, oy: &MonomialOperator, beta: f64) -> f64 {
    let (nx, ny) = (ox.op_count() as u32, oy.op_count() as u32);
    factorial(nx).sqrt() * factorial(ny).sqrt() * beta.powf(-f64::from(nx + ny) / 4.0)
}

pub fn clustering_scan(state: &ThermalState, family: ScanFamily, anchor: usize) -> Result<ClusteringScan> {
    check_sites(state, &[anchor])?;
    let lattice = &state.model.lattice;
    let alpha = state.model.couplings.alpha();
    let ox = match family {
        ScanFamily::Hopping => MonomialOperator::create(anchor),
        ScanFamily::Density => MonomialOperator::number(anchor),
    };
    let mut targets: Vec<(usize, usize)> = (0..state.num_sites())
        .filter(|&j| j != anchor)
        .map(|j| Ok((lattice.distance(anchor, j)?, j)))
        .collect::<Result<_>>()?;
    targets.sort_unstable();
    let oy_for = |j: usize| match family {
        ScanFamily::Hopping => MonomialOperator::annihilate(j),
        ScanFamily::Density => MonomialOperator::number(j),
    };
    let phi = phi_factor(&ox, &oy_for(anchor), state.model.beta);
    let rows: Vec<ClusteringScanRow> = targets
        .into_iter()
        .map(|(d, j)| {
            let oy = oy_for(j);
            let c = correlation(state, &ox, &oy)?;
            let decay = alpha.map(|a| (1.0 + d as f64).powf(a));
            Ok(ClusteringScanRow {
                i: anchor,
                j,
                distance: d,
                correlation: c,
                bound_ref: decay.map(|k| phi / k),
                ratio: decay.map(|k| c.abs() * k / phi),
            })
        })
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.correlation.abs() > NOISE_FLOOR)
        .map(|r| ((1.0 + r.distance as f64).ln(), r.correlation.abs().ln()))
        .unzip();
    let fitted_exponent = if xs.len() >= 3 { linear_fit(&xs, &ys).map(|f| f.0) } else { None };
    Ok(ClusteringScan { rows, fitted_exponent, phi })
}

/// `Tr(n_site^l rho)` for `l = 0..=l_max`; index `l` holds the `l`-th moment.
pub fn moments(state: &ThermalState, site: usize, l_max: u32) -> Result<Vec<f64>> {
    check_sites(state, &[site])?;
    Ok((0..=l_max)
        .map(|l| {
            if l == 0 {
                return state.trace();
            }
            state.diagonal_average(|occ| f64::from(occ[site]).powi(l as i32))
        })
        .collect())
}

/// `p_n = <n| Tr_{site^c} rho |n>` for `n = 0..=q`.
pub fn occupation_distribution(state: &ThermalState, site: usize) -> Result<Vec<f64>> {
    check_sites(state, &[site])?;
    Ok((0..=state.q)
        .map(|n| state.diagonal_average(|occ| if occ[site] == n { 1.0 } else { 0.0 }))
        .collect())
}

/// Reduced density matrix on `sites` over the product basis (first listed
/// site most significant, per-site occupations `0..=q`).
pub fn reduced_density(state: &ThermalState, sites: &[usize], dimension_cap: usize) -> Result<DMatrix<f64>> {
    check_sites(state, sites)?;
    let dim = check_cap(sites.len(), state.q, dimension_cap)?;
    let base = state.q as usize + 1;
    let n = state.num_sites();
    let mut in_subset = vec![false; n];
    for &s in sites {
        in_subset[s] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&s| !in_subset[s]).collect();
    let index_of = |occ: &[u32], which: &[usize]| which.iter().fold(0usize, |acc, &s| acc * base + occ[s] as usize);
    let parts: Vec<DMatrix<f64>> = state
        .blocks
        .par_iter()
        .map(|b| {
            let mut out = DMatrix::<f64>::zeros(dim, dim);
            let mut groups: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
            for (x, occ) in b.block.states().enumerate() {
                groups.entry(index_of(occ, &rest)).or_default().push((x, index_of(occ, sites)));
            }
            let mut keys: Vec<usize> = groups.keys().copied().collect();
            keys.sort_unstable();
            for key in keys {
                let members = &groups[&key];
                for &(x, ax) in members {
                    for &(y, ay) in members {
                        out[(ax, ay)] += b.density[(x, y)];
                    }
                }
            }
            out
        })
        .collect();
    let mut total = DMatrix::<f64>::zeros(dim, dim);
    for p in parts {
        total += p;
    }
    Ok(total)
}

/// Von Neumann entropy of a symmetric density matrix.
pub fn matrix_entropy(rho: &DMatrix<f64>) -> Result<f64> {
    let eig = crate::fock::symmetric_eigenvalues(rho)?;
    Ok(entropy_of(eig.iter().copied()))
}

/// `I(A:B) = S(rho_A) + S(rho_B) - S(rho)` for a bipartition of the lattice.
pub fn mutual_information(state: &ThermalState, a: &[usize], b: &[usize], dimension_cap: usize) -> Result<f64> {
    check_sites(state, a)?;
    check_sites(state, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("both sides of the partition must be nonempty".into()));
    }
    let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    let before = all.len();
    all.dedup();
    if before != all.len() || all.len() != state.num_sites() {
        return Err(Error::InvalidInput("partition must split the lattice into disjoint A and B".into()));
    }
    let sa = matrix_entropy(&reduced_density(state, a, dimension_cap)?)?;
    let sb = matrix_entropy(&reduced_density(state, b, dimension_cap)?)?;
    Ok(sa + sb - state.entropy())
}

/// Full density matrix in the product basis (site 0 most significant).
/// Only for cross-checks on tiny systems.
pub fn dense_density_matrix(state: &ThermalState, dimension_cap: usize) -> Result<DMatrix<f64>> {
    let all: Vec<usize> = (0..state.num_sites()).collect();
    reduced_density(state, &all, dimension_cap)
}
