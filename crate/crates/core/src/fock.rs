//! Truncated Fock spaces split into sectors of fixed total boson number.
//!
//! Every site of a region carries occupations `0..=q`. Hopping conserves the
//! total number, so the projected Hamiltonian `Pi H Pi` is block diagonal over
//! sectors and traces of `exp(-beta H)` reduce to per-block eigenvalue sums.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Edge, ModelInstance};
use crate::numeric::log_sum_exp;

pub use crate::lattice::onsite_energy;

/// Occupation vectors of a region with a fixed total boson number, in
/// lexicographic order (first site most significant).
#[derive(Debug, Clone)]
pub struct SectorBlock {
    region: Vec<usize>,
    q: u32,
    total: u32,
    states: Vec<u32>,
    lookup: HashMap<u64, usize>,
}

impl SectorBlock {
    fn new(region: &[usize], q: u32, total: u32) -> Self {
        let len = region.len();
        let mut states = Vec::new();
        let mut current = vec![0u32; len];
        fill(&mut current, 0, total, q, &mut states);
        let mut block = Self {
            region: region.to_vec(),
            q,
            total,
            states,
            lookup: HashMap::new(),
        };
        block.lookup = (0..block.dim()).map(|k| (block.encode(block.state(k)), k)).collect();
        block
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn cutoff(&self) -> u32 {
        self.q
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.region.len()
    }

    /// Occupations of basis state `k`, aligned with [`Self::region`].
    pub fn state(&self, k: usize) -> &[u32] {
        let len = self.region.len();
        &self.states[k * len..(k + 1) * len]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.states.chunks_exact(self.region.len())
    }

    /// Basis position of an occupation vector, if it belongs to this block.
    pub fn position(&self, occ: &[u32]) -> Option<usize> {
        if occ.len() != self.region.len() || occ.iter().any(|&n| n > self.q) {
            return None;
        }
        self.lookup.get(&self.encode(occ)).copied()
    }

    fn encode(&self, occ: &[u32]) -> u64 {
        let base = u64::from(self.q) + 1;
        occ.iter().fold(0u64, |acc, &n| acc * base + u64::from(n))
    }
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, q: u32, out: &mut Vec<u32>) {
    let len = current.len();
    if pos == len - 1 {
        if remaining <= q {
            current[pos] = remaining;
            out.extend_from_slice(current);
        }
        return;
    }
    let capacity_after = q as u64 * (len - pos - 1) as u64;
    for n in 0..=q.min(remaining) {
        if u64::from(remaining - n) > capacity_after {
            continue;
        }
        current[pos] = n;
        fill(current, pos + 1, remaining - n, q, out);
    }
}

fn validate_region(region: &[usize], num_sites: Option<usize>) -> Result<()> {
    if region.is_empty() {
        return Err(Error::InvalidInput("region must be nonempty".into()));
    }
    let mut sorted = region.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput(format!("region {region:?} repeats a site")));
    }
    if let Some(n) = num_sites {
        if let Some(&s) = sorted.last().filter(|&&s| s >= n) {
            return Err(Error::InvalidInput(format!("region site {s} outside lattice of {n} sites")));
        }
    }
    Ok(())
}

/// Dimension `(q + 1)^|L|` of the per-site truncated space, if it fits.
pub fn truncated_dimension(region_len: usize, q: u32) -> Option<usize> {
    (q as usize + 1).checked_pow(region_len as u32)
}

/// All number sectors `N_tot = 0..=q|L|` of a region.
pub fn sector_blocks(region: &[usize], q: u32) -> Result<Vec<SectorBlock>> {
    validate_region(region, None)?;
    if truncated_dimension(region.len(), q).map_or(true, |d| d as u64 > u64::MAX / 2) {
        return Err(Error::ResourceCap {
            what: format!("truncated space of {} sites at q = {q}", region.len()),
            required: usize::MAX,
            allowed: usize::MAX / 2,
        });
    }
    let max_total = q * region.len() as u32;
    Ok((0..=max_total).map(|t| SectorBlock::new(region, q, t)).collect())
}

/// Projected Hamiltonian restricted to one number sector.
#[derive(Debug, Clone)]
pub struct BlockMatrix<'a> {
    pub block: &'a SectorBlock,
    pub entries: DMatrix<f64>,
}

/// Assembles `Pi (W + sum_{e in active} h_e) Pi` on `block`.
///
/// `h_e = -J_e (a_i^dag a_j + h.c.)`; amplitudes that would push a site above
/// the cutoff are dropped.
pub fn build_block_hamiltonian<'a>(
    model: &ModelInstance,
    active_edges: &[Edge],
    block: &'a SectorBlock,
) -> Result<BlockMatrix<'a>> {
    let region = block.region();
    let position: HashMap<usize, usize> = region.iter().enumerate().map(|(p, &s)| (s, p)).collect();
    let mut hops = Vec::with_capacity(active_edges.len());
    for e in active_edges {
        match (position.get(&e.a), position.get(&e.b)) {
            (Some(&pa), Some(&pb)) => hops.push((pa, pb, model.coupling(*e))),
            _ => {
                return Err(Error::InvalidInput(format!("edge {e} not inside region {region:?}")));
            }
        }
    }

    let dim = block.dim();
    let q = block.cutoff();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut scratch = vec![0u32; region.len()];
    for x in 0..dim {
        let occ = block.state(x);
        h[(x, x)] = region
            .iter()
            .zip(occ)
            .map(|(&site, &n)| model.onsite.energy(site, n))
            .sum();
        for &(pa, pb, j) in &hops {
            if j == 0.0 {
                continue;
            }
            // a_a^dag a_b; the Hermitian conjugate is the transposed entry.
            for (to, from) in [(pa, pb), (pb, pa)] {
                if occ[from] == 0 || occ[to] == q {
                    continue;
                }
                scratch.copy_from_slice(occ);
                scratch[to] += 1;
                scratch[from] -= 1;
                let y = block.position(&scratch).expect("number-conserving move stays in block");
                if y < x {
                    continue;
                }
                let amp = -j * (f64::from(occ[to] + 1) * f64::from(occ[from])).sqrt();
                h[(y, x)] += amp;
                h[(x, y)] += amp;
            }
        }
    }
    Ok(BlockMatrix { block, entries: h })
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let vals = if m.nrows() == 1 {
        DVector::from_element(1, m[(0, 0)])
    } else {
        m.symmetric_eigenvalues()
    };
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "eigensolver produced non-finite eigenvalues for a {}x{} block",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(DVector::from_vec(v))
}

/// Full symmetric eigendecomposition with a finiteness check.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let (r, c) = (m.nrows(), m.ncols());
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().chain(eig.eigenvectors.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("eigendecomposition of a {r}x{c} block failed")));
    }
    Ok(eig)
}

/// `log sum_k exp(-beta lambda_k)` over the eigenvalues of a block.
pub fn block_log_trace_exp(matrix: &DMatrix<f64>, beta: f64) -> Result<f64> {
    let vals = symmetric_eigenvalues(matrix)?;
    let exps: Vec<f64> = vals.iter().map(|l| -beta * l).collect();
    Ok(log_sum_exp(&exps))
}

/// Sector bases of one region, reused across different active edge sets.
#[derive(Debug, Clone)]
pub struct RegionSectors {
    region: Vec<usize>,
    q: u32,
    blocks: Vec<SectorBlock>,
}

impl RegionSectors {
    pub fn new(region: &[usize], q: u32) -> Result<Self> {
        Ok(Self {
            region: region.to_vec(),
            q,
            blocks: sector_blocks(region, q)?,
        })
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn cutoff(&self) -> u32 {
        self.q
    }

    pub fn blocks(&self) -> &[SectorBlock] {
        &self.blocks
    }

    pub fn max_block_dim(&self) -> usize {
        self.blocks.iter().map(SectorBlock::dim).max().unwrap_or(0)
    }

    /// `log Tr(Pi_{L,q} exp(-beta H_L[active]))`, blocks reduced in sector order.
    pub fn log_partition(&self, model: &ModelInstance, active_edges: &[Edge]) -> Result<f64> {
        validate_region(&self.region, Some(model.num_sites()))?;
        let per_block: Vec<f64> = self
            .blocks
            .par_iter()
            .map(|b| {
                let h = build_block_hamiltonian(model, active_edges, b)?;
                block_log_trace_exp(&h.entries, model.beta)
            })
            .collect::<Result<_>>()?;
        Ok(log_sum_exp(&per_block))
    }
}

/// `log Tr(Pi_{L,q} exp(-beta H))` where `H` has the on-site terms of `region`
/// and hopping on `active_edges` only.
pub fn restricted_log_partition(model: &ModelInstance, region: &[usize], active_edges: &[Edge], q: u32) -> Result<f64> {
    RegionSectors::new(region, q)?.log_partition(model, active_edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CouplingSpec, Lattice};

    fn pair_model(j: f64, u: f64, mu: f64, beta: f64) -> ModelInstance {
        ModelInstance::uniform(
            Lattice::chain(2).unwrap(),
            &CouplingSpec::FiniteRange { g: j, cutoff: 1 },
            u,
            mu,
            beta,
        )
        .unwrap()
    }

    fn dims(region: &[usize], q: u32) -> Vec<usize> {
        sector_blocks(region, q).unwrap().iter().map(SectorBlock::dim).collect()
    }

    #[test]
    fn sector_dimensions() {
        assert_eq!(dims(&[0, 1], 1), vec![1, 2, 1]);
        assert_eq!(dims(&[0], 3), vec![1, 1, 1, 1]);
        assert_eq!(dims(&[0, 1, 2], 2).iter().sum::<usize>(), 27);
        for len in 1..=4 {
            let region: Vec<usize> = (0..len).collect();
            for q in 0..=5 {
                let total: usize = dims(&region, q).iter().sum();
                assert_eq!(total, truncated_dimension(len, q).unwrap());
            }
        }
        assert!(sector_blocks(&[], 2).is_err());
        assert!(sector_blocks(&[1, 1], 2).is_err());
    }

    #[test]
    fn blocks_are_lexicographic_and_indexed() {
        for b in sector_blocks(&[3, 5, 7], 2).unwrap() {
            let states: Vec<&[u32]> = b.states().collect();
            assert!(states.windows(2).all(|w| w[0] < w[1]));
            for (k, s) in states.iter().enumerate() {
                assert_eq!(s.iter().sum::<u32>(), b.total());
                assert_eq!(b.position(s), Some(k));
            }
        }
    }

    #[test]
    fn two_site_hopping_blocks() {
        let j = 0.7;
        let model = pair_model(j, 1.3, 0.0, 1.0);
        let blocks = sector_blocks(&[0, 1], 1).unwrap();
        let edges = [Edge::new(0, 1)];
        let h1 = build_block_hamiltonian(&model, &edges, &blocks[1]).unwrap();
        assert_eq!(h1.entries, DMatrix::from_row_slice(2, 2, &[0.0, -j, -j, 0.0]));
        let h2 = build_block_hamiltonian(&model, &edges, &blocks[2]).unwrap();
        assert_eq!(h2.entries, DMatrix::from_element(1, 1, 0.0));
        let free = build_block_hamiltonian(&model, &[], &blocks[1]).unwrap();
        assert_eq!(free.entries, DMatrix::zeros(2, 2));
        assert!(build_block_hamiltonian(&model, &[Edge::new(0, 2)], &blocks[1]).is_err());
    }

    #[test]
    fn log_trace_examples() {
        let e = 0.37;
        assert!((block_log_trace_exp(&DMatrix::from_element(1, 1, e), 2.0).unwrap() + 2.0 * e).abs() < 1e-15);
        let (j, beta) = (0.4f64, 1.7f64);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -j, -j, 0.0]);
        let expected = ((beta * j).exp() + (-beta * j).exp()).ln();
        assert!((block_log_trace_exp(&m, beta).unwrap() - expected).abs() < 1e-14);
        assert!((block_log_trace_exp(&DMatrix::zeros(3, 3), 1.0).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_trace_matches_direct_sum() {
        let m = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 7) % 5) as f64 * 0.3 - 0.5);
        let vals = m.clone().symmetric_eigen().eigenvalues;
        let beta = 0.8;
        let direct: f64 = vals.iter().map(|l| (-beta * l).exp()).sum();
        let got = block_log_trace_exp(&m, beta).unwrap().exp();
        assert!(((got - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_is_a_numerical_error() {
        let m = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(block_log_trace_exp(&m, 1.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn restricted_log_partition_examples() {
        let (j, beta) = (0.6, 0.9);
        let model = pair_model(j, 1.0, 0.0, beta);
        assert!((restricted_log_partition(&model, &[0], &[], 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        let got = restricted_log_partition(&model, &[0, 1], &[Edge::new(0, 1)], 1).unwrap();
        let expected = (2.0 + 2.0 * (beta * j).cosh()).ln();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn free_region_is_a_product() {
        let model = ModelInstance::new(
            Lattice::chain(3).unwrap(),
            crate::lattice::CouplingMatrix::build(
                &Lattice::chain(3).unwrap(),
                &CouplingSpec::LongRange { g: 0.5, alpha: 2.0 },
            )
            .unwrap(),
            crate::lattice::OnsiteParams::new(vec![1.0, 0.7, 1.4], vec![0.3, -0.2, 0.9]).unwrap(),
            0.8,
        )
        .unwrap();
        let q = 3;
        let expected: f64 = (0..3)
            .map(|s| {
                (0..=q)
                    .map(|n| (-model.beta * model.onsite.energy(s, n)).exp())
                    .sum::<f64>()
                    .ln()
            })
            .sum();
        let got = restricted_log_partition(&model, &[0, 1, 2], &[], q).unwrap();
        assert!((got - expected).abs() < 1e-13);
    }

    #[test]
    fn infinite_temperature_counts_states() {
        let model = pair_model(0.9, 1.0, 0.4, 0.0);
        for q in 0..=4 {
            let got = restricted_log_partition(&model, &[0, 1], &[Edge::new(0, 1)], q).unwrap();
            assert!((got - 2.0 * f64::from(q + 1).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_in_cutoff() {
        let model = pair_model(0.8, 1.0, 0.5, 0.7);
        let vals: Vec<f64> = (0..=5)
            .map(|q| restricted_log_partition(&model, &[0, 1], &[Edge::new(0, 1)], q).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }
}
