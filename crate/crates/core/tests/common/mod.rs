//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use bhcluster::lattice::{CouplingSpec, Edge, Lattice, ModelInstance};
use bhcluster::polymer::Polymer;
use bhcluster::ursell::UGraph;

pub fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

/// Sum of `(-1)^|S|` over connected spanning edge subsets, by enumeration.
pub fn brute_ursell(g: &UGraph) -> i64 {
    let n = g.num_vertices();
    let edges = g.edges();
    let mut total = 0i64;
    for mask in 0u64..(1u64 << edges.len()) {
        let sub: Vec<(usize, usize)> = (0..edges.len()).filter(|&k| mask >> k & 1 == 1).map(|k| edges[k]).collect();
        if connected(n, &sub) {
            total += if sub.len() % 2 == 0 { 1 } else { -1 };
        }
    }
    total
}

/// Connected edge subsets of size `1..=max_size`, by subset enumeration.
pub fn brute_polymers(edges: &[Edge], max_size: usize) -> Vec<Polymer> {
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << edges.len()) {
        let k = mask.count_ones() as usize;
        if k > max_size {
            continue;
        }
        let sub: Vec<Edge> = (0..edges.len()).filter(|&b| mask >> b & 1 == 1).map(|b| edges[b]).collect();
        let mut sites: Vec<usize> = sub.iter().flat_map(|e| [e.a, e.b]).collect();
        sites.sort_unstable();
        sites.dedup();
        let local: Vec<(usize, usize)> = sub
            .iter()
            .map(|e| (sites.binary_search(&e.a).unwrap(), sites.binary_search(&e.b).unwrap()))
            .collect();
        if connected(sites.len(), &local) {
            out.push(Polymer::new(sub).expect("connected"));
        }
    }
    out.sort();
    out
}

fn overlap(a: &Polymer, b: &Polymer) -> bool {
    a.support().iter().any(|s| b.support().contains(s))
}

/// Multisets of polymers (as sorted `(index, multiplicity)` lists) with total
/// size `<= max_total` whose distinct members form a connected overlap graph.
pub fn brute_clusters(polymers: &[Polymer], max_total: usize) -> Vec<Vec<(usize, u32)>> {
    fn rec(
        polymers: &[Polymer],
        start: usize,
        budget: usize,
        current: &mut Vec<(usize, u32)>,
        out: &mut Vec<Vec<(usize, u32)>>,
    ) {
        if !current.is_empty() {
            let idx: Vec<usize> = current.iter().map(|c| c.0).collect();
            let mut es = Vec::new();
            for x in 0..idx.len() {
                for y in (x + 1)..idx.len() {
                    if overlap(&polymers[idx[x]], &polymers[idx[y]]) {
                        es.push((x, y));
                    }
                }
            }
            if connected(idx.len(), &es) {
                out.push(current.clone());
            }
        }
        for p in start..polymers.len() {
            let s = polymers[p].size();
            let mut mult = 1u32;
            while s * mult as usize <= budget {
                current.push((p, mult));
                rec(polymers, p + 1, budget - s * mult as usize, current, out);
                current.pop();
                mult += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(polymers, 0, max_total, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// `sum over pairwise-disjoint polymer families of prod w`.
pub fn admissible_sum(polymers: &[Polymer], weights: &[f64]) -> f64 {
    fn rec(polymers: &[Polymer], weights: &[f64], start: usize, chosen: &mut Vec<usize>) -> f64 {
        let mut total = 0.0;
        for p in start..polymers.len() {
            if chosen.iter().all(|&c| !overlap(&polymers[c], &polymers[p])) {
                chosen.push(p);
                total += weights[p] * (1.0 + rec(polymers, weights, p + 1, chosen));
                chosen.pop();
            }
        }
        total
    }
    1.0 + rec(polymers, weights, 0, &mut Vec::new())
}

/// All `k`-subsets of `0..n` as edge lists on the complete graph.
pub fn complete_edges(n: usize) -> Vec<Edge> {
    (0..n).flat_map(|a| ((a + 1)..n).map(move |b| Edge::new(a, b))).collect()
}

pub fn chain_model(n: usize, spec: CouplingSpec, u: f64, mu: f64, beta: f64) -> ModelInstance {
    ModelInstance::uniform(Lattice::chain(n).unwrap(), &spec, u, mu, beta).unwrap()
}

pub fn all_to_all(n: usize, j: f64) -> CouplingSpec {
    let matrix = (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { j }).collect()).collect();
    CouplingSpec::Explicit { matrix, envelope: None }
}

pub fn single_site(u: f64, mu: f64, beta: f64) -> ModelInstance {
    chain_model(1, CouplingSpec::Explicit { matrix: vec![vec![0.0]], envelope: None }, u, mu, beta)
}

/// `sum_n f(n) e^{-beta W(n)} / sum_n e^{-beta W(n)}` over `n = 0..=q`.
pub fn boltzmann_average(u: f64, mu: f64, beta: f64, q: u32, f: impl Fn(u32) -> f64) -> f64 {
    let w: Vec<f64> = (0..=q)
        .map(|n| {
            let x = f64::from(n);
            (-beta * (u * x * (x - 1.0) / 2.0 - mu * x)).exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    (0..=q).map(|n| f(n) * w[n as usize]).sum::<f64>() / z
}

/// Counts by key, for comparing enumerations irrespective of order.
pub fn histogram<K: Ord>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}
