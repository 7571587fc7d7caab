//! Polymers (connected sets of interaction edges) and clusters (multisets of
//! polymers whose incompatibility graph is connected).
//!
//! Canonical order for polymers is by size, then by the sorted edge list.
//! Clusters refer to polymers by their index in a canonically sorted alphabet
//! and are ordered by total size, then by the sorted member list.

use std::cmp::Ordering;

use serde::Serialize;

use crate::lattice::Edge;
use crate::ursell::UGraph;

/// A connected set of distinct edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Polymer {
    edges: Vec<Edge>,
    support: Vec<usize>,
}

impl Polymer {
    /// Returns `None` for an empty or disconnected edge set.
    pub fn new(mut edges: Vec<Edge>) -> Option<Self> {
        edges.sort_unstable();
        edges.dedup();
        if edges.is_empty() || !edges_connected(&edges) {
            return None;
        }
        let support = support_of(&edges);
        Some(Self { edges, support })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted union of edge endpoints.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_site(&self, site: usize) -> bool {
        self.support.binary_search(&site).is_ok()
    }
}

impl Ord for Polymer {
    fn cmp(&self, other: &Self) -> Ordering {
        self.edges
            .len()
            .cmp(&other.edges.len())
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

impl PartialOrd for Polymer {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for Polymer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, e) in self.edges.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

fn support_of(edges: &[Edge]) -> Vec<usize> {
    let mut s: Vec<usize> = edges.iter().flat_map(|e| [e.a, e.b]).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn sorted_disjoint(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => return false,
        }
    }
    true
}

/// Whether the edge-overlap graph (edges adjacent when sharing a site) is connected.
pub fn edges_connected(edges: &[Edge]) -> bool {
    if edges.is_empty() {
        return false;
    }
    let mut seen = vec![false; edges.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(k) = stack.pop() {
        for (l, e) in edges.iter().enumerate() {
            if !seen[l] && e.shares_site(&edges[k]) {
                seen[l] = true;
                stack.push(l);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Polymers are incompatible iff their supports overlap; every polymer is
/// incompatible with itself.
pub fn incompatible(a: &Polymer, b: &Polymer) -> bool {
    !sorted_disjoint(&a.support, &b.support)
}

fn edge_adjacency(edges: &[Edge]) -> Vec<Vec<usize>> {
    (0..edges.len())
        .map(|k| {
            (0..edges.len())
                .filter(|&l| l != k && edges[l].shares_site(&edges[k]))
                .collect()
        })
        .collect()
}

/// Enumerates connected vertex sets of a graph exactly once each (ESU scheme):
/// every set is reached from its smallest vertex, extending only with larger
/// vertices that are exclusive neighbours of the newest addition.
struct Esu<'a, F: FnMut(&[usize]) -> bool> {
    adj: &'a [Vec<usize>],
    cost: &'a [usize],
    budget: usize,
    visit: F,
}

impl<F: FnMut(&[usize]) -> bool> Esu<'_, F> {
    fn run_from(&mut self, root: usize) {
        if self.cost[root] > self.budget {
            return;
        }
        let mut in_sub = vec![false; self.adj.len()];
        let mut near = vec![0u32; self.adj.len()];
        let mut sub = vec![root];
        in_sub[root] = true;
        mark(&mut near, &self.adj[root], root, 1);
        let ext: Vec<usize> = self.adj[root].iter().copied().filter(|&u| u > root).collect();
        if (self.visit)(&sub) {
            self.extend(&mut sub, &mut in_sub, &mut near, ext, root, self.cost[root]);
        }
    }

    fn extend(
        &mut self,
        sub: &mut Vec<usize>,
        in_sub: &mut [bool],
        near: &mut [u32],
        mut ext: Vec<usize>,
        root: usize,
        used: usize,
    ) {
        while let Some(w) = ext.pop() {
            if used + self.cost[w] > self.budget {
                continue;
            }
            // Exclusive neighbours of w: larger than root, not in or adjacent to sub.
            let mut next = ext.clone();
            for &u in &self.adj[w] {
                if u > root && !in_sub[u] && near[u] == 0 && u != w {
                    next.push(u);
                }
            }
            sub.push(w);
            in_sub[w] = true;
            mark(near, &self.adj[w], w, 1);
            if (self.visit)(sub) {
                self.extend(sub, in_sub, near, next, root, used + self.cost[w]);
            }
            mark(near, &self.adj[w], w, u32::MAX);
            in_sub[w] = false;
            sub.pop();
        }
    }
}

fn mark(near: &mut [u32], nbrs: &[usize], v: usize, delta: u32) {
    near[v] = near[v].wrapping_add(delta);
    for &u in nbrs {
        near[u] = near[u].wrapping_add(delta);
    }
}

fn connected_sets(adj: &[Vec<usize>], cost: &[usize], budget: usize, mut visit: impl FnMut(&[usize])) {
    let mut esu = Esu {
        adj,
        cost,
        budget,
        visit: |s: &[usize]| {
            visit(s);
            true
        },
    };
    for root in 0..adj.len() {
        esu.run_from(root);
    }
}

/// All polymers with at most `max_size` edges drawn from `edges`, in canonical
/// order. With an anchor, only polymers whose support contains it.
pub fn enumerate_polymers(edges: &[Edge], max_size: usize, anchor: Option<usize>) -> Vec<Polymer> {
    PolymerStream::new(edges, max_size, anchor).collect()
}

/// Streaming form of [`enumerate_polymers`]: yields the same sequence while
/// holding only the polymers of one (size, smallest edge) bucket at a time.
pub struct PolymerStream {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    max_size: usize,
    anchor: Option<usize>,
    size: usize,
    root: usize,
    buffer: std::vec::IntoIter<Polymer>,
}

impl PolymerStream {
    pub fn new(edges: &[Edge], max_size: usize, anchor: Option<usize>) -> Self {
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        let adj = edge_adjacency(&edges);
        Self {
            edges,
            adj,
            max_size,
            anchor,
            size: 1,
            root: 0,
            buffer: Vec::new().into_iter(),
        }
    }

    fn fill_bucket(&mut self) -> Vec<Polymer> {
        let size = self.size;
        let cost = vec![1; self.edges.len()];
        let mut found = Vec::new();
        let edges = &self.edges;
        let anchor = self.anchor;
        let mut esu = Esu {
            adj: &self.adj,
            cost: &cost,
            budget: size,
            visit: |s: &[usize]| {
                if s.len() == size {
                    let p = Polymer::new(s.iter().map(|&k| edges[k]).collect()).expect("ESU yields connected sets");
                    if anchor.map_or(true, |a| p.contains_site(a)) {
                        found.push(p);
                    }
                    false
                } else {
                    true
                }
            },
        };
        esu.run_from(self.root);
        found.sort_unstable();
        found
    }
}

impl Iterator for PolymerStream {
    type Item = Polymer;

    fn next(&mut self) -> Option<Polymer> {
        loop {
            if let Some(p) = self.buffer.next() {
                return Some(p);
            }
            if self.size > self.max_size || self.edges.is_empty() {
                return None;
            }
            let bucket = self.fill_bucket();
            self.buffer = bucket.into_iter();
            self.root += 1;
            if self.root == self.edges.len() {
                self.root = 0;
                self.size += 1;
            }
        }
    }
}

/// One distinct polymer of a cluster with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClusterMember {
    /// Index into the polymer alphabet the cluster was enumerated from.
    pub polymer: usize,
    pub multiplicity: u32,
}

/// A multiset of polymers with connected incompatibility graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Cluster {
    members: Vec<ClusterMember>,
    total_size: usize,
}

impl Cluster {
    pub fn members(&self) -> &[ClusterMember] {
        &self.members
    }

    /// `sum mu |gamma|`.
    pub fn total_size(&self) -> usize {
        self.total_size
    }

    /// Number of polymers counted with multiplicity.
    pub fn num_copies(&self) -> usize {
        self.members.iter().map(|m| m.multiplicity as usize).sum()
    }
}

impl Ord for Cluster {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_size
            .cmp(&other.total_size)
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl PartialOrd for Cluster {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Adjacency lists of the incompatibility relation on an alphabet (no self-loops).
pub fn alphabet_incompatibility(polymers: &[Polymer]) -> Vec<Vec<usize>> {
    (0..polymers.len())
        .map(|a| {
            (0..polymers.len())
                .filter(|&b| b != a && incompatible(&polymers[a], &polymers[b]))
                .collect()
        })
        .collect()
}

/// Every cluster over `polymers` with `total_size <= max_total`, exactly once,
/// in canonical order. `polymers` should be canonically sorted and distinct.
pub fn enumerate_clusters(polymers: &[Polymer], max_total: usize) -> Vec<Cluster> {
    let adj = alphabet_incompatibility(polymers);
    let cost: Vec<usize> = polymers.iter().map(Polymer::size).collect();
    let mut out = Vec::new();
    connected_sets(&adj, &cost, max_total, |set| {
        let mut distinct = set.to_vec();
        distinct.sort_unstable();
        let base: usize = distinct.iter().map(|&k| cost[k]).sum();
        let mut mult = vec![1u32; distinct.len()];
        push_multiplicities(&distinct, &cost, &mut mult, 0, base, max_total, &mut out);
    });
    out.sort_unstable();
    out
}

fn push_multiplicities(
    distinct: &[usize],
    cost: &[usize],
    mult: &mut [u32],
    pos: usize,
    used: usize,
    max_total: usize,
    out: &mut Vec<Cluster>,
) {
    if pos == distinct.len() {
        out.push(Cluster {
            members: distinct
                .iter()
                .zip(mult.iter())
                .map(|(&polymer, &multiplicity)| ClusterMember { polymer, multiplicity })
                .collect(),
            total_size: used,
        });
        return;
    }
    let c = cost[distinct[pos]];
    let mut used = used;
    loop {
        push_multiplicities(distinct, cost, mult, pos + 1, used, max_total, out);
        if used + c > max_total {
            break;
        }
        used += c;
        mult[pos] += 1;
    }
    mult[pos] = 1;
}

/// Incompatibility graph on the distinct members of a cluster.
pub fn incompatibility_graph(cluster: &Cluster, polymers: &[Polymer]) -> UGraph {
    let ms = cluster.members();
    let mut g = UGraph::new(ms.len());
    for a in 0..ms.len() {
        for b in (a + 1)..ms.len() {
            if incompatible(&polymers[ms[a].polymer], &polymers[ms[b].polymer]) {
                g.add_edge(a, b);
            }
        }
    }
    g
}

/// Incompatibility graph of the cluster read as a sequence: `mu` vertices per
/// member, copies of one polymer pairwise adjacent (self-incompatibility).
pub fn expanded_incompatibility_graph(cluster: &Cluster, polymers: &[Polymer]) -> UGraph {
    let owner: Vec<usize> = cluster
        .members()
        .iter()
        .enumerate()
        .flat_map(|(k, m)| std::iter::repeat(k).take(m.multiplicity as usize))
        .collect();
    let ms = cluster.members();
    let mut g = UGraph::new(owner.len());
    for a in 0..owner.len() {
        for b in (a + 1)..owner.len() {
            let (pa, pb) = (ms[owner[a]].polymer, ms[owner[b]].polymer);
            if pa == pb || incompatible(&polymers[pa], &polymers[pb]) {
                g.add_edge(a, b);
            }
        }
    }
    g
}
