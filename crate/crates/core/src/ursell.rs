//! Ursell functions `phi(G) = sum over connected spanning edge subsets S of (-1)^|S|`.
//!
//! Evaluation uses the vertex-subset recursion: with `a(U) = [U has no
//! internal edges]` (the signed count of all edge subsets of `G[U]`) and `v`
//! the smallest vertex of `U`,
//! `a(U) = sum_{W subset U, v in W} phi(G[W]) a(U \ W)`,
//! which is solved for `phi(G[U])` over all subsets in `O(3^n)`.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::numeric::factorial;

/// Largest graph the subset recursion accepts.
pub const MAX_VERTICES: usize = 20;

/// Default cap on graphs memoized (and evaluated) during an expansion.
pub const DEFAULT_MEMO_CAP: usize = 10;

/// Simple undirected graph on at most 32 vertices, stored as adjacency bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UGraph {
    adj: Vec<u32>,
}

impl UGraph {
    pub fn new(n: usize) -> Self {
        assert!(n <= 32, "UGraph supports at most 32 vertices");
        Self { adj: vec![0; n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for a in 0..n {
            for b in (a + 1)..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a] |= 1 << b;
            self.adj[b] |= 1 << a;
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_vertices();
        (0..n)
            .flat_map(|a| ((a + 1)..n).filter(move |&b| self.has_edge(a, b)).map(move |b| (a, b)))
            .collect()
    }

    pub fn neighbors(&self, v: usize) -> u32 {
        self.adj[v]
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return false;
        }
        let all = full_mask(n);
        let mut seen = 1u32;
        let mut frontier = 1u32;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.adj[v] & !seen;
            seen |= fresh;
            frontier |= fresh;
        }
        seen == all
    }
}

fn full_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Exact Ursell function. Disconnected graphs give 0 (and a logged warning).
pub fn ursell(graph: &UGraph) -> Result<i64> {
    let n = graph.num_vertices();
    if n == 0 {
        return Err(Error::InvalidInput("Ursell function of an empty graph".into()));
    }
    if n > MAX_VERTICES {
        return Err(Error::ResourceCap {
            what: "Ursell function vertex count".into(),
            required: n,
            allowed: MAX_VERTICES,
        });
    }
    if !graph.is_connected() {
        log::warn!("Ursell function requested for a disconnected graph on {n} vertices");
        return Ok(0);
    }
    let size = 1usize << n;
    // independent[U]: no edge inside U.
    let mut independent = vec![false; size];
    independent[0] = true;
    for u in 1..size {
        let v = u.trailing_zeros() as usize;
        let rest = u & (u - 1);
        independent[u] = independent[rest] && (graph.adj[v] as usize & rest) == 0;
    }
    let mut phi = vec![0i64; size];
    for u in 1..size {
        let low = u & u.wrapping_neg();
        let rest = u ^ low;
        let mut acc: i64 = i64::from(independent[u]);
        // W = low | s for proper subsets s of rest; U \ W = rest ^ s.
        let mut s = (rest.wrapping_sub(1)) & rest;
        if rest != 0 {
            loop {
                if independent[rest ^ s] {
                    acc -= phi[low | s];
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & rest;
            }
        }
        phi[u] = acc;
    }
    Ok(phi[size - 1])
}

/// Isomorphism-invariant key: the lexicographically smallest lower-triangular
/// adjacency string over orderings consistent with colour refinement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphKey {
    n: u8,
    bits: Vec<u64>,
}

impl GraphKey {
    pub fn num_vertices(&self) -> usize {
        self.n as usize
    }
}

pub fn canonical_graph_key(graph: &UGraph) -> GraphKey {
    let n = graph.num_vertices();
    if n <= 1 {
        return GraphKey { n: n as u8, bits: Vec::new() };
    }
    let colors = refine_colors(graph);
    let mut search = KeySearch {
        graph,
        colors: &colors,
        order: Vec::with_capacity(n),
        used: 0,
        best: None,
        current: Vec::with_capacity(n * (n - 1) / 2),
    };
    search.run();
    GraphKey {
        n: n as u8,
        bits: pack(&search.best.expect("at least one ordering")),
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64)
        .map(|c| c.iter().enumerate().fold(0u64, |acc, (k, &b)| acc | (u64::from(b) << k)))
        .collect()
}

/// Stable colour refinement; colours are ranks, so they are comparable across
/// isomorphic graphs.
fn refine_colors(graph: &UGraph) -> Vec<usize> {
    let n = graph.num_vertices();
    let mut colors: Vec<usize> = (0..n).map(|v| graph.adj[v].count_ones() as usize).collect();
    loop {
        let sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n).filter(|&u| graph.has_edge(v, u)).map(|u| colors[u]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let mut distinct = sigs.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = sigs.iter().map(|s| distinct.binary_search(s).unwrap()).collect();
        let classes_before = {
            let mut c = colors.clone();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        let stable = distinct.len() == classes_before;
        colors = next;
        if stable {
            return colors;
        }
    }
}

struct KeySearch<'a> {
    graph: &'a UGraph,
    colors: &'a [usize],
    order: Vec<usize>,
    used: u32,
    best: Option<Vec<bool>>,
    current: Vec<bool>,
}

impl KeySearch<'_> {
    fn run(&mut self) {
        let n = self.graph.num_vertices();
        if self.order.len() == n {
            if self.best.as_ref().map_or(true, |b| self.current < *b) {
                self.best = Some(self.current.clone());
            }
            return;
        }
        let free: Vec<usize> = (0..n).filter(|&v| self.used >> v & 1 == 0).collect();
        let cell = free.iter().map(|&v| self.colors[v]).min().unwrap();
        let mut tried: Vec<usize> = Vec::new();
        for &v in free.iter().filter(|&&v| self.colors[v] == cell) {
            // Swapping twins is an automorphism fixing everything placed so far.
            if tried.iter().any(|&t| self.twins(t, v)) {
                continue;
            }
            tried.push(v);
            let mark = self.current.len();
            for &u in &self.order {
                self.current.push(self.graph.has_edge(u, v));
            }
            if let Some(best) = &self.best {
                if self.current[..] > best[..self.current.len()] {
                    self.current.truncate(mark);
                    continue;
                }
            }
            self.order.push(v);
            self.used |= 1 << v;
            self.run();
            self.used &= !(1 << v);
            self.order.pop();
            self.current.truncate(mark);
        }
    }

    fn twins(&self, a: usize, b: usize) -> bool {
        let mask = !((1u32 << a) | (1u32 << b));
        self.graph.adj[a] & mask == self.graph.adj[b] & mask
    }
}

/// Memoized Ursell values keyed by canonical form.
#[derive(Debug)]
pub struct UrsellCache {
    cap: usize,
    table: RwLock<HashMap<GraphKey, i64>>,
}

impl Default for UrsellCache {
    fn default() -> Self {
        Self::new(DEFAULT_MEMO_CAP)
    }
}

impl UrsellCache {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.min(MAX_VERTICES),
            table: RwLock::new(HashMap::new()),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Graphs above the cap are rejected rather than evaluated.
    pub fn get(&self, graph: &UGraph) -> Result<i64> {
        if graph.num_vertices() > self.cap {
            return Err(Error::ResourceCap {
                what: "Ursell memo vertex count".into(),
                required: graph.num_vertices(),
                allowed: self.cap,
            });
        }
        let key = canonical_graph_key(graph);
        if let Some(&v) = self.table.read().expect("ursell cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = ursell(graph)?;
        self.table.write().expect("ursell cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("ursell cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Coefficient of `prod w^mu` in the log-expansion for a cluster whose
/// expanded (copy) graph is `expanded`: `phi(expanded) / prod mu!`.
pub fn cluster_coefficient(expanded_phi: i64, multiplicities: impl IntoIterator<Item = u32>) -> f64 {
    let denom: f64 = multiplicities.into_iter().map(factorial).product();
    expanded_phi as f64 / denom
}
