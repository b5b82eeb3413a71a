//! Weighted trees over point indices.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        Self {
            u: a.min(b),
            v: a.max(b),
            weight,
        }
    }
}

/// A connected acyclic graph with positive edge weights.
///
/// Vertices are point indices (rows of the dataset), so the vertex set of a
/// subtree is a subset of the full tree's.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedTree {
    adj: BTreeMap<usize, BTreeMap<usize, f64>>,
}

impl WeightedTree {
    pub fn singleton(v: usize) -> Self {
        let mut adj = BTreeMap::new();
        adj.insert(v, BTreeMap::new());
        Self { adj }
    }

    /// Builds and validates a tree from an edge list. The vertex set is the
    /// set of edge endpoints; use [`WeightedTree::singleton`] for one vertex.
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut adj: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
        let mut n_edges = 0usize;
        for e in edges {
            if e.u == e.v {
                return Err(Error::InvalidTree(format!("self-loop at {}", e.u)));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidTree(format!(
                    "edge {}-{} has non-positive weight {}",
                    e.u, e.v, e.weight
                )));
            }
            if adj.entry(e.u).or_default().insert(e.v, e.weight).is_some() {
                return Err(Error::InvalidTree(format!("repeated edge {}-{}", e.u, e.v)));
            }
            adj.entry(e.v).or_default().insert(e.u, e.weight);
            n_edges += 1;
        }
        let tree = Self { adj };
        if tree.adj.is_empty() {
            return Err(Error::InvalidTree("no edges".into()));
        }
        if n_edges + 1 != tree.adj.len() {
            return Err(Error::InvalidTree(format!(
                "{} vertices but {} edges",
                tree.adj.len(),
                n_edges
            )));
        }
        let first = *tree.adj.keys().next().unwrap();
        if tree.reachable_from(first).len() != tree.adj.len() {
            return Err(Error::InvalidTree("graph is disconnected".into()));
        }
        Ok(tree)
    }

    /// Skips validation; callers guarantee the tree invariants.
    pub(crate) fn from_adjacency(adj: BTreeMap<usize, BTreeMap<usize, f64>>) -> Self {
        Self { adj }
    }

    pub(crate) fn into_adjacency(self) -> BTreeMap<usize, BTreeMap<usize, f64>> {
        self.adj
    }

    fn reachable_from(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in self.adj[&x].keys() {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    pub fn n_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.values().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.adj.keys().copied()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj.get(&v).map_or(0, BTreeMap::len)
    }

    /// Neighbors of `v` with edge weights, in ascending vertex order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj
            .get(&v)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&u, &w)| (u, w)))
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adj.get(&a).and_then(|m| m.get(&b)).copied()
    }

    /// Edges sorted by `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<Edge> {
        self.adj
            .iter()
            .flat_map(|(&a, m)| {
                m.iter()
                    .filter(move |(&b, _)| a < b)
                    .map(move |(&b, &w)| Edge::new(a, b, w))
            })
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|e| e.weight).sum()
    }

    /// The unique simple path from `a` to `b`, both included.
    pub fn path(&self, a: usize, b: usize) -> Result<Vec<usize>> {
        for v in [a, b] {
            if !self.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        if a == b {
            return Ok(vec![a]);
        }
        let mut parent: HashMap<usize, usize> = HashMap::from([(a, a)]);
        let mut queue = VecDeque::from([a]);
        'search: while let Some(x) = queue.pop_front() {
            for &y in self.adj[&x].keys() {
                if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(y) {
                    slot.insert(x);
                    if y == b {
                        break 'search;
                    }
                    queue.push_back(y);
                }
            }
        }
        let mut path = vec![b];
        let mut cur = b;
        while cur != a {
            cur = parent[&cur];
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Sum of edge weights along the path from `a` to `b`.
    pub fn path_weight(&self, a: usize, b: usize) -> Result<f64> {
        let path = self.path(a, b)?;
        Ok(path
            .windows(2)
            .map(|w| self.weight(w[0], w[1]).unwrap())
            .sum())
    }

    /// Smallest subtree containing every terminal: repeatedly strips leaves
    /// that are not terminals.
    pub fn minimal_subtree(&self, terminals: &BTreeSet<usize>) -> Result<WeightedTree> {
        if let Some(&v) = terminals.iter().find(|&&v| !self.contains(v)) {
            return Err(Error::UnknownVertex(v));
        }
        if terminals.is_empty() {
            return Err(Error::invalid("minimal subtree needs at least one terminal"));
        }
        let mut adj = self.adj.clone();
        let mut queue: VecDeque<usize> = adj
            .iter()
            .filter(|(v, m)| m.len() <= 1 && !terminals.contains(v))
            .map(|(&v, _)| v)
            .collect();
        while let Some(v) = queue.pop_front() {
            let Some(nbrs) = adj.get(&v) else { continue };
            if nbrs.len() > 1 || terminals.contains(&v) {
                continue;
            }
            let nbrs: Vec<usize> = nbrs.keys().copied().collect();
            adj.remove(&v);
            for u in nbrs {
                let m = adj.get_mut(&u).unwrap();
                m.remove(&v);
                if m.len() <= 1 && !terminals.contains(&u) {
                    queue.push_back(u);
                }
            }
        }
        Ok(Self { adj })
    }

    /// The two vertex sets obtained by deleting edge `a`-`b`; the first
    /// contains `a`.
    pub fn split_at(&self, a: usize, b: usize) -> Result<(BTreeSet<usize>, BTreeSet<usize>)> {
        if self.weight(a, b).is_none() {
            return Err(Error::InvalidTree(format!("no edge {a}-{b}")));
        }
        let mut side = BTreeSet::from([a]);
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            for &y in self.adj[&x].keys() {
                if (x == a && y == b) || (x == b && y == a) {
                    continue;
                }
                if side.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        let other = self.vertices().filter(|v| !side.contains(v)).collect();
        Ok((side, other))
    }

    /// Renders `u,v,weight` lines with vertices named by `ids[vertex]`.
    pub fn to_edge_list(&self, ids: &[String]) -> String {
        let mut out = String::new();
        for e in self.edges() {
            let _ = writeln!(out, "{},{},{}", ids[e.u], ids[e.v], e.weight);
        }
        out
    }

    /// Parses the `u,v,weight` format; `ids` maps names back to indices.
    pub fn from_edge_list(text: &str, ids: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::InvalidTree(format!(
                    "line {}: expected u,v,weight",
                    lineno + 1
                )));
            }
            let lookup = |s: &str| {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::UnknownRow(s.to_string()))
            };
            let weight = parts[2].parse::<f64>().map_err(|_| {
                Error::InvalidTree(format!("line {}: bad weight {:?}", lineno + 1, parts[2]))
            })?;
            edges.push(Edge::new(lookup(parts[0])?, lookup(parts[1])?, weight));
        }
        Self::from_edges(edges)
    }
}

/// Collapses every degree-2 vertex outside `keep`, replacing it and its two
/// edges by one edge whose weight is the sum of the two.
pub(crate) fn collapse_degree_two(
    adj: &mut BTreeMap<usize, BTreeMap<usize, f64>>,
    keep: impl Fn(usize) -> bool,
) {
    let candidates: Vec<usize> = adj
        .iter()
        .filter(|(&v, m)| m.len() == 2 && !keep(v))
        .map(|(&v, _)| v)
        .collect();
    // Collapsing one vertex never changes another vertex's degree, so a
    // single pass reaches the fixed point.
    for v in candidates {
        let nbrs: Vec<(usize, f64)> = adj[&v].iter().map(|(&u, &w)| (u, w)).collect();
        let [(a, wa), (b, wb)] = [nbrs[0], nbrs[1]];
        adj.remove(&v);
        let ma = adj.get_mut(&a).unwrap();
        ma.remove(&v);
        ma.insert(b, wa + wb);
        let mb = adj.get_mut(&b).unwrap();
        mb.remove(&v);
        mb.insert(a, wa + wb);
    }
}
