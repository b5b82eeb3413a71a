//! Minimum spanning trees of the complete Euclidean graph, cluster medoids
//! and the simplified medoid subtree.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Clustering, Dataset};
use crate::error::{Error, Result};
use crate::tree::{collapse_degree_two, Edge, WeightedTree};

/// Below this many points the Prim relaxation step runs serially.
const PARALLEL_THRESHOLD: usize = 512;

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Strict total order on candidate edges: weight, then `(min, max)` endpoint.
#[inline]
fn edge_less(w1: f64, a1: usize, b1: usize, w2: f64, a2: usize, b2: usize) -> bool {
    let k1 = (a1.min(b1), a1.max(b1));
    let k2 = (a2.min(b2), a2.max(b2));
    match w1.total_cmp(&w2) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => k1 < k2,
    }
}

/// Dense Prim over `n` row-major points of dimension `p`. Returns the edges
/// in insertion order, or the first coincident pair found.
pub(crate) fn prim_edges(values: &[f64], n: usize, p: usize) -> Result<Vec<Edge>> {
    let row = |i: usize| &values[i * p..(i + 1) * p];
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0usize;
    in_tree[0] = true;

    for _ in 1..n {
        let src = row(current);
        let relax = |(v, (b, par)): (usize, (&mut f64, &mut usize))| -> Option<(usize, usize)> {
            if in_tree[v] {
                return None;
            }
            let d = euclidean(src, row(v));
            if d == 0.0 {
                return Some((current.min(v), current.max(v)));
            }
            if edge_less(d, current, v, *b, *par, v) {
                *b = d;
                *par = current;
            }
            None
        };
        let dup = if n >= PARALLEL_THRESHOLD {
            best.par_iter_mut()
                .zip(parent.par_iter_mut())
                .enumerate()
                .filter_map(&relax)
                .min()
        } else {
            best.iter_mut()
                .zip(parent.iter_mut())
                .enumerate()
                .filter_map(&relax)
                .min()
        };
        if let Some((a, b)) = dup {
            return Err(Error::DuplicatePoints { a, b });
        }

        let mut next = usize::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if next == usize::MAX
                || edge_less(best[v], parent[v], v, best[next], parent[next], next)
            {
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push(Edge::new(parent[next], next, best[next]));
        current = next;
    }
    Ok(edges)
}

/// Minimum spanning tree of the complete Euclidean graph on the rows of
/// `data`, built with O(n²) dense Prim. Equal distances are broken by the
/// lexicographic `(min endpoint, max endpoint)` order, so the result is
/// unique.
pub fn build_mst(data: &Dataset) -> Result<WeightedTree> {
    let edges = prim_edges(data.values(), data.n_rows(), data.n_features())?;
    WeightedTree::from_edges(edges)
}

/// One medoid row per cluster label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedoidSet {
    by_label: BTreeMap<String, usize>,
}

impl MedoidSet {
    pub fn new(by_label: BTreeMap<String, usize>) -> Self {
        Self { by_label }
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.by_label.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.by_label.iter().map(|(l, &v)| (l.as_str(), v))
    }

    pub fn vertices(&self) -> BTreeSet<usize> {
        self.by_label.values().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.by_label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_label.is_empty()
    }
}

/// The member of `rows` minimizing the summed distance to the others; ties go
/// to the lowest row index.
pub fn medoid_of(data: &Dataset, rows: &[usize]) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::invalid("medoid of an empty set"));
    }
    let sums: Vec<f64> = rows
        .par_iter()
        .map(|&i| rows.iter().map(|&j| euclidean(data.row(i), data.row(j))).sum())
        .collect();
    let mut best = 0;
    for k in 1..rows.len() {
        if sums[k] < sums[best] || (sums[k] == sums[best] && rows[k] < rows[best]) {
            best = k;
        }
    }
    Ok(rows[best])
}

pub fn medoids(data: &Dataset, clustering: &Clustering) -> Result<MedoidSet> {
    if clustering.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            what: "clustering".into(),
            expected: data.n_rows(),
            found: clustering.len(),
        });
    }
    let by_label = clustering
        .groups()
        .into_iter()
        .map(|(label, rows)| Ok((label, medoid_of(data, &rows)?)))
        .collect::<Result<_>>()?;
    Ok(MedoidSet { by_label })
}

/// Union of the tree paths between all pairs of medoids.
pub fn medoid_subtree(tree: &WeightedTree, medoids: &MedoidSet) -> Result<WeightedTree> {
    tree.minimal_subtree(&medoids.vertices())
}

/// Collapses every non-medoid vertex of degree two into a single edge
/// carrying the summed weight. Remaining non-medoid vertices have degree at
/// least three.
pub fn simplify_medoid_subtree(subtree: &WeightedTree, medoids: &MedoidSet) -> WeightedTree {
    let keep = medoids.vertices();
    let mut adj = subtree.clone().into_adjacency();
    collapse_degree_two(&mut adj, |v| keep.contains(&v));
    WeightedTree::from_adjacency(adj)
}

/// MST → medoid subtree → simplification.
pub fn simplified_medoid_tree(tree: &WeightedTree, medoids: &MedoidSet) -> Result<WeightedTree> {
    Ok(simplify_medoid_subtree(&medoid_subtree(tree, medoids)?, medoids))
}
