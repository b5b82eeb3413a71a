#![allow(dead_code)]

pub mod golden;

use std::collections::{BTreeMap, BTreeSet};

use mstlens::{Dataset, Edge, MedoidSet, WeightedTree};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_data(n: usize, p: usize, rng: &mut impl Rng) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random::<f64>() * 10.0).collect())
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

/// Minimum total weight over every labelled spanning tree (Cayley: n^(n-2)).
pub fn brute_force_mst_weight(d: &Dataset) -> f64 {
    let n = d.n_rows();
    if n == 2 {
        return dist(d, 0, 1);
    }
    let mut seq = vec![0usize; n - 2];
    let mut best = f64::INFINITY;
    loop {
        let w: f64 = prufer_edges(&seq, n).iter().map(|&(a, b)| dist(d, a, b)).sum();
        best = best.min(w);
        let mut i = 0;
        loop {
            if i == seq.len() {
                return best;
            }
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

/// Strict order used for tie-breaking: weight, then endpoints.
pub fn edge_key(d: &Dataset, a: usize, b: usize) -> (f64, usize, usize) {
    (dist(d, a, b), a.min(b), a.max(b))
}

pub fn key_less(x: (f64, usize, usize), y: (f64, usize, usize)) -> bool {
    x.0 < y.0 || (x.0 == y.0 && (x.1, x.2) < (y.1, y.2))
}

/// First point whose nearest neighbour is not joined to it in `t`.
pub fn missing_nearest_neighbour(d: &Dataset, t: &WeightedTree) -> Option<(usize, usize)> {
    let n = d.n_rows();
    (0..n).find_map(|i| {
        let nn = (0..n)
            .filter(|&j| j != i)
            .reduce(|a, b| if key_less(edge_key(d, i, b), edge_key(d, i, a)) { b } else { a })?;
        t.weight(i, nn).is_none().then_some((i, nn))
    })
}

/// First tree edge beaten by a lighter pair across the cut it induces.
pub fn cut_violation(d: &Dataset, t: &WeightedTree) -> Option<(Edge, usize, usize)> {
    let n = d.n_rows();
    for e in t.edges() {
        let (side, _) = t.split_at(e.u, e.v).unwrap();
        for &a in &side {
            for b in (0..n).filter(|b| !side.contains(b)) {
                if key_less(edge_key(d, a, b), edge_key(d, e.u, e.v)) {
                    return Some((e, a, b));
                }
            }
        }
    }
    None
}

pub fn dist(d: &Dataset, i: usize, j: usize) -> f64 {
    d.row(i)
        .iter()
        .zip(d.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Tree on `0..n` decoded from a Prüfer sequence.
pub fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// A uniformly random labelled tree on the given vertex ids.
pub fn random_tree(vertices: &[usize], rng: &mut impl Rng) -> WeightedTree {
    let n = vertices.len();
    if n == 1 {
        return WeightedTree::singleton(vertices[0]);
    }
    let edges = if n == 2 {
        vec![(0, 1)]
    } else {
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        prufer_edges(&seq, n)
    };
    WeightedTree::from_edges(
        edges
            .into_iter()
            .map(|(a, b)| Edge::new(vertices[a], vertices[b], rng.random_range(1..10) as f64)),
    )
    .unwrap()
}

pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Side of `a` after deleting edge `(a, b)` from an edge list.
pub fn side_after_deleting(edges: &[Edge], a: usize, b: usize, n_max: usize) -> BTreeSet<usize> {
    let mut uf = UnionFind::new(n_max);
    for e in edges {
        if (e.u, e.v) != (a.min(b), a.max(b)) {
            uf.union(e.u, e.v);
        }
    }
    let ra = uf.find(a);
    let vertices: BTreeSet<usize> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
    vertices.into_iter().filter(|&v| uf.find(v) == ra).collect()
}

/// Bipartitions of medoid labels by edge deletion, each as a sorted pair of
/// sorted label lists.
pub fn oracle_splits(
    tree: &WeightedTree,
    labels: &BTreeMap<usize, String>,
) -> BTreeSet<(Vec<String>, Vec<String>)> {
    let edges = tree.edges();
    let n_max = edges.iter().map(|e| e.v).max().unwrap_or(0) + 1;
    let all: BTreeSet<&String> = labels.values().collect();
    edges
        .iter()
        .map(|e| {
            let side = side_after_deleting(&edges, e.u, e.v, n_max);
            let a: Vec<String> = labels
                .iter()
                .filter(|(v, _)| side.contains(v))
                .map(|(_, l)| l.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let b: Vec<String> = all
                .iter()
                .filter(|l| !a.contains(l))
                .map(|l| (*l).clone())
                .collect();
            let a_first = match (a.first(), b.first()) {
                (Some(x), Some(y)) => x < y,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if a_first {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

pub const LP_BINS: usize = 200;

/// Minimal mass on `[-eps, eps]` over step densities with `LP_BINS` equal
/// bins on `[-1, 1]`, unimodal about `c`, with the prescribed masses on
/// either side of 0. `c` and `eps` must sit on the bin grid. `None` when the
/// program is infeasible.
pub fn lp_min_mass(n1: f64, n2: f64, c: f64, eps: f64) -> Option<f64> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let width = 2.0 / LP_BINS as f64;
    let grid = |x: f64| -> usize {
        let g = (x + 1.0) / width;
        assert!((g - g.round()).abs() < 1e-9, "{x} is off the bin grid");
        g.round() as usize
    };
    let mode = grid(c);
    let (lo, hi) = (grid(-eps), grid(eps));
    let mid = LP_BINS / 2;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let f: Vec<_> = (0..LP_BINS)
        .map(|b| lp.add_var(if (lo..hi).contains(&b) { width } else { 0.0 }, (0.0, f64::INFINITY)))
        .collect();
    for b in 0..LP_BINS - 1 {
        if b + 1 < mode {
            lp.add_constraint([(f[b + 1], 1.0), (f[b], -1.0)], ComparisonOp::Ge, 0.0);
        } else if b >= mode {
            lp.add_constraint([(f[b], 1.0), (f[b + 1], -1.0)], ComparisonOp::Ge, 0.0);
        }
    }
    let left: Vec<_> = (0..mid).map(|b| (f[b], width)).collect();
    let right: Vec<_> = (mid..LP_BINS).map(|b| (f[b], width)).collect();
    lp.add_constraint(left.as_slice(), ComparisonOp::Eq, n1 / (n1 + n2));
    lp.add_constraint(right.as_slice(), ComparisonOp::Eq, n2 / (n1 + n2));
    match lp.solve() {
        Ok(s) => Some(s.objective()),
        Err(minilp::Error::Infeasible) => None,
        Err(e) => panic!("LP failed: {e:?}"),
    }
}

/// A random problem of the requested case (1..=4), with `c` and `eps` on
/// the LP bin grid and a random reflection. Case I/II draws are feasible.
pub fn random_null_problem(case: u8, rng: &mut impl Rng) -> (f64, f64, f64, f64) {
    let step = 2.0 / LP_BINS as f64;
    loop {
        let n1 = rng.random_range(5..200) as f64;
        let n2 = rng.random_range(5..200) as f64;
        let e = rng.random_range(2..99);
        let ci: i32 = match case {
            1 => rng.random_range(e + 1..=100),
            2 | 3 => rng.random_range(1..=e),
            _ => 0,
        };
        let (c, eps) = (ci as f64 * step, e as f64 * step);
        let ok = match case {
            1 | 2 => n2 >= c * n1,
            3 => n2 < c * n1 && ci < e,
            _ => true,
        };
        if !ok {
            continue;
        }
        return if rng.random_bool(0.5) { (n2, n1, -c, eps) } else { (n1, n2, c, eps) };
    }
}

/// Random tree whose first `n_medoids` shuffled vertices carry `labels`.
pub fn random_medoid_tree(
    n_medoids: usize,
    extra: usize,
    labels: &[String],
    r: &mut impl Rng,
) -> (WeightedTree, MedoidSet, BTreeMap<usize, String>) {
    let mut vertices: Vec<usize> = (0..n_medoids + extra).map(|v| v * 3 + 1).collect();
    vertices.shuffle(r);
    let t = random_tree(&vertices, r);
    let by_vertex: BTreeMap<usize, String> = vertices[..n_medoids]
        .iter()
        .zip(labels)
        .map(|(&v, l)| (v, l.clone()))
        .collect();
    let set = MedoidSet::new(by_vertex.iter().map(|(&v, l)| (l.clone(), v)).collect());
    (t, set, by_vertex)
}
