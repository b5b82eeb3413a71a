//! Robinson-Foulds style comparison of medoid trees and the MST stability
//! experiment built on it.
//!
//! Every edge of a tree splits the cluster labels into the medoids on either
//! side. Two trees are compared through the sets of such splits:
//!
//! ```text
//! distance = |P1 Δ P2| / (2 |P1 ∩ P2|)
//! ```
//!
//! which differs from the classic RF count by the normalization. `sym_diff`
//! and `shared` are reported so the classic value is recoverable.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Clustering, Dataset};
use crate::error::{Error, Result};
use crate::mst::{build_mst, euclidean, medoids, simplified_medoid_tree, MedoidSet};
use crate::tree::WeightedTree;

/// An unordered split of the medoid labels. Stored canonically as the side
/// that contains the smallest label, so `{A, B}` and `{B, A}` compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bipartition {
    side: BTreeSet<String>,
    other: BTreeSet<String>,
}

impl Bipartition {
    pub fn new(a: BTreeSet<String>, b: BTreeSet<String>) -> Self {
        let a_first = match (a.first(), b.first()) {
            (Some(x), Some(y)) => x < y,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if a_first {
            Self { side: a, other: b }
        } else {
            Self { side: b, other: a }
        }
    }

    pub fn sides(&self) -> (&BTreeSet<String>, &BTreeSet<String>) {
        (&self.side, &self.other)
    }
}

/// Splits induced by deleting each edge, duplicates collapsed.
pub fn medoid_bipartitions(tree: &WeightedTree, medoids: &MedoidSet) -> Result<BTreeSet<Bipartition>> {
    let label_at: BTreeMap<usize, &str> = medoids.iter().map(|(l, v)| (v, l)).collect();
    if let Some(&v) = label_at.keys().find(|&&v| !tree.contains(v)) {
        return Err(Error::UnknownVertex(v));
    }
    let all: BTreeSet<String> = medoids.labels().map(str::to_string).collect();
    let Some(root) = tree.vertices().next() else {
        return Ok(BTreeSet::new());
    };

    // Iterative DFS order, then accumulate each subtree's labels bottom-up.
    let mut parent: BTreeMap<usize, usize> = BTreeMap::from([(root, root)]);
    let mut order = Vec::with_capacity(tree.n_vertices());
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        order.push(x);
        for (y, _) in tree.neighbors(x) {
            if let std::collections::btree_map::Entry::Vacant(slot) = parent.entry(y) {
                slot.insert(x);
                stack.push(y);
            }
        }
    }
    let mut below: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for &x in order.iter().rev() {
        let mut set = below.remove(&x).unwrap_or_default();
        if let Some(l) = label_at.get(&x) {
            set.insert((*l).to_string());
        }
        if x == root {
            break;
        }
        let rest: BTreeSet<String> = all.difference(&set).cloned().collect();
        below
            .entry(parent[&x])
            .or_default()
            .extend(set.iter().cloned());
        out.insert(Bipartition::new(set, rest));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfResult {
    pub distance: f64,
    pub shared: usize,
    pub sym_diff: usize,
}

/// Normalized RF distance between two medoid trees whose medoids are matched
/// by cluster label.
pub fn rf_distance(
    t1: &WeightedTree,
    m1: &MedoidSet,
    t2: &WeightedTree,
    m2: &MedoidSet,
) -> Result<RfResult> {
    if !m1.labels().eq(m2.labels()) {
        return Err(Error::LabelMismatch);
    }
    let p1 = medoid_bipartitions(t1, m1)?;
    let p2 = medoid_bipartitions(t2, m2)?;
    let shared = p1.intersection(&p2).count();
    let sym_diff = p1.symmetric_difference(&p2).count();
    if shared == 0 {
        return Err(Error::NoSharedBipartitions);
    }
    Ok(RfResult {
        distance: sym_diff as f64 / (2 * shared) as f64,
        shared,
        sym_diff,
    })
}

/// `0.5 · median nonzero pairwise distance / √p`.
pub fn default_noise_sd(data: &Dataset) -> f64 {
    let n = data.n_rows();
    let mut d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| euclidean(data.row(i), data.row(j))))
        .filter(|&x| x > 0.0)
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let mut median = *m;
    if d.len() % 2 == 0 {
        let lower = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        median = 0.5 * (median + lower);
    }
    0.5 * median / (data.n_features() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Noise,
    Permutation,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Noise => "noise",
            Arm::Permutation => "permutation",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Arm::Noise => 0,
            Arm::Permutation => 1 << 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub noise_sd: f64,
    pub noise: Vec<f64>,
    pub permutation: Vec<f64>,
}

impl StabilityReport {
    /// `arm,distance` CSV, noise rows first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arm,distance\n");
        for (arm, values) in [(Arm::Noise, &self.noise), (Arm::Permutation, &self.permutation)] {
            for v in values {
                out.push_str(&format!("{},{v}\n", arm.as_str()));
            }
        }
        out
    }
}

/// Per-replicate generator: one ChaCha stream per (arm, replicate).
pub(crate) fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Compares the simplified medoid tree of `data` against (a) trees rebuilt
/// after adding Gaussian noise and (b) trees rebuilt after permuting the
/// labels. Replicates run in parallel; results are ordered by replicate.
pub fn stability_experiment(
    data: &Dataset,
    clustering: &Clustering,
    noise_sd: f64,
    reps: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    if !(noise_sd > 0.0 && noise_sd.is_finite()) {
        return Err(Error::invalid("noise_sd must be positive"));
    }
    let mst = build_mst(data)?;
    let base_medoids = medoids(data, clustering)?;
    let base = simplified_medoid_tree(&mst, &base_medoids)?;
    let noise_dist = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(e.to_string()))?;

    let noise = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, Arm::Noise.stream() + r as u64);
            let noisy: Vec<f64> = data
                .values()
                .iter()
                .map(|v| v + noise_dist.sample(&mut rng))
                .collect();
            let noisy = data.with_values(noisy)?;
            let t = build_mst(&noisy)?;
            let m = medoids(&noisy, clustering)?;
            let simplified = simplified_medoid_tree(&t, &m)?;
            Ok(rf_distance(&base, &base_medoids, &simplified, &m)?.distance)
        })
        .collect::<Result<Vec<f64>>>()?;

    let permutation = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, Arm::Permutation.stream() + r as u64);
            let mut labels = clustering.labels().to_vec();
            labels.shuffle(&mut rng);
            let shuffled = Clustering::new(labels)?;
            let m = medoids(data, &shuffled)?;
            let simplified = simplified_medoid_tree(&mst, &m)?;
            Ok(rf_distance(&base, &base_medoids, &simplified, &m)?.distance)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(StabilityReport {
        noise_sd,
        noise,
        permutation,
    })
}
