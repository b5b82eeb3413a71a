//! Group selections and the crossing-count statistic.
//!
//! A crossing is a connecting path between the two groups in the MST. The
//! count is taken on the group subtree after two simplifications: non-group
//! vertices of degree two are collapsed into weighted edges, then adjacent
//! non-group vertices are merged. What remains are direct group-to-group
//! edges and single "mediator" vertices sitting between groups.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{collapse_degree_two, WeightedTree};

/// Two disjoint vertex sets and the tree path joining them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSelection {
    group1: BTreeSet<usize>,
    group2: BTreeSet<usize>,
    path: Vec<usize>,
}

impl GroupSelection {
    /// Validates the groups and computes the tree path from `from` (in group
    /// one) to `to` (in group two).
    pub fn new(
        tree: &WeightedTree,
        group1: BTreeSet<usize>,
        group2: BTreeSet<usize>,
        from: usize,
        to: usize,
    ) -> Result<Self> {
        if group1.is_empty() || group2.is_empty() {
            return Err(Error::InvalidSelection("both groups must be non-empty".into()));
        }
        if let Some(v) = group1.intersection(&group2).next() {
            return Err(Error::InvalidSelection(format!(
                "groups overlap (vertex {v} is in both)"
            )));
        }
        if let Some(&v) = group1.iter().chain(&group2).find(|&&v| !tree.contains(v)) {
            return Err(Error::UnknownVertex(v));
        }
        if !group1.contains(&from) || !group2.contains(&to) {
            return Err(Error::InvalidSelection(
                "path endpoints must lie in group one and group two respectively".into(),
            ));
        }
        let path = tree.path(from, to)?;
        Ok(Self {
            group1,
            group2,
            path,
        })
    }

    /// Selection whose path joins the smallest vertex of each group; for
    /// callers that only need the groups.
    pub fn from_groups(
        tree: &WeightedTree,
        group1: BTreeSet<usize>,
        group2: BTreeSet<usize>,
    ) -> Result<Self> {
        let from = group1.first().copied().unwrap_or(usize::MAX);
        let to = group2.first().copied().unwrap_or(usize::MAX);
        Self::new(tree, group1, group2, from, to)
    }

    pub fn group1(&self) -> &BTreeSet<usize> {
        &self.group1
    }

    pub fn group2(&self) -> &BTreeSet<usize> {
        &self.group2
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    /// Same groups, roles exchanged; the path is reversed.
    pub fn swapped(&self) -> Self {
        Self {
            group1: self.group2.clone(),
            group2: self.group1.clone(),
            path: self.path.iter().rev().copied().collect(),
        }
    }

    /// Group members plus path vertices, ascending.
    pub fn points_of_interest(&self) -> Vec<usize> {
        let all: BTreeSet<usize> = self
            .group1
            .iter()
            .chain(&self.group2)
            .chain(&self.path)
            .copied()
            .collect();
        all.into_iter().collect()
    }

    fn side(&self, v: usize) -> Option<Side> {
        if self.group1.contains(&v) {
            Some(Side::One)
        } else if self.group2.contains(&v) {
            Some(Side::Two)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    One,
    Two,
}

/// The simplified group subtree. Merged non-group vertices are represented
/// by their smallest original vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSubtree {
    pub tree: WeightedTree,
    /// Representative vertex → all original vertices merged into it.
    pub merged: BTreeMap<usize, Vec<usize>>,
}

/// Minimal subtree spanning both groups, with degree-two non-group vertices
/// collapsed and adjacent non-group vertices merged. No two non-group
/// vertices of the result are adjacent.
///
/// Merging contracts the edge between two non-group vertices; its weight is
/// dropped, so path weights through merged vertices shrink by that amount.
pub fn simplify_group_subtree_detailed(
    tree: &WeightedTree,
    sel: &GroupSelection,
) -> Result<GroupSubtree> {
    let terminals: BTreeSet<usize> = sel.group1.union(&sel.group2).copied().collect();
    let sub = tree.minimal_subtree(&terminals)?;
    let mut adj = sub.into_adjacency();
    let is_group = |v: usize| terminals.contains(&v);

    collapse_degree_two(&mut adj, is_group);

    let mut merged: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    loop {
        let pair = adj.iter().find_map(|(&a, nbrs)| {
            if is_group(a) {
                return None;
            }
            nbrs.keys().find(|&&b| b > a && !is_group(b)).map(|&b| (a, b))
        });
        let Some((keep, gone)) = pair else { break };
        let gone_nbrs = adj.remove(&gone).unwrap();
        adj.get_mut(&keep).unwrap().remove(&gone);
        for (n, w) in gone_nbrs {
            if n == keep {
                continue;
            }
            let m = adj.get_mut(&n).unwrap();
            m.remove(&gone);
            m.insert(keep, w);
            adj.get_mut(&keep).unwrap().insert(n, w);
        }
        let mut absorbed = merged.remove(&gone).unwrap_or_else(|| vec![gone]);
        let entry = merged.entry(keep).or_insert_with(|| vec![keep]);
        entry.append(&mut absorbed);
        entry.sort_unstable();
    }
    Ok(GroupSubtree {
        tree: WeightedTree::from_adjacency(adj),
        merged,
    })
}

pub fn simplify_group_subtree(tree: &WeightedTree, sel: &GroupSelection) -> Result<WeightedTree> {
    Ok(simplify_group_subtree_detailed(tree, sel)?.tree)
}

/// A non-group vertex adjacent to both groups in the simplified subtree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mediator {
    pub vertex: usize,
    pub to_group1: usize,
    pub to_group2: usize,
}

impl Mediator {
    /// A mediator counts for as many crossings as its larger group degree.
    pub fn contribution(&self) -> usize {
        self.to_group1.max(self.to_group2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingStatistic {
    pub total: usize,
    pub direct_edges: usize,
    pub mediator_contribution: usize,
    pub mediators: Vec<Mediator>,
}

pub fn crossing_count(tree: &WeightedTree, sel: &GroupSelection) -> Result<CrossingStatistic> {
    let simplified = simplify_group_subtree(tree, sel)?;
    let mut direct_edges = 0;
    for e in simplified.edges() {
        if let (Some(a), Some(b)) = (sel.side(e.u), sel.side(e.v)) {
            if a != b {
                direct_edges += 1;
            }
        }
    }
    let mut mediators = Vec::new();
    for v in simplified.vertices() {
        if sel.side(v).is_some() {
            continue;
        }
        let (mut to_group1, mut to_group2) = (0, 0);
        for (u, _) in simplified.neighbors(v) {
            match sel.side(u) {
                Some(Side::One) => to_group1 += 1,
                Some(Side::Two) => to_group2 += 1,
                None => {}
            }
        }
        if to_group1 > 0 && to_group2 > 0 {
            mediators.push(Mediator {
                vertex: v,
                to_group1,
                to_group2,
            });
        }
    }
    let mediator_contribution = mediators.iter().map(Mediator::contribution).sum();
    Ok(CrossingStatistic {
        total: direct_edges + mediator_contribution,
        direct_edges,
        mediator_contribution,
        mediators,
    })
}
