//! Group-comparison heatmap and metadata summaries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crossing::GroupSelection;
use crate::data::{Dataset, MetaTable, MetaValues};
use crate::error::{Error, Result};

/// Heatmap over the selected rows (group one block, then group two) and
/// features ordered by decreasing absolute difference in group means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    /// Feature indices in display order.
    pub order: Vec<usize>,
    pub features: Vec<String>,
    /// Row indices in display order.
    pub rows: Vec<usize>,
    pub row_ids: Vec<String>,
    /// Number of leading rows that belong to group one.
    pub group1_rows: usize,
    /// `matrix[r][c]` = value of row `rows[r]` in feature `order[c]`.
    pub matrix: Vec<Vec<f64>>,
    pub mean1: Vec<f64>,
    pub mean2: Vec<f64>,
}

fn restrict(group: &BTreeSet<usize>, sub: Option<&BTreeSet<usize>>) -> Vec<usize> {
    group
        .iter()
        .copied()
        .filter(|r| sub.map_or(true, |s| s.contains(r)))
        .collect()
}

fn mean_of(data: &Dataset, rows: &[usize], f: usize) -> f64 {
    rows.iter().map(|&r| data.value(r, f)).sum::<f64>() / rows.len() as f64
}

pub fn heatmap_spec(
    data: &Dataset,
    sel: &GroupSelection,
    sub_rows: Option<&[usize]>,
    sub_features: Option<&[usize]>,
) -> Result<HeatmapSpec> {
    let p = data.n_features();
    if let Some(&r) = sel.group1().iter().chain(sel.group2()).find(|&&r| r >= data.n_rows()) {
        return Err(Error::UnknownVertex(r));
    }
    let row_filter: Option<BTreeSet<usize>> = sub_rows.map(|s| s.iter().copied().collect());
    let g1 = restrict(sel.group1(), row_filter.as_ref());
    let g2 = restrict(sel.group2(), row_filter.as_ref());
    if g1.is_empty() || g2.is_empty() {
        return Err(Error::InvalidSelection(
            "row subset leaves a group without members".into(),
        ));
    }
    let features: Vec<usize> = match sub_features {
        Some(fs) => {
            if let Some(&f) = fs.iter().find(|&&f| f >= p) {
                return Err(Error::invalid(format!("feature index {f} out of range")));
            }
            let set: BTreeSet<usize> = fs.iter().copied().collect();
            set.into_iter().collect()
        }
        None => (0..p).collect(),
    };
    if features.is_empty() {
        return Err(Error::invalid("feature subset is empty"));
    }
    let mut keyed: Vec<(usize, f64, f64)> = features
        .iter()
        .map(|&f| (f, mean_of(data, &g1, f), mean_of(data, &g2, f)))
        .collect();
    keyed.sort_by(|a, b| {
        (b.1 - b.2)
            .abs()
            .total_cmp(&(a.1 - a.2).abs())
            .then(a.0.cmp(&b.0))
    });
    let order: Vec<usize> = keyed.iter().map(|k| k.0).collect();
    let rows: Vec<usize> = g1.iter().chain(&g2).copied().collect();
    Ok(HeatmapSpec {
        features: order.iter().map(|&f| data.features()[f].clone()).collect(),
        row_ids: rows.iter().map(|&r| data.ids()[r].clone()).collect(),
        group1_rows: g1.len(),
        matrix: rows
            .iter()
            .map(|&r| order.iter().map(|&f| data.value(r, f)).collect())
            .collect(),
        mean1: keyed.iter().map(|k| k.1).collect(),
        mean2: keyed.iter().map(|k| k.2).collect(),
        order,
        rows,
    })
}

/// Box-plot summary with Tukey hinges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl FiveNumber {
    /// Hinges are the medians of the lower and upper halves; for odd counts
    /// the median belongs to both halves.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let half = n.div_ceil(2);
        Some(Self {
            min: v[0],
            q1: median_sorted(&v[..half]),
            median: median_sorted(&v),
            q3: median_sorted(&v[n - half..]),
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSummary {
    Categorical {
        name: String,
        group1: BTreeMap<String, f64>,
        group2: BTreeMap<String, f64>,
    },
    /// `None` when the group has no non-missing values.
    Numeric {
        name: String,
        group1: Option<FiveNumber>,
        group2: Option<FiveNumber>,
        missing1: usize,
        missing2: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSummary {
    pub columns: Vec<ColumnSummary>,
}

fn proportions(values: &[String], rows: &BTreeSet<usize>) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for &r in rows {
        *counts.entry(values[r].clone()).or_default() += 1;
    }
    let n = rows.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

fn numeric(values: &[Option<f64>], rows: &BTreeSet<usize>) -> (Option<FiveNumber>, usize) {
    let present: Vec<f64> = rows.iter().filter_map(|&r| values[r]).collect();
    (FiveNumber::of(&present), rows.len() - present.len())
}

pub fn meta_summary(meta: &MetaTable, sel: &GroupSelection) -> Result<MetaSummary> {
    if let Some(&r) = sel.group1().iter().chain(sel.group2()).find(|&&r| r >= meta.n_rows()) {
        return Err(Error::UnknownVertex(r));
    }
    let columns = meta
        .columns()
        .iter()
        .map(|c| match &c.values {
            MetaValues::Categorical(v) => ColumnSummary::Categorical {
                name: c.name.clone(),
                group1: proportions(v, sel.group1()),
                group2: proportions(v, sel.group2()),
            },
            MetaValues::Numeric(v) => {
                let (group1, missing1) = numeric(v, sel.group1());
                let (group2, missing2) = numeric(v, sel.group2());
                ColumnSummary::Numeric {
                    name: c.name.clone(),
                    group1,
                    group2,
                    missing1,
                    missing2,
                }
            }
        })
        .collect();
    Ok(MetaSummary { columns })
}
