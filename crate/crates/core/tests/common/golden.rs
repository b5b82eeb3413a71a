use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use mstlens::crossing::simplify_group_subtree_detailed;
use mstlens::{crossing_count, Edge, GroupSelection, Mediator, WeightedTree};

pub struct Golden {
    pub group1: BTreeSet<usize>,
    pub group2: BTreeSet<usize>,
    pub tree: WeightedTree,
    pub simplified: Vec<Edge>,
    pub direct: usize,
    pub mediators: Vec<Mediator>,
    pub total: usize,
}

fn numbers<T: std::str::FromStr>(s: &str) -> Vec<T>
where
    T::Err: std::fmt::Debug,
{
    s.split_whitespace().map(|t| t.parse().unwrap()).collect()
}

pub fn parse(text: &str) -> Golden {
    let (mut g1, mut g2) = (BTreeSet::new(), BTreeSet::new());
    let (mut edges, mut simplified, mut mediators) = (Vec::new(), Vec::new(), Vec::new());
    let (mut direct, mut total) = (None, None);
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(':').expect("key: value");
        match key {
            "group1" => g1 = numbers(rest).into_iter().collect(),
            "group2" => g2 = numbers(rest).into_iter().collect(),
            "edge" | "simplified" => {
                let v: Vec<f64> = numbers(rest);
                let e = Edge::new(v[0] as usize, v[1] as usize, v[2]);
                if key == "edge" {
                    edges.push(e)
                } else {
                    simplified.push(e)
                }
            }
            "direct" => direct = Some(rest.trim().parse().unwrap()),
            "total" => total = Some(rest.trim().parse().unwrap()),
            "mediators" => {
                for m in rest.split_whitespace() {
                    let f: Vec<usize> = m.split(':').map(|x| x.parse().unwrap()).collect();
                    mediators.push(Mediator {
                        vertex: f[0],
                        to_group1: f[1],
                        to_group2: f[2],
                    });
                }
            }
            other => panic!("unknown key {other}"),
        }
    }
    Golden {
        group1: g1,
        group2: g2,
        tree: WeightedTree::from_edges(edges).unwrap(),
        simplified,
        direct: direct.unwrap(),
        mediators,
        total: total.unwrap(),
    }
}

pub fn files() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    files
}

/// Every mismatch between the engine and one hand-traced file.
pub fn mismatches(path: &Path) -> Vec<String> {
    let g = parse(&std::fs::read_to_string(path).unwrap());
    let sel = GroupSelection::from_groups(&g.tree, g.group1.clone(), g.group2.clone()).unwrap();
    let simp = simplify_group_subtree_detailed(&g.tree, &sel).unwrap();
    let c = crossing_count(&g.tree, &sel).unwrap();
    let swapped = crossing_count(&g.tree, &sel.swapped()).unwrap().total;
    let mut out = Vec::new();
    if simp.tree.edges() != g.simplified {
        out.push("simplified edges".to_string());
    }
    if c.direct_edges != g.direct {
        out.push(format!("direct {} != {}", c.direct_edges, g.direct));
    }
    if c.mediators != g.mediators {
        out.push("mediators".to_string());
    }
    if c.total != g.total {
        out.push(format!("total {} != {}", c.total, g.total));
    }
    if swapped != g.total {
        out.push(format!("swapped total {swapped} != {}", g.total));
    }
    out
}
