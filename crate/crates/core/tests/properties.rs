mod common;

use std::collections::BTreeSet;

use common::*;
use mstlens::crossing::simplify_group_subtree_detailed;
use mstlens::{
    build_mst, crossing_count, medoids, rf_distance, simplified_medoid_tree, simplify_medoid_subtree,
    Clustering, Dataset, GroupSelection,
};
use proptest::prelude::*;
use rand::Rng;

fn dataset(n: usize, p: usize, seed: u64) -> Dataset {
    uniform_data(n, p, &mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn nearest_neighbour_edges_are_in_the_tree(n in 2usize..120, p in 1usize..12, seed in any::<u64>()) {
        let d = dataset(n, p, seed);
        let t = build_mst(&d).unwrap();
        prop_assert_eq!(missing_nearest_neighbour(&d, &t), None);
    }

    #[test]
    fn every_edge_is_the_lightest_across_its_cut(n in 2usize..80, p in 1usize..12, seed in any::<u64>()) {
        let d = dataset(n, p, seed);
        let t = build_mst(&d).unwrap();
        prop_assert_eq!(cut_violation(&d, &t), None);
    }

    #[test]
    fn medoid_simplification_is_idempotent_and_weight_preserving(n in 6usize..60, k in 2usize..6, seed in any::<u64>()) {
        let d = dataset(n, 3, seed);
        let mut r = rng(seed ^ 0x5eed);
        let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            labels.swap(i, r.random_range(0..=i));
        }
        let c = Clustering::from_indices(&labels).unwrap();
        let t = build_mst(&d).unwrap();
        let m = medoids(&d, &c).unwrap();
        let sub = mstlens::medoid_subtree(&t, &m).unwrap();
        let s = simplify_medoid_subtree(&sub, &m);
        prop_assert!((s.total_weight() - sub.total_weight()).abs() < 1e-9 * sub.total_weight());
        prop_assert_eq!(simplify_medoid_subtree(&s, &m), s.clone());
        let keep = m.vertices();
        for v in s.vertices() {
            if !keep.contains(&v) {
                prop_assert!(s.degree(v) >= 3);
            } else if s.degree(v) == 1 {
                prop_assert!(keep.contains(&v));
            }
        }
        for a in keep.iter().copied() {
            for b in keep.iter().copied() {
                let w1 = t.path_weight(a, b).unwrap();
                let w2 = s.path_weight(a, b).unwrap();
                prop_assert!((w1 - w2).abs() < 1e-9 * w1.max(1.0));
            }
        }
        let r = rf_distance(&s, &m, &simplified_medoid_tree(&t, &m).unwrap(), &m).unwrap();
        prop_assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn crossing_is_swap_invariant_and_simplification_is_clean(n in 4usize..60, seed in any::<u64>()) {
        let d = dataset(n, 2, seed);
        let t = build_mst(&d).unwrap();
        let mut r = rng(seed.wrapping_add(1));
        let mut g1 = BTreeSet::new();
        let mut g2 = BTreeSet::new();
        for v in 0..n {
            match r.random_range(0..3) {
                0 => { g1.insert(v); }
                1 => { g2.insert(v); }
                _ => {}
            }
        }
        prop_assume!(!g1.is_empty() && !g2.is_empty());
        let sel = GroupSelection::from_groups(&t, g1.clone(), g2.clone()).unwrap();
        let c = crossing_count(&t, &sel).unwrap();
        prop_assert_eq!(c.total, crossing_count(&t, &sel.swapped()).unwrap().total);
        prop_assert_eq!(c.total, c.direct_edges + c.mediator_contribution);
        let simp = simplify_group_subtree_detailed(&t, &sel).unwrap();
        let is_group = |v: usize| g1.contains(&v) || g2.contains(&v);
        for e in simp.tree.edges() {
            prop_assert!(is_group(e.u) || is_group(e.v), "adjacent non-group vertices remain");
        }
        prop_assert!(c.total >= 1);
    }

    #[test]
    fn rf_is_symmetric_and_zero_on_itself(n in 8usize..50, seed in any::<u64>()) {
        let d1 = dataset(n, 3, seed);
        let d2 = dataset(n, 3, seed.wrapping_mul(31).wrapping_add(7));
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let c = Clustering::from_indices(&labels).unwrap();
        let (t1, t2) = (build_mst(&d1).unwrap(), build_mst(&d2).unwrap());
        let (m1, m2) = (medoids(&d1, &c).unwrap(), medoids(&d2, &c).unwrap());
        let (s1, s2) = (simplified_medoid_tree(&t1, &m1).unwrap(), simplified_medoid_tree(&t2, &m2).unwrap());
        prop_assert_eq!(rf_distance(&s1, &m1, &s1, &m1).unwrap().distance, 0.0);
        match (rf_distance(&s1, &m1, &s2, &m2), rf_distance(&s2, &m2, &s1, &m1)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
    }
}
