mod common;

use std::collections::BTreeSet;

use common::*;
use mstlens::experiments::{parabola_path, procrustes_disparity};
use mstlens::projection::default_lambda_grid;
use mstlens::session::point_in_polygon;
use mstlens::{
    build_mst, cv_select_lambda, global_pca, heatmap_spec, kde2d, mode_count, pca_rcca_project, Dataset,
    GroupSelection, PathMatrix, ProjectionConfig,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal(r: &mut impl Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, r)
}

fn coords_matrix(c: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(c.len(), 2, |r, k| c[r][k])
}

#[test]
fn projection_is_orthogonally_equivariant() {
    let mut r = rng(31);
    let pp = parabola_path(25, 12, 0.0, 3).unwrap();
    // Extra off-path points so PCA has something to do.
    let extra = DMatrix::from_fn(40, 12, |_, _| 0.2 * normal(&mut r));
    let x = DMatrix::from_fn(65, 12, |i, j| if i < 25 { pp.points[(i, j)] } else { extra[(i - 25, j)] });
    let q = DMatrix::from_fn(12, 12, |_, _| normal(&mut r)).qr().q();
    let cfg = ProjectionConfig::new(4, 2).with_lambda(1e-3);
    let a = pca_rcca_project(&x, &pp.path(), &cfg).unwrap();
    let xq = &x * &q;
    let pq = PathMatrix::new(&pp.points * &q).unwrap();
    let b = pca_rcca_project(&xq, &pq, &cfg).unwrap();
    let d = procrustes_disparity(&coords_matrix(&a.coords), &coords_matrix(&b.coords)).unwrap();
    assert!(d < 1e-6, "{d}");
    assert!((a.canonical_correlations[0] - b.canonical_correlations[0]).abs() < 1e-9);
}

#[test]
fn correlations_are_ordered_and_bounded() {
    let mut r = rng(32);
    for s in 0..20 {
        let k = r.random_range(5..30);
        let p = r.random_range(3..20);
        let pp = parabola_path(k, p, 0.1, s).unwrap();
        let dims = r.random_range(2..=p.min(k - 1));
        let cfg = ProjectionConfig::new(dims, r.random_range(1..4));
        let res = pca_rcca_project(&pp.points, &pp.path(), &cfg).unwrap();
        let [c1, c2] = res.canonical_correlations;
        assert!((0.0..=1.0 + 1e-9).contains(&c1) && (0.0..=1.0 + 1e-9).contains(&c2));
        assert!(c1 + 1e-12 >= c2);
        let data = Dataset::from_matrix(
            (0..k).map(|i| i.to_string()).collect(),
            (0..p).map(|j| j.to_string()).collect(),
            &pp.points,
        )
        .unwrap();
        assert_eq!(res.variance_retained, global_pca(&data, dims).unwrap().1);
    }
}

#[test]
fn noiseless_path_picks_smallest_lambda() {
    let pp = parabola_path(30, 2, 0.0, 8).unwrap();
    let design = mstlens::polynomial_design(30, 2).unwrap();
    let grid = default_lambda_grid(&pp.points);
    let chosen = cv_select_lambda(&pp.points, &design, &grid, 5).unwrap();
    assert_eq!(chosen, grid[0]);
}

#[test]
fn kde_mode_count_splits_as_bandwidth_shrinks() {
    let mut r = rng(33);
    let pts: Vec<[f64; 2]> = (0..500)
        .map(|i| {
            let cx = if i % 2 == 0 { -3.0 } else { 3.0 };
            [cx + normal(&mut r), normal(&mut r)]
        })
        .collect();
    let hs: Vec<f64> = (0..30).map(|i| 6.0 * 0.9f64.powi(i)).collect();
    let counts: Vec<usize> = hs.iter().map(|&h| mode_count(&kde2d(&pts, h, 100).unwrap())).collect();
    assert_eq!(counts[0], 1);
    let first_change = counts.iter().position(|&c| c != 1).unwrap();
    assert_eq!(counts[first_change], 2, "{counts:?}");
    for &h in &hs[..5] {
        let m = kde2d(&pts, h, 100).unwrap().mass();
        assert!((0.99..=1.01).contains(&m));
    }
}

#[test]
fn heatmap_order_matches_brute_force() {
    let mut r = rng(34);
    for _ in 0..30 {
        let n = r.random_range(6..40);
        let p = r.random_range(1..15);
        let d = uniform_data(n, p, &mut r);
        let t = build_mst(&d).unwrap();
        let mut g1 = BTreeSet::new();
        let mut g2 = BTreeSet::new();
        for v in 0..n {
            if r.random_bool(0.4) {
                g1.insert(v);
            } else if r.random_bool(0.5) {
                g2.insert(v);
            }
        }
        if g1.is_empty() || g2.is_empty() {
            continue;
        }
        let sel = GroupSelection::from_groups(&t, g1.clone(), g2.clone()).unwrap();
        let h = heatmap_spec(&d, &sel, None, None).unwrap();
        let mean = |g: &BTreeSet<usize>, f: usize| g.iter().map(|&i| d.value(i, f)).sum::<f64>() / g.len() as f64;
        let mut expected: Vec<usize> = (0..p).collect();
        expected.sort_by(|&a, &b| {
            let da = (mean(&g1, a) - mean(&g2, a)).abs();
            let db = (mean(&g1, b) - mean(&g2, b)).abs();
            db.partial_cmp(&da).unwrap().then(a.cmp(&b))
        });
        assert_eq!(h.order, expected);
        // Shifting a feature by a constant leaves the order alone.
        let shifted: Vec<Vec<f64>> =
            (0..n).map(|i| d.row(i).iter().enumerate().map(|(j, v)| v + j as f64 * 3.0).collect()).collect();
        let ds = Dataset::from_rows(&shifted).unwrap();
        let hs = heatmap_spec(&ds, &sel, None, None).unwrap();
        let keys = |h: &mstlens::HeatmapSpec| -> Vec<f64> {
            h.mean1.iter().zip(&h.mean2).map(|(a, b)| (a - b).abs()).collect()
        };
        for (a, b) in keys(&h).iter().zip(keys(&hs)) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(keys(&h).windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn even_odd_lasso_matches_ray_crossing_count() {
    let mut r = rng(35);
    for _ in 0..50 {
        let m = r.random_range(3..9);
        let poly: Vec<[f64; 2]> = (0..m).map(|_| [r.random::<f64>() * 10.0, r.random::<f64>() * 10.0]).collect();
        for _ in 0..50 {
            let pt = [r.random::<f64>() * 10.0, r.random::<f64>() * 10.0];
            // Count crossings of a ray to +x with each polygon side.
            let mut crossings = 0;
            for i in 0..m {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                let (lo, hi) = if a[1] < b[1] { (a, b) } else { (b, a) };
                if pt[1] >= lo[1] && pt[1] < hi[1] {
                    let x = lo[0] + (pt[1] - lo[1]) / (hi[1] - lo[1]) * (hi[0] - lo[0]);
                    if x > pt[0] {
                        crossings += 1;
                    }
                }
            }
            assert_eq!(point_in_polygon(pt, &poly), crossings % 2 == 1);
        }
    }
}
