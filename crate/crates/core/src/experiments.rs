//! Synthetic data generators and the simulation studies: power and size of
//! the MST test on two boxes, the tree-stability comparison on a Gaussian
//! mixture, and path recovery on a noisy parabola.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::crossing::GroupSelection;
use crate::data::{Clustering, Dataset};
use crate::error::{Error, Result};
use crate::mst::build_mst;
use crate::mst_test::{mst_test, TestConfig};
use crate::projection::PathMatrix;
use crate::rf::replicate_rng;

/// Points per box in the power study.
pub const BOX_POINTS: usize = 50;

/// `n_each` points uniform on `[-2, -c] × [-1, 1]^{p-1}` followed by
/// `n_each` points uniform on `[c, 2] × [-1, 1]^{p-1}`.
pub fn two_boxes(c: f64, p: usize, n_each: usize, rng: &mut impl Rng) -> Result<Dataset> {
    if !(0.0..=2.0).contains(&c) || p == 0 || n_each == 0 {
        return Err(Error::invalid("two_boxes needs c in [0, 2], p >= 1, n_each >= 1"));
    }
    let mut rows = Vec::with_capacity(2 * n_each);
    for side in [-1.0, 1.0] {
        for _ in 0..n_each {
            let mut row = Vec::with_capacity(p);
            row.push(side * (c + (2.0 - c) * rng.random::<f64>()));
            for _ in 1..p {
                row.push(rng.random::<f64>() * 2.0 - 1.0);
            }
            rows.push(row);
        }
    }
    Dataset::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub c: f64,
    pub p: usize,
    pub trials: usize,
    pub rejections: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub cs: Vec<f64>,
    pub ps: Vec<usize>,
    pub trials: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// One study cell: `trials` independent two-box datasets, each tested at
/// level `alpha`.
pub fn power_cell(c: f64, p: usize, cfg: &PowerConfig, cell: u64) -> Result<PowerRow> {
    let rejections = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = replicate_rng(cfg.seed, (cell << 32) | t as u64);
            let data = two_boxes(c, p, BOX_POINTS, &mut rng)?;
            let tree = build_mst(&data)?;
            let g1: BTreeSet<usize> = (0..BOX_POINTS).collect();
            let g2: BTreeSet<usize> = (BOX_POINTS..2 * BOX_POINTS).collect();
            let sel = GroupSelection::from_groups(&tree, g1, g2)?;
            let test_cfg = TestConfig {
                replicates: cfg.replicates,
                variance_threshold: crate::mst_test::DEFAULT_VARIANCE_THRESHOLD,
                seed: rng.next_u64(),
            };
            Ok(mst_test(&data, &tree, &sel, &test_cfg)?.rejects(cfg.alpha))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&r| r)
        .count();
    Ok(PowerRow {
        c,
        p,
        trials: cfg.trials,
        rejections,
        rate: rejections as f64 / cfg.trials as f64,
    })
}

/// Rejection rates over the `(c, p)` grid, `c` varying slowest.
pub fn power_experiment(cfg: &PowerConfig) -> Result<Vec<PowerRow>> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    let mut rows = Vec::new();
    for (ci, &c) in cfg.cs.iter().enumerate() {
        for (pi, &p) in cfg.ps.iter().enumerate() {
            let cell = (ci as u64) << 16 | pi as u64;
            rows.push(power_cell(c, p, cfg, cell)?);
        }
    }
    Ok(rows)
}

pub fn power_csv(rows: &[PowerRow]) -> String {
    let mut out = String::from("c,p,trials,rejections,rate\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.c, r.p, r.trials, r.rejections, r.rate));
    }
    out
}

/// `k` spherical unit-variance Gaussian clusters of (nearly) equal size in
/// `p` dimensions. Cluster centers follow a random tree: each new center is
/// a step of length `step` in a random direction from a uniformly chosen
/// earlier center.
pub fn gaussian_mixture(
    n: usize,
    p: usize,
    k: usize,
    step: f64,
    seed: u64,
) -> Result<(Dataset, Clustering)> {
    if k < 2 || n < 2 * k || p == 0 {
        return Err(Error::invalid("gaussian_mixture needs k >= 2, n >= 2k, p >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; p]];
    for j in 1..k {
        let parent = rng.random_range(0..j);
        let dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let c = centers[parent]
            .iter()
            .zip(&dir)
            .map(|(a, d)| a + step * d / norm)
            .collect();
        centers.push(c);
    }
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let j = i * k / n;
        rows.push(
            centers[j]
                .iter()
                .map(|m| m + Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>(),
        );
        labels.push(j);
    }
    Ok((Dataset::from_rows(&rows)?, Clustering::from_indices(&labels)?))
}

/// The bundled stability data set: ten clusters, 1000 points, 300 features.
pub fn stability_mixture() -> (Dataset, Clustering) {
    gaussian_mixture(1000, 300, 10, 15.0, 20_200_406).expect("fixed parameters are valid")
}

/// A noisy parabola embedded in `p` dimensions.
#[derive(Debug, Clone)]
pub struct ParabolaPath {
    /// `k × p` observed points.
    pub points: DMatrix<f64>,
    /// `k × 2` noiseless planar coordinates `(t, t²)`.
    pub truth: DMatrix<f64>,
}

impl ParabolaPath {
    pub fn path(&self) -> PathMatrix {
        PathMatrix::new(self.points.clone()).expect("k >= 2")
    }
}

/// Points `(t, t²)` for `k` evenly spaced `t ∈ [-1, 1]`, mapped into `p`
/// dimensions by a random orthonormal pair of directions, plus independent
/// Gaussian noise of standard deviation `noise_sd` on every coordinate.
pub fn parabola_path(k: usize, p: usize, noise_sd: f64, seed: u64) -> Result<ParabolaPath> {
    if k < 3 || p < 2 || noise_sd < 0.0 {
        return Err(Error::invalid("parabola_path needs k >= 3, p >= 2, noise_sd >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(p, 2, |_, _| StandardNormal.sample(&mut rng));
    let frame = raw.qr().q();
    let truth = DMatrix::from_fn(k, 2, |r, c| {
        let t = -1.0 + 2.0 * r as f64 / (k - 1) as f64;
        if c == 0 {
            t
        } else {
            t * t
        }
    });
    let mut points = &truth * frame.transpose();
    if noise_sd > 0.0 {
        let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
        points.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    Ok(ParabolaPath { points, truth })
}

/// Procrustes disparity between two `k × 2` configurations: both are
/// centered and scaled to unit Frobenius norm, `b` is optimally rotated (or
/// reflected) onto `a`, and the residual sum of squares is returned.
pub fn procrustes_disparity(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() < 2 {
        return Err(Error::invalid("procrustes needs two equally shaped configurations"));
    }
    let standardize = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let c = crate::linalg::center(m);
        let n = c.norm();
        if n > 0.0 {
            Ok(c / n)
        } else {
            Err(Error::invalid("procrustes configuration has no spread"))
        }
    };
    let a = standardize(a)?;
    let b = standardize(b)?;
    let s: f64 = (a.transpose() * &b).singular_values().iter().sum();
    Ok((1.0 - s * s).max(0.0))
}

/// One-sided Mann-Whitney test that `x` tends to be smaller than `y`.
/// Normal approximation with tie correction; returns the p-value.
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> Result<f64> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 || x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("mann_whitney needs two non-empty finite samples"));
    }
    let mut all: Vec<(f64, usize)> = x.iter().map(|&v| (v, 0)).chain(y.iter().map(|&v| (v, 1))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].iter_mut().for_each(|r| *r = avg);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let r1: f64 = all.iter().zip(&ranks).filter(|(a, _)| a.1 == 0).map(|(_, r)| r).sum();
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let u1 = r1 - f1 * (f1 + 1.0) / 2.0;
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var.is_nan() || var <= 0.0 {
        return Ok(1.0);
    }
    // Continuity correction toward the mean.
    let z = (u1 - mean + 0.5) / var.sqrt();
    Ok(NormalDist::new(0.0, 1.0).expect("standard normal").cdf(z))
}
