//! Gaussian product-kernel density estimates on a regular 2-D grid, and
//! mode counting for bandwidth calibration.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 100;
/// The grid extends this many bandwidths past the data's bounding box.
const PADDING: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySurface {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `z[j][i]` is the density at `(xs[i], ys[j])`.
    pub z: Vec<Vec<f64>>,
    pub bandwidth: f64,
}

impl DensitySurface {
    /// Trapezoid-rule integral over the grid.
    pub fn mass(&self) -> f64 {
        let trap = |vals: &mut dyn Iterator<Item = f64>, grid: &[f64]| -> f64 {
            let v: Vec<f64> = vals.collect();
            grid.windows(2)
                .zip(v.windows(2))
                .map(|(g, f)| (g[1] - g[0]) * (f[0] + f[1]) / 2.0)
                .sum()
        };
        let rows: Vec<f64> = self
            .z
            .iter()
            .map(|row| trap(&mut row.iter().copied(), &self.xs))
            .collect();
        trap(&mut rows.into_iter(), &self.ys)
    }

    /// Grid location of the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (j, row) in self.z.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v > self.z[best.1][best.0] {
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Density of `coords` under a Gaussian product kernel with standard
/// deviation `bandwidth` on a `resolution × resolution` grid covering the
/// bounding box padded by three bandwidths.
pub fn kde2d(coords: &[[f64; 2]], bandwidth: f64, resolution: usize) -> Result<DensitySurface> {
    if coords.is_empty() {
        return Err(Error::invalid("kde2d needs at least one point"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    let axis = |dim: usize| -> Vec<f64> {
        let lo = coords.iter().map(|c| c[dim]).fold(f64::INFINITY, f64::min) - PADDING * bandwidth;
        let hi = coords.iter().map(|c| c[dim]).fold(f64::NEG_INFINITY, f64::max) + PADDING * bandwidth;
        (0..resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let xs = axis(0);
    let ys = axis(1);
    let h2 = bandwidth * bandwidth;
    let norm = 1.0 / (2.0 * PI * h2 * coords.len() as f64);
    // The kernel factorizes, so precompute the per-axis factors.
    let factors = |grid: &[f64], dim: usize| -> Vec<Vec<f64>> {
        coords
            .iter()
            .map(|c| grid.iter().map(|g| (-(g - c[dim]).powi(2) / (2.0 * h2)).exp()).collect())
            .collect()
    };
    let fx = factors(&xs, 0);
    let fy = factors(&ys, 1);
    let z = (0..resolution)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![0.0; resolution];
            for (px, py) in fx.iter().zip(&fy) {
                let wy = py[j];
                for (r, wx) in row.iter_mut().zip(px) {
                    *r += wx * wy;
                }
            }
            row.iter_mut().for_each(|v| *v *= norm);
            row
        })
        .collect();
    Ok(DensitySurface {
        xs,
        ys,
        z,
        bandwidth,
    })
}

/// Grid cells strictly greater than all of their (up to eight) neighbours.
pub fn local_maxima(surface: &DensitySurface) -> Vec<(usize, usize)> {
    let rows = surface.z.len();
    let mut out = Vec::new();
    for j in 0..rows {
        let cols = surface.z[j].len();
        for i in 0..cols {
            let v = surface.z[j][i];
            let mut strict = true;
            'nbrs: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (nj, ni) = (j as i64 + dj, i as i64 + di);
                    if nj < 0 || ni < 0 || nj as usize >= rows || ni as usize >= surface.z[nj as usize].len() {
                        continue;
                    }
                    if surface.z[nj as usize][ni as usize] >= v {
                        strict = false;
                        break 'nbrs;
                    }
                }
            }
            if strict {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn mode_count(surface: &DensitySurface) -> usize {
    local_maxima(surface).len()
}
