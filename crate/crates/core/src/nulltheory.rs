//! Extremal unimodal densities behind the null distribution.
//!
//! Given group sizes `n1`, `n2`, a mode location `c ∈ [-1, 1]` and a
//! half-width `eps ∈ (0, 1)`, consider densities `f` on `[-1, 1]` that are
//! non-decreasing on `[-1, c]`, non-increasing on `[c, 1]`, and put mass
//! `n1 / (n1 + n2)` on `[-1, 0]` and `n2 / (n1 + n2)` on `[0, 1]`. The
//! minimal mass any such `f` can place on `[-eps, eps]` has a closed form in
//! four cases; each minimizer is piecewise constant.
//!
//! Unimodality is read almost everywhere: a single jump located exactly at
//! the mode may go either way.
//!
//! Two parameter regions have no admissible density at all: whenever
//! `c > 0` and `n2 < c · n1`, monotonicity on `[0, c]` forces at least
//! `c · n1 / (n1 + n2)` mass onto `[0, 1]`. Case III (`0 < c < eps`,
//! `n2 / n1 < c`) lies entirely in that region. For it the two-level density
//! with its jump at 0 is returned together with its objective value, and
//! [`NullTheoryProblem::is_feasible`] reports the problem as infeasible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullTheoryProblem {
    pub n1: f64,
    pub n2: f64,
    pub c: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullCase {
    /// `c > eps`
    I,
    /// `0 < c ≤ eps`, `n2 / n1 ≥ c`
    II,
    /// `0 < c < eps`, `n2 / n1 < c`
    III,
    /// `c = 0`
    IV,
}

impl NullTheoryProblem {
    pub fn new(n1: f64, n2: f64, c: f64, eps: f64) -> Result<Self> {
        let p = Self { n1, n2, c, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n1 > 0.0 && self.n2 > 0.0 && self.n1.is_finite() && self.n2.is_finite()) {
            return Err(Error::invalid("group sizes must be positive"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(-1.0..=1.0).contains(&self.c) {
            return Err(Error::invalid(format!("c must lie in [-1, 1], got {}", self.c)));
        }
        Ok(())
    }

    fn total(&self) -> f64 {
        self.n1 + self.n2
    }

    pub fn left_mass(&self) -> f64 {
        self.n1 / self.total()
    }

    pub fn right_mass(&self) -> f64 {
        self.n2 / self.total()
    }

    /// Problem reflected through 0 (groups swapped, mode negated).
    pub fn mirrored(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            c: -self.c,
            eps: self.eps,
        }
    }

    /// Case of the (possibly mirrored) problem with `c ≥ 0`.
    pub fn case(&self) -> NullCase {
        let p = if self.c < 0.0 { self.mirrored() } else { *self };
        if p.c == 0.0 {
            NullCase::IV
        } else if p.c > p.eps {
            NullCase::I
        } else if p.n2 / p.n1 >= p.c {
            NullCase::II
        } else {
            NullCase::III
        }
    }

    /// Whether any admissible density exists.
    pub fn is_feasible(&self) -> bool {
        let p = if self.c < 0.0 { self.mirrored() } else { *self };
        p.n2 >= p.c * p.n1
    }
}

/// A density on `[-1, 1]` that is constant between consecutive breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseDensity {
    /// Increasing, from -1 to 1.
    pub breakpoints: Vec<f64>,
    /// One value per segment.
    pub values: Vec<f64>,
}

impl PiecewiseDensity {
    fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        Self {
            breakpoints,
            values,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    /// `∫_a^b f`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.segments()
            .map(|(lo, hi, v)| {
                let l = lo.max(a);
                let h = hi.min(b);
                if h > l {
                    (h - l) * v
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn mirrored(&self) -> Self {
        Self::new(
            self.breakpoints.iter().rev().map(|b| -b).collect(),
            self.values.iter().rev().copied().collect(),
        )
    }

    /// Checks every admissibility constraint for `problem`; returns the list
    /// of violated ones (empty when admissible).
    pub fn family_violations(&self, problem: &NullTheoryProblem, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.values.iter().any(|&v| v < -tol) {
            out.push("negative density".to_string());
        }
        let first = self.breakpoints.first().copied().unwrap_or(f64::NAN);
        let last = self.breakpoints.last().copied().unwrap_or(f64::NAN);
        if (first + 1.0).abs() > tol || (last - 1.0).abs() > tol {
            out.push("support is not [-1, 1]".to_string());
        }
        let left = self.integral(-1.0, 0.0);
        if (left - problem.left_mass()).abs() > tol {
            out.push(format!(
                "mass on [-1, 0] is {left}, expected {}",
                problem.left_mass()
            ));
        }
        let right = self.integral(0.0, 1.0);
        if (right - problem.right_mass()).abs() > tol {
            out.push(format!(
                "mass on [0, 1] is {right}, expected {}",
                problem.right_mass()
            ));
        }
        let c = problem.c;
        let segs: Vec<(f64, f64, f64)> = self.segments().filter(|s| s.1 > s.0).collect();
        for pair in segs.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let boundary = a.1;
            // Jump at the mode itself is unconstrained.
            if (boundary - c).abs() <= tol {
                continue;
            }
            if boundary < c && b.2 < a.2 - tol {
                out.push(format!("decreases at {boundary} left of the mode {c}"));
            }
            if boundary > c && b.2 > a.2 + tol {
                out.push(format!("increases at {boundary} right of the mode {c}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSolution {
    pub case: NullCase,
    pub density: PiecewiseDensity,
    /// Closed-form minimum of `∫_{-eps}^{eps} f`.
    pub min_integral: f64,
}

/// Closed-form minimizer of the mass near the boundary. Problems with
/// `c < 0` are solved in mirror image.
pub fn minimal_crossing_density(problem: &NullTheoryProblem) -> Result<NullSolution> {
    problem.validate()?;
    if problem.c < 0.0 {
        let sol = minimal_crossing_density(&problem.mirrored())?;
        return Ok(NullSolution {
            density: sol.density.mirrored(),
            ..sol
        });
    }
    let NullTheoryProblem { n1, n2, c, eps } = *problem;
    let total = n1 + n2;
    let low = n1 / total;
    let case = problem.case();
    let (density, min_integral) = match case {
        NullCase::I => {
            let value = 2.0 * eps * low;
            // With c = 1 and n2 < n1 the problem is infeasible anyway.
            let density = if n2 >= n1 || c >= 1.0 {
                // Flat at the left level through eps, higher level after.
                let high = (n2 - eps * n1) / ((1.0 - eps) * total);
                PiecewiseDensity::new(vec![-1.0, 0.0, eps, 1.0], vec![low, low, high])
            } else {
                // The step at eps would decrease left of the mode; step at c.
                let high = (n2 - c * n1) / ((1.0 - c) * total);
                PiecewiseDensity::new(vec![-1.0, 0.0, c, 1.0], vec![low, low, high])
            };
            (density, value)
        }
        NullCase::II => {
            let high = (n2 - c * n1) / ((1.0 - c) * total);
            let value = eps * low + c * low + (eps - c) * (n2 - c * n1) / ((1.0 - c) * total);
            let density = PiecewiseDensity::new(vec![-1.0, 0.0, c, 1.0], vec![low, low, high]);
            (density, value)
        }
        NullCase::III | NullCase::IV => {
            let value = eps * low + eps * n2 / total;
            let density = PiecewiseDensity::new(vec![-1.0, 0.0, 1.0], vec![low, n2 / total]);
            (density, value)
        }
    };
    Ok(NullSolution {
        case,
        density,
        min_integral,
    })
}
