use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};
use crate::maps::{uniform_grid, ScalarMap, WorkingInterval};

use super::homeo::Homeomorphism1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of checking `h(f(x)) = g(h(x))` on a uniform grid.
///
/// Residuals are scaled, `|h(f(x)) - g(h(x))| / (1 + |g(h(x))|)`, because a
/// conjugacy between slopes of very different magnitude legitimately reaches
/// values far beyond the working interval. The absolute maximum is kept as
/// well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub grid: Vec<f64>,
    pub h_values: Vec<Option<f64>>,
    pub residuals: Vec<Option<f64>>,
    pub residual_sup: f64,
    pub abs_residual_sup: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub worst_point: f64,
    /// Grid points where an evaluation left a domain; each counts as a failure.
    pub escapes: usize,
}

impl ConjugacyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Scaled conjugacy residual at a single point, `None` on a domain escape.
pub fn point_residual<F, G>(f: F, g: G, h: &Homeomorphism1D, x: f64) -> Option<(f64, f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
    G: Fn(f64) -> Option<f64>,
{
    let hx = h.evaluate(x).ok()?;
    let lhs = h.evaluate(f(x)?).ok()?;
    let rhs = g(hx)?;
    let abs = (lhs - rhs).abs();
    Some((hx, abs / (1.0 + rhs.abs()), abs))
}

/// Residual check over arbitrary grid points for maps given as closures.
pub fn verify_on_points<F, G>(f: F, g: G, h: &Homeomorphism1D, grid: Vec<f64>, tolerance: f64) -> Result<ConjugacyReport>
where
    F: Fn(f64) -> Option<f64> + Sync,
    G: Fn(f64) -> Option<f64> + Sync,
{
    if grid.is_empty() {
        return Err(IfsError::InvalidArgument("empty verification grid".into()));
    }
    let rows: Vec<Option<(f64, f64, f64)>> =
        grid.par_iter().map(|&x| point_residual(&f, &g, h, x)).collect();

    // Sequential max so ties always resolve to the first grid point.
    let mut sup = 0.0f64;
    let mut abs_sup = 0.0f64;
    let mut worst = grid[0];
    let mut escapes = 0;
    for (x, row) in grid.iter().zip(&rows) {
        match row {
            Some((_, scaled, abs)) => {
                if *scaled > sup || scaled.is_nan() {
                    sup = if scaled.is_nan() { f64::INFINITY } else { *scaled };
                    worst = *x;
                }
                abs_sup = abs_sup.max(*abs);
            }
            None => {
                if escapes == 0 || sup.is_finite() {
                    worst = *x;
                }
                escapes += 1;
                sup = f64::INFINITY;
                abs_sup = f64::INFINITY;
            }
        }
    }
    let verdict = if escapes == 0 && sup <= tolerance { Verdict::Pass } else { Verdict::Fail };
    Ok(ConjugacyReport {
        h_values: rows.iter().map(|r| r.map(|v| v.0)).collect(),
        residuals: rows.iter().map(|r| r.map(|v| v.1)).collect(),
        grid,
        residual_sup: sup,
        abs_residual_sup: abs_sup,
        tolerance,
        verdict,
        worst_point: worst,
        escapes,
    })
}

/// Checks `h o f = g o h` on `grid_size` uniform points of the working interval.
pub fn verify_conjugacy(
    f: &ScalarMap,
    g: &ScalarMap,
    h: &Homeomorphism1D,
    interval: WorkingInterval,
    grid_size: usize,
    tolerance: f64,
) -> Result<ConjugacyReport> {
    if grid_size < 2 {
        return Err(IfsError::InvalidArgument("grid_size must be at least 2".into()));
    }
    verify_on_points(
        |x| f.try_eval(x),
        |y| g.try_eval(y),
        h,
        uniform_grid(interval.lo(), interval.hi(), grid_size),
        tolerance,
    )
}
