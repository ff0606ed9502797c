//! Linearization of IFSs at a common fixed point at the origin.
//!
//! The linear part of `F = {f_l}` is the IFS `{f_l'(0) x}`. When all slopes
//! share one interval, each nonlinear map is conjugate near 0 to its linear
//! part; here that local conjugacy is built constructively as the Koenigs
//! limit `h(x) = lim f'(0)^-n f^n(x)` and tabulated. When contracting and
//! expanding slopes are mixed, the outcome depends on how often each kind
//! appears along the sequence, which [`classify_sequence_fate`] tracks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy1d::{Homeomorphism1D, Tabulated};
use crate::error::{IfsError, Result};
use crate::ifs::{classify_slope_interval, compose_orbit, IfsDescriptor, SlopeInterval};
use crate::maps::{uniform_grid, MapKind, ScalarMap};
use crate::sequence::SymbolSequence;

/// Fixed-point tolerance for `f(0) = 0`.
pub const ORIGIN_TOL: f64 = 1e-12;
/// Margin on the mean log-slope separating convergence from divergence.
pub const FATE_MARGIN: f64 = 0.01;
pub const DEFAULT_RADIUS: f64 = 0.5;
/// 2048 grid intervals; the odd node count puts the origin on a node.
pub const DEFAULT_NODES: usize = 2049;
pub const DEFAULT_DEPTH: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HgCase {
    /// Every slope at the origin lies in one interval.
    Case1SameInterval,
    /// One sign, but both contracting and expanding slopes.
    Case2MixedSignsRatio,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPartResult {
    pub g: IfsDescriptor,
    pub slopes: Vec<f64>,
    pub interval_tags: Vec<SlopeInterval>,
    pub hg_case: HgCase,
}

pub fn linear_part(f: &IfsDescriptor) -> Result<LinearPartResult> {
    let mut slopes = Vec::with_capacity(f.len());
    for (i, map) in f.maps().iter().enumerate() {
        let v = map.eval(0.0);
        if v.abs() > ORIGIN_TOL {
            return Err(IfsError::NotAFixedPoint { index: i + 1, value: v });
        }
        let s = map.derivative_at(0.0);
        if (s.abs() - 1.0).abs() <= ORIGIN_TOL {
            return Err(IfsError::NonHyperbolic { point: 0.0, derivative_abs: s.abs() });
        }
        slopes.push(s);
    }
    let interval_tags: Vec<SlopeInterval> = slopes.iter().map(|&s| classify_slope_interval(s)).collect();
    let hg_case = if interval_tags.iter().any(SlopeInterval::is_boundary) {
        HgCase::Inapplicable
    } else if interval_tags.iter().all(|t| *t == interval_tags[0]) {
        HgCase::Case1SameInterval
    } else if slopes.iter().all(|s| s.signum() == slopes[0].signum()) {
        HgCase::Case2MixedSignsRatio
    } else {
        HgCase::Inapplicable
    };
    let g = IfsDescriptor::new(
        slopes.iter().map(|&s| ScalarMap::linear(s)).collect(),
        format!("linear part of {}", f.label()),
    )?;
    Ok(LinearPartResult { g, slopes, interval_tags, hg_case })
}

/// A tabulated local conjugacy `h` with `h(f(x)) = f'(0) h(x)` near 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub h: Homeomorphism1D,
    pub multiplier: f64,
    pub radius: f64,
    /// Deepest iteration any node needed.
    pub depth: usize,
    /// `max |h(f(x)) - f'(0) h(x)|` over nodes whose image stays in the table.
    pub residual_sup: f64,
    pub residual_points: usize,
}

/// Koenigs limit of a contraction `f` with multiplier `lambda`, at one point.
fn koenigs_limit<F: Fn(f64) -> f64>(f: &F, lambda: f64, x: f64, n_max: usize) -> Result<(f64, usize)> {
    let mut y = x;
    let mut scale = 1.0; // lambda^-n
    let mut h = x;
    let mut delta = f64::INFINITY;
    for n in 1..=n_max {
        if y == 0.0 || y.abs() < 1e-280 {
            return Ok((h, n - 1));
        }
        y = f(y);
        scale /= lambda;
        let next = y * scale;
        if !next.is_finite() {
            break;
        }
        delta = (next - h).abs();
        h = next;
        if delta <= 1e-15 * (1.0 + h.abs()) {
            return Ok((h, n));
        }
    }
    if delta <= 1e-10 {
        Ok((h, n_max))
    } else {
        Err(IfsError::ConvergenceFailure { residual: delta, depth: n_max })
    }
}

/// Tabulates the Koenigs conjugacy of a contraction given as a closure.
pub fn koenigs_tabulate<F>(f: F, lambda: f64, radius: f64, nodes: usize, n_max: usize) -> Result<(Tabulated, usize)>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(lambda.abs() > 0.0 && lambda.abs() < 1.0) {
        return Err(IfsError::Hypothesis(format!("multiplier {lambda} is not in (-1, 0) or (0, 1)")));
    }
    if !(radius > 0.0) || nodes < 2 {
        return Err(IfsError::InvalidArgument("need radius > 0 and at least 2 nodes".into()));
    }
    let xs = uniform_grid(-radius, radius, nodes);
    let vals: Vec<(f64, usize)> = xs
        .par_iter()
        .map(|&x| koenigs_limit(&f, lambda, x, n_max))
        .collect::<Result<_>>()?;
    let depth = vals.iter().map(|v| v.1).max().unwrap_or(0);
    let ys: Vec<f64> = vals.into_iter().map(|v| v.0).collect();
    if ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IfsError::NumericFailure("tabulated linearization is not strictly increasing".into()));
    }
    Ok((Tabulated::new(xs, ys)?, depth))
}

/// Local conjugacy of `f` to its linear part `f'(0) x` on `[-radius, radius]`.
///
/// Contractions are linearized directly. For `|f'(0)| > 1` the inverse map
/// (computed by bisection) is linearized instead; the same `h` then conjugates
/// `f` itself.
pub fn koenigs_conjugacy(f: &ScalarMap, radius: f64, n_max: usize) -> Result<Linearization> {
    koenigs_conjugacy_with(f, radius, DEFAULT_NODES, n_max)
}

pub fn koenigs_conjugacy_with(f: &ScalarMap, radius: f64, nodes: usize, n_max: usize) -> Result<Linearization> {
    if matches!(f.kind(), MapKind::Affine { .. }) || f.eval(0.0).abs() > ORIGIN_TOL {
        return Err(IfsError::NotAFixedPoint { index: 1, value: f.eval(0.0) });
    }
    let lambda = f.derivative_at(0.0);
    let a = lambda.abs();
    if a == 0.0 || (a - 1.0).abs() <= ORIGIN_TOL {
        return Err(IfsError::NonHyperbolic { point: 0.0, derivative_abs: a });
    }
    let (table, depth) = if a < 1.0 {
        koenigs_tabulate(|x| f.eval(x), lambda, radius, nodes, n_max)?
    } else {
        let inv = |y: f64| f.inverse(y).unwrap_or(f64::NAN);
        koenigs_tabulate(inv, 1.0 / lambda, radius, nodes, n_max)?
    };
    let h = Homeomorphism1D::Tabulated(table);
    let (residual_sup, residual_points) = linearization_residual(&h, |x| f.eval(x), lambda, radius, nodes);
    Ok(Linearization { h, multiplier: lambda, radius, depth, residual_sup, residual_points })
}

/// `max |h(f(x)) - lambda h(x)|` over a uniform grid, skipping points whose
/// image leaves the table. Returns the maximum and the number of points used.
pub fn linearization_residual<F: Fn(f64) -> f64>(
    h: &Homeomorphism1D,
    f: F,
    lambda: f64,
    radius: f64,
    points: usize,
) -> (f64, usize) {
    let mut sup = 0.0f64;
    let mut used = 0;
    for x in uniform_grid(-radius, radius, points) {
        let fx = f(x);
        if fx.abs() > radius {
            continue;
        }
        if let (Ok(lhs), Ok(hx)) = (h.evaluate(fx), h.evaluate(x)) {
            sup = sup.max((lhs - lambda * hx).abs());
            used += 1;
        }
    }
    (sup, used)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub orbit_value: f64,
    pub bound: f64,
    pub contraction: f64,
    pub holds: bool,
}

/// Checks `|F_{sigma_n}(x)| < k^n |x|` for perturbed linear contractions
/// `f_i = k_i x + phi_i`, with `k = max(|k_i| + eps_i)`.
pub fn decay_bound_check(f: &IfsDescriptor, sigma: &SymbolSequence, n: usize, x: f64) -> Result<DecayCheck> {
    let mut parts = Vec::with_capacity(f.len());
    for (i, m) in f.maps().iter().enumerate() {
        let (k, eps) = match m.kind() {
            MapKind::Linear { k } => (k, 0.0),
            MapKind::LinearPlusLipschitz { k, perturbation } => (k, perturbation.epsilon()),
            _ => {
                return Err(IfsError::UnsupportedMap(format!(
                    "map {} is not a Lipschitz-perturbed linear map",
                    i + 1
                )))
            }
        };
        if !(k.abs() + eps < 1.0) || k == 0.0 {
            return Err(IfsError::Hypothesis(format!(
                "map {}: |k| + eps = {} must lie in (0, 1)",
                i + 1,
                k.abs() + eps
            )));
        }
        parts.push((k, eps));
    }
    if parts.iter().any(|(k, _)| k.signum() != parts[0].0.signum()) {
        return Err(IfsError::Hypothesis("linear coefficients must share one sign".into()));
    }
    let contraction = parts.iter().map(|(k, e)| k.abs() + e).fold(0.0, f64::max);
    let orbit_value = compose_orbit(f, sigma, n, x)?.abs();
    let bound = contraction.powi(n as i32) * x.abs();
    Ok(DecayCheck { orbit_value, bound, contraction, holds: orbit_value < bound + 1e-12 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fate {
    ConvergesToZero,
    Diverges,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FateSample {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    /// `n1 / n2`, absent while `n2 = 0`.
    pub ratio: Option<f64>,
    pub orbit_f: f64,
    pub orbit_g: f64,
    pub log10_orbit_g: f64,
    /// `prod (|a_l| + eps) |x0|` along the sequence.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFateReport {
    pub samples: Vec<FateSample>,
    /// `(1/n) sum ln |a_{lambda_i}|` at `n = n_max`.
    pub lyapunov_sum: f64,
    pub predicted_fate: Fate,
    pub margin: f64,
    pub n1: usize,
    pub n2: usize,
}

impl SequenceFateReport {
    pub fn last(&self) -> &FateSample {
        self.samples.last().expect("n_max >= 1")
    }
}

/// Tracks contracting/expanding symbol counts and the orbits of `F` and its
/// linear part along `sigma`, then predicts whether orbits collapse to 0.
///
/// The verdict uses the mean log-slope with margin [`FATE_MARGIN`]. A prefix
/// that never visits one of the two blocks is reported as undetermined.
pub fn classify_sequence_fate(
    f: &IfsDescriptor,
    sigma: &SymbolSequence,
    n_max: usize,
    x0: f64,
    eps: f64,
) -> Result<SequenceFateReport> {
    if n_max == 0 {
        return Err(IfsError::InvalidArgument("n_max must be at least 1".into()));
    }
    let lp = linear_part(f)?;
    if lp.hg_case != HgCase::Case2MixedSignsRatio {
        return Err(IfsError::WrongCase(format!(
            "linear part is {:?}; sequence fate applies to mixed contracting/expanding systems",
            lp.hg_case
        )));
    }
    for &a in &lp.slopes {
        let ok = if a.abs() < 1.0 { a.abs() + eps < 1.0 } else { a.abs() - eps > 1.0 };
        if !ok || eps < 0.0 {
            return Err(IfsError::Hypothesis(format!("eps = {eps} does not separate slope {a} from 1")));
        }
    }
    let symbols = sigma.prefix_checked(n_max, f.len())?;

    let mut samples = Vec::with_capacity(n_max);
    let (mut n1, mut n2) = (0usize, 0usize);
    let mut log_sum = 0.0;
    let mut log_bound = 0.0;
    let mut y = x0;
    let lx = x0.abs().ln();
    for (i, &s) in symbols.iter().enumerate() {
        let a = lp.slopes[s - 1];
        if a.abs() < 1.0 {
            n1 += 1;
        } else {
            n2 += 1;
        }
        log_sum += a.abs().ln();
        log_bound += (a.abs() + eps).ln();
        y = f.map(s).eval(y);
        samples.push(FateSample {
            n: i + 1,
            n1,
            n2,
            ratio: (n2 > 0).then(|| n1 as f64 / n2 as f64),
            orbit_f: y.abs(),
            orbit_g: (lx + log_sum).exp(),
            log10_orbit_g: (lx + log_sum) / std::f64::consts::LN_10,
            bound: (lx + log_bound).exp(),
        });
    }
    let lyapunov_sum = log_sum / n_max as f64;
    let predicted_fate = if n1 == 0 || n2 == 0 {
        Fate::Undetermined
    } else if lyapunov_sum < -FATE_MARGIN {
        Fate::ConvergesToZero
    } else if lyapunov_sum > FATE_MARGIN {
        Fate::Diverges
    } else {
        Fate::Undetermined
    };
    Ok(SequenceFateReport { samples, lyapunov_sum, predicted_fate, margin: FATE_MARGIN, n1, n2 })
}
