//! Distances between maps and between IFSs, the hyperbolicity audit and an
//! empirical perturbation probe.
//!
//! All suprema are taken over the working interval `[-R, R]` with `r(x, y) = |x - y|`.
//! `rho0` compares maps and their inverses, `rho1` adds the derivative gap,
//! and the IFS distances take the maximum over all cross pairs `(f_i, g_j)`.
//! Identical descriptors are at distance 0 by definition; the same maps in a
//! different order are not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy1d::{build_linear_conjugacy, same_interval_test, verify_on_points, BridgeKind, Homeomorphism1D};
use crate::error::{IfsError, Result};
use crate::ifs::IfsDescriptor;
use crate::linearization::koenigs_tabulate;
use crate::maps::{uniform_grid, MapKind, Perturbation, PerturbationShape, ScalarMap, WorkingInterval};
use crate::roots;
use crate::sequence::uniform;

pub const DEFAULT_GRID: usize = 1001;
pub const AUDIT_GRID: usize = 4096;
pub const HYPERBOLIC_TOL: f64 = 1e-6;
pub const BORDERLINE_TOL: f64 = 1e-3;
/// `|f(x) - x|` below this counts as zero in the audit.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rho0: f64,
    pub rho1: f64,
    /// Largest `|f - g|` and `|f^-1 - g^-1|` separately.
    pub map_gap: f64,
    pub inverse_gap: f64,
    pub derivative_gap: f64,
    pub grid_size: usize,
    pub radius: f64,
    /// Grid points outside the image of `f` or `g`, left out of the inverse gap.
    pub coverage_gaps: usize,
}

fn check_monotone(f: &ScalarMap, xs: &[f64], index: usize) -> Result<()> {
    let ys: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let up = ys.windows(2).all(|w| w[1] > w[0]);
    let down = ys.windows(2).all(|w| w[1] < w[0]);
    if up || down {
        Ok(())
    } else {
        Err(IfsError::NotInvertible { index })
    }
}

/// `rho0`, `rho1` and their parts for one pair of maps.
pub fn metric_report(f: &ScalarMap, g: &ScalarMap, interval: WorkingInterval, grid_size: usize) -> Result<MetricReport> {
    if grid_size < 2 {
        return Err(IfsError::InvalidArgument("grid_size must be at least 2".into()));
    }
    let xs = interval.grid(grid_size);
    check_monotone(f, &xs, 1)?;
    check_monotone(g, &xs, 2)?;
    let rows: Vec<(f64, Option<f64>, f64)> = xs
        .par_iter()
        .map(|&x| {
            let d = (f.eval(x) - g.eval(x)).abs();
            let inv = match (f.inverse(x), g.inverse(x)) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            };
            let dd = (f.derivative_at(x) - g.derivative_at(x)).abs();
            (d, inv, dd)
        })
        .collect();
    let map_gap = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let inverse_gap = rows.iter().filter_map(|r| r.1).fold(0.0, f64::max);
    let derivative_gap = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let coverage_gaps = rows.iter().filter(|r| r.1.is_none()).count();
    let rho0 = map_gap.max(inverse_gap);
    Ok(MetricReport {
        rho0,
        rho1: rho0 + derivative_gap,
        map_gap,
        inverse_gap,
        derivative_gap,
        grid_size,
        radius: interval.radius,
        coverage_gaps,
    })
}

pub fn rho0(f: &ScalarMap, g: &ScalarMap, interval: WorkingInterval, grid_size: usize) -> Result<f64> {
    Ok(metric_report(f, g, interval, grid_size)?.rho0)
}

pub fn rho1(f: &ScalarMap, g: &ScalarMap, interval: WorkingInterval, grid_size: usize) -> Result<f64> {
    Ok(metric_report(f, g, interval, grid_size)?.rho1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl Level {
    pub fn from_index(level: u8) -> Result<Self> {
        match level {
            0 => Ok(Level::Zero),
            1 => Ok(Level::One),
            _ => Err(IfsError::InvalidArgument(format!("level must be 0 or 1, got {level}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    /// 1-based indices into F and G.
    pub i: usize,
    pub j: usize,
    pub rho0: f64,
    pub rho1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsDistanceReport {
    pub level: Level,
    pub d0: f64,
    pub d1: f64,
    /// Pair attaining the requested level, absent for identical descriptors.
    pub argmax_pair: Option<(usize, usize)>,
    pub identical: bool,
    pub pairs: Vec<PairDistance>,
}

impl IfsDistanceReport {
    pub fn value(&self) -> f64 {
        match self.level {
            Level::Zero => self.d0,
            Level::One => self.d1,
        }
    }
}

/// `D_level(F, G)`: the maximum of `rho_level(f_i, g_j)` over all cross pairs.
pub fn ifs_distance(
    f: &IfsDescriptor,
    g: &IfsDescriptor,
    level: Level,
    interval: WorkingInterval,
    grid_size: usize,
) -> Result<IfsDistanceReport> {
    if f.maps() == g.maps() {
        return Ok(IfsDistanceReport { level, d0: 0.0, d1: 0.0, argmax_pair: None, identical: true, pairs: vec![] });
    }
    let mut pairs = Vec::with_capacity(f.len() * g.len());
    for (i, fi) in f.maps().iter().enumerate() {
        for (j, gj) in g.maps().iter().enumerate() {
            let r = metric_report(fi, gj, interval, grid_size)?;
            pairs.push(PairDistance { i: i + 1, j: j + 1, rho0: r.rho0, rho1: r.rho1 });
        }
    }
    let pick = |p: &PairDistance| match level {
        Level::Zero => p.rho0,
        Level::One => p.rho1,
    };
    let mut best = &pairs[0];
    for p in &pairs {
        if pick(p) > pick(best) {
            best = p;
        }
    }
    Ok(IfsDistanceReport {
        level,
        d0: pairs.iter().map(|p| p.rho0).fold(0.0, f64::max),
        d1: pairs.iter().map(|p| p.rho1).fold(0.0, f64::max),
        argmax_pair: Some((best.i, best.j)),
        identical: false,
        pairs,
    })
}

/// `max_i rho1(f_i, g_i)`, pairing maps by index.
pub fn matched_distance(f: &IfsDescriptor, g: &IfsDescriptor, interval: WorkingInterval, grid_size: usize) -> Result<f64> {
    if f.len() != g.len() {
        return Err(IfsError::InvalidArgument("systems differ in size".into()));
    }
    let mut d = 0.0f64;
    for (a, b) in f.maps().iter().zip(g.maps()) {
        d = d.max(rho1(a, b, interval, grid_size)?);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperbolicVerdict {
    Hyperbolic,
    Borderline,
    NonHyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointEntry {
    /// 1-based map index.
    pub map: usize,
    pub fixed_point: f64,
    pub derivative: f64,
    pub margin: f64,
    pub verdict: HyperbolicVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityAudit {
    pub entries: Vec<FixedPointEntry>,
    pub tolerance: f64,
    /// No fixed point is non-hyperbolic. This is a necessary condition only.
    pub necessary_condition_holds: bool,
}

impl HyperbolicityAudit {
    pub fn first_violation(&self) -> Option<&FixedPointEntry> {
        self.entries.iter().find(|e| e.verdict == HyperbolicVerdict::NonHyperbolic)
    }
}

fn classify_margin(margin: f64) -> HyperbolicVerdict {
    if margin <= HYPERBOLIC_TOL {
        HyperbolicVerdict::NonHyperbolic
    } else if margin <= BORDERLINE_TOL {
        HyperbolicVerdict::Borderline
    } else {
        HyperbolicVerdict::Hyperbolic
    }
}

/// Fixed points of one map on `[lo, hi]`: grid sign changes of `f(x) - x`
/// refined by bisection.
pub fn fixed_points(f: &ScalarMap, lo: f64, hi: f64, grid: usize, index: usize) -> Result<Vec<f64>> {
    let xs = uniform_grid(lo, hi, grid);
    let d: Vec<f64> = xs.iter().map(|&x| f.eval(x) - x).collect();
    let small: Vec<bool> = d.iter().map(|v| v.abs() <= ZERO_TOL).collect();
    if let Some(w) = small.windows(3).position(|w| w.iter().all(|&b| b)) {
        return Err(IfsError::ContinuumOfFixedPoints { index, near: xs[w + 1] });
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        if small[i] {
            out.push(xs[i]);
            continue;
        }
        if i + 1 < xs.len() && !small[i + 1] && d[i].signum() != d[i + 1].signum() {
            out.push(roots::bisect(|x| f.eval(x) - x, xs[i], xs[i + 1]));
        }
    }
    Ok(out)
}

pub fn hyperbolicity_audit(f: &IfsDescriptor, interval: WorkingInterval) -> Result<HyperbolicityAudit> {
    let mut entries = Vec::new();
    for (i, map) in f.maps().iter().enumerate() {
        for p in fixed_points(map, interval.lo(), interval.hi(), AUDIT_GRID, i + 1)? {
            let derivative = map.derivative_at(p);
            let margin = (derivative.abs() - 1.0).abs();
            entries.push(FixedPointEntry { map: i + 1, fixed_point: p, derivative, margin, verdict: classify_margin(margin) });
        }
    }
    let necessary_condition_holds = entries.iter().all(|e| e.verdict != HyperbolicVerdict::NonHyperbolic);
    Ok(HyperbolicityAudit { entries, tolerance: HYPERBOLIC_TOL, necessary_condition_holds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrial {
    pub trial: usize,
    pub attempts: usize,
    pub slopes: Vec<f64>,
    /// Index-matched `max_i rho1(f_i, g_i)`.
    pub matched_distance: f64,
    pub conjugable: bool,
    /// Worst scaled residual over `n = 1..=PROBE_MAX_N`; infinite when not conjugable.
    pub max_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub passed: usize,
    pub pass_fraction: f64,
    pub tolerance: f64,
    pub rows: Vec<ProbeTrial>,
}

pub const PROBE_MAX_N: usize = 10;
pub const PROBE_RADIUS: f64 = 0.5;
pub const PROBE_NODES: usize = 1025;
pub const PROBE_TOL: f64 = 1e-6;

fn perturb(map: &ScalarMap, u: f64, v: f64) -> Result<ScalarMap> {
    let (k, shape) = match map.kind() {
        MapKind::Linear { k } => (k, PerturbationShape::Sine { c: v }),
        MapKind::LinearPlusLipschitz { k, perturbation } => (
            k,
            match perturbation.shape() {
                PerturbationShape::Sine { c } => PerturbationShape::Sine { c: c + v },
                PerturbationShape::Rational { c } => PerturbationShape::Rational { c: c + v },
            },
        ),
        _ => return Err(IfsError::UnsupportedMap("the probe perturbs linear and Lipschitz-perturbed maps only".into())),
    };
    let p = match shape {
        PerturbationShape::Sine { c } | PerturbationShape::Rational { c } => Perturbation::new(shape, c.abs())?,
    };
    Ok(ScalarMap::linear_plus(k + u, p))
}

fn compose(maps: &[ScalarMap], symbols: &[usize], x: f64) -> f64 {
    symbols.iter().fold(x, |acc, &s| maps[s - 1].eval(acc))
}

/// Conjugacy `h = K_G^-1 o L o K_F` of `F_{sigma_n}` to `G_{sigma_n}` near 0,
/// where `K` are Koenigs linearizations and `L` the linear conjugacy of the
/// multipliers. Returns the worst scaled residual on `[-r/2, r/2]`.
fn local_residual(f: &IfsDescriptor, g: &IfsDescriptor, symbols: &[usize]) -> Result<f64> {
    let r = PROBE_RADIUS;
    let slope = |ifs: &IfsDescriptor| symbols.iter().map(|&s| ifs.map(s).derivative_at(0.0)).product::<f64>();
    let (k, m) = (slope(f), slope(g));
    let linear = |ifs: &IfsDescriptor| ifs.maps().iter().all(|m| matches!(m.kind(), MapKind::Linear { .. }));
    let mut parts = Vec::new();
    if !linear(f) {
        let (t, _) = koenigs_tabulate(|x| compose(f.maps(), symbols, x), k, r, PROBE_NODES, 20_000)?;
        parts.push(Homeomorphism1D::Tabulated(t));
    }
    parts.push(build_linear_conjugacy(k, m, r / 2.0, BridgeKind::PowerLaw)?);
    if !linear(g) {
        let (t, _) = koenigs_tabulate(|x| compose(g.maps(), symbols, x), m, r, PROBE_NODES, 20_000)?;
        parts.push(Homeomorphism1D::Tabulated(t).inverse());
    }
    let h = Homeomorphism1D::Composite { parts };
    let report = verify_on_points(
        |x| Some(compose(f.maps(), symbols, x)),
        |y| Some(compose(g.maps(), symbols, y)),
        &h,
        uniform_grid(-r / 2.0, r / 2.0, 201),
        PROBE_TOL,
    )?;
    Ok(report.residual_sup)
}

/// Draws `trials` perturbations `G` of `F` with index-matched distance below
/// `delta` and checks that each stays weakly conjugate to `F` near the origin.
///
/// Only supports contracting systems built from linear and Lipschitz-perturbed
/// maps. Each trial draws from its own ChaCha stream, so rows do not depend on
/// scheduling.
pub fn perturbation_probe(
    f: &IfsDescriptor,
    delta: f64,
    trials: usize,
    seed: u64,
    interval: WorkingInterval,
) -> Result<ProbeReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(IfsError::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let audit = hyperbolicity_audit(f, interval)?;
    if let Some(v) = audit.first_violation() {
        return Err(IfsError::NonHyperbolic { point: v.fixed_point, derivative_abs: v.derivative.abs() });
    }
    for (i, m) in f.maps().iter().enumerate() {
        if !(m.derivative_at(0.0).abs() < 1.0) {
            return Err(IfsError::Hypothesis(format!("probe needs contracting maps; map {} has slope {}", i + 1, m.derivative_at(0.0))));
        }
        perturb(m, 0.0, 0.0)?;
    }
    let rows: Vec<ProbeTrial> = (0..trials)
        .into_par_iter()
        .map(|t| probe_trial(f, delta, seed, t, interval))
        .collect::<Result<_>>()?;
    let passed = rows.iter().filter(|r| r.passed).count();
    Ok(ProbeReport {
        delta,
        trials,
        seed,
        passed,
        pass_fraction: if trials == 0 { 1.0 } else { passed as f64 / trials as f64 },
        tolerance: PROBE_TOL,
        rows,
    })
}

fn probe_trial(f: &IfsDescriptor, delta: f64, seed: u64, trial: usize, interval: WorkingInterval) -> Result<ProbeTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    let budget = 100;
    for attempt in 1..=budget {
        let mut maps = Vec::with_capacity(f.len());
        for m in f.maps() {
            let k = m.base_slope().abs();
            let s = delta * k.min(1.0).powi(2) / (4.0 * (interval.radius + 2.0));
            maps.push(perturb(m, uniform(&mut rng, -s, s), uniform(&mut rng, -s, s))?);
        }
        let g = IfsDescriptor::new(maps, format!("{} perturbed #{trial}", f.label()))?;
        let d = matched_distance(f, &g, interval, 201)?;
        if !(d < delta) {
            continue;
        }
        let slopes: Vec<f64> = g.maps().iter().map(|m| m.derivative_at(0.0)).collect();
        let symbols: Vec<usize> = (0..PROBE_MAX_N).map(|_| rng.random_range(1..=f.len())).collect();
        let lin = |ifs: &IfsDescriptor| -> Result<IfsDescriptor> {
            IfsDescriptor::linear(&ifs.maps().iter().map(|m| m.derivative_at(0.0)).collect::<Vec<_>>())
        };
        let conjugable = match same_interval_test(&lin(f)?, &lin(&g)?) {
            Ok(r) => r.is_conjugable(),
            Err(e) if e.is_obstruction() => false,
            Err(e) => return Err(e),
        };
        let mut max_residual = if conjugable { 0.0f64 } else { f64::INFINITY };
        if conjugable {
            for n in 1..=PROBE_MAX_N {
                max_residual = max_residual.max(local_residual(f, &g, &symbols[..n])?);
            }
        }
        return Ok(ProbeTrial {
            trial,
            attempts: attempt,
            slopes,
            matched_distance: d,
            conjugable,
            max_residual,
            passed: conjugable && max_residual <= PROBE_TOL,
        });
    }
    Err(IfsError::Generation { attempts: budget })
}
