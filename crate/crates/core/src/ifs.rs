//! Iterated function systems on the line: orbit composition along a symbol
//! sequence, slope products and slope-interval classification.

use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};
use crate::maps::{Domain, ScalarMap};
use crate::sequence::SymbolSequence;

/// The four open slope intervals on which linear maps are mutually
/// conjugate, plus the non-hyperbolic boundary `|s| in {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlopeInterval {
    #[serde(rename = "(0,1)")]
    ContractingPositive,
    #[serde(rename = "(-1,0)")]
    ContractingNegative,
    #[serde(rename = "(1,+inf)")]
    ExpandingPositive,
    #[serde(rename = "(-inf,-1)")]
    ExpandingNegative,
    #[serde(rename = "boundary")]
    Boundary,
}

impl SlopeInterval {
    pub fn is_boundary(&self) -> bool {
        *self == SlopeInterval::Boundary
    }

    pub fn is_orientation_preserving(&self) -> bool {
        matches!(self, SlopeInterval::ContractingPositive | SlopeInterval::ExpandingPositive)
    }

    pub fn is_contracting(&self) -> bool {
        matches!(self, SlopeInterval::ContractingPositive | SlopeInterval::ContractingNegative)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SlopeInterval::ContractingPositive => "(0,1)",
            SlopeInterval::ContractingNegative => "(-1,0)",
            SlopeInterval::ExpandingPositive => "(1,+inf)",
            SlopeInterval::ExpandingNegative => "(-inf,-1)",
            SlopeInterval::Boundary => "boundary",
        }
    }
}

impl std::fmt::Display for SlopeInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_slope_interval(s: f64) -> SlopeInterval {
    let a = s.abs();
    if a == 0.0 || a == 1.0 || !s.is_finite() {
        SlopeInterval::Boundary
    } else if s > 0.0 {
        if a < 1.0 {
            SlopeInterval::ContractingPositive
        } else {
            SlopeInterval::ExpandingPositive
        }
    } else if a < 1.0 {
        SlopeInterval::ContractingNegative
    } else {
        SlopeInterval::ExpandingNegative
    }
}

/// An ordered, nonempty family of maps `F = {f_1, ..., f_N}` on a common domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsDescriptor {
    maps: Vec<ScalarMap>,
    label: String,
}

impl IfsDescriptor {
    /// Builds an IFS for the conjugacy modules; affine maps are rejected.
    pub fn new(maps: Vec<ScalarMap>, label: impl Into<String>) -> Result<Self> {
        if maps.iter().any(ScalarMap::is_affine) {
            return Err(IfsError::AffineNotAllowed);
        }
        Self::build(maps, label.into())
    }

    /// Builds an IFS that may contain affine maps (attractor sampling only).
    pub fn with_affine(maps: Vec<ScalarMap>, label: impl Into<String>) -> Result<Self> {
        Self::build(maps, label.into())
    }

    fn build(maps: Vec<ScalarMap>, label: String) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| IfsError::InvalidArgument("an IFS needs at least one map".into()))?;
        if maps.iter().any(|m| m.domain() != first.domain()) {
            return Err(IfsError::InvalidArgument("all maps must share one domain".into()));
        }
        Ok(IfsDescriptor { maps, label })
    }

    /// Convenience constructor for `{k_1 x, ..., k_N x}`.
    pub fn linear(slopes: &[f64]) -> Result<Self> {
        let label = slopes.iter().map(|k| format!("{k}x")).collect::<Vec<_>>().join(", ");
        Self::new(slopes.iter().map(|&k| ScalarMap::linear(k)).collect(), format!("{{{label}}}"))
    }

    pub fn maps(&self) -> &[ScalarMap] {
        &self.maps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.maps[0].domain()
    }

    pub fn contains_affine(&self) -> bool {
        self.maps.iter().any(ScalarMap::is_affine)
    }

    /// 1-based lookup.
    pub fn map(&self, symbol: usize) -> &ScalarMap {
        &self.maps[symbol - 1]
    }

    /// Slopes of an all-linear IFS.
    pub fn linear_slopes(&self) -> Result<Vec<f64>> {
        self.maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.linear_slope().ok_or_else(|| {
                    IfsError::UnsupportedMap(format!("map {} of {} is not linear", i + 1, self.label))
                })
            })
            .collect()
    }
}

/// `F_{sigma_n}(x) = f_{lambda_n}(... f_{lambda_1}(x) ...)`, first symbol innermost.
pub fn compose_orbit(ifs: &IfsDescriptor, sigma: &SymbolSequence, n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(IfsError::InvalidArgument("n must be at least 1".into()));
    }
    if !ifs.domain().contains(x) {
        return Err(IfsError::DomainEscape { step: 0, value: x });
    }
    let symbols = sigma.prefix_checked(n, ifs.len())?;
    orbit_along(ifs, &symbols, x)
}

/// Applies the maps named by `symbols` in order, reporting the step at which
/// the orbit leaves the domain.
pub fn orbit_along(ifs: &IfsDescriptor, symbols: &[usize], x: f64) -> Result<f64> {
    let domain = ifs.domain();
    symbols.iter().enumerate().try_fold(x, |acc, (i, &s)| {
        let y = ifs.map(s).eval(acc);
        if domain.contains(y) {
            Ok(y)
        } else {
            Err(IfsError::DomainEscape { step: i + 1, value: y })
        }
    })
}

/// All partial orbit values `F_{sigma_1}(x), ..., F_{sigma_n}(x)`.
pub fn orbit_trajectory(ifs: &IfsDescriptor, sigma: &SymbolSequence, n: usize, x: f64) -> Result<Vec<f64>> {
    let symbols = sigma.prefix_checked(n, ifs.len())?;
    let mut out = Vec::with_capacity(n);
    let mut acc = x;
    for (i, &s) in symbols.iter().enumerate() {
        acc = ifs.map(s).eval(acc);
        if !ifs.domain().contains(acc) {
            return Err(IfsError::DomainEscape { step: i + 1, value: acc });
        }
        out.push(acc);
    }
    Ok(out)
}

/// Slope product `k*_{sigma_n} = k_{lambda_n} ... k_{lambda_1}` of a linear IFS.
pub fn effective_slope(ifs: &IfsDescriptor, sigma: &SymbolSequence, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(IfsError::InvalidArgument("n must be at least 1".into()));
    }
    let slopes = ifs.linear_slopes()?;
    let symbols = sigma.prefix_checked(n, ifs.len())?;
    Ok(symbols.iter().map(|&s| slopes[s - 1]).product())
}

/// Largest difference quotient over all pairs of `samples` equally spaced
/// points of `[lo, hi]`: a lower bound on the Lipschitz constant there.
pub fn estimate_lipschitz(f: &ScalarMap, lo: f64, hi: f64, samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(IfsError::InvalidArgument("need at least two samples".into()));
    }
    if !(lo < hi) {
        return Err(IfsError::InvalidArgument(format!("degenerate interval [{lo}, {hi}]")));
    }
    let xs = crate::maps::uniform_grid(lo, hi, samples);
    let ys: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let mut best = 0.0f64;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let q = ((ys[j] - ys[i]) / (xs[j] - xs[i])).abs();
            best = best.max(q);
        }
    }
    Ok(best)
}
