//! One-dimensional conjugating homeomorphisms.
//!
//! The central form is the fundamental-domain construction for a pair of
//! contractions `f(x) = kx`, `g(x) = mx` with `0 < k, m < 1`: a bridge
//! homeomorphism maps `[k a, a]` onto `[m a, a]`, and every other positive
//! point is carried into that interval by powers of `f` and back out by the
//! matching powers of `g`. Negative points use the odd extension. The
//! expansive and orientation-reversing cases reuse the same core through
//! inversion and negation.

use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};
use crate::interp::MonotoneCubic;
use crate::roots;

/// How `[k a, a]` is mapped onto `[m a, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgeKind {
    #[default]
    #[serde(alias = "linear")]
    LinearInterpolation,
    /// `y -> a (y / a)^alpha` with `alpha = ln m / ln k`; makes `h` equal to
    /// the power law `sign(x) |x|^alpha` when `a = 1`.
    PowerLaw,
}

/// How the stored slopes relate to the contracting core `(k_c, m_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Slopes in (0, 1): the core itself.
    Direct,
    /// Slopes in (1, inf): conjugate the inverses `x / k`, `x / m`.
    InverseComposed,
    /// Slopes in (-1, 0): `h = -h*` with `h*` built from `|k|`, `|m|`.
    Negated,
    /// Slopes in (-inf, -1): negation of the inverse-composed construction.
    NegatedInverseComposed,
}

impl Orientation {
    fn core_slope(&self, s: f64) -> f64 {
        match self {
            Orientation::Direct => s,
            Orientation::InverseComposed => 1.0 / s,
            Orientation::Negated => s.abs(),
            Orientation::NegatedInverseComposed => 1.0 / s.abs(),
        }
    }

    fn sign(&self) -> f64 {
        match self {
            Orientation::Negated | Orientation::NegatedInverseComposed => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    k: f64,
    m: f64,
    anchor: f64,
    bridge: BridgeKind,
    orientation: Orientation,
    core_k: f64,
    core_m: f64,
}

impl FundamentalDomain {
    pub fn new(k: f64, m: f64, anchor: f64, bridge: BridgeKind, orientation: Orientation) -> Result<Self> {
        if !(anchor.is_finite() && anchor > 0.0) {
            return Err(IfsError::InvalidArgument(format!("anchor must be positive, got {anchor}")));
        }
        let core_k = orientation.core_slope(k);
        let core_m = orientation.core_slope(m);
        for c in [core_k, core_m] {
            if !(c > 0.0 && c < 1.0) {
                return Err(IfsError::InvalidArgument(format!(
                    "slopes {k}, {m} do not fit orientation {orientation:?}"
                )));
            }
        }
        Ok(FundamentalDomain { k, m, anchor, bridge, orientation, core_k, core_m })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn bridge(&self) -> BridgeKind {
        self.bridge
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Contracting core slopes `(k_c, m_c)` in (0, 1).
    pub fn core(&self) -> (f64, f64) {
        (self.core_k, self.core_m)
    }

    fn inverse(&self) -> Self {
        FundamentalDomain {
            k: self.m,
            m: self.k,
            core_k: self.core_m,
            core_m: self.core_k,
            ..self.clone()
        }
    }

    fn bridge_eval(&self, y: f64) -> f64 {
        let (k, m, a) = (self.core_k, self.core_m, self.anchor);
        let y = y.clamp(k * a, a);
        match self.bridge {
            BridgeKind::LinearInterpolation => {
                if y == a {
                    a
                } else {
                    m * a + (y - k * a) * (a - m * a) / (a - k * a)
                }
            }
            BridgeKind::PowerLaw => {
                let alpha = m.ln() / k.ln();
                a * (y / a).powf(alpha)
            }
        }
    }

    /// Core homeomorphism for positive `x`, together with the located `n_x`
    /// (positive when `x` was pulled down, negative when pushed up).
    fn core_positive(&self, x: f64) -> Result<(f64, i64)> {
        let (k, m, a) = (self.core_k, self.core_m, self.anchor);
        let ka = k * a;
        if x >= ka && x <= a {
            return Ok((self.bridge_eval(x), 0));
        }
        let cap = 10 * ((x / a).ln().abs() / (1.0 / k).ln()).ceil() as i64 + 64;
        let mut y = x;
        let mut n: i64 = 0;
        if x > a {
            // least n with k^n x <= a; the previous iterate is still > a
            while y > a {
                y *= k;
                n += 1;
                if n > cap {
                    return Err(IfsError::NumericFailure(format!(
                        "fundamental domain search exceeded {cap} steps at x = {x}"
                    )));
                }
            }
            debug_assert!(y >= ka * (1.0 - 1e-12) && y / k > a * (1.0 - 1e-12));
            Ok((self.bridge_eval(y) * (1.0 / m).powi(n as i32), n))
        } else {
            while y < ka {
                y /= k;
                n += 1;
                if n > cap {
                    return Err(IfsError::NumericFailure(format!(
                        "fundamental domain search exceeded {cap} steps at x = {x}"
                    )));
                }
            }
            debug_assert!(y <= a * (1.0 + 1e-12) && y * k < ka * (1.0 + 1e-12));
            Ok((self.bridge_eval(y) * m.powi(n as i32), -n))
        }
    }

    fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(IfsError::OutOfRange(x));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let (v, _) = self.core_positive(x.abs())?;
        Ok(self.orientation.sign() * x.signum() * v)
    }

    /// The located `n_x` for `x != 0` (signed: negative when `|x| < k_c a`).
    pub fn orbit_index(&self, x: f64) -> Result<i64> {
        Ok(self.core_positive(x.abs())?.1)
    }
}

/// Table built from node values, interpolated monotonically. Used for
/// numerically constructed conjugacies such as the Koenigs linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    table: MonotoneCubic,
    increasing: bool,
}

impl Tabulated {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let increasing = values.last() > values.first();
        let table = MonotoneCubic::new(nodes, values)?;
        Ok(Tabulated { table, increasing })
    }

    pub fn table(&self) -> &MonotoneCubic {
        &self.table
    }

    fn eval(&self, x: f64) -> Result<f64> {
        self.table.eval(x).ok_or(IfsError::OutOfRange(x))
    }

    fn invert(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.table.y_range();
        if !(y >= lo && y <= hi) {
            return Err(IfsError::OutOfRange(y));
        }
        let (xa, xb) = self.table.x_range();
        let s = if self.increasing { 1.0 } else { -1.0 };
        let f = |x: f64| s * (self.table.eval(x).unwrap_or(f64::NAN) - y);
        Ok(roots::bisect(f, xa, xb))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Homeomorphism1D {
    /// `x -> c x`, `c != 0`.
    Scale { c: f64 },
    /// `x -> sign(x) |x|^alpha`, `alpha > 0`.
    PowerLaw { alpha: f64 },
    FundamentalDomain(FundamentalDomain),
    /// Applied left to right: `parts[0]` first.
    Composite { parts: Vec<Homeomorphism1D> },
    Tabulated(Tabulated),
    /// Inverse of a form without a closed structural inverse.
    Inverse { of: Box<Homeomorphism1D> },
}

impl Homeomorphism1D {
    pub fn identity() -> Self {
        Homeomorphism1D::Scale { c: 1.0 }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self {
            Homeomorphism1D::Scale { c } => finite(c * x, x),
            Homeomorphism1D::PowerLaw { alpha } => finite(x.signum() * x.abs().powf(*alpha), x),
            Homeomorphism1D::FundamentalDomain(fd) => fd.eval(x),
            Homeomorphism1D::Composite { parts } => parts.iter().try_fold(x, |acc, h| h.evaluate(acc)),
            Homeomorphism1D::Tabulated(t) => t.eval(x),
            Homeomorphism1D::Inverse { of } => of.invert(x),
        }
    }

    /// Structural inverse: swapped slopes for fundamental-domain forms,
    /// reciprocal exponents for power laws, reversed order for composites.
    pub fn inverse(&self) -> Self {
        match self {
            Homeomorphism1D::Scale { c } => Homeomorphism1D::Scale { c: 1.0 / c },
            Homeomorphism1D::PowerLaw { alpha } => Homeomorphism1D::PowerLaw { alpha: 1.0 / alpha },
            Homeomorphism1D::FundamentalDomain(fd) => Homeomorphism1D::FundamentalDomain(fd.inverse()),
            Homeomorphism1D::Composite { parts } => Homeomorphism1D::Composite {
                parts: parts.iter().rev().map(Homeomorphism1D::inverse).collect(),
            },
            Homeomorphism1D::Tabulated(_) => Homeomorphism1D::Inverse { of: Box::new(self.clone()) },
            Homeomorphism1D::Inverse { of } => (**of).clone(),
        }
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(IfsError::OutOfRange(y));
        }
        match self {
            Homeomorphism1D::Tabulated(t) => t.invert(y),
            Homeomorphism1D::Inverse { of } => of.evaluate(y),
            Homeomorphism1D::Composite { parts } => {
                parts.iter().rev().try_fold(y, |acc, h| h.invert(acc))
            }
            other => other.inverse().evaluate(y),
        }
    }
}

fn finite(v: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IfsError::OutOfRange(x))
    }
}
