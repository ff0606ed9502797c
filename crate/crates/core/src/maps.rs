//! Closed catalog of scalar maps.
//!
//! Every map in the catalog has a closed-form value and derivative, so the
//! Lipschitz constants and derivatives at the origin used by the conjugacy
//! constructions are always computable. User-supplied closures are not
//! admitted.

use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};
use crate::roots;

/// Where a map is defined. `Real` stands for all of R; grid work samples a
/// working interval instead (see [`WorkingInterval`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Real,
    Interval { lo: f64, hi: f64 },
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Real => x.is_finite(),
            Domain::Interval { lo, hi } => x >= lo && x <= hi,
        }
    }
}

/// Symmetric working interval `[-R, R]` used for every grid computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkingInterval {
    pub radius: f64,
}

impl Default for WorkingInterval {
    fn default() -> Self {
        WorkingInterval { radius: 10.0 }
    }
}

impl WorkingInterval {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(IfsError::InvalidArgument(format!(
                "working radius must be positive and finite, got {radius}"
            )));
        }
        Ok(WorkingInterval { radius })
    }

    pub fn lo(&self) -> f64 {
        -self.radius
    }

    pub fn hi(&self) -> f64 {
        self.radius
    }

    /// `n` equally spaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        uniform_grid(self.lo(), self.hi(), n)
    }
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationShape {
    /// `c * sin(x)`
    Sine { c: f64 },
    /// `c * x / (1 + x^2)`
    Rational { c: f64 },
}

/// A Lipschitz perturbation `phi` with `phi(0) = 0` and a declared Lipschitz
/// bound `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    shape: PerturbationShape,
    epsilon: f64,
}

impl Perturbation {
    pub fn new(shape: PerturbationShape, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(IfsError::InvalidArgument(format!(
                "declared Lipschitz constant must be finite and >= 0, got {epsilon}"
            )));
        }
        let p = Perturbation { shape, epsilon };
        if !p.amplitude().is_finite() {
            return Err(IfsError::InvalidArgument("perturbation amplitude must be finite".into()));
        }
        // Both shapes have true Lipschitz constant |c| (attained at the origin).
        if p.lipschitz() > epsilon {
            return Err(IfsError::InvalidArgument(format!(
                "perturbation Lipschitz constant {} exceeds declared {epsilon}",
                p.lipschitz()
            )));
        }
        Ok(p)
    }

    /// Perturbation whose declared constant equals its true Lipschitz constant.
    pub fn sine(c: f64) -> Result<Self> {
        Self::new(PerturbationShape::Sine { c }, c.abs())
    }

    pub fn rational(c: f64) -> Result<Self> {
        Self::new(PerturbationShape::Rational { c }, c.abs())
    }

    pub fn shape(&self) -> PerturbationShape {
        self.shape
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn amplitude(&self) -> f64 {
        match self.shape {
            PerturbationShape::Sine { c } | PerturbationShape::Rational { c } => c,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.amplitude().abs()
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.shape {
            PerturbationShape::Sine { c } => c * x.sin(),
            PerturbationShape::Rational { c } => c * x / (1.0 + x * x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self.shape {
            PerturbationShape::Sine { c } => c * x.cos(),
            PerturbationShape::Rational { c } => {
                let d = 1.0 + x * x;
                c * (1.0 - x * x) / (d * d)
            }
        }
    }
}

/// Smooth nonlinear families, each fixing the origin with `f'(0) = k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothFamily {
    /// `k x + c x^2 / (1 + x^2)`
    QuadraticBump { k: f64, c: f64 },
    /// `k x + c x^3`
    Cubic { k: f64, c: f64 },
    /// `k tanh(x)`
    Tanh { k: f64 },
}

impl SmoothFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SmoothFamily::QuadraticBump { .. } => "quadratic-bump",
            SmoothFamily::Cubic { .. } => "cubic",
            SmoothFamily::Tanh { .. } => "tanh",
        }
    }

    /// Looks a family up by catalog name and positional parameters.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() != n {
                return Err(IfsError::Config(format!(
                    "smooth map `{name}` takes {n} parameters, got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        match name {
            "quadratic-bump" => {
                want(2)?;
                Ok(SmoothFamily::QuadraticBump { k: params[0], c: params[1] })
            }
            "cubic" => {
                want(2)?;
                Ok(SmoothFamily::Cubic { k: params[0], c: params[1] })
            }
            "tanh" => {
                want(1)?;
                Ok(SmoothFamily::Tanh { k: params[0] })
            }
            other => Err(IfsError::Config(format!("unknown smooth map `{other}`"))),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            SmoothFamily::QuadraticBump { k, c } | SmoothFamily::Cubic { k, c } => vec![k, c],
            SmoothFamily::Tanh { k } => vec![k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Linear { k: f64 },
    LinearPlusLipschitz { k: f64, perturbation: Perturbation },
    Smooth(SmoothFamily),
    /// `k x + b`; only admitted by the attractor sampler.
    Affine { k: f64, b: f64 },
}

/// A one-dimensional map from the closed catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMap {
    kind: MapKind,
    domain: Domain,
}

impl ScalarMap {
    pub fn new(kind: MapKind, domain: Domain) -> Result<Self> {
        let finite = match kind {
            MapKind::Linear { k } => k.is_finite(),
            MapKind::LinearPlusLipschitz { k, .. } => k.is_finite(),
            MapKind::Smooth(s) => s.params().iter().all(|p| p.is_finite()),
            MapKind::Affine { k, b } => k.is_finite() && b.is_finite(),
        };
        if !finite {
            return Err(IfsError::InvalidArgument("map parameters must be finite".into()));
        }
        if let Domain::Interval { lo, hi } = domain {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(IfsError::InvalidArgument(format!("bad domain [{lo}, {hi}]")));
            }
        }
        let map = ScalarMap { kind, domain };
        if !matches!(kind, MapKind::Affine { .. }) && map.eval(0.0) != 0.0 {
            return Err(IfsError::InvalidArgument("catalog maps must fix the origin".into()));
        }
        Ok(map)
    }

    pub fn linear(k: f64) -> Self {
        Self::new(MapKind::Linear { k }, Domain::Real).expect("finite slope")
    }

    pub fn linear_plus(k: f64, perturbation: Perturbation) -> Self {
        Self::new(MapKind::LinearPlusLipschitz { k, perturbation }, Domain::Real)
            .expect("finite slope")
    }

    pub fn smooth(family: SmoothFamily) -> Self {
        Self::new(MapKind::Smooth(family), Domain::Real).expect("finite parameters")
    }

    pub fn affine(k: f64, b: f64) -> Self {
        Self::new(MapKind::Affine { k, b }, Domain::Real).expect("finite parameters")
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        self = Self::new(self.kind, domain)?;
        Ok(self)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, MapKind::Affine { .. })
    }

    /// Slope if the map is exactly `k x`.
    pub fn linear_slope(&self) -> Option<f64> {
        match self.kind {
            MapKind::Linear { k } => Some(k),
            _ => None,
        }
    }

    /// The linear coefficient `k` of the catalog formula.
    pub fn base_slope(&self) -> f64 {
        match self.kind {
            MapKind::Linear { k }
            | MapKind::LinearPlusLipschitz { k, .. }
            | MapKind::Affine { k, .. } => k,
            MapKind::Smooth(SmoothFamily::QuadraticBump { k, .. })
            | MapKind::Smooth(SmoothFamily::Cubic { k, .. })
            | MapKind::Smooth(SmoothFamily::Tanh { k }) => k,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            MapKind::Linear { k } => k * x,
            MapKind::LinearPlusLipschitz { k, perturbation } => k * x + perturbation.eval(x),
            MapKind::Smooth(SmoothFamily::QuadraticBump { k, c }) => {
                let x2 = x * x;
                k * x + c * x2 / (1.0 + x2)
            }
            MapKind::Smooth(SmoothFamily::Cubic { k, c }) => k * x + c * x * x * x,
            MapKind::Smooth(SmoothFamily::Tanh { k }) => k * x.tanh(),
            MapKind::Affine { k, b } => k * x + b,
        }
    }

    /// Exact derivative of the catalog formula.
    pub fn derivative_at(&self, x: f64) -> f64 {
        match self.kind {
            MapKind::Linear { k } | MapKind::Affine { k, .. } => k,
            MapKind::LinearPlusLipschitz { k, perturbation } => k + perturbation.derivative(x),
            MapKind::Smooth(SmoothFamily::QuadraticBump { k, c }) => {
                let d = 1.0 + x * x;
                k + c * 2.0 * x / (d * d)
            }
            MapKind::Smooth(SmoothFamily::Cubic { k, c }) => k + 3.0 * c * x * x,
            MapKind::Smooth(SmoothFamily::Tanh { k }) => {
                let ch = x.cosh();
                k / (ch * ch)
            }
        }
    }

    /// Evaluates only inside the map's domain.
    pub fn try_eval(&self, x: f64) -> Option<f64> {
        if self.domain.contains(x) {
            let y = self.eval(x);
            y.is_finite().then_some(y)
        } else {
            None
        }
    }

    /// Preimage of `y` on the real line, by bracketing bisection.
    ///
    /// Returns `None` when `y` is not in the image (e.g. outside the range of
    /// a `tanh` map). Assumes the map is strictly monotone, which holds for
    /// every catalog entry whose derivative does not change sign.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        if let MapKind::Linear { k } = self.kind {
            return (k != 0.0).then(|| y / k);
        }
        let f = |x: f64| self.eval(x) - y;
        roots::bracket_and_bisect(f, 0.0, y.abs().max(1.0), 1e300)
    }
}

/// Bisection inverse restricted to a closed interval; `None` outside the image.
pub fn inverse_on(map: &ScalarMap, y: f64, lo: f64, hi: f64) -> Option<f64> {
    let (flo, fhi) = (map.eval(lo) - y, map.eval(hi) - y);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    Some(roots::bisect(|x| map.eval(x) - y, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_examples() {
        assert_eq!(ScalarMap::linear(0.3).derivative_at(5.0), 0.3);
        let q = ScalarMap::smooth(SmoothFamily::QuadraticBump { k: 0.5, c: 0.1 });
        assert_eq!(q.derivative_at(0.0), 0.5);
        let s = ScalarMap::linear_plus(0.5, Perturbation::sine(0.2).unwrap());
        assert!((s.derivative_at(0.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let maps = [
            ScalarMap::linear_plus(0.5, Perturbation::sine(0.2).unwrap()),
            ScalarMap::linear_plus(-0.3, Perturbation::rational(0.25).unwrap()),
            ScalarMap::smooth(SmoothFamily::QuadraticBump { k: 0.5, c: 0.1 }),
            ScalarMap::smooth(SmoothFamily::Cubic { k: 0.4, c: -0.2 }),
            ScalarMap::smooth(SmoothFamily::Tanh { k: 0.8 }),
        ];
        let h = 1e-6;
        for m in maps {
            for i in -20..=20 {
                let x = i as f64 * 0.37;
                let fd = (m.eval(x + h) - m.eval(x - h)) / (2.0 * h);
                assert!((fd - m.derivative_at(x)).abs() < 1e-6, "{m:?} at {x}");
            }
        }
    }

    #[test]
    fn perturbation_rejects_understated_epsilon() {
        assert!(Perturbation::new(PerturbationShape::Sine { c: 0.3 }, 0.2).is_err());
        assert!(Perturbation::new(PerturbationShape::Rational { c: -0.3 }, 0.3).is_ok());
        assert!(Perturbation::new(PerturbationShape::Rational { c: 0.1 }, -1.0).is_err());
    }

    #[test]
    fn perturbations_fix_origin() {
        for p in [Perturbation::sine(0.7).unwrap(), Perturbation::rational(-2.0).unwrap()] {
            assert_eq!(p.eval(0.0), 0.0);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let m = ScalarMap::linear_plus(0.5, Perturbation::sine(0.2).unwrap());
        for y in [-7.0, -0.3, 0.0, 1e-9, 2.5, 40.0] {
            let x = m.inverse(y).unwrap();
            assert!((m.eval(x) - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let t = ScalarMap::smooth(SmoothFamily::Tanh { k: 0.5 });
        assert!(t.inverse(0.6).is_none());
        assert!((t.eval(t.inverse(0.3).unwrap()) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn bounded_domain_blocks_evaluation() {
        let m = ScalarMap::linear(2.0)
            .with_domain(Domain::Interval { lo: -1.0, hi: 1.0 })
            .unwrap();
        assert_eq!(m.try_eval(0.5), Some(1.0));
        assert_eq!(m.try_eval(1.5), None);
    }

    #[test]
    fn grid_has_exact_endpoints() {
        let g = WorkingInterval::default().grid(7);
        assert_eq!(g.first(), Some(&-10.0));
        assert_eq!(g.last(), Some(&10.0));
        assert_eq!(g.len(), 7);
    }
}
