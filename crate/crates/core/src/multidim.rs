//! Diagonal IFSs on R^m and their conjugacies.
//!
//! Two constructions:
//!
//! * componentwise: `F = {diag(a_ii)}` and `G = {diag(b_ii)}` decouple into
//!   `m` scalar linear IFSs, each conjugated by [`weak_conjugacy_linear`];
//! * similarity: `G = {A D_j A^-1}` is conjugate to `F = {D_j}` by `X -> AX`.
//!
//! The componentwise hypothesis is read strictly by default: in each
//! coordinate, the entries of every map of both systems share one slope
//! interval. [`Hypothesis::ProductInterval`] relaxes this to the slope
//! products along the chosen sequence prefix.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy1d::{
    build_linear_conjugacy, weak_conjugacy_linear, BridgeKind, FundamentalDomain, Homeomorphism1D, Orientation,
};
use crate::error::{IfsError, Result};
use crate::ifs::{classify_slope_interval, IfsDescriptor, SlopeInterval};
use crate::sequence::SymbolSequence;

/// Conditioning above which a similarity result carries a warning.
pub const CONDITION_WARN: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMap {
    pub diag: Vec<f64>,
}

impl DiagonalMap {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || diag.iter().any(|d| !d.is_finite()) {
            return Err(IfsError::InvalidArgument("diagonal entries must be finite and non-empty".into()));
        }
        Ok(DiagonalMap { diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(IfsError::Shape { expected: self.dim(), got: x.len() });
        }
        Ok(self.diag.iter().zip(x).map(|(d, v)| d * v).collect())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag))
    }
}

fn common_dim(maps: &[DiagonalMap]) -> Result<usize> {
    let first = maps.first().ok_or_else(|| IfsError::InvalidArgument("empty list of diagonal maps".into()))?;
    for m in maps {
        if m.dim() != first.dim() {
            return Err(IfsError::Shape { expected: first.dim(), got: m.dim() });
        }
    }
    Ok(first.dim())
}

/// `F_{sigma_n}(X) = D_{lambda_n} ... D_{lambda_1} X`.
pub fn diag_compose(f: &[DiagonalMap], sigma: &SymbolSequence, n: usize, x: &[f64]) -> Result<Vec<f64>> {
    let m = common_dim(f)?;
    if x.len() != m {
        return Err(IfsError::Shape { expected: m, got: x.len() });
    }
    if n == 0 {
        return Err(IfsError::InvalidArgument("n must be at least 1".into()));
    }
    let mut y = x.to_vec();
    for s in sigma.prefix_checked(n, f.len())? {
        y = f[s - 1].apply(&y)?;
    }
    Ok(y)
}

/// Scalar IFS formed by coordinate `i` (0-based) of each map.
pub fn coordinate_ifs(f: &[DiagonalMap], i: usize) -> Result<IfsDescriptor> {
    let slopes: Vec<f64> = f.iter().map(|d| d.diag[i]).collect();
    IfsDescriptor::linear(&slopes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    /// All entries of all maps of both systems, per coordinate, in one interval.
    #[default]
    Pooled,
    /// Only the per-coordinate slope products along the prefix must agree.
    ProductInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum VectorHomeomorphism {
    Componentwise { components: Vec<Homeomorphism1D> },
    LinearChangeOfBasis { a: Vec<Vec<f64>> },
}

impl VectorHomeomorphism {
    pub fn dim(&self) -> usize {
        match self {
            VectorHomeomorphism::Componentwise { components } => components.len(),
            VectorHomeomorphism::LinearChangeOfBasis { a } => a.len(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(IfsError::Shape { expected: self.dim(), got: x.len() });
        }
        match self {
            VectorHomeomorphism::Componentwise { components } => {
                components.iter().zip(x).map(|(h, v)| h.evaluate(*v)).collect()
            }
            VectorHomeomorphism::LinearChangeOfBasis { a } => {
                Ok(a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect())
            }
        }
    }
}

fn orientation_for(tag: SlopeInterval) -> Orientation {
    match tag {
        SlopeInterval::ContractingPositive => Orientation::Direct,
        SlopeInterval::ExpandingPositive => Orientation::InverseComposed,
        SlopeInterval::ContractingNegative => Orientation::Negated,
        _ => Orientation::NegatedInverseComposed,
    }
}

/// Builds `h = (h_1, ..., h_m)` with `h(F_{sigma_n}(X)) = G_{sigma_n}(h(X))`.
pub fn componentwise_conjugacy(
    f: &[DiagonalMap],
    g: &[DiagonalMap],
    sigma: &SymbolSequence,
    n: usize,
    anchor: f64,
    bridge: BridgeKind,
    hypothesis: Hypothesis,
) -> Result<VectorHomeomorphism> {
    let m = common_dim(f)?;
    let mg = common_dim(g)?;
    if m != mg {
        return Err(IfsError::Shape { expected: m, got: mg });
    }
    if f.len() != g.len() {
        return Err(IfsError::InvalidArgument(format!("F has {} maps but G has {}", f.len(), g.len())));
    }
    let mut components = Vec::with_capacity(m);
    for i in 0..m {
        let (fi, gi) = (coordinate_ifs(f, i)?, coordinate_ifs(g, i)?);
        let h = match hypothesis {
            Hypothesis::Pooled => weak_conjugacy_linear(&fi, &gi, sigma, n, anchor, bridge)
                .map(|w| w.h)
                .map_err(|e| in_coordinate(e, i))?,
            Hypothesis::ProductInterval => {
                let k = crate::ifs::effective_slope(&fi, sigma, n)?;
                let mm = crate::ifs::effective_slope(&gi, sigma, n)?;
                product_conjugacy(k, mm, anchor, bridge).map_err(|e| in_coordinate(e, i))?
            }
        };
        components.push(h);
    }
    Ok(VectorHomeomorphism::Componentwise { components })
}

fn product_conjugacy(k: f64, m: f64, anchor: f64, bridge: BridgeKind) -> Result<Homeomorphism1D> {
    let tag = classify_slope_interval(k);
    if tag == classify_slope_interval(m) && !tag.is_boundary() {
        let fd = FundamentalDomain::new(k, m, anchor, bridge, orientation_for(tag))?;
        return Ok(Homeomorphism1D::FundamentalDomain(fd));
    }
    build_linear_conjugacy(k, m, anchor, bridge)
}

fn in_coordinate(e: IfsError, i: usize) -> IfsError {
    match e {
        IfsError::NonConjugate { obstruction, left, right } => IfsError::NonConjugate {
            obstruction,
            left: format!("coordinate {}: {left}", i + 1),
            right: format!("coordinate {}: {right}", i + 1),
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorResidual {
    /// Max over points and coordinates of `|lhs - rhs| / (1 + |rhs|)`.
    pub residual_sup: f64,
    pub abs_residual_sup: f64,
    pub worst_point: Vec<f64>,
    pub points: usize,
}

/// Residual of `h o F_{sigma_n} = G_{sigma_n} o h` at the given points.
pub fn componentwise_residual(
    f: &[DiagonalMap],
    g: &[DiagonalMap],
    h: &VectorHomeomorphism,
    sigma: &SymbolSequence,
    n: usize,
    points: &[Vec<f64>],
) -> Result<VectorResidual> {
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|x| {
            let lhs = h.evaluate(&diag_compose(f, sigma, n, x)?)?;
            let rhs = diag_compose(g, sigma, n, &h.evaluate(x)?)?;
            Ok(lhs.iter().zip(&rhs).fold((0.0f64, 0.0f64), |(s, a), (l, r)| {
                let d = (l - r).abs();
                (s.max(d / (1.0 + r.abs())), a.max(d))
            }))
        })
        .collect::<Result<_>>()?;
    let mut out = VectorResidual { residual_sup: 0.0, abs_residual_sup: 0.0, worst_point: vec![], points: points.len() };
    for (x, (s, a)) in points.iter().zip(rows) {
        if s > out.residual_sup || out.worst_point.is_empty() {
            out.residual_sup = out.residual_sup.max(s);
            out.worst_point = x.clone();
        }
        out.abs_residual_sup = out.abs_residual_sup.max(a);
    }
    Ok(out)
}

/// The `per_axis^m` tensor grid over `[-radius, radius]^m`.
pub fn box_grid(m: usize, per_axis: usize, radius: f64) -> Vec<Vec<f64>> {
    let axis = crate::maps::uniform_grid(-radius, radius, per_axis);
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// `G = {A D_j A^-1}` alongside `F = {D_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityIfs {
    base: Vec<DiagonalMap>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    condition: f64,
}

impl SimilarityIfs {
    /// Computes `A^-1` by LU with partial pivoting.
    pub fn new(base: Vec<DiagonalMap>, a: DMatrix<f64>) -> Result<Self> {
        let inv = a
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| IfsError::NumericFailure("A is singular".into()))?;
        Self::with_inverse(base, a, inv)
    }

    pub fn with_inverse(base: Vec<DiagonalMap>, a: DMatrix<f64>, a_inv: DMatrix<f64>) -> Result<Self> {
        let m = common_dim(&base)?;
        if a.shape() != (m, m) {
            return Err(IfsError::Shape { expected: m, got: a.nrows() });
        }
        if a_inv.shape() != (m, m) {
            return Err(IfsError::Shape { expected: m, got: a_inv.nrows() });
        }
        if a.iter().chain(a_inv.iter()).any(|v| !v.is_finite()) {
            return Err(IfsError::NumericFailure("A or its inverse has non-finite entries".into()));
        }
        let err = (&a * &a_inv - DMatrix::<f64>::identity(m, m)).amax();
        if err > 1e-10 {
            return Err(IfsError::NumericFailure(format!("|A A^-1 - I|_max = {err:e} exceeds 1e-10")));
        }
        let condition = norm1(&a) * norm1(&a_inv);
        Ok(SimilarityIfs { base, a, a_inv, condition })
    }

    pub fn from_rows(base: Vec<DiagonalMap>, rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(IfsError::InvalidArgument("A must be square".into()));
        }
        let a = DMatrix::from_row_iterator(m, m, rows.iter().flatten().copied());
        Self::new(base, a)
    }

    pub fn base(&self) -> &[DiagonalMap] {
        &self.base
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn a_inverse(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    /// `|A|_1 |A^-1|_1`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// The matrices `A D_j A^-1`.
    pub fn conjugated(&self) -> Vec<DMatrix<f64>> {
        self.base.iter().map(|d| &self.a * d.matrix() * &self.a_inv).collect()
    }

    pub fn homeomorphism(&self) -> VectorHomeomorphism {
        let m = self.a.nrows();
        VectorHomeomorphism::LinearChangeOfBasis {
            a: (0..m).map(|i| self.a.row(i).iter().copied().collect()).collect(),
        }
    }
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResidual {
    /// `|A F_{sigma_n}(X) - G_{sigma_n}(A X)|_max`.
    pub residual: f64,
    /// `1e-10 (1 + |X|_2)`.
    pub bound: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub condition: f64,
    pub warning: Option<String>,
}

impl SimilarityResidual {
    pub fn within_bound(&self) -> bool {
        self.residual <= self.bound
    }
}

/// Compares `A F_{sigma_n}(X)` with `G_{sigma_n}(A X)`, applying the
/// matrices `A D_j A^-1` one at a time on the right-hand side.
pub fn similarity_conjugacy(s: &SimilarityIfs, sigma: &SymbolSequence, n: usize, x: &[f64]) -> Result<SimilarityResidual> {
    let m = s.a.nrows();
    if x.len() != m {
        return Err(IfsError::Shape { expected: m, got: x.len() });
    }
    let fx = DVector::from_vec(diag_compose(&s.base, sigma, n, x)?);
    let lhs = &s.a * fx;
    let g = s.conjugated();
    let mut y = &s.a * DVector::from_column_slice(x);
    for sym in sigma.prefix_checked(n, g.len())? {
        y = &g[sym - 1] * y;
    }
    let residual = (&lhs - &y).amax();
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let warning = (s.condition > CONDITION_WARN)
        .then(|| format!("A is ill-conditioned (estimate {:e}); residual may be inaccurate", s.condition));
    Ok(SimilarityResidual {
        residual,
        bound: 1e-10 * (1.0 + xnorm),
        lhs: lhs.iter().copied().collect(),
        rhs: y.iter().copied().collect(),
        condition: s.condition,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::compose_orbit;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> DiagonalMap {
        DiagonalMap::new(v.to_vec()).unwrap()
    }

    #[test]
    fn compose_examples() {
        let f = [d(&[0.5, 0.2]), d(&[0.25, 0.4])];
        let y = diag_compose(&f, &SymbolSequence::explicit(vec![1, 2]), 2, &[8.0, 10.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);
        let y = diag_compose(&[d(&[0.5, 0.5])], &SymbolSequence::periodic([1]), 1, &[2.0, 2.0]).unwrap();
        assert_eq!(y, vec![1.0, 1.0]);
        let y = diag_compose(&f, &SymbolSequence::bernoulli(0.5, 3), 9, &[0.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        let e = diag_compose(&[d(&[0.5, 0.5]), d(&[0.5])], &SymbolSequence::periodic([1]), 1, &[1.0, 1.0]);
        assert!(matches!(e, Err(IfsError::Shape { .. })));
    }

    #[test]
    fn componentwise_example() {
        let f = [d(&[0.5, 0.3]), d(&[0.25, 0.6])];
        let g = [d(&[0.4, 0.2]), d(&[0.35, 0.5])];
        let s = SymbolSequence::explicit(vec![1, 2]);
        let h = componentwise_conjugacy(&f, &g, &s, 2, 1.0, BridgeKind::PowerLaw, Hypothesis::Pooled).unwrap();
        let r = componentwise_residual(&f, &g, &h, &s, 2, &box_grid(2, 33, 10.0)).unwrap();
        assert!(r.residual_sup <= 1e-8, "{r:?}");
        // power-law oracle per coordinate: products (0.125, 0.18) -> (0.14, 0.1)
        let x = [3.0, -2.0];
        let hx = h.evaluate(&x).unwrap();
        let a1 = 0.14f64.ln() / 0.125f64.ln();
        let a2 = 0.1f64.ln() / 0.18f64.ln();
        assert!((hx[0] - 3f64.powf(a1)).abs() < 1e-12 * (1.0 + hx[0].abs()));
        assert!((hx[1] + 2f64.powf(a2)).abs() < 1e-12 * (1.0 + hx[1].abs()));
    }

    #[test]
    fn componentwise_self_is_identity() {
        let f = [d(&[0.5, -0.3, 3.0]), d(&[0.25, -0.6, 1.5])];
        let s = SymbolSequence::bernoulli(0.3, 11);
        let h = componentwise_conjugacy(&f, &f, &s, 7, 1.0, BridgeKind::LinearInterpolation, Hypothesis::Pooled)
            .unwrap();
        let grid = box_grid(3, 9, 10.0);
        for x in &grid {
            let hx = h.evaluate(x).unwrap();
            // the negative coordinate goes through the negated construction, x -> -x
            let want = [x[0], -x[1], x[2]];
            for (a, b) in hx.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{x:?} {hx:?}");
            }
        }
        let r = componentwise_residual(&f, &f, &h, &s, 7, &grid).unwrap();
        assert!(r.residual_sup <= 1e-12);
    }

    #[test]
    fn componentwise_mixing_names_coordinate() {
        let f = [d(&[0.5, 0.3]), d(&[2.0, 0.6])];
        let g = [d(&[0.4, 0.2]), d(&[0.35, 0.5])];
        let e = componentwise_conjugacy(&f, &g, &SymbolSequence::periodic([1, 2]), 2, 1.0, BridgeKind::PowerLaw, Hypothesis::Pooled)
            .unwrap_err();
        match e {
            IfsError::NonConjugate { left, right, .. } => {
                assert!(left.starts_with("coordinate 1") && right.starts_with("coordinate 1"), "{left} {right}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn product_interval_mode_is_weaker() {
        // coordinate 1 mixes 0.5 and 2 but the prefix only visits map 1
        let f = [d(&[0.5, 0.3]), d(&[2.0, 0.6])];
        let g = [d(&[0.4, 0.2]), d(&[0.35, 0.5])];
        let s = SymbolSequence::explicit(vec![1, 1, 1]);
        let h = componentwise_conjugacy(&f, &g, &s, 3, 1.0, BridgeKind::PowerLaw, Hypothesis::ProductInterval).unwrap();
        let r = componentwise_residual(&f, &g, &h, &s, 3, &box_grid(2, 17, 10.0)).unwrap();
        assert!(r.residual_sup <= 1e-8);
        // a product that does land in a different interval still fails
        let s = SymbolSequence::explicit(vec![2, 2, 2]);
        assert!(componentwise_conjugacy(&f, &g, &s, 3, 1.0, BridgeKind::PowerLaw, Hypothesis::ProductInterval).is_err());
    }

    #[test]
    fn similarity_examples() {
        let base = vec![d(&[0.5, 0.25])];
        let s = SimilarityIfs::from_rows(base.clone(), &[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = similarity_conjugacy(&s, &SymbolSequence::explicit(vec![1, 1]), 2, &[1.0, 2.0]).unwrap();
        assert!(r.residual <= 1e-12);
        // brute force: F(X) = (0.25, 0.125), A F(X) = (0.375, 0.125)
        assert!((r.lhs[0] - 0.375).abs() < 1e-15 && (r.lhs[1] - 0.125).abs() < 1e-15);
        assert!(r.warning.is_none());

        let id = SimilarityIfs::new(base.clone(), DMatrix::identity(2, 2)).unwrap();
        let r = similarity_conjugacy(&id, &SymbolSequence::periodic([1]), 5, &[3.0, -1.0]).unwrap();
        assert_eq!(r.residual, 0.0);
        let r = similarity_conjugacy(&s, &SymbolSequence::periodic([1]), 5, &[0.0, 0.0]).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn similarity_rejects_singular_and_warns() {
        let base = vec![d(&[0.5, 0.25])];
        assert!(SimilarityIfs::from_rows(base.clone(), &[vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
        let s = SimilarityIfs::from_rows(base, &[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-9]]).unwrap();
        assert!(s.condition() > CONDITION_WARN);
        let r = similarity_conjugacy(&s, &SymbolSequence::periodic([1]), 1, &[1.0, 1.0]).unwrap();
        assert!(r.warning.is_some());
    }

    #[test]
    fn similarity_supplied_inverse_is_checked() {
        let base = vec![d(&[0.5, 0.25])];
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let good = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        assert!(SimilarityIfs::with_inverse(base.clone(), a.clone(), good).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3]);
        assert!(SimilarityIfs::with_inverse(base, a, bad).is_err());
    }

    proptest! {
        #[test]
        fn compose_matches_scalar_orbits(
            entries in proptest::collection::vec(-3.0f64..3.0, 6),
            x in proptest::collection::vec(-10.0f64..10.0, 3),
            seed in 0u64..1000,
            n in 1usize..15,
        ) {
            let f = [d(&entries[..3]), d(&entries[3..])];
            let s = SymbolSequence::bernoulli(0.5, seed);
            let y = diag_compose(&f, &s, n, &x).unwrap();
            for i in 0..3 {
                let scalar = compose_orbit(&coordinate_ifs(&f, i).unwrap(), &s, n, x[i]).unwrap();
                prop_assert!((y[i] - scalar).abs() <= 1e-12 * (1.0 + scalar.abs()));
            }
        }

        #[test]
        fn componentwise_monotone_and_fixes_origin(
            a in 0.05f64..0.95, b in 0.05f64..0.95, c in 0.05f64..0.95, e in 0.05f64..0.95,
            seed in 0u64..100,
        ) {
            let f = [d(&[a, b]), d(&[b, a])];
            let g = [d(&[c, e]), d(&[e, c])];
            let s = SymbolSequence::bernoulli(0.5, seed);
            let h = componentwise_conjugacy(&f, &g, &s, 4, 1.0, BridgeKind::LinearInterpolation, Hypothesis::Pooled).unwrap();
            prop_assert_eq!(h.evaluate(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
            let mut last = f64::NEG_INFINITY;
            for t in crate::maps::uniform_grid(-10.0, 10.0, 101) {
                let v = h.evaluate(&[t, 0.0]).unwrap()[0];
                prop_assert!(v > last);
                last = v;
            }
        }
    }
}
