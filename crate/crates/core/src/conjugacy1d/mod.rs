//! Conjugacies between linear maps and weak conjugacies between linear IFSs.
//!
//! Two maps `kx` and `mx` are conjugate exactly when `k` and `m` lie in the
//! same open slope interval: `(0,1)`, `(-1,0)`, `(1,inf)` or `(-inf,-1)`.
//! Across intervals the obstruction is either orientation (sign) or
//! attraction versus repulsion at the origin.

mod homeo;
mod verify;

pub use homeo::{BridgeKind, FundamentalDomain, Homeomorphism1D, Orientation, Tabulated};
pub use verify::{point_residual, verify_conjugacy, verify_on_points, ConjugacyReport, Verdict};

use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Obstruction, Result};
use crate::ifs::{classify_slope_interval, effective_slope, IfsDescriptor, SlopeInterval};
use crate::sequence::SymbolSequence;

fn orientation_for(interval: SlopeInterval) -> Orientation {
    match interval {
        SlopeInterval::ContractingPositive => Orientation::Direct,
        SlopeInterval::ExpandingPositive => Orientation::InverseComposed,
        SlopeInterval::ContractingNegative => Orientation::Negated,
        SlopeInterval::ExpandingNegative => Orientation::NegatedInverseComposed,
        SlopeInterval::Boundary => unreachable!("boundary slopes are rejected earlier"),
    }
}

/// Builds `h` with `h(kx) = m h(x)` for slopes in one common interval.
pub fn build_linear_conjugacy(k: f64, m: f64, anchor: f64, bridge: BridgeKind) -> Result<Homeomorphism1D> {
    let (ck, cm) = (classify_slope_interval(k), classify_slope_interval(m));
    for (s, c) in [(k, ck), (m, cm)] {
        if c.is_boundary() {
            return Err(IfsError::BoundarySlope { slope: s });
        }
    }
    if let Some(obstruction) = Obstruction::between(ck, cm) {
        return Err(IfsError::NonConjugate {
            obstruction,
            left: format!("k = {k} in {ck}"),
            right: format!("m = {m} in {cm}"),
        });
    }
    Ok(Homeomorphism1D::FundamentalDomain(FundamentalDomain::new(
        k,
        m,
        anchor,
        bridge,
        orientation_for(ck),
    )?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Feasibility {
    Conjugable { interval: SlopeInterval },
    Obstructed {
        obstruction: Obstruction,
        /// `(system, 1-based map index)` of the two conflicting maps.
        first: (String, usize),
        second: (String, usize),
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SameIntervalReport {
    pub feasibility: Feasibility,
    pub f_tags: Vec<SlopeInterval>,
    pub g_tags: Vec<SlopeInterval>,
}

impl SameIntervalReport {
    pub fn is_conjugable(&self) -> bool {
        matches!(self.feasibility, Feasibility::Conjugable { .. })
    }
}

/// Pools the slopes at the origin of `F` and `G` and checks that they share
/// one interval.
pub fn same_interval_test(f: &IfsDescriptor, g: &IfsDescriptor) -> Result<SameIntervalReport> {
    let tags = |ifs: &IfsDescriptor| -> Result<Vec<SlopeInterval>> {
        ifs.maps()
            .iter()
            .map(|m| {
                let s = m.derivative_at(0.0);
                let c = classify_slope_interval(s);
                if c.is_boundary() {
                    Err(IfsError::NonHyperbolic { point: 0.0, derivative_abs: s.abs() })
                } else {
                    Ok(c)
                }
            })
            .collect()
    };
    let f_tags = tags(f)?;
    let g_tags = tags(g)?;
    let pooled = f_tags
        .iter()
        .enumerate()
        .map(|(i, t)| (("F".to_string(), i + 1), *t))
        .chain(g_tags.iter().enumerate().map(|(i, t)| (("G".to_string(), i + 1), *t)));

    let mut first: Option<((String, usize), SlopeInterval)> = None;
    let mut feasibility = None;
    for (id, tag) in pooled {
        match &first {
            None => first = Some((id, tag)),
            Some((fid, ftag)) => {
                if let Some(obstruction) = Obstruction::between(*ftag, tag) {
                    feasibility = Some(Feasibility::Obstructed {
                        obstruction,
                        first: fid.clone(),
                        second: id,
                    });
                    break;
                }
            }
        }
    }
    let interval = first.map(|f| f.1).expect("IFS is nonempty");
    Ok(SameIntervalReport {
        feasibility: feasibility.unwrap_or(Feasibility::Conjugable { interval }),
        f_tags,
        g_tags,
    })
}

/// A weak conjugacy `h_n` for one `(sigma, n)`, with the slope products it conjugates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakConjugacy {
    pub h: Homeomorphism1D,
    pub k_star: f64,
    pub m_star: f64,
    pub interval: SlopeInterval,
    pub n: usize,
}

/// Builds `h_n` with `h_n o F_{sigma_n} = G_{sigma_n} o h_n` for linear IFSs
/// whose slopes all share one interval.
///
/// For the negative intervals the products alternate in sign with `n`; the
/// construction negates the conjugacy of the absolute products, which works
/// for either parity.
pub fn weak_conjugacy_linear(
    f: &IfsDescriptor,
    g: &IfsDescriptor,
    sigma: &SymbolSequence,
    n: usize,
    anchor: f64,
    bridge: BridgeKind,
) -> Result<WeakConjugacy> {
    if f.len() != g.len() {
        return Err(IfsError::InvalidArgument(format!(
            "F has {} maps but G has {}",
            f.len(),
            g.len()
        )));
    }
    f.linear_slopes()?;
    g.linear_slopes()?;
    let report = same_interval_test(f, g)?;
    let interval = match report.feasibility {
        Feasibility::Conjugable { interval } => interval,
        Feasibility::Obstructed { obstruction, first, second } => {
            let describe = |(sys, i): (String, usize)| {
                let ifs = if sys == "F" { f } else { g };
                format!("{sys}[{i}] = {}x", ifs.map(i).base_slope())
            };
            return Err(IfsError::NonConjugate {
                obstruction,
                left: describe(first),
                right: describe(second),
            });
        }
    };
    let k_star = effective_slope(f, sigma, n)?;
    let m_star = effective_slope(g, sigma, n)?;
    let orientation = orientation_for(interval);
    let fd = FundamentalDomain::new(k_star, m_star, anchor, bridge, orientation).map_err(|_| {
        IfsError::NumericFailure(format!(
            "slope products {k_star}, {m_star} left their interval (underflow or overflow)"
        ))
    })?;
    Ok(WeakConjugacy {
        h: Homeomorphism1D::FundamentalDomain(fd),
        k_star,
        m_star,
        interval,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ScalarMap, WorkingInterval};
    use proptest::prelude::*;

    fn oracle(k: f64, m: f64, x: f64) -> f64 {
        x.signum() * x.abs().powf(m.ln() / k.ln())
    }

    fn verify_linear(k: f64, m: f64, h: &Homeomorphism1D, tol: f64) -> ConjugacyReport {
        verify_conjugacy(
            &ScalarMap::linear(k),
            &ScalarMap::linear(m),
            h,
            WorkingInterval::default(),
            1001,
            tol,
        )
        .unwrap()
    }

    #[test]
    fn sqrt_example() {
        let h = build_linear_conjugacy(0.25, 0.5, 1.0, BridgeKind::PowerLaw).unwrap();
        for x in [1e-6, 0.01, 0.3, 1.0, 2.0, 4.0, 9.0, 10.0] {
            assert!((h.evaluate(x).unwrap() - x.sqrt()).abs() <= 1e-12 * (1.0 + x.sqrt()));
        }
        assert!((h.evaluate(4.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((h.evaluate(-9.0).unwrap() + 3.0).abs() < 1e-12);
        assert!((h.invert(3.0).unwrap() - 9.0).abs() < 1e-12);
        let r = verify_linear(0.25, 0.5, &h, 1e-9);
        assert!(r.passed(), "{}", r.residual_sup);
    }

    #[test]
    fn self_conjugacy_is_identity() {
        let h = build_linear_conjugacy(0.5, 0.5, 1.0, BridgeKind::LinearInterpolation).unwrap();
        for x in WorkingInterval::default().grid(101) {
            assert!((h.evaluate(x).unwrap() - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let r = verify_linear(0.5, 0.5, &Homeomorphism1D::identity(), 0.0);
        assert_eq!(r.residual_sup, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn expansive_pair() {
        let h = build_linear_conjugacy(2.0, 3.0, 1.0, BridgeKind::LinearInterpolation).unwrap();
        let r = verify_linear(2.0, 3.0, &h, 1e-9);
        assert!(r.passed(), "{}", r.residual_sup);
        // closed form of the power-law variant: alpha = ln 3 / ln 2
        let p = build_linear_conjugacy(2.0, 3.0, 1.0, BridgeKind::PowerLaw).unwrap();
        assert!((p.evaluate(5.0).unwrap() - oracle(2.0, 3.0, 5.0)).abs() < 1e-9 * oracle(2.0, 3.0, 5.0));
    }

    #[test]
    fn negative_pairs() {
        for (k, m) in [(-0.5, -0.2), (-3.0, -1.5)] {
            for bridge in [BridgeKind::LinearInterpolation, BridgeKind::PowerLaw] {
                let h = build_linear_conjugacy(k, m, 1.0, bridge).unwrap();
                let r = verify_linear(k, m, &h, 1e-9);
                assert!(r.passed(), "{k} {m} {bridge:?}: {}", r.residual_sup);
                assert!(h.evaluate(1.0).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn mismatched_slopes_are_rejected() {
        let e = build_linear_conjugacy(2.0, 0.5, 1.0, BridgeKind::PowerLaw).unwrap_err();
        assert!(matches!(e, IfsError::NonConjugate { obstruction: Obstruction::AttractRepelMismatch, .. }));
        let e = build_linear_conjugacy(0.2, -0.2, 1.0, BridgeKind::PowerLaw).unwrap_err();
        assert!(matches!(e, IfsError::NonConjugate { obstruction: Obstruction::OrientationMismatch, .. }));
        assert!(matches!(
            build_linear_conjugacy(1.0, 0.5, 1.0, BridgeKind::PowerLaw),
            Err(IfsError::BoundarySlope { .. })
        ));
        assert!(matches!(
            build_linear_conjugacy(0.5, 0.0, 1.0, BridgeKind::PowerLaw),
            Err(IfsError::BoundarySlope { .. })
        ));
    }

    #[test]
    fn non_conjugate_pair_fails_verification() {
        let r = verify_linear(2.0, 0.5, &Homeomorphism1D::identity(), 1e-9);
        assert!(!r.passed());
        assert!(r.residual_sup > 0.1);
    }

    #[test]
    fn same_interval_examples() {
        let lin = |s: &[f64]| IfsDescriptor::linear(s).unwrap();
        let r = same_interval_test(&lin(&[2.0]), &lin(&[0.5])).unwrap();
        assert!(matches!(
            r.feasibility,
            Feasibility::Obstructed { obstruction: Obstruction::AttractRepelMismatch, .. }
        ));
        let r = same_interval_test(&lin(&[3.0]), &lin(&[-3.0])).unwrap();
        assert!(matches!(
            r.feasibility,
            Feasibility::Obstructed { obstruction: Obstruction::OrientationMismatch, .. }
        ));
        let r = same_interval_test(&lin(&[0.5, 0.7]), &lin(&[0.1, 0.9])).unwrap();
        assert_eq!(r.feasibility, Feasibility::Conjugable { interval: SlopeInterval::ContractingPositive });
        assert!(matches!(
            same_interval_test(&lin(&[1.0]), &lin(&[0.5])),
            Err(IfsError::NonHyperbolic { .. })
        ));
    }

    #[test]
    fn weak_example_products() {
        let f = IfsDescriptor::linear(&[0.5, 0.25]).unwrap();
        let g = IfsDescriptor::linear(&[0.3, 0.6]).unwrap();
        let w = weak_conjugacy_linear(&f, &g, &SymbolSequence::explicit([1, 2]), 2, 1.0, BridgeKind::PowerLaw)
            .unwrap();
        assert_eq!(w.k_star, 0.125);
        assert!((w.m_star - 0.18).abs() < 1e-15);
        for x in [-8.0, -0.4, 0.01, 1.5, 7.0] {
            let lhs = w.h.evaluate(0.125 * x).unwrap();
            let rhs = 0.18 * w.h.evaluate(x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            assert!((w.h.evaluate(x).unwrap() - oracle(0.125, 0.18, x)).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn weak_negative_route() {
        let f = IfsDescriptor::linear(&[-0.5, -0.4]).unwrap();
        let g = IfsDescriptor::linear(&[-0.2, -0.3]).unwrap();
        let sigma = SymbolSequence::explicit([1, 2, 1]);
        let w = weak_conjugacy_linear(&f, &g, &sigma, 3, 1.0, BridgeKind::LinearInterpolation).unwrap();
        assert!(matches!(&w.h, Homeomorphism1D::FundamentalDomain(fd) if fd.orientation() == Orientation::Negated));
        let r = verify_linear(w.k_star, w.m_star, &w.h, 1e-9);
        assert!(r.passed(), "{}", r.residual_sup);
    }

    #[test]
    fn weak_self_is_identity() {
        let f = IfsDescriptor::linear(&[0.3, 0.8]).unwrap();
        let sigma = SymbolSequence::bernoulli(0.5, 3);
        for n in [1, 4, 9] {
            let w = weak_conjugacy_linear(&f, &f, &sigma, n, 1.0, BridgeKind::LinearInterpolation).unwrap();
            for x in WorkingInterval::default().grid(57) {
                assert!((w.h.evaluate(x).unwrap() - x).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn weak_mixed_is_rejected() {
        let f = IfsDescriptor::linear(&[0.5, 2.0]).unwrap();
        let g = IfsDescriptor::linear(&[0.3, 0.6]).unwrap();
        let e = weak_conjugacy_linear(&f, &g, &SymbolSequence::periodic([1, 2]), 2, 1.0, BridgeKind::PowerLaw)
            .unwrap_err();
        match e {
            IfsError::NonConjugate { left, right, .. } => {
                assert_eq!(left, "F[1] = 0.5x");
                assert_eq!(right, "F[2] = 2x");
            }
            other => panic!("{other:?}"),
        }
    }

    fn pair() -> impl Strategy<Value = (f64, f64)> {
        prop_oneof![
            (0.05f64..0.95, 0.05f64..0.95),
            (-0.95f64..-0.05, -0.95f64..-0.05),
            (1.05f64..20.0, 1.05f64..20.0),
            (-20.0f64..-1.05, -20.0f64..-1.05),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn functional_equation_holds((k, m) in pair(), anchor in prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
                                     linear in any::<bool>()) {
            let bridge = if linear { BridgeKind::LinearInterpolation } else { BridgeKind::PowerLaw };
            let h = build_linear_conjugacy(k, m, anchor, bridge).unwrap();
            for x in WorkingInterval::default().grid(201) {
                let hx = h.evaluate(x).unwrap();
                let lhs = h.evaluate(k * x).unwrap();
                prop_assert!((lhs - m * hx).abs() <= 1e-9 * (1.0 + (m * hx).abs()),
                    "x={} lhs={} rhs={}", x, lhs, m * hx);
            }
        }

        #[test]
        fn odd_and_monotone((k, m) in pair(), linear in any::<bool>()) {
            let bridge = if linear { BridgeKind::LinearInterpolation } else { BridgeKind::PowerLaw };
            let h = build_linear_conjugacy(k, m, 1.0, bridge).unwrap();
            let grid = WorkingInterval::default().grid(300);
            let vals: Vec<f64> = grid.iter().map(|&x| h.evaluate(x).unwrap()).collect();
            let increasing = k > 0.0;
            for w in vals.windows(2) {
                if increasing { prop_assert!(w[1] > w[0]); } else { prop_assert!(w[1] < w[0]); }
            }
            for &x in &grid {
                let a = h.evaluate(x).unwrap();
                let b = h.evaluate(-x).unwrap();
                prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            prop_assert_eq!(h.evaluate(0.0).unwrap(), 0.0);
        }

        #[test]
        fn invert_round_trips((k, m) in pair(), x in -10.0f64..10.0, linear in any::<bool>()) {
            let bridge = if linear { BridgeKind::LinearInterpolation } else { BridgeKind::PowerLaw };
            let h = build_linear_conjugacy(k, m, 1.0, bridge).unwrap();
            let back = h.invert(h.evaluate(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-8 * (1.0 + x.abs()));
        }

        #[test]
        fn power_bridge_matches_oracle(k in 0.05f64..0.95, m in 0.05f64..0.95,
                                       x in prop_oneof![-10.0f64..-1e-6, 1e-6f64..10.0]) {
            let h = build_linear_conjugacy(k, m, 1.0, BridgeKind::PowerLaw).unwrap();
            let want = oracle(k, m, x);
            prop_assert!((h.evaluate(x).unwrap() - want).abs() <= 1e-9 * want.abs());
        }

        #[test]
        fn verdict_is_anchor_independent((k, m) in pair(), anchor in prop_oneof![Just(0.5), Just(1.0), Just(2.0)]) {
            for bridge in [BridgeKind::LinearInterpolation, BridgeKind::PowerLaw] {
                let h = build_linear_conjugacy(k, m, anchor, bridge).unwrap();
                let r = verify_linear(k, m, &h, 1e-8);
                prop_assert!(r.passed(), "residual {}", r.residual_sup);
            }
        }
    }
}
