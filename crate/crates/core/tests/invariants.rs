use ifsconj::config::Document;
use ifsconj::linearization::{decay_bound_check, koenigs_conjugacy, koenigs_conjugacy_with};
use ifsconj::multidim::{similarity_conjugacy, DiagonalMap, SimilarityIfs};
use ifsconj::stability::{hyperbolicity_audit, HyperbolicVerdict};
use ifsconj::{
    chaos_game, compose_orbit, weak_conjugacy_linear, BridgeKind, IfsDescriptor, Perturbation, ScalarMap,
    SmoothFamily, SymbolSequence, WorkingInterval,
};
use proptest::prelude::*;

fn slope_in(class: u8) -> BoxedStrategy<f64> {
    match class {
        0 => (0.1f64..0.9).boxed(),
        1 => (-0.9f64..-0.1).boxed(),
        2 => (1.1f64..4.0).boxed(),
        _ => (-4.0f64..-1.1).boxed(),
    }
}

fn same_class_system() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (0u8..4).prop_flat_map(|c| (proptest::collection::vec(slope_in(c), 2), proptest::collection::vec(slope_in(c), 2)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weak_conjugacy_any_interval((a, b) in same_class_system(), seed in any::<u64>(), n in 1usize..25,
                                   power in any::<bool>()) {
        let (f, g) = (IfsDescriptor::linear(&a).unwrap(), IfsDescriptor::linear(&b).unwrap());
        let sigma = SymbolSequence::bernoulli(0.5, seed);
        let bridge = if power { BridgeKind::PowerLaw } else { BridgeKind::LinearInterpolation };
        let w = match weak_conjugacy_linear(&f, &g, &sigma, n, 1.0, bridge) {
            Ok(w) => w,
            // products of expanding slopes can overflow for long prefixes
            Err(ifsconj::IfsError::NumericFailure(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for x in [-3.0, -0.7, -1e-3, 0.0, 2e-4, 0.9, 5.0] {
            let Ok(lhs) = compose_orbit(&f, &sigma, n, x).and_then(|y| w.h.evaluate(y)) else { continue };
            let rhs = compose_orbit(&g, &sigma, n, w.h.evaluate(x).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()), "x={x} lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn koenigs_is_monotone_and_fixes_origin(k in 0.2f64..0.8, c in -0.1f64..0.1, cubic in any::<bool>()) {
        let f = if cubic {
            ScalarMap::smooth(SmoothFamily::Cubic { k, c })
        } else {
            ScalarMap::linear_plus(k, Perturbation::sine(c).unwrap())
        };
        let lin = koenigs_conjugacy_with(&f, 0.5, 257, 20_000).unwrap();
        prop_assert_eq!(lin.h.evaluate(0.0).unwrap(), 0.0);
        let xs: Vec<f64> = (0..=50).map(|i| -0.5 + i as f64 / 50.0).collect();
        let hs: Vec<f64> = xs.iter().map(|&x| lin.h.evaluate(x).unwrap()).collect();
        prop_assert!(hs.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(lin.residual_sup < 1e-6, "{}", lin.residual_sup);
    }

    #[test]
    fn decay_bound_never_violated(ks in proptest::collection::vec(0.1f64..0.6, 2), cs in proptest::collection::vec(-0.3f64..0.3, 2),
                                  seed in any::<u64>(), n in 1usize..60, x in -10.0f64..10.0) {
        let maps = ks.iter().zip(&cs).map(|(&k, &c)| ScalarMap::linear_plus(k, Perturbation::rational(c).unwrap())).collect();
        let f = IfsDescriptor::new(maps, "F").unwrap();
        let d = decay_bound_check(&f, &SymbolSequence::bernoulli(0.4, seed), n, x).unwrap();
        prop_assert!(d.holds, "{d:?}");
    }

    #[test]
    fn similarity_within_bound(d in proptest::collection::vec(0.05f64..0.95, 4), off in -0.5f64..0.5,
                               seed in any::<u64>(), n in 1usize..15, x in proptest::collection::vec(-10.0f64..10.0, 2)) {
        let base = vec![DiagonalMap::new(d[..2].to_vec()).unwrap(), DiagonalMap::new(d[2..].to_vec()).unwrap()];
        let s = SimilarityIfs::from_rows(base, &[vec![1.0, off], vec![-off, 1.0]]).unwrap();
        let r = similarity_conjugacy(&s, &SymbolSequence::bernoulli(0.5, seed), n, &x).unwrap();
        prop_assert!(r.within_bound(), "{r:?}");
    }

    #[test]
    fn chaos_game_absorbed_and_reproducible(seed in any::<u64>(), x0 in -10.0f64..10.0) {
        let f = IfsDescriptor::linear(&[0.5, 0.25]).unwrap();
        let w = WorkingInterval::default();
        let a = chaos_game(&f, 400, 60, seed, x0, w).unwrap();
        prop_assert!(a.points.iter().all(|p| p[0].abs() <= 1e-6));
        prop_assert_eq!(a, chaos_game(&f, 400, 60, seed, x0, w).unwrap());
    }

    #[test]
    fn audit_finds_the_hyperbolic_origin(k in 0.1f64..0.8, c in -0.1f64..0.1) {
        let f = IfsDescriptor::new(vec![ScalarMap::linear_plus(k, Perturbation::sine(c).unwrap())], "F").unwrap();
        let a = hyperbolicity_audit(&f, WorkingInterval::default()).unwrap();
        prop_assert!(a.necessary_condition_holds);
        prop_assert_eq!(a.entries.len(), 1);
        prop_assert!(a.entries[0].fixed_point.abs() < 1e-9);
        prop_assert_eq!(a.entries[0].verdict, HyperbolicVerdict::Hyperbolic);
    }

    #[test]
    fn documents_round_trip(ks in proptest::collection::vec(-3.0f64..3.0, 1..5), r in 0.5f64..50.0, n in 1usize..100) {
        let maps: Vec<String> = ks.iter().map(|k| format!(r#"{{"kind":"linear","k":{k}}}"#)).collect();
        let text = format!(r#"{{"maps":[{}],"domain":{{"R":{r}}},"n":{n},"sequence":{{"type":"periodic","pattern":[1]}}}}"#, maps.join(","));
        let d = Document::from_json(&text).unwrap();
        prop_assert_eq!(&Document::from_json(&d.to_json()).unwrap(), &d);
        prop_assert_eq!(d.ifs().unwrap().len(), ks.len());
        prop_assert_eq!(d.interval().unwrap().radius, r);
    }
}

#[test]
fn expanding_koenigs_satisfies_equation() {
    let f = ScalarMap::smooth(SmoothFamily::Cubic { k: 2.5, c: 0.2 });
    let lin = koenigs_conjugacy(&f, 0.5, 20_000).unwrap();
    assert_eq!(lin.multiplier, 2.5);
    assert!(lin.residual_points > 0);
    assert!(lin.residual_sup < 1e-8, "{}", lin.residual_sup);
}
