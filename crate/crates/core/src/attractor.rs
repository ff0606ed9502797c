//! Chaos-game sampling of attractors of contractive IFSs.
//!
//! Every catalog system fixes the origin, so its attractor is `{0}`. Affine
//! maps are accepted here (through [`IfsDescriptor::with_affine`]) to get
//! nontrivial pictures such as the middle-third Cantor set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};
use crate::ifs::{estimate_lipschitz, IfsDescriptor};
use crate::maps::WorkingInterval;
use crate::multidim::DiagonalMap;

pub const LIPSCHITZ_SAMPLES: usize = 257;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSample {
    /// Points after burn-in; scalar systems give 1-vectors.
    pub points: Vec<Vec<f64>>,
    pub dimension: usize,
    pub burn_in: usize,
    pub iterations: usize,
    pub seed: u64,
}

fn check_counts(iterations: usize, burn_in: usize) -> Result<()> {
    if burn_in > iterations {
        return Err(IfsError::InvalidArgument(format!(
            "burn_in {burn_in} exceeds iterations {iterations}"
        )));
    }
    Ok(())
}

/// Runs `x_{t+1} = f_{l_t}(x_t)` with symbols drawn uniformly from a ChaCha
/// stream seeded by `seed`, keeping the points after the first `burn_in`.
pub fn chaos_game(
    f: &IfsDescriptor,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    x0: f64,
    interval: WorkingInterval,
) -> Result<AttractorSample> {
    check_counts(iterations, burn_in)?;
    for (i, m) in f.maps().iter().enumerate() {
        let l = estimate_lipschitz(m, interval.lo(), interval.hi(), LIPSCHITZ_SAMPLES)?;
        if !(l < 1.0) {
            return Err(IfsError::NotContractive { index: i + 1, estimate: l });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0;
    let mut points = Vec::with_capacity(iterations - burn_in);
    for t in 1..=iterations {
        let s = rng.random_range(0..f.len());
        x = f.maps()[s].eval(x);
        if t > burn_in {
            points.push(vec![x]);
        }
    }
    Ok(AttractorSample { points, dimension: 1, burn_in, iterations, seed })
}

/// Chaos game for diagonal linear maps on R^m.
pub fn chaos_game_diag(
    maps: &[DiagonalMap],
    iterations: usize,
    burn_in: usize,
    seed: u64,
    x0: &[f64],
) -> Result<AttractorSample> {
    check_counts(iterations, burn_in)?;
    if maps.is_empty() {
        return Err(IfsError::InvalidArgument("empty list of diagonal maps".into()));
    }
    for (i, m) in maps.iter().enumerate() {
        let l = m.diag.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if !(l < 1.0) {
            return Err(IfsError::NotContractive { index: i + 1, estimate: l });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    let mut points = Vec::with_capacity(iterations - burn_in);
    for t in 1..=iterations {
        x = maps[rng.random_range(0..maps.len())].apply(&x)?;
        if t > burn_in {
            points.push(x.clone());
        }
    }
    Ok(AttractorSample { points, dimension: x0.len(), burn_in, iterations, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::ScalarMap;

    fn cantor() -> IfsDescriptor {
        IfsDescriptor::with_affine(
            vec![ScalarMap::affine(1.0 / 3.0, 0.0), ScalarMap::affine(1.0 / 3.0, 2.0 / 3.0)],
            "cantor",
        )
        .unwrap()
    }

    // Distance-free check: x lies in the n-th stage of the Cantor construction
    // iff its first n ternary digits avoid 1, allowing rounding at boundaries.
    fn in_cantor_stage(x: f64, stages: u32) -> bool {
        let mut y = x;
        for _ in 0..stages {
            y *= 3.0;
            let d = y.floor();
            let frac = y - d;
            if d == 1.0 && frac > 1e-6 && frac < 1.0 - 1e-6 {
                return false;
            }
            y = if d >= 2.0 { y - 2.0 } else if d == 1.0 && frac <= 1e-6 { 1.0 } else { y - d };
        }
        true
    }

    #[test]
    fn cantor_gap_is_empty() {
        let s = chaos_game(&cantor(), 20_000, 50, 9, 0.5, WorkingInterval::default()).unwrap();
        assert_eq!(s.points.len(), 19_950);
        for p in &s.points {
            let x = p[0];
            assert!(!(x > 1.0 / 3.0 + 1e-9 && x < 2.0 / 3.0 - 1e-9), "{x}");
            assert!((0.0..=1.0).contains(&x));
            assert!(in_cantor_stage(x, 8), "{x}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = chaos_game(&cantor(), 500, 10, 3, 0.2, WorkingInterval::default()).unwrap();
        let b = chaos_game(&cantor(), 500, 10, 3, 0.2, WorkingInterval::default()).unwrap();
        let c = chaos_game(&cantor(), 500, 10, 4, 0.2, WorkingInterval::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn absorbed_at_origin() {
        let f = IfsDescriptor::linear(&[0.5]).unwrap();
        let s = chaos_game(&f, 200, 30, 1, 8.0, WorkingInterval::default()).unwrap();
        assert!(s.points.iter().all(|p| p[0].abs() <= 8.0 * 2f64.powi(-30)));
        let f = IfsDescriptor::linear(&[0.5, 0.25]).unwrap();
        let s = chaos_game(&f, 1000, 60, 5, -10.0, WorkingInterval::default()).unwrap();
        assert!(s.points.iter().all(|p| p[0].abs() <= 1e-6));
    }

    #[test]
    fn edge_cases() {
        let f = IfsDescriptor::linear(&[0.5]).unwrap();
        assert!(chaos_game(&f, 10, 10, 0, 1.0, WorkingInterval::default()).unwrap().points.is_empty());
        assert!(chaos_game(&f, 5, 10, 0, 1.0, WorkingInterval::default()).is_err());
        let g = IfsDescriptor::linear(&[0.5, 1.5]).unwrap();
        assert!(matches!(
            chaos_game(&g, 10, 0, 0, 1.0, WorkingInterval::default()),
            Err(IfsError::NotContractive { index: 2, .. })
        ));
    }

    #[test]
    fn pushforward_matches_target_extent() {
        use crate::conjugacy1d::{build_linear_conjugacy, BridgeKind};
        let f = IfsDescriptor::linear(&[0.5]).unwrap();
        let g = IfsDescriptor::linear(&[0.4]).unwrap();
        let h = build_linear_conjugacy(0.5, 0.4, 1.0, BridgeKind::PowerLaw).unwrap();
        let w = WorkingInterval::default();
        let a = chaos_game(&f, 100_000, 100, 8, 3.0, w).unwrap();
        let b = chaos_game(&g, 100_000, 100, 8, h.evaluate(3.0).unwrap(), w).unwrap();
        let extent = |v: Vec<f64>| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
        let (lo_a, hi_a) = extent(a.points.iter().map(|p| h.evaluate(p[0]).unwrap()).collect());
        let (lo_b, hi_b) = extent(b.points.iter().map(|p| p[0]).collect());
        assert!((lo_a - lo_b).abs() <= 1e-3 && (hi_a - hi_b).abs() <= 1e-3);
    }

    #[test]
    fn diagonal_sample() {
        let maps = [DiagonalMap::new(vec![0.5, 0.2]).unwrap(), DiagonalMap::new(vec![0.3, 0.4]).unwrap()];
        let s = chaos_game_diag(&maps, 300, 100, 2, &[4.0, -4.0]).unwrap();
        assert_eq!((s.points.len(), s.dimension), (200, 2));
        assert!(s.points.iter().flatten().all(|v| v.abs() < 1e-20));
        let bad = [DiagonalMap::new(vec![0.5, 1.2]).unwrap()];
        assert!(chaos_game_diag(&bad, 3, 0, 0, &[1.0, 1.0]).is_err());
    }
}
