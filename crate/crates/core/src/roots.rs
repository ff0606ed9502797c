//! Bracketing root finders used for map inverses and fixed points.

/// Bisection on a sign-changing bracket, run to full double precision.
///
/// Stops when the midpoint coincides with an endpoint, so the returned root is
/// accurate well beyond the 1e-12 tolerance callers rely on.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of a monotone function on R: grows a bracket `[center - s, center + s]`
/// by doubling from `scale` until a sign change appears or `limit` is passed.
pub fn bracket_and_bisect<F: Fn(f64) -> f64>(f: F, center: f64, scale: f64, limit: f64) -> Option<f64> {
    let fc = f(center);
    if fc == 0.0 {
        return Some(center);
    }
    if !fc.is_finite() {
        return None;
    }
    let mut s = scale.max(f64::MIN_POSITIVE);
    while s <= limit {
        for end in [center + s, center - s] {
            let fe = f(end);
            if fe.is_finite() && fe.signum() != fc.signum() {
                return Some(bisect(&f, center, end));
            }
        }
        s *= 2.0;
    }
    None
}
