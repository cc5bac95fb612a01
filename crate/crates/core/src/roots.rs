//! Bracketed scalar root finding.

/// Bisection on `[lo, hi]` run until the bracket cannot shrink any further in
/// floating point. The caller guarantees a sign change (or a zero) on the
/// bracket; without one the result is the endpoint the iteration drifts to.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

/// Newton iteration kept inside a sign-change bracket. Any step that leaves
/// the bracket, or fails to halve the residual, is replaced by a bisection
/// step. Returns `None` when `[lo, hi]` does not bracket a root.
pub fn safeguarded_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if (f_lo < 0.0) == (f_hi < 0.0) || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    let mut prev_abs = f64::INFINITY;
    for _ in 0..400 {
        if fx == 0.0 {
            return Some(x);
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }

        let slope = df(x);
        let newton = x - fx / slope;
        let use_newton = slope.is_finite()
            && slope != 0.0
            && newton > lo
            && newton < hi
            && fx.abs() < 0.5 * prev_abs;
        prev_abs = fx.abs();
        let next = if use_newton { newton } else { 0.5 * (lo + hi) };
        if next == x {
            break;
        }
        x = next;
        fx = f(x);
    }
    Some(x)
}

/// Scans consecutive points for the first sign change of `f`.
pub fn first_bracket<F: Fn(f64) -> f64>(f: F, points: &[f64]) -> Option<(f64, f64)> {
    let mut prev: Option<(f64, f64)> = None;
    for &p in points {
        let v = f(p);
        if !v.is_finite() {
            prev = None;
            continue;
        }
        if v == 0.0 {
            return Some((p, p));
        }
        if let Some((q, fq)) = prev {
            if (fq < 0.0) != (v < 0.0) {
                return Some((q, p));
            }
        }
        prev = Some((p, v));
    }
    None
}

/// `n` points spaced evenly in log between `lo` and `hi` (both > 0).
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}
