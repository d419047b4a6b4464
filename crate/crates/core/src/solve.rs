//! Derivative-free scalar root finding and maximization.

use crate::error::{Error, Result};

/// Bisection on a sign change of `f` over `[lo, hi]`, polished with secant steps.
///
/// Stops when the bracket is narrower than `rel_tol · max(|lo|, |hi|)` or cannot
/// shrink further in floating point.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoSolution(format!(
            "no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
        )));
    }
    let mut f_hi = f_hi;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= rel_tol * lo.abs().max(hi.abs()) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    // secant step inside the final bracket
    let s = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if s > lo && s < hi && s.is_finite() {
        let fs = f(s);
        if fs.abs() < f_lo.abs().min(f_hi.abs()) {
            return Ok(s);
        }
    }
    Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi })
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..500 {
        if (hi - lo) <= rel_tol * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    if fa >= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12), Err(Error::NoSolution(_))));
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 1.3) * (x - 1.3) + 4.0, 0.0, 5.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((v - 4.0).abs() < 1e-12);
    }
}
