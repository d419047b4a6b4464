//! Numerical ground truth: convolution tails by adaptive log-space quadrature.
//!
//! `P(X₁+X₂>x) = ∫₀ˣ f₁(z) F̄₂(x-z) dz + F̄₁(x)` for non-negative summands. The
//! integral is split at the saddle point of the integrand and each piece is
//! integrated relative to the integrand's maximum. For three and four summands the
//! inner density of `X₁+X₂` is itself an integral, evaluated on demand by a nested
//! quadrature at a tighter tolerance.

use std::cell::RefCell;

use crate::asymptotics::{bkr_split, pair_constants};
use crate::distributions::{BkrModel, ModelSpec, TailModel};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::quad::{integrate_log, integrate_log_pieces, QuadratureSpec};
use crate::special::{ln_gamma, log_add_exp};

/// Points of the coarse scan that locates the integrand's maximum.
const SCAN_POINTS: usize = 256;

fn require_exact(m: &ModelSpec) -> Result<()> {
    if m.is_exact() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "the oracle needs an exact density and tail; this Weibull-like model is only asymptotic".into(),
        ))
    }
}

fn check_x(x: f64) -> Result<()> {
    ensure_finite("x", x)?;
    if !(x > 0.0) {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    Ok(())
}

/// Location of the dominant contribution to `∫₀ˣ f₁(z) F̄₂(x-z) dz`, as a fraction of `x`.
fn saddle_fraction(m1: &ModelSpec, m2: &ModelSpec, x: f64) -> Option<f64> {
    let (b1, b2) = (m1.beta(), m2.beta());
    if b1 <= 1.0 || b2 <= 1.0 {
        return None;
    }
    let w1 = m1.weibull_like().ok()?;
    let w2 = m2.weibull_like().ok()?;
    if (b1 - b2).abs() <= 1e-12 * b1 {
        return pair_constants(&w1, &w2).ok().map(|pc| pc.theta1);
    }
    let s = bkr_split(
        &BkrModel::from_weibull_like(&w1).ok()?,
        &BkrModel::from_weibull_like(&w2).ok()?,
        x,
    )
    .ok()?;
    Some(s.q1 / x)
}

/// `ln ∫₀ˣ exp(log_a(z) + log_b(x-z)) dz`, broken at `split` and at the maximum of a
/// coarse scan, which also supplies the shift.
fn log_conv_integral<A, B>(log_a: A, log_b: B, x: f64, split: Option<f64>, spec: &QuadratureSpec) -> Result<f64>
where
    A: Fn(f64) -> Result<f64>,
    B: Fn(f64) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |z: f64| match log_a(z).and_then(|a| Ok(a + log_b(x - z)?)) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let mut shift = f64::NEG_INFINITY;
    let mut arg = 0.5 * x;
    for i in 0..SCAN_POINTS {
        let z = x * (i as f64 + 0.5) / SCAN_POINTS as f64;
        let v = integrand(z);
        if v > shift {
            shift = v;
            arg = z;
        }
    }
    if let Some(s) = split {
        shift = shift.max(integrand(s));
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if !shift.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut breaks = vec![0.0, x];
    for b in [split.unwrap_or(arg), arg] {
        if b > 0.0 && b < x && !breaks.contains(&b) {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let result = integrate_log_pieces(integrand, &breaks, shift, spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(result.log_value)
}

/// `ln P(X₁+X₂ > x)` for independent non-negative summands with exact laws.
pub fn conv_tail_pair(m1: &ModelSpec, m2: &ModelSpec, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    require_exact(m1)?;
    require_exact(m2)?;
    check_x(x)?;
    spec.validate()?;
    let split = saddle_fraction(m1, m2, x).map(|t| t * x);
    let body = log_conv_integral(|z| m1.log_density(z), |y| m2.log_tail(y), x, split, spec)?;
    Ok(log_add_exp(body, m1.log_tail(x)?))
}

/// `ln` of the density of `X₁+X₂` at `x`.
pub fn conv_log_density_pair(m1: &ModelSpec, m2: &ModelSpec, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    require_exact(m1)?;
    require_exact(m2)?;
    check_x(x)?;
    spec.validate()?;
    let split = saddle_fraction(m1, m2, x).map(|t| t * x);
    log_conv_integral(|z| m1.log_density(z), |y| m2.log_density(y), x, split, spec)
}

fn inner_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: (spec.rel_tol * 0.1).max(1e-13),
        ..*spec
    }
}

/// `ln P(Sₙ > x)` for `n ∈ {1, 2, 3, 4}` i.i.d. summands.
///
/// `n = 3` integrates the density of `S₂` against `F̄`, and `n = 4` integrates the
/// density of `S₂` against the tail of an independent `S₂`.
pub fn nfold_tail_small(model: &ModelSpec, n: usize, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    require_exact(model)?;
    check_x(x)?;
    spec.validate()?;
    let inner = inner_spec(spec);
    let s2_density = |z: f64| -> Result<f64> {
        if z <= 0.0 {
            Ok(f64::NEG_INFINITY)
        } else {
            conv_log_density_pair(model, model, z, &inner)
        }
    };
    let s2_tail = |y: f64| -> Result<f64> {
        if y <= 0.0 {
            Ok(0.0)
        } else {
            conv_tail_pair(model, model, y, &inner)
        }
    };
    // the dominant split puts equal shares on every summand
    let nf = n as f64;
    match n {
        1 => model.log_tail(x),
        2 => conv_tail_pair(model, model, x, spec),
        3 => {
            let body = log_conv_integral(s2_density, |y| model.log_tail(y), x, Some(x * 2.0 / nf), spec)?;
            Ok(log_add_exp(body, s2_tail(x)?))
        }
        4 => {
            let body = log_conv_integral(s2_density, s2_tail, x, Some(x / 2.0), spec)?;
            Ok(log_add_exp(body, s2_tail(x)?))
        }
        _ => Err(Error::Unsupported(format!(
            "the quadrature oracle covers n <= 4, got n = {n}"
        ))),
    }
}

/// `ln Q(a, x)` by direct quadrature of `∫ₓ^∞ t^{a-1} e^{-t} dt / Γ(a)`; an
/// independent check of the series and continued-fraction evaluation.
pub fn ln_gamma_q_by_quadrature(a: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(domain(format!("need a > 0 and x >= 0, got a={a}, x={x}")));
    }
    let log_g = |t: f64| (a - 1.0) * t.ln() - t;
    let peak = (a - 1.0).max(x);
    let hi = peak + 60.0 + 12.0 * a.sqrt() + 20.0 * (a - 1.0).abs().max(1.0).ln();
    let shift = log_g(peak.max(x).max(1e-300));
    let breaks = if peak > x { vec![x, peak, hi] } else { vec![x, hi] };
    let body = integrate_log_pieces(log_g, &breaks, shift, spec)?;
    // remainder beyond `hi`, negligible unless the shape is extreme
    let beyond = integrate_log(log_g, hi, hi + 200.0, shift, spec)?;
    Ok(log_add_exp(body.log_value, beyond.log_value) - ln_gamma(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{nfold_asymptote, pair_tail_asymptote};
    use crate::distributions::{GammaWeibullModel, WeibullLikeModel};
    use crate::special::ln_gamma_q;

    fn gw(k: f64, beta: f64, gamma: f64) -> ModelSpec {
        ModelSpec::GammaWeibull(GammaWeibullModel::new(k, beta, gamma).unwrap())
    }

    #[test]
    fn erlang_two() {
        let e = gw(1.0, 1.0, 1.0);
        let v = conv_tail_pair(&e, &e, 10.0, &QuadratureSpec::default()).unwrap();
        assert!((v - (11f64.ln() - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn gamma_pair_is_gamma() {
        let spec = QuadratureSpec::default();
        let v = conv_tail_pair(&gw(1.0, 1.0, 2.0), &gw(1.0, 1.0, 3.0), 30.0, &spec).unwrap();
        let exact = ln_gamma_q(5.0, 30.0).unwrap();
        assert!(((v - exact).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn weibull_pair_near_asymptote() {
        let spec = QuadratureSpec::default();
        let m = gw(1.0, 2.0, 2.0);
        let v = conv_tail_pair(&m, &m, 8.0, &spec).unwrap();
        let w = WeibullLikeModel::vanilla(2.0, 1.0).unwrap();
        let ratio = (v - pair_tail_asymptote(&w, &w).unwrap().log_eval(8.0)).exp();
        assert!((0.9..1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn symmetry_and_dominance() {
        let spec = QuadratureSpec::default();
        let a = gw(1.3, 2.5, 1.7);
        let b = gw(0.6, 2.5, 4.0);
        let ab = conv_tail_pair(&a, &b, 3.0, &spec).unwrap();
        let ba = conv_tail_pair(&b, &a, 3.0, &spec).unwrap();
        assert!(((ab - ba).exp() - 1.0).abs() < 2e-12);
        assert!(ab >= a.log_tail(3.0).unwrap().max(b.log_tail(3.0).unwrap()));
        // mixed exponents go through the numerical split
        let c = gw(1.0, 3.0, 3.0);
        let ac = conv_tail_pair(&a, &c, 3.0, &spec).unwrap();
        let ca = conv_tail_pair(&c, &a, 3.0, &spec).unwrap();
        assert!(((ac - ca).exp() - 1.0).abs() < 2e-12);
    }

    #[test]
    fn self_convergence() {
        let m = gw(1.0, 2.0, 0.6);
        let coarse = conv_tail_pair(&m, &m, 5.0, &QuadratureSpec::new(1e-8, -60.0, 4000).unwrap()).unwrap();
        let fine = conv_tail_pair(&m, &m, 5.0, &QuadratureSpec::new(5e-9, -60.0, 4000).unwrap()).unwrap();
        assert!(((coarse - fine).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_inexact_models() {
        let w = ModelSpec::WeibullLike(WeibullLikeModel::new(0.5, 2.0, 1.0, 3.0).unwrap());
        assert!(matches!(
            conv_tail_pair(&w, &w, 2.0, &QuadratureSpec::default()),
            Err(Error::Unsupported(_))
        ));
        assert!(nfold_tail_small(&gw(1.0, 2.0, 2.0), 5, 2.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn small_n_examples() {
        let spec = QuadratureSpec::new(1e-10, -60.0, 4000).unwrap();
        let e = gw(1.0, 1.0, 1.0);
        let two = nfold_tail_small(&e, 2, 6.0, &spec).unwrap();
        assert!((two - conv_tail_pair(&e, &e, 6.0, &spec).unwrap()).abs() < 1e-12);
        let three = nfold_tail_small(&e, 3, 15.0, &spec).unwrap();
        assert!(((three - (128.5f64.ln() - 15.0)).exp() - 1.0).abs() < 1e-9);
        let four = nfold_tail_small(&e, 4, 12.0, &spec).unwrap();
        assert!(((four - ln_gamma_q(4.0, 12.0).unwrap()).exp() - 1.0).abs() < 1e-9);

        let w = gw(1.0, 2.0, 2.0);
        let v = nfold_tail_small(&w, 3, 9.0, &spec).unwrap();
        let asym = nfold_asymptote(&WeibullLikeModel::vanilla(2.0, 1.0).unwrap(), 3).unwrap();
        let ratio = (v - asym.log_eval(9.0)).exp();
        assert!((0.8..1.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn incomplete_gamma_quadrature_agrees() {
        let spec = QuadratureSpec::default();
        for &(a, x) in &[(0.5, 4.0), (3.0, 2.0), (7.5, 40.0), (200.0, 180.0)] {
            let q = ln_gamma_q_by_quadrature(a, x, &spec).unwrap();
            assert!(((q - ln_gamma_q(a, x).unwrap()).exp() - 1.0).abs() < 1e-11, "a={a} x={x}");
        }
    }
}
