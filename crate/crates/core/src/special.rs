//! Special functions and log-space arithmetic helpers.
//!
//! The regularized incomplete gamma functions are implemented here (series below
//! `x = a + 1`, Lentz continued fraction above) with the log prefactor computed
//! through a Stirling-corrected `log1pmx` so that large shapes keep full relative
//! accuracy. `ln Γ` and `erfc` come from `statrs`.

use crate::error::{domain, Result};

/// Hard cap on series / continued-fraction terms.
pub const MAX_TERMS: usize = 10_000;
/// Relative convergence tolerance of the series and continued fraction.
pub const TERM_TOL: f64 = 1e-15;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn ln_gamma(a: f64) -> f64 {
    statrs::function::gamma::ln_gamma(a)
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// Standard normal upper tail `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln(1 + t) - t`, accurate for small `|t|`.
pub fn log1pmx(t: f64) -> f64 {
    if t.abs() < 0.5 {
        // -t^2/2 + t^3/3 - ...
        let mut term = t;
        let mut sum = 0.0;
        for k in 2..200 {
            term *= -t;
            let add = term / k as f64;
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        t.ln_1p() - t
    }
}

/// `ln(1 - e^{v})` for `v ≤ 0`.
pub fn log1mexp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a ≥ b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + log1mexp(b - a)
}

/// Stirling series remainder `ln Γ(a) - [(a - 1/2) ln a - a + ln √(2π)]` for `a ≥ 10`.
fn stirling_remainder(a: f64) -> f64 {
    let r = 1.0 / a;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln[x^a e^{-x} / Γ(a)]`, the common prefactor of P and Q.
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    if a >= 10.0 {
        let t = (x - a) / a;
        a * log1pmx(t) + 0.5 * a.ln() - LN_SQRT_2PI - stirling_remainder(a)
    } else {
        a * x.ln() - x - ln_gamma(a)
    }
}

/// Sum `Σ x^n / (a (a+1) … (a+n))`, so that `P(a, x) = e^{prefactor} · sum`.
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..MAX_TERMS {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * TERM_TOL {
            return Ok(sum);
        }
    }
    Err(crate::Error::Accuracy {
        message: format!("incomplete gamma series did not converge for a={a}, x={x}"),
        estimate: sum,
        achieved: (term / sum).abs(),
    })
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x) e^{-prefactor}`.
fn upper_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < TERM_TOL {
            return Ok(h);
        }
    }
    Err(crate::Error::Accuracy {
        message: format!("incomplete gamma continued fraction did not converge for a={a}, x={x}"),
        estimate: h,
        achieved: f64::NAN,
    })
}

fn check_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("incomplete gamma shape must be finite and > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("incomplete gamma argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// `(ln P(a, x), ln Q(a, x))` for the regularized incomplete gamma functions.
pub fn ln_gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    check_args(a, x)?;
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == f64::INFINITY {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let pre = ln_gamma_prefactor(a, x);
    if x < a + 1.0 {
        let ln_p = pre + lower_series(a, x)?.ln();
        Ok((ln_p, log1mexp(ln_p.min(0.0))))
    } else {
        let ln_q = pre + upper_fraction(a, x)?.ln();
        Ok((log1mexp(ln_q.min(0.0)), ln_q))
    }
}

/// `ln Q(a, x)`; finite far below the `f64` underflow threshold.
pub fn ln_gamma_q(a: f64, x: f64) -> Result<f64> {
    Ok(ln_gamma_pq(a, x)?.1)
}

pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    Ok(ln_gamma_q(a, x)?.exp())
}

pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    Ok(ln_gamma_pq(a, x)?.0.exp())
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
