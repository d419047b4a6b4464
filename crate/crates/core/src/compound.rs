//! Compound Poisson sums `S_N = X₁ + … + X_N`, `N ~ Poisson(μ)`.
//!
//! Three routes to `P(S_N > x)`:
//!
//! * the Esscher approximation [`esscher_tail`], driven by a numerically
//!   integrated severity m.g.f. ([`MgfProvider`]);
//! * the closed-form log-asymptotic [`log_asym_tail`] for plain Weibull severities,
//!   with the tilt fixed by the Lambert-W scale [`saddlepoint_scale`];
//! * the truncated Poisson series [`compound_tail_series`], used as a reference.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::distributions::{GammaWeibullModel, ModelSpec};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::quad::QuadratureSpec;
use crate::solve::bisect;
use crate::special::{ln_gamma, log1mexp, log_add_exp, normal_sf};
use crate::tilting::{mgf_asym_weibull, mgf_numeric, MgfNumeric};

/// Principal branch of the Lambert W function, `w e^w = v`, by Halley iteration.
pub fn lambert_w0(v: f64) -> Result<f64> {
    ensure_finite("v", v)?;
    let branch = -1.0 / E;
    if v < branch {
        return Err(domain(format!("Lambert W0 needs v >= -1/e, got {v}")));
    }
    if v == branch {
        return Ok(-1.0);
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let mut w = if v < -0.25 {
        // expansion about the branch point
        let p = (2.0 * (E * v + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if v < 3.0 {
        v.ln_1p() * (1.0 - 0.15 * v.ln_1p() / (1.0 + v.ln_1p()))
    } else {
        let l1 = v.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - v;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

/// Tail-constant `B₀(ℓ) = ℓ e^{ℓ²/2} (1 - Φ(ℓ))`, with the three-term Mills series above
/// `ℓ = 8`.
pub fn b0(ell: f64) -> f64 {
    if ell > 8.0 {
        let r = 1.0 / (ell * ell);
        (1.0 - r + 3.0 * r * r) / (2.0 * PI).sqrt()
    } else {
        ell * (0.5 * ell * ell).exp() * normal_sf(ell)
    }
}

/// Poisson mean and severity law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundModel {
    pub mu: f64,
    pub severity: ModelSpec,
}

impl CompoundModel {
    pub fn new(mu: f64, severity: ModelSpec) -> Result<Self> {
        ensure_finite("mu", mu)?;
        if !(mu > 0.0) {
            return Err(domain(format!("mu must be > 0, got {mu}")));
        }
        Ok(Self { mu, severity })
    }

    /// `(β, c)` of a plain Weibull severity with tail `e^{-c x^β}`.
    pub fn standard_weibull(&self) -> Result<(f64, f64)> {
        let law = self.severity.exact_law().map_err(|_| not_standard())?;
        if !law.is_vanilla() || law.beta() <= 1.0 {
            return Err(not_standard());
        }
        Ok((law.beta(), law.k()))
    }
}

fn not_standard() -> Error {
    Error::Unsupported("this route needs a plain Weibull severity e^{-c x^beta} with beta > 1".into())
}

/// Saddle scale for plain `Weibull(β)` severities (`c = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlepointSolution {
    /// Tilted-mean scale.
    pub y: f64,
    /// `λ(y) = β y^{β-1}`.
    pub theta: f64,
    /// `μ √(2π) β / √((β-1)β)`.
    pub c1: f64,
    /// `|μ y F̃[λ(y)] - x| / x`.
    pub residual: f64,
}

/// Solves `μ y F̃[λ(y)] = x` in closed form,
/// `y = 2^{-1/β} [ (β+2)/((β-1)β) · W( 2(β-1)β/(β+2) · (x/c₁)^{2β/(β+2)} ) ]^{1/β}`.
pub fn saddlepoint_scale(mu: f64, beta: f64, x: f64) -> Result<SaddlepointSolution> {
    ensure_finite("x", x)?;
    if !(mu > 0.0) || !(beta > 1.0) || !(x > 0.0) {
        return Err(domain(format!(
            "need mu > 0, beta > 1, x > 0; got mu={mu}, beta={beta}, x={x}"
        )));
    }
    let c1 = mu * (2.0 * PI).sqrt() * beta / ((beta - 1.0) * beta).sqrt();
    let p = 2.0 * beta / (beta + 2.0);
    let arg = 2.0 * (beta - 1.0) * beta / (beta + 2.0) * (x / c1).powf(p);
    let w = lambert_w0(arg)?;
    let y = 2f64.powf(-1.0 / beta) * ((beta + 2.0) / ((beta - 1.0) * beta) * w).powf(1.0 / beta);
    let theta = beta * y.powf(beta - 1.0);
    let lhs = mu.ln() + y.ln() + mgf_asym_weibull(beta, theta)?;
    Ok(SaddlepointSolution {
        y,
        theta,
        c1,
        residual: ((lhs - x.ln()).exp() - 1.0).abs(),
    })
}

/// Source of `F̂[θ]`, `F̂'[θ]`, `F̂''[θ]` for the severity.
pub trait MgfProvider {
    fn mgf(&self, theta: f64) -> Result<MgfNumeric>;
    /// Supremum of the tilts with a finite m.g.f.
    fn theta_sup(&self) -> f64;
}

/// Quadrature-backed m.g.f. of a gamma-Weibull severity.
#[derive(Debug, Clone, Copy)]
pub struct NumericMgf {
    pub model: GammaWeibullModel,
    pub spec: QuadratureSpec,
}

impl NumericMgf {
    pub fn new(model: GammaWeibullModel) -> Self {
        Self {
            model,
            spec: QuadratureSpec::default(),
        }
    }
}

impl MgfProvider for NumericMgf {
    fn mgf(&self, theta: f64) -> Result<MgfNumeric> {
        mgf_numeric(&self.model, theta, &self.spec)
    }

    fn theta_sup(&self) -> f64 {
        if self.model.beta() == 1.0 {
            self.model.k()
        } else {
            f64::INFINITY
        }
    }
}

/// Output of [`esscher_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsscherResult {
    pub log_tail: f64,
    pub theta: f64,
    pub sigma_c: f64,
    pub ell: f64,
    /// `|μ F̂'[θ] - x| / x`.
    pub residual: f64,
}

/// Esscher approximation
/// `P(S_N > x) ≈ (F̂_{S_N}[θ] - e^{-μ}) e^{-θx} B₀(θσ_c) / (θσ_c)`, with
/// `F̂_{S_N}[θ] = e^{μ(F̂[θ]-1)}`, `σ_c² = μF̂''[θ]` and `θ` solving `μF̂'[θ] = x`.
pub fn esscher_tail<P: MgfProvider + ?Sized>(cm: &CompoundModel, x: f64, mgf: &P) -> Result<EsscherResult> {
    ensure_finite("x", x)?;
    let ln_mu = cm.mu.ln();
    let ln_x = x.ln();
    let mean = mgf.mgf(0.0)?.log_d1.exp();
    if !(x > cm.mu * mean) {
        return Err(Error::NoSolution(format!(
            "x must exceed the mean mu*E[X] = {}; got x = {x}",
            cm.mu * mean
        )));
    }
    let excess = |theta: f64| -> f64 {
        match mgf.mgf(theta) {
            Ok(m) => ln_mu + m.log_d1 - ln_x,
            Err(_) => f64::NAN,
        }
    };
    let sup = mgf.theta_sup();
    let lo = 1e-6f64.min(0.5 * sup);
    if excess(lo) > 0.0 {
        return Err(Error::NoSolution(format!(
            "x = {x} is too close to the mean mu*E[X] = {} for the tilt bracket",
            cm.mu * mean
        )));
    }
    let mut hi = if sup.is_finite() { 0.5 * (lo + sup) } else { 1.0 };
    let mut expansions = 0;
    while !(excess(hi) > 0.0) {
        hi = if sup.is_finite() { 0.5 * (hi + sup) } else { 2.0 * hi };
        expansions += 1;
        if expansions > 200 {
            return Err(Error::NoSolution(format!(
                "could not bracket mu F'[theta] = x for x = {x}; feasible range is x > {}",
                cm.mu * mean
            )));
        }
    }
    let theta = bisect(excess, lo, hi, 1e-13)?;
    let m = mgf.mgf(theta)?;
    let mu_fhat = (ln_mu + m.log_mgf).exp();
    let sigma_c = (ln_mu + m.log_d2).exp().sqrt();
    let ell = theta * sigma_c;
    // ln(e^{μ(F̂-1)} - e^{-μ}) = -μ + μF̂ + ln(1 - e^{-μF̂})
    let log_atom_free = -cm.mu + mu_fhat + log1mexp(-mu_fhat);
    Ok(EsscherResult {
        log_tail: log_atom_free - theta * x - ell.ln() + b0(ell).ln(),
        theta,
        sigma_c,
        ell,
        residual: ((ln_mu + m.log_d1 - ln_x).exp() - 1.0).abs(),
    })
}

/// How the μ-dependence enters [`log_asym_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymForm {
    /// `e^{-μ}(e^{μx/y} - 1) e^{-θx} B₀(ℓ) / (λ(y)√(μxy))` with `ℓ = λ(y)√(μxy)`.
    /// This form is commonly quoted but drops a factor `1/μ` from `F̂^{(k)}[θ] ∼ x y^{k-1}/μ`;
    /// for `μ > 1` it can exceed 1.
    Printed,
    /// `e^{-μ}(e^{x/y} - 1) e^{-θx} B₀(ℓ) / (λ(y)√(xy))` with `ℓ = λ(y)√(xy)`, i.e.
    /// `μF̂[θ] = x/y` and `σ_c² = xy` as implied by `μ y F̃[λ(y)] = x`. Coincides with
    /// `Printed` at `μ = 1`.
    Consistent,
}

/// Log-asymptotic tail of `S_N` for plain Weibull severities, with `θ = λ(y)` from
/// [`saddlepoint_scale`], in the [`AsymForm::Consistent`] form. A tail `e^{-c x^β}` is
/// handled by rescaling `x` to `x c^{1/β}`.
///
/// Only log-asymptotic: `F̂_{S_N}` is approximated through `F̃`, which is not sharp.
pub fn log_asym_tail(cm: &CompoundModel, x: f64) -> Result<f64> {
    log_asym_tail_with(cm, x, AsymForm::Consistent)
}

pub fn log_asym_tail_with(cm: &CompoundModel, x: f64, form: AsymForm) -> Result<f64> {
    let (beta, c) = cm.standard_weibull()?;
    let x = x * c.powf(1.0 / beta);
    let sp = saddlepoint_scale(cm.mu, beta, x)?;
    let (y, theta, mu) = (sp.y, sp.theta, cm.mu);
    let (exponent, var) = match form {
        AsymForm::Printed => (mu * x / y, mu * x * y),
        AsymForm::Consistent => (x / y, x * y),
    };
    let ell = theta * var.sqrt();
    // ln(e^{E} - 1) = E + ln(1 - e^{-E})
    let log_atom_free = -mu + exponent + log1mexp(-exponent);
    Ok(log_atom_free - theta * x - ell.ln() + b0(ell).ln())
}

/// Truncated Poisson series `Σ_{n≥1} e^{-μ} μⁿ/n! · P(Sₙ > x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub log_tail: f64,
    /// Number of terms summed.
    pub n_terms: usize,
    /// Upper bound on the omitted remainder, relative to the estimate.
    pub rel_remainder: f64,
}

/// Number of bound terms scanned past the truncation point.
const SERIES_LOOKAHEAD: usize = 200;

/// Sums the Poisson series with `ln P(Sₙ > x)` from `log_term` until the omitted part,
/// bounded with `ln P(Sₙ > x) ≤ log_bound(n)` and the Poisson tail, is below
/// `rel_tol` of the partial sum.
pub fn compound_tail_series<T, B>(mu: f64, log_term: T, log_bound: B, rel_tol: f64, max_terms: usize) -> Result<SeriesResult>
where
    T: Fn(usize) -> Result<f64>,
    B: Fn(usize) -> Result<f64>,
{
    if !(mu > 0.0) {
        return Err(domain(format!("mu must be > 0, got {mu}")));
    }
    let log_w = |n: usize| -mu + n as f64 * mu.ln() - ln_gamma(n as f64 + 1.0);
    let mut log_sum = f64::NEG_INFINITY;
    for n in 1..=max_terms {
        log_sum = log_add_exp(log_sum, log_w(n) + log_term(n)?);
        let mut log_rest = f64::NEG_INFINITY;
        for m in n + 1..=n + SERIES_LOOKAHEAD {
            log_rest = log_add_exp(log_rest, log_w(m) + log_bound(m)?);
        }
        // P(N > n + lookahead) bounds everything further out
        let far = crate::special::gamma_p((n + SERIES_LOOKAHEAD + 1) as f64, mu)?;
        if far > 0.0 {
            log_rest = log_add_exp(log_rest, far.ln());
        }
        let rel = (log_rest - log_sum).exp();
        if rel < rel_tol {
            return Ok(SeriesResult {
                log_tail: log_sum,
                n_terms: n,
                rel_remainder: rel,
            });
        }
    }
    Err(Error::Accuracy {
        message: format!("compound series not converged after {max_terms} terms"),
        estimate: log_sum,
        achieved: f64::NAN,
    })
}

/// Series with exact terms for exponential-class severities `Gamma(γ, k)`:
/// `P(Sₙ > x) = Q(nγ, kx)`.
pub fn compound_tail_series_gamma(mu: f64, model: &GammaWeibullModel, x: f64, rel_tol: f64) -> Result<SeriesResult> {
    if model.beta() != 1.0 {
        return Err(Error::Unsupported("exact series terms need beta = 1".into()));
    }
    let term = |n: usize| crate::special::ln_gamma_q(n as f64 * model.gamma(), model.k() * x);
    compound_tail_series(mu, term, term, rel_tol, 10_000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-15);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
        assert!(lambert_w0(-0.5).is_err());
        for &v in &[-0.3678, -0.3, -0.1, 1e-8, 0.5, 2.9, 3.1, 50.0, 1e6, 1e10, 1e300] {
            let w = lambert_w0(v).unwrap();
            assert!((w * w.exp() - v).abs() <= 1e-12 * v.abs().max(1.0), "v={v}");
        }
    }

    #[test]
    fn b0_limits() {
        assert!((b0(40.0) - 0.39894).abs() < 1e-3);
        // continuity at the switch
        let direct = 8.0 * 32f64.exp() * normal_sf(8.0);
        assert!((b0(8.0) - direct).abs() < 1e-15);
        assert!((b0(8.000_001) - direct).abs() < 1e-4);
        assert!(b0(0.5) < b0(2.0));
    }

    #[test]
    fn saddlepoint_example() {
        let s = saddlepoint_scale(1.0, 2.0, 10.0).unwrap();
        assert!((s.c1 - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((s.y - 1.009).abs() < 1e-3, "{}", s.y);
        assert!(s.residual < 1e-8);
        let mut prev = 0.0;
        for &x in &[5.0, 10.0, 50.0, 500.0] {
            let y = saddlepoint_scale(2.0, 1.5, x).unwrap().y;
            assert!(y > prev);
            prev = y;
        }
    }

    #[test]
    fn esscher_exponential_vs_series() {
        let e = GammaWeibullModel::new(1.0, 1.0, 1.0).unwrap();
        let cm = CompoundModel::new(1.0, ModelSpec::GammaWeibull(e)).unwrap();
        let r = esscher_tail(&cm, 20.0, &NumericMgf::new(e)).unwrap();
        assert!(r.residual < 1e-8);
        let series = compound_tail_series_gamma(1.0, &e, 20.0, 1e-6).unwrap();
        assert!(((r.log_tail - series.log_tail).exp() - 1.0).abs() < 0.1);
        assert!(esscher_tail(&cm, 0.5, &NumericMgf::new(e)).is_err());
    }

    #[test]
    fn log_asym_shape() {
        let w = GammaWeibullModel::new(1.0, 2.0, 2.0).unwrap();
        let cm = CompoundModel::new(2.0, ModelSpec::GammaWeibull(w)).unwrap();
        let mut prev = 0.0;
        for &x in &[5.0, 10.0, 30.0, 100.0] {
            let v = log_asym_tail(&cm, x).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let mut ratios = Vec::new();
        for &x in &[1e2, 1e3, 1e4] {
            let theta = saddlepoint_scale(2.0, 2.0, x).unwrap().theta;
            ratios.push(-log_asym_tail(&cm, x).unwrap() / (theta * x));
        }
        assert!((ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs());
        assert!((ratios[2] - 1.0).abs() < 0.1);
        // the printed form is not a probability for μ = 2
        assert!(log_asym_tail_with(&cm, 5.0, AsymForm::Printed).unwrap() > 0.0);
        let bad = CompoundModel::new(2.0, ModelSpec::GammaWeibull(GammaWeibullModel::new(1.0, 2.0, 3.0).unwrap())).unwrap();
        assert!(matches!(log_asym_tail(&bad, 10.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn forms_agree_at_unit_mu() {
        let w = GammaWeibullModel::new(1.0, 2.0, 2.0).unwrap();
        let cm = CompoundModel::new(1.0, ModelSpec::GammaWeibull(w)).unwrap();
        let a = log_asym_tail_with(&cm, 12.0, AsymForm::Printed).unwrap();
        let b = log_asym_tail_with(&cm, 12.0, AsymForm::Consistent).unwrap();
        assert_eq!(a, b);
    }
}
