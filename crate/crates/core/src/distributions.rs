//! Summand laws: the Weibull-like family, the gamma-Weibull family and
//! function-valued light-tailed models.
//!
//! Every probability has a log-space twin so that tails far below `e^{-700}` stay
//! representable.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Error, Result};
use crate::special::{ln_gamma, ln_gamma_q};

/// Common interface for models with a density and a tail.
pub trait TailModel {
    /// `ln F̄(x)`.
    fn log_tail(&self, x: f64) -> Result<f64>;
    /// `ln f(x)`; `-∞` outside the support.
    fn log_density(&self, x: f64) -> Result<f64>;
    /// Hazard rate `λ(x) = f(x)/F̄(x)`.
    fn hazard_rate(&self, x: f64) -> Result<f64>;
    /// Whether `log_tail` / `log_density` are exact rather than leading-order asymptotics.
    fn is_exact(&self) -> bool;

    fn tail(&self, x: f64) -> Result<f64> {
        Ok(self.log_tail(x)?.exp().clamp(0.0, 1.0))
    }

    fn density(&self, x: f64) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Inverse hazard rate `e(x) = 1/λ(x)`, the local scale of the tail.
    fn inverse_hazard_rate(&self, x: f64) -> Result<f64> {
        Ok(1.0 / self.hazard_rate(x)?)
    }
}

/// Density `∼ d·x^{α+β-1}·e^{-c x^β}`, tail `∼ (d/(βc))·x^α·e^{-c x^β}`.
///
/// Only asymptotic unless `α = 0` and `d = βc`, in which case the model is the
/// vanilla Weibull law with tail `e^{-c x^β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeibullLikeRecord", into = "WeibullLikeRecord")]
pub struct WeibullLikeModel {
    alpha: f64,
    beta: f64,
    c: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct WeibullLikeRecord {
    alpha: f64,
    beta: f64,
    c: f64,
    d: f64,
}

impl TryFrom<WeibullLikeRecord> for WeibullLikeModel {
    type Error = Error;
    fn try_from(r: WeibullLikeRecord) -> Result<Self> {
        Self::new(r.alpha, r.beta, r.c, r.d)
    }
}

impl From<WeibullLikeModel> for WeibullLikeRecord {
    fn from(m: WeibullLikeModel) -> Self {
        Self {
            alpha: m.alpha,
            beta: m.beta,
            c: m.c,
            d: m.d,
        }
    }
}

const EXACT_TOL: f64 = 1e-12;

impl WeibullLikeModel {
    pub fn new(alpha: f64, beta: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("c", c), ("d", d)] {
            ensure_finite(name, v)?;
        }
        if !(beta > 1.0) {
            return Err(domain(format!("Weibull-like models need beta > 1, got {beta}")));
        }
        if !(c > 0.0) {
            return Err(domain(format!("c must be > 0, got {c}")));
        }
        if !(d > 0.0) {
            return Err(domain(format!("d must be > 0, got {d}")));
        }
        Ok(Self { alpha, beta, c, d })
    }

    /// Builds the model from the tail prefactor `k_tail` instead of `d`.
    pub fn from_tail_coeff(alpha: f64, beta: f64, c: f64, k_tail: f64) -> Result<Self> {
        Self::new(alpha, beta, c, k_tail * beta * c)
    }

    /// The vanilla Weibull law `F̄(x) = e^{-c x^β}`.
    pub fn vanilla(beta: f64, c: f64) -> Result<Self> {
        Self::new(0.0, beta, c, beta * c)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// `k_tail = d/(βc)`.
    pub fn tail_coeff(&self) -> f64 {
        self.d / (self.beta * self.c)
    }

    /// Leading-order hazard `βc x^{β-1}`, i.e. the derivative of the exponent.
    pub fn lambda(&self, x: f64) -> f64 {
        self.beta * self.c * x.powf(self.beta - 1.0)
    }

    pub fn lambda_prime(&self, x: f64) -> f64 {
        self.beta * (self.beta - 1.0) * self.c * x.powf(self.beta - 2.0)
    }

    /// The exactly samplable law behind a vanilla model.
    pub fn exact_law(&self) -> Result<GammaWeibullModel> {
        if !self.is_exact() {
            return Err(Error::Unsupported(format!(
                "Weibull-like model with alpha={}, d={} only has asymptotic tails; exact laws need alpha=0, d=beta*c",
                self.alpha, self.d
            )));
        }
        GammaWeibullModel::new(self.c, self.beta, self.beta)
    }

    /// Exact draw by inverse transform `(-ln U / c)^{1/β}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if !self.is_exact() {
            return Err(Error::Unsupported(
                "sampling needs an exactly invertible tail (alpha = 0, d = beta*c)".into(),
            ));
        }
        let u: f64 = rng.random();
        Ok((-(1.0 - u).ln() / self.c).powf(1.0 / self.beta))
    }
}

impl TailModel for WeibullLikeModel {
    fn log_tail(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        let v = self.tail_coeff().ln() + self.alpha * x.ln() - self.c * x.powf(self.beta);
        Ok(v.min(0.0))
    }

    fn log_density(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if x <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.d.ln() + (self.alpha + self.beta - 1.0) * x.ln() - self.c * x.powf(self.beta))
    }

    fn hazard_rate(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if !(x > 0.0) {
            return Err(domain(format!("hazard rate needs x > 0, got {x}")));
        }
        Ok(self.lambda(x))
    }

    fn is_exact(&self) -> bool {
        self.alpha == 0.0 && (self.d - self.beta * self.c).abs() <= EXACT_TOL * self.beta * self.c
    }
}

/// Density `β k^{γ/β} x^{γ-1} e^{-k x^β} / Γ(γ/β)` on `x > 0`.
///
/// `X = (Y/k)^{1/β}` with `Y ~ Gamma(γ/β, 1)`, so the tail is exactly `Q(γ/β, k x^β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaWeibullRecord", into = "GammaWeibullRecord")]
pub struct GammaWeibullModel {
    k: f64,
    beta: f64,
    gamma: f64,
    ln_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct GammaWeibullRecord {
    k: f64,
    beta: f64,
    gamma: f64,
}

impl TryFrom<GammaWeibullRecord> for GammaWeibullModel {
    type Error = Error;
    fn try_from(r: GammaWeibullRecord) -> Result<Self> {
        Self::new(r.k, r.beta, r.gamma)
    }
}

impl From<GammaWeibullModel> for GammaWeibullRecord {
    fn from(m: GammaWeibullModel) -> Self {
        Self {
            k: m.k,
            beta: m.beta,
            gamma: m.gamma,
        }
    }
}

impl GammaWeibullModel {
    pub fn new(k: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("k", k), ("beta", beta), ("gamma", gamma)] {
            ensure_finite(name, v)?;
        }
        if !(k > 0.0) {
            return Err(domain(format!("k must be > 0, got {k}")));
        }
        if !(beta >= 1.0) {
            return Err(domain(format!("gamma-Weibull models need beta >= 1, got {beta}")));
        }
        if !(gamma > 0.0) {
            return Err(domain(format!("gamma must be > 0, got {gamma}")));
        }
        let shape = gamma / beta;
        let ln_norm = beta.ln() + shape * k.ln() - ln_gamma(shape);
        Ok(Self {
            k,
            beta,
            gamma,
            ln_norm,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Shape `γ/β` of the underlying gamma variable.
    pub fn shape(&self) -> f64 {
        self.gamma / self.beta
    }

    /// `ln` of the density normalizer `β k^{γ/β} / Γ(γ/β)`.
    pub fn ln_normalizer(&self) -> f64 {
        self.ln_norm
    }

    pub fn mean(&self) -> f64 {
        (ln_gamma((self.gamma + 1.0) / self.beta) - ln_gamma(self.shape())).exp()
            / self.k.powf(1.0 / self.beta)
    }

    /// Derivative of the exponent `k x^β`: `βk x^{β-1}`.
    pub fn lambda(&self, x: f64) -> f64 {
        self.beta * self.k * x.powf(self.beta - 1.0)
    }

    pub fn lambda_prime(&self, x: f64) -> f64 {
        self.beta * (self.beta - 1.0) * self.k * x.powf(self.beta - 2.0)
    }

    /// Inverse of [`Self::lambda`].
    pub fn lambda_inv(&self, theta: f64) -> f64 {
        (theta / (self.beta * self.k)).powf(1.0 / (self.beta - 1.0))
    }

    /// The same law written as a Weibull-like model (`α = γ - β`, `c = k`).
    pub fn as_weibull_like(&self) -> Result<WeibullLikeModel> {
        WeibullLikeModel::new(
            self.gamma - self.beta,
            self.beta,
            self.k,
            self.ln_norm.exp(),
        )
    }

    /// Whether this is the vanilla Weibull law `e^{-k x^β}`.
    pub fn is_vanilla(&self) -> bool {
        self.gamma == self.beta
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = if self.is_vanilla() {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        } else {
            Gamma::new(self.shape(), 1.0)
                .expect("shape validated at construction")
                .sample(rng)
        };
        (y / self.k).powf(1.0 / self.beta)
    }
}

impl TailModel for GammaWeibullModel {
    fn log_tail(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        if self.is_vanilla() {
            return Ok(-self.k * x.powf(self.beta));
        }
        ln_gamma_q(self.shape(), self.k * x.powf(self.beta))
    }

    /// Zero (log `-∞`) for `x ≤ 0` by convention.
    fn log_density(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if x <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.ln_norm + (self.gamma - 1.0) * x.ln() - self.k * x.powf(self.beta))
    }

    fn hazard_rate(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if !(x > 0.0) {
            return Err(domain(format!("hazard rate needs x > 0, got {x}")));
        }
        Ok((self.log_density(x)? - self.log_tail(x)?).exp())
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Flat key–value model record used by configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelSpec {
    WeibullLike(WeibullLikeModel),
    GammaWeibull(GammaWeibullModel),
}

impl ModelSpec {
    pub fn beta(&self) -> f64 {
        match self {
            ModelSpec::WeibullLike(m) => m.beta(),
            ModelSpec::GammaWeibull(m) => m.beta(),
        }
    }

    /// The law as a Weibull-like model (for the asymptotic formulas).
    pub fn weibull_like(&self) -> Result<WeibullLikeModel> {
        match self {
            ModelSpec::WeibullLike(m) => Ok(*m),
            ModelSpec::GammaWeibull(m) => m.as_weibull_like(),
        }
    }

    /// The exactly samplable law, if there is one.
    pub fn exact_law(&self) -> Result<GammaWeibullModel> {
        match self {
            ModelSpec::WeibullLike(m) => m.exact_law(),
            ModelSpec::GammaWeibull(m) => Ok(*m),
        }
    }
}

impl TailModel for ModelSpec {
    fn log_tail(&self, x: f64) -> Result<f64> {
        match self {
            ModelSpec::WeibullLike(m) => m.log_tail(x),
            ModelSpec::GammaWeibull(m) => m.log_tail(x),
        }
    }
    fn log_density(&self, x: f64) -> Result<f64> {
        match self {
            ModelSpec::WeibullLike(m) => m.log_density(x),
            ModelSpec::GammaWeibull(m) => m.log_density(x),
        }
    }
    fn hazard_rate(&self, x: f64) -> Result<f64> {
        match self {
            ModelSpec::WeibullLike(m) => m.hazard_rate(x),
            ModelSpec::GammaWeibull(m) => m.hazard_rate(x),
        }
    }
    fn is_exact(&self) -> bool {
        match self {
            ModelSpec::WeibullLike(m) => m.is_exact(),
            ModelSpec::GammaWeibull(m) => m.is_exact(),
        }
    }
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Light-tailed model given by function handles: density `∼ γ(x) e^{-ψ(x)}`,
/// with `λ = ψ'` increasing to infinity and `λ' = ψ''`.
///
/// Flatness of `γ` relative to `ψ` is the caller's responsibility and is not checked.
#[derive(Clone)]
pub struct BkrModel {
    psi: RealFn,
    lambda: RealFn,
    lambda_prime: RealFn,
    gamma_flat: RealFn,
    support_low: f64,
}

impl fmt::Debug for BkrModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BkrModel")
            .field("support_low", &self.support_low)
            .finish_non_exhaustive()
    }
}

/// Number of grid points for the monotonicity check.
const BKR_GRID: usize = 64;

impl BkrModel {
    /// Validates that `λ` is finite and strictly increasing and `λ' > 0` on a 64-point
    /// log-spaced grid `support_low + 10^u`, `u ∈ [-3, 3]`.
    pub fn new(
        psi: RealFn,
        lambda: RealFn,
        lambda_prime: RealFn,
        gamma_flat: RealFn,
        support_low: f64,
    ) -> Result<Self> {
        ensure_finite("support_low", support_low)?;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..BKR_GRID {
            let u = -3.0 + 6.0 * i as f64 / (BKR_GRID - 1) as f64;
            let z = support_low + 10f64.powf(u);
            let l = lambda(z);
            let lp = lambda_prime(z);
            if !l.is_finite() || l <= prev {
                return Err(domain(format!(
                    "lambda must be finite and strictly increasing; failed at z={z} (lambda={l})"
                )));
            }
            if !(lp > 0.0) {
                return Err(domain(format!("lambda' must be > 0; failed at z={z} (lambda'={lp})")));
            }
            prev = l;
        }
        Ok(Self {
            psi,
            lambda,
            lambda_prime,
            gamma_flat,
            support_low,
        })
    }

    /// `ψ(z) = c z^β`, `γ(z) = d z^{α+β-1}`.
    pub fn from_weibull_like(m: &WeibullLikeModel) -> Result<Self> {
        let (alpha, beta, c, d) = (m.alpha(), m.beta(), m.c(), m.d());
        Self::new(
            Arc::new(move |z| c * z.powf(beta)),
            Arc::new(move |z| beta * c * z.powf(beta - 1.0)),
            Arc::new(move |z| beta * (beta - 1.0) * c * z.powf(beta - 2.0)),
            Arc::new(move |z| d * z.powf(alpha + beta - 1.0)),
            0.0,
        )
    }

    /// Vanilla tail `e^{-c z^p}`: `ψ = c z^p` and `γ = λ`.
    pub fn power(c: f64, p: f64) -> Result<Self> {
        Self::from_weibull_like(&WeibullLikeModel::vanilla(p, c)?)
    }

    pub fn psi(&self, z: f64) -> f64 {
        (self.psi)(z)
    }
    pub fn lambda(&self, z: f64) -> f64 {
        (self.lambda)(z)
    }
    pub fn lambda_prime(&self, z: f64) -> f64 {
        (self.lambda_prime)(z)
    }
    pub fn gamma_flat(&self, z: f64) -> f64 {
        (self.gamma_flat)(z)
    }
    pub fn support_low(&self) -> f64 {
        self.support_low
    }
}
