//! Tail asymptotics of convolutions.
//!
//! * [`pair_constants`] / [`pair_tail_asymptote`]: two Weibull-like summands with a
//!   common exponent `β`, `P(X₁+X₂>x) ∼ k x^γ e^{-c x^β}`.
//! * [`nfold_asymptote`]: the closed form for `n` i.i.d. summands, and
//!   [`nfold_by_recursion`] which iterates the pair result to validate it.
//! * [`bkr_split`] / [`bkr_convolve_at`]: the general convex-exponent case, solved
//!   numerically at a given `x` through the saddle split `λ₁(q₁) = λ₂(q₂)`.
//! * [`exp_class_tail`] / [`beta_norm_log_bound`]: summands whose tails are
//!   `ℓᵢ(x) x^{γᵢ-1} e^{-k x^β}` with slowly varying `ℓᵢ`.
//!
//! Prefactors are carried as logarithms throughout since `k(n)` leaves the `f64`
//! range quickly as `n` grows.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::distributions::{BkrModel, RealFn, WeibullLikeModel};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::solve::bisect;
use crate::special::{ln_gamma, ln_gamma_q};

/// Relative tolerance on the split point.
pub const SPLIT_TOL: f64 = 1e-12;
/// Relative step of the centered difference for `λ'(x)` of a convolution.
pub const LAMBDA_FD_STEP: f64 = 1e-5;

/// Constants of the two-summand asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAsymConstants {
    pub eta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub kappa: f64,
    pub c: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_sq: f64,
    pub k: f64,
    pub log_k: f64,
    pub gamma_exp: f64,
}

/// `k · x^p · e^{-c x^β}`, with `k` stored as `ln k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAsymptote {
    pub log_k: f64,
    pub p: f64,
    pub c: f64,
    pub beta: f64,
}

impl TailAsymptote {
    pub fn k(&self) -> f64 {
        self.log_k.exp()
    }

    /// `ln(k x^p e^{-c x^β})`.
    pub fn log_eval(&self, x: f64) -> f64 {
        self.log_k + self.p * x.ln() - self.c * x.powf(self.beta)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.log_eval(x).exp()
    }

    /// Companion density asymptote `βck · x^{p+β-1} e^{-c x^β}`.
    pub fn density(&self) -> TailAsymptote {
        TailAsymptote {
            log_k: self.log_k + (self.beta * self.c).ln(),
            p: self.p + self.beta - 1.0,
            c: self.c,
            beta: self.beta,
        }
    }

    fn as_parts(&self) -> WeibullParts {
        // density prefactor d = βck
        WeibullParts {
            alpha: self.p,
            c: self.c,
            ln_d: self.log_k + (self.beta * self.c).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct WeibullParts {
    alpha: f64,
    c: f64,
    ln_d: f64,
}

impl From<&WeibullLikeModel> for WeibullParts {
    fn from(m: &WeibullLikeModel) -> Self {
        Self {
            alpha: m.alpha(),
            c: m.c(),
            ln_d: m.d().ln(),
        }
    }
}

fn check_common_beta(b1: f64, b2: f64) -> Result<f64> {
    if (b1 - b2).abs() > 1e-12 * b1.max(b2) {
        return Err(Error::Unsupported(format!(
            "pair asymptotics need a common beta; got {b1} and {b2} (use bkr_split for mixed exponents)"
        )));
    }
    Ok(b1)
}

fn constants_from_parts(m1: WeibullParts, m2: WeibullParts, beta: f64) -> PairAsymConstants {
    let r = 1.0 / (beta - 1.0);
    let a1 = m1.c.powf(r);
    let a2 = m2.c.powf(r);
    let eta = a1 + a2;
    // the smaller weight is computed directly, the larger as its complement
    let (theta1, theta2) = if a2 <= a1 {
        let t1 = a2 / eta;
        (t1, 1.0 - t1)
    } else {
        let t2 = a1 / eta;
        (1.0 - t2, t2)
    };
    let eta_pow = eta.powf(beta - 1.0);
    let kappa = eta_pow / (beta * m1.c * m2.c);
    let c = m1.c * m2.c / eta_pow;
    let inv_s1 = beta * (beta - 1.0) * m1.c * theta1.powf(beta - 2.0) * kappa * kappa;
    let inv_s2 = beta * (beta - 1.0) * m2.c * theta2.powf(beta - 2.0) * kappa * kappa;
    let sigma_sq = 1.0 / (inv_s1 + inv_s2);
    let log_k = m1.ln_d + m2.ln_d + m1.alpha * theta1.ln() + m2.alpha * theta2.ln() + kappa.ln()
        + (1.0 - beta) * eta.ln()
        + 0.5 * (2.0 * PI * sigma_sq).ln()
        - beta.ln();
    PairAsymConstants {
        eta,
        theta1,
        theta2,
        kappa,
        c,
        sigma1_sq: 1.0 / inv_s1,
        sigma2_sq: 1.0 / inv_s2,
        sigma_sq,
        k: log_k.exp(),
        log_k,
        gamma_exp: m1.alpha + m2.alpha + beta / 2.0,
    }
}

/// Constants of the two-summand asymptote for densities `dᵢ x^{αᵢ+β-1} e^{-cᵢ x^β}`.
pub fn pair_constants(m1: &WeibullLikeModel, m2: &WeibullLikeModel) -> Result<PairAsymConstants> {
    let beta = check_common_beta(m1.beta(), m2.beta())?;
    Ok(constants_from_parts(m1.into(), m2.into(), beta))
}

/// `P(X₁+X₂>x) ∼ k x^γ e^{-c x^β}`.
pub fn pair_tail_asymptote(m1: &WeibullLikeModel, m2: &WeibullLikeModel) -> Result<TailAsymptote> {
    let pc = pair_constants(m1, m2)?;
    Ok(TailAsymptote {
        log_k: pc.log_k,
        p: pc.gamma_exp,
        c: pc.c,
        beta: m1.beta(),
    })
}

/// Density of `X₁+X₂`: `βck x^{γ+β-1} e^{-c x^β}`.
pub fn pair_density_asymptote(m1: &WeibullLikeModel, m2: &WeibullLikeModel) -> Result<TailAsymptote> {
    Ok(pair_tail_asymptote(m1, m2)?.density())
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(domain("number of summands must be >= 1"));
    }
    Ok(())
}

/// Tail asymptote of the `n`-fold convolution in closed form:
/// `c(n) = c/n^{β-1}`, `α(n) = nα + (n-1)β/2` and
/// `k(n) = dⁿ/(βc) · [2π/(β(β-1)c)]^{(n-1)/2} · n^{(β - n(2α+β) - 1)/2}`.
pub fn nfold_asymptote(model: &WeibullLikeModel, n: usize) -> Result<TailAsymptote> {
    check_n(n)?;
    let (alpha, beta, c, d) = (model.alpha(), model.beta(), model.c(), model.d());
    let nf = n as f64;
    let log_k = nf * d.ln() - (beta * c).ln()
        + 0.5 * (nf - 1.0) * (2.0 * PI / (beta * (beta - 1.0) * c)).ln()
        + 0.5 * (beta - nf * (2.0 * alpha + beta) - 1.0) * nf.ln();
    Ok(TailAsymptote {
        log_k,
        p: nf * alpha + (nf - 1.0) * beta / 2.0,
        c: c / nf.powf(beta - 1.0),
        beta,
    })
}

/// The same asymptote obtained by pairing `F` with `F^{*(n-1)}` repeatedly.
pub fn nfold_by_recursion(model: &WeibullLikeModel, n: usize) -> Result<TailAsymptote> {
    if n < 2 {
        return Err(domain("recursion needs n >= 2"));
    }
    let beta = model.beta();
    let base = WeibullParts::from(model);
    let mut current = nfold_asymptote(model, 1)?;
    for _ in 2..=n {
        let pc = constants_from_parts(base, current.as_parts(), beta);
        current = TailAsymptote {
            log_k: pc.log_k,
            p: pc.gamma_exp,
            c: pc.c,
            beta,
        };
    }
    Ok(current)
}

/// Saddle split of `x` between two summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSolution {
    pub q1: f64,
    pub q2: f64,
    #[serde(rename = "lambda")]
    pub lambda_at_split: f64,
    #[serde(rename = "psi")]
    pub psi_sum: f64,
    #[serde(skip)]
    pub gamma_out: f64,
    /// `|λ₁(q₁) - λ₂(q₂)| / λ₁(q₁)`.
    pub residual: f64,
}

fn solve_split(m1: &BkrModel, m2: &BkrModel, x: f64) -> Result<(f64, f64)> {
    ensure_finite("x", x)?;
    let lo = m1.support_low();
    let hi = x - m2.support_low();
    if !(hi > lo) {
        return Err(Error::NoSolution(format!(
            "x={x} is too small for the supports starting at {} and {}",
            m1.support_low(),
            m2.support_low()
        )));
    }
    let g = |q: f64| m1.lambda(q) - m2.lambda(x - q);
    let q1 = bisect(g, lo, hi, 1e-16).map_err(|_| {
        Error::NoSolution(format!(
            "lambda ranges do not cross on [{lo}, {hi}] at x={x}"
        ))
    })?;
    Ok((q1, x - q1))
}

fn lambda_of_convolution(m1: &BkrModel, m2: &BkrModel, x: f64) -> Result<f64> {
    let (q1, _) = solve_split(m1, m2, x)?;
    Ok(m1.lambda(q1))
}

/// Solves `q₁ + q₂ = x`, `λ₁(q₁) = λ₂(q₂)` by bracketed bisection and evaluates the
/// convolution's exponent `ψ(x) = ψ₁(q₁) + ψ₂(q₂)` and flat prefactor `γ(x)`.
pub fn bkr_split(m1: &BkrModel, m2: &BkrModel, x: f64) -> Result<SplitSolution> {
    let conv = bkr_convolve_at(m1, m2, x)?;
    Ok(conv.split)
}

/// Evaluation of the convolution `F₁ * F₂` at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkrConvolution {
    pub psi_x: f64,
    pub gamma_x: f64,
    pub log_gamma_x: f64,
    pub lambda_x: f64,
    pub lambda_prime_x: f64,
    /// `ln γ(x) - ψ(x) - ln λ(x)`.
    pub log_tail: f64,
    pub split: SplitSolution,
}

/// Density `γ(x) e^{-ψ(x)}` and tail `γ(x) e^{-ψ(x)} / λ(x)` of `F₁ * F₂` at `x`, with
/// `γ(x) = √(2πλ'(x) / (λ₁'(q₁) λ₂'(q₂))) γ₁(q₁) γ₂(q₂)` and `λ(x) = λ₁(q₁)`.
/// `λ'(x)` is a centered difference of `λ` over `x ± 10⁻⁵ x`.
pub fn bkr_convolve_at(m1: &BkrModel, m2: &BkrModel, x: f64) -> Result<BkrConvolution> {
    let (q1, q2) = solve_split(m1, m2, x)?;
    let l1 = m1.lambda(q1);
    let l2 = m2.lambda(q2);
    let h = x * LAMBDA_FD_STEP;
    let lambda_prime_x =
        (lambda_of_convolution(m1, m2, x + h)? - lambda_of_convolution(m1, m2, x - h)?) / (2.0 * h);
    let psi_x = m1.psi(q1) + m2.psi(q2);
    let log_gamma_x = 0.5
        * ((2.0 * PI).ln() + lambda_prime_x.ln() - m1.lambda_prime(q1).ln() - m2.lambda_prime(q2).ln())
        + m1.gamma_flat(q1).ln()
        + m2.gamma_flat(q2).ln();
    let gamma_x = log_gamma_x.exp();
    let split = SplitSolution {
        q1,
        q2,
        lambda_at_split: l1,
        psi_sum: psi_x,
        gamma_out: gamma_x,
        residual: (l1 - l2).abs() / l1.abs(),
    };
    Ok(BkrConvolution {
        psi_x,
        gamma_x,
        log_gamma_x,
        lambda_x: l1,
        lambda_prime_x,
        log_tail: log_gamma_x - psi_x - l1.ln(),
        split,
    })
}

/// One summand with tail `ℓ(x) x^{γ-1} e^{-k x^β}`.
#[derive(Clone)]
pub struct ExpClassTerm {
    pub ell: RealFn,
    pub gamma: f64,
}

impl std::fmt::Debug for ExpClassTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExpClassTerm").field("gamma", &self.gamma).finish_non_exhaustive()
    }
}

impl ExpClassTerm {
    pub fn new(ell: RealFn, gamma: f64) -> Self {
        Self { ell, gamma }
    }

    pub fn constant(ell: f64, gamma: f64) -> Self {
        Self::new(std::sync::Arc::new(move |_| ell), gamma)
    }

    /// Leading-order tail of a gamma-Weibull law:
    /// `Q(γ/β, k x^β) ∼ k^{γ/β-1}/Γ(γ/β) · x^{γ-β} e^{-k x^β}`.
    pub fn gamma_weibull(m: &crate::GammaWeibullModel) -> Self {
        let shape = m.shape();
        let ell = ((shape - 1.0) * m.k().ln() - ln_gamma(shape)).exp();
        Self::constant(ell, m.gamma() - m.beta() + 1.0)
    }
}

fn check_terms(terms: &[ExpClassTerm], k: f64) -> Result<()> {
    if terms.is_empty() {
        return Err(domain("at least one summand is required"));
    }
    if !(k > 0.0) {
        return Err(domain(format!("k must be > 0, got {k}")));
    }
    for t in terms {
        if !(t.gamma > 0.0) {
            return Err(domain(format!("gamma_i must be > 0, got {}", t.gamma)));
        }
    }
    Ok(())
}

/// `ln ΠΓ(γᵢ)`: the factor separating the correct `β = 1` constant from the form
/// `k^{n-1}/Γ(γ₀)` that is sometimes quoted (and which already fails for `n = 1`).
pub fn exp_class_gamma_factor(terms: &[ExpClassTerm]) -> f64 {
    terms.iter().map(|t| ln_gamma(t.gamma)).sum()
}

/// `ln P(Sₙ > x)` for independent summands with tails `ℓᵢ(x) x^{γᵢ-1} e^{-kx}`:
///
/// `P(Sₙ>x) ∼ k^{n-1} ΠΓ(γᵢ) / Γ(γ₀) · x^{γ₀-1} Πℓᵢ(x) e^{-kx}`, `γ₀ = Σγᵢ`.
///
/// The constant is the one reproduced by exact gamma convolutions
/// (`Gamma(γ₁,k) * Gamma(γ₂,k) = Gamma(γ₁+γ₂,k)`).
pub fn exp_class_tail(terms: &[ExpClassTerm], k: f64, x: f64) -> Result<f64> {
    check_terms(terms, k)?;
    ensure_finite("x", x)?;
    if !(x > 0.0) {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    let n = terms.len() as f64;
    let gamma0: f64 = terms.iter().map(|t| t.gamma).sum();
    let log_ell: f64 = terms.iter().map(|t| (t.ell)(x).ln()).sum();
    Ok((n - 1.0) * k.ln() + exp_class_gamma_factor(terms) - ln_gamma(gamma0)
        + (gamma0 - 1.0) * x.ln()
        + log_ell
        - k * x)
}

/// Upper bound on `ln P(Sₙ > x)` for non-negative summands with tails
/// `ℓᵢ(x) x^{γᵢ-1} e^{-k x^β}`, from `Sₙ > x ⇒ Σ Xᵢ^β > x^β / n^{β-1}`.
///
/// `Xᵢ^β` has an exponential-class tail of index `γᵢ' = 1 + (γᵢ-1)/β`, and the sum of
/// the powers is evaluated as `ΠAᵢ · Q(γ₀', k y)` with `y = x^β/n^{β-1}` and
/// `Aᵢ = ℓᵢ(y^{1/β}) Γ(γᵢ') / k^{γᵢ'-1}`. For gamma-Weibull summands this is exactly
/// the incomplete-gamma upper bound, valid for every `x > 0`; in general it holds
/// asymptotically and behaves like `-k n (x/n)^β`.
pub fn beta_norm_log_bound(terms: &[ExpClassTerm], k: f64, beta: f64, x: f64) -> Result<f64> {
    check_terms(terms, k)?;
    ensure_finite("x", x)?;
    if !(beta >= 1.0) {
        return Err(domain(format!("beta must be >= 1, got {beta}")));
    }
    if !(x > 0.0) {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    let n = terms.len() as f64;
    let y = x.powf(beta) / n.powf(beta - 1.0);
    let root = y.powf(1.0 / beta);
    let mut log_a = 0.0;
    let mut shape0 = 0.0;
    for t in terms {
        let shape = 1.0 + (t.gamma - 1.0) / beta;
        if !(shape > 0.0) {
            return Err(domain(format!(
                "gamma_i = {} gives a non-positive shape for X^beta",
                t.gamma
            )));
        }
        log_a += (t.ell)(root).ln() + ln_gamma(shape) - (shape - 1.0) * k.ln();
        shape0 += shape;
    }
    Ok(log_a + ln_gamma_q(shape0, k * y)?)
}
