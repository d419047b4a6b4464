//! Exponential tilting: moment generating functions and the tilted sampler.
//!
//! The tilted law of `X` at level `θ` has density `e^{θy} f(y) / F̂[θ]`. At
//! `θ = λ(y₀)`, with `λ(y) = βc y^{β-1}` the derivative of the exponent, the tilted law
//! is centred at `y₀` with variance close to `1/λ'(y₀)`.
//!
//! The sampler draws from the tilted gamma-Weibull density by acceptance–rejection
//! against a moment-matched `Gamma(a, b)` proposal. The log-ratio of target to proposal
//! is `r(y) = (θ+b) y - k y^β + (γ-a) ln y + const`. Its stationary points are the roots
//! of the concave function `s(y) = y r'(y)`. When `a > γ`, `r` tends to `+∞` at the origin,
//! so no finite multiple of the gamma density covers the whole half-line. The sampler
//! therefore splits at the local minimum `y_s` of `r`:
//!
//! * on `[y_s, ∞)` the gamma proposal with constant `M = e^{r(y*)} · 1.01` is used, `y*`
//!   being the right root of `s`;
//! * on `[0, y_s)` the log-concave factor `θy - k y^β` is bounded by its tangent at `y_s`,
//!   giving a two-piece envelope that is sampled directly.
//!
//! The region is chosen first with its exact probability (by quadrature), so draws are
//! exact. Every proposal is checked against its envelope at runtime.

use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use crate::distributions::{GammaWeibullModel, WeibullLikeModel};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::quad::{integrate_log, integrate_log_pieces, QuadratureSpec};
use crate::solve::{bisect, golden_max};
use crate::special::{ln_gamma, log_add_exp};

/// Multiplicative safety factor on the acceptance–rejection constant.
pub const ENVELOPE_SAFETY: f64 = 1.01;

/// Saddle point `y = λ⁻¹(θ)` of `e^{θy - c y^β}`.
pub fn saddle_point(model: &WeibullLikeModel, theta: f64) -> f64 {
    (theta / (model.beta() * model.c())).powf(1.0 / (model.beta() - 1.0))
}

/// Whether `θ` is in the regime where the Laplace approximation is meant to be used
/// (`λ⁻¹(θ) ≥ 1`).
pub fn in_asymptotic_regime(model: &WeibullLikeModel, theta: f64) -> bool {
    saddle_point(model, theta) >= 1.0
}

fn check_theta(theta: f64) -> Result<()> {
    ensure_finite("theta", theta)?;
    if !(theta > 0.0) {
        return Err(domain(format!("theta must be > 0, got {theta}")));
    }
    Ok(())
}

/// `ln F̂[θ]` to leading order: `√(2π/λ'(y)) γ(y) e^{θy - c y^β}` with `y = λ⁻¹(θ)` and
/// `γ(y) = d y^{α+β-1}`. For `c = 1` the exponent is `(β-1) y^β`.
pub fn mgf_asym(model: &WeibullLikeModel, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let y = saddle_point(model, theta);
    let (alpha, beta, c, d) = (model.alpha(), model.beta(), model.c(), model.d());
    Ok(0.5 * (2.0 * std::f64::consts::PI / model.lambda_prime(y)).ln()
        + d.ln()
        + (alpha + beta - 1.0) * y.ln()
        + theta * y
        - c * y.powf(beta))
}

/// Closed form of [`mgf_asym`] for the plain Weibull tail `e^{-x^β}`:
/// `√(2π β^{1/(1-β)}/(β-1)) t^{β/(2(β-1))} e^{(β-1)(t/β)^{β/(β-1)}}`.
pub fn mgf_asym_weibull(beta: f64, t: f64) -> Result<f64> {
    check_theta(t)?;
    if !(beta > 1.0) {
        return Err(domain(format!("beta must be > 1, got {beta}")));
    }
    let q = beta / (beta - 1.0);
    Ok(0.5 * (2.0 * std::f64::consts::PI * beta.powf(1.0 / (1.0 - beta)) / (beta - 1.0)).ln()
        + 0.5 * q * t.ln()
        + (beta - 1.0) * (t / beta).powf(q))
}

/// `ln E[X^j e^{θX}] ≈ j ln y + ln F̂[θ]` with `y = λ⁻¹(θ)`.
pub fn tilted_moment_asym(model: &WeibullLikeModel, theta: f64, j: u32) -> Result<f64> {
    let base = mgf_asym(model, theta)?;
    if j == 0 {
        return Ok(base);
    }
    Ok(j as f64 * saddle_point(model, theta).ln() + base)
}

/// Numerically integrated m.g.f. and its first two derivatives, all as logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfNumeric {
    /// `ln ∫ e^{θz} f(z) dz`.
    pub log_mgf: f64,
    /// `ln ∫ z e^{θz} f(z) dz`.
    pub log_d1: f64,
    /// `ln ∫ z² e^{θz} f(z) dz`.
    pub log_d2: f64,
    pub rel_error: f64,
}

impl MgfNumeric {
    /// Mean of the tilted law, `F̂'/F̂`.
    pub fn tilted_mean(&self) -> f64 {
        (self.log_d1 - self.log_mgf).exp()
    }

    /// Variance of the tilted law, `F̂''/F̂ - (F̂'/F̂)²`.
    pub fn tilted_variance(&self) -> f64 {
        let m2 = (self.log_d2 - self.log_mgf).exp();
        let m1 = self.tilted_mean();
        m2 - m1 * m1
    }
}

/// `ln ∫_{lo}^{hi} z^j e^{θz} f(z) dz` for a gamma-Weibull density, `hi` possibly infinite.
fn log_tilted_integral(
    model: &GammaWeibullModel,
    theta: f64,
    j: u32,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let (k, beta, gamma) = (model.k(), model.beta(), model.gamma());
    let ln_norm = model.ln_normalizer();
    let q = gamma + j as f64;
    let log_g = |z: f64| ln_norm + (q - 1.0) * z.ln() + theta * z - k * z.powf(beta);
    // stationary point of log_g from s(z) = z (log g)'(z)
    let s = |z: f64| theta * z + q - 1.0 - k * beta * z.powf(beta);
    let peak = if beta == 1.0 {
        ((q - 1.0) / (k - theta)).max(0.0)
    } else {
        let z_m = (theta / (k * beta * beta)).powf(1.0 / (beta - 1.0));
        if s(z_m) <= 0.0 {
            0.0
        } else {
            let mut upper = (z_m * 2.0).max(1.0);
            while s(upper) > 0.0 {
                upper *= 2.0;
            }
            bisect(s, z_m, upper, 1e-14)?
        }
    };
    let curvature = if peak > 0.0 {
        (q - 1.0) / (peak * peak) + k * beta * (beta - 1.0) * peak.powf(beta - 2.0)
    } else {
        0.0
    };
    let width = if curvature > 0.0 {
        1.0 / curvature.sqrt()
    } else {
        k.powf(-1.0 / beta)
    };
    let shift = if peak > 0.0 {
        log_g(peak)
    } else {
        ln_norm - q.ln()
    };
    let drop = shift + spec.abs_log_floor - 40.0;
    let mut end = peak + width;
    while log_g(end) > drop {
        end = peak + 2.0 * (end - peak);
    }
    let top = hi.min(end);
    if !(top > lo) {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let mut breaks = vec![lo];
    if peak > lo && peak < top {
        breaks.push(peak);
    }
    breaks.push(top);

    let mut log_value = f64::NEG_INFINITY;
    let mut abs_err = 0.0;
    let first_hi = breaks[1];
    if lo == 0.0 && q < 1.0 {
        // z = u^{1/q} removes the z^{q-1} singularity at the origin
        let sub = |u: f64| {
            if u == 0.0 {
                ln_norm - q.ln()
            } else {
                log_g(u.powf(1.0 / q)) - q.ln() + (1.0 / q - 1.0) * u.ln()
            }
        };
        let part = integrate_log(sub, 0.0, first_hi.powf(q), shift, spec)?;
        log_value = part.log_value;
        abs_err += part.rel_error * (part.log_value - shift).exp();
    } else {
        let part = integrate_log(log_g, lo, first_hi, shift, spec)?;
        log_value = log_add_exp(log_value, part.log_value);
        abs_err += part.rel_error * (part.log_value - shift).exp();
    }
    if breaks.len() > 2 {
        let rest = integrate_log_pieces(log_g, &breaks[1..], shift, spec)?;
        if rest.log_value > f64::NEG_INFINITY {
            abs_err += rest.rel_error * (rest.log_value - shift).exp();
            log_value = log_add_exp(log_value, rest.log_value);
        }
    }
    let scaled = (log_value - shift).exp();
    Ok((log_value, if scaled > 0.0 { abs_err / scaled } else { 0.0 }))
}

fn check_mgf_args(model: &GammaWeibullModel, theta: f64) -> Result<()> {
    ensure_finite("theta", theta)?;
    if theta < 0.0 {
        return Err(domain(format!("theta must be >= 0, got {theta}")));
    }
    if model.beta() == 1.0 && theta >= model.k() {
        return Err(domain(format!(
            "the m.g.f. of an exponential-class law is finite only for theta < k = {}",
            model.k()
        )));
    }
    Ok(())
}

/// `ln F̂[θ]`, `ln F̂'[θ]` and `ln F̂''[θ]` by adaptive quadrature.
pub fn mgf_numeric(model: &GammaWeibullModel, theta: f64, spec: &QuadratureSpec) -> Result<MgfNumeric> {
    check_mgf_args(model, theta)?;
    spec.validate()?;
    let (log_mgf, e0) = log_tilted_integral(model, theta, 0, 0.0, f64::INFINITY, spec)?;
    let (log_d1, e1) = log_tilted_integral(model, theta, 1, 0.0, f64::INFINITY, spec)?;
    let (log_d2, e2) = log_tilted_integral(model, theta, 2, 0.0, f64::INFINITY, spec)?;
    Ok(MgfNumeric {
        log_mgf,
        log_d1,
        log_d2,
        rel_error: e0.max(e1).max(e2),
    })
}

/// `ln ∫₀^{u} e^{θz} f(z) dz`, the tilted mass below `u` (unnormalized).
pub fn log_tilted_mass_below(model: &GammaWeibullModel, theta: f64, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_mgf_args(model, theta)?;
    Ok(log_tilted_integral(model, theta, 0, 0.0, u, spec)?.0)
}

/// Left-region envelope: `y^{γ-1} e^{u(y_s) + s(y - y_s)}` with the power factor bounded
/// on `[m, y_s]` and the exponential bounded on `[0, m]`, `m = y_s/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LeftEnvelope {
    ys: f64,
    m: f64,
    slope: f64,
    /// `ln` of the tilted normalized density's constant part at `y_s`.
    log_base: f64,
    /// `ln max(m^{γ-1}, y_s^{γ-1})`.
    log_c2: f64,
    log_mass1: f64,
    log_mass2: f64,
}

impl LeftEnvelope {
    fn log_mass(&self) -> f64 {
        log_add_exp(self.log_mass1, self.log_mass2)
    }
}

/// Acceptance–rejection sampler for the tilted gamma-Weibull density.
#[derive(Debug, Clone)]
pub struct TiltedSampler {
    model: GammaWeibullModel,
    /// Tilt level.
    pub theta: f64,
    /// Gamma proposal shape.
    pub proposal_a: f64,
    /// Gamma proposal rate.
    pub proposal_b: f64,
    /// `ln M` of the gamma-proposal region, including the safety factor.
    pub envelope_log_m: f64,
    pub accept_count: u64,
    pub propose_count: u64,
    /// The centring point `x/n`.
    pub center: f64,
    /// `ln F̂[θ]`.
    pub log_mgf: f64,
    /// `λ⁻¹(θ) ≥ 1`.
    pub in_asymptotic_regime: bool,
    /// Probability of the left region `[0, y_s)` under the tilted law.
    pub p_left: f64,
    y_star: f64,
    left: Option<LeftEnvelope>,
    gamma_proposal: Gamma<f64>,
    log_gamma_norm: f64,
}

/// Exported diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "logM")]
    pub log_m: f64,
    pub acceptance_rate: f64,
}

struct Shape {
    ys: f64,
    y_star: f64,
    log_m: f64,
    left: Option<LeftEnvelope>,
}

/// Locates `y_s` and `y*` and computes both envelopes for proposal `(a, b)`.
fn envelope_shape(model: &GammaWeibullModel, theta: f64, log_mgf: f64, a: f64, b: f64) -> Result<Shape> {
    let (k, beta, gamma) = (model.k(), model.beta(), model.gamma());
    let s = |y: f64| (theta + b) * y - k * beta * y.powf(beta) + gamma - a;
    let y_m = ((theta + b) / (k * beta * beta)).powf(1.0 / (beta - 1.0));
    if !(s(y_m) > 0.0) {
        return Err(Error::NoSolution(format!(
            "log-ratio has no interior maximum for proposal a={a}, b={b}"
        )));
    }
    let mut upper = 2.0 * y_m;
    while s(upper) >= 0.0 {
        upper *= 2.0;
        if !upper.is_finite() {
            return Err(Error::NoSolution("envelope maximum could not be bracketed".into()));
        }
    }
    let y_star = bisect(s, y_m, upper, 1e-14)?;
    let ys = if s(0.0) < 0.0 { bisect(s, 0.0, y_m, 1e-14)? } else { 0.0 };

    let log_gamma_norm = a * b.ln() - ln_gamma(a);
    let log_target = |y: f64| model.ln_normalizer() + (gamma - 1.0) * y.ln() + theta * y - k * y.powf(beta) - log_mgf;
    let log_ratio = |y: f64| log_target(y) - (log_gamma_norm + (a - 1.0) * y.ln() - b * y);
    let log_m = log_ratio(y_star) + ENVELOPE_SAFETY.ln();

    let left = if ys > 0.0 {
        let m = 0.5 * ys;
        let slope = theta - k * beta * ys.powf(beta - 1.0);
        if !(slope > 0.0) {
            return Err(Error::NoSolution(format!(
                "split point {ys} lies beyond the mode of the tilted exponent"
            )));
        }
        let u_s = theta * ys - k * ys.powf(beta);
        let log_base = model.ln_normalizer() + u_s - log_mgf;
        let log_c2 = (gamma - 1.0) * if gamma >= 1.0 { ys.ln() } else { m.ln() };
        // piece 1: ∫₀^m y^{γ-1} dy · e^{slope(m - ys)}
        let log_mass1 = log_base + slope * (m - ys) + gamma * m.ln() - gamma.ln();
        // piece 2: C₂ ∫_m^{ys} e^{slope(y - ys)} dy
        let log_mass2 = log_base + log_c2 + crate::special::log1mexp(-slope * (ys - m)) - slope.ln();
        Some(LeftEnvelope {
            ys,
            m,
            slope,
            log_base,
            log_c2,
            log_mass1,
            log_mass2,
        })
    } else {
        None
    };
    Ok(Shape {
        ys,
        y_star,
        log_m,
        left,
    })
}

/// `ln` of the expected number of proposals per accepted draw, `M + (left envelope mass)`.
fn log_expected_proposals(shape: &Shape) -> f64 {
    match &shape.left {
        Some(l) => log_add_exp(shape.log_m, l.log_mass()),
        None => shape.log_m,
    }
}

fn validate_tilt_model(model: &GammaWeibullModel) -> Result<()> {
    if !(model.beta() > 1.0) {
        return Err(Error::Unsupported(format!(
            "tilted sampling needs beta > 1, got {}",
            model.beta()
        )));
    }
    Ok(())
}

fn build_sampler(
    model: &GammaWeibullModel,
    theta: f64,
    center: f64,
    log_mgf: f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<TiltedSampler> {
    let shape = envelope_shape(model, theta, log_mgf, a, b)?;
    let p_left = if shape.ys > 0.0 {
        (log_tilted_mass_below(model, theta, shape.ys, spec)? - log_mgf).exp().clamp(0.0, 1.0)
    } else {
        0.0
    };
    let gamma_proposal = Gamma::new(a, 1.0 / b).map_err(|e| domain(format!("gamma proposal: {e}")))?;
    let w = WeibullLikeModel::new(
        model.gamma() - model.beta(),
        model.beta(),
        model.k(),
        1.0,
    )?;
    Ok(TiltedSampler {
        model: *model,
        theta,
        proposal_a: a,
        proposal_b: b,
        envelope_log_m: shape.log_m,
        accept_count: 0,
        propose_count: 0,
        center,
        log_mgf,
        in_asymptotic_regime: in_asymptotic_regime(&w, theta),
        p_left,
        y_star: shape.y_star,
        left: shape.left,
        gamma_proposal,
        log_gamma_norm: a * b.ln() - ln_gamma(a),
    })
}

/// Sampler for the tilt `θ = λ(x/n)` with proposal `a = (x/n)² λ'(x/n)`, `b = (x/n) λ'(x/n)`.
pub fn make_tilted_sampler(model: &GammaWeibullModel, x: f64, n: usize) -> Result<TiltedSampler> {
    validate_tilt_model(model)?;
    ensure_finite("x", x)?;
    if !(x > 0.0) || n == 0 {
        return Err(domain(format!("need x > 0 and n >= 1, got x={x}, n={n}")));
    }
    let y0 = x / n as f64;
    let theta = model.lambda(y0);
    let lp = model.lambda_prime(y0);
    let spec = QuadratureSpec::default();
    let log_mgf = mgf_numeric(model, theta, &spec)?.log_mgf;
    build_sampler(model, theta, y0, log_mgf, y0 * y0 * lp, y0 * lp, &spec)
}

impl TiltedSampler {
    pub fn model(&self) -> &GammaWeibullModel {
        &self.model
    }

    /// Right root of `s`, the location of the gamma-region envelope maximum.
    pub fn envelope_argmax(&self) -> f64 {
        self.y_star
    }

    /// Split between the two envelope regions (0 when the gamma proposal covers all).
    pub fn split_point(&self) -> f64 {
        self.left.map_or(0.0, |l| l.ys)
    }

    /// `ln` of the expected number of proposals per accepted draw.
    pub fn log_expected_proposals(&self) -> f64 {
        match &self.left {
            Some(l) => log_add_exp(self.envelope_log_m, l.log_mass()),
            None => self.envelope_log_m,
        }
    }

    /// Proposal mean `a/b` and standard deviation `√a/b`.
    pub fn proposal_moments(&self) -> (f64, f64) {
        (
            self.proposal_a / self.proposal_b,
            self.proposal_a.sqrt() / self.proposal_b,
        )
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.propose_count == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.propose_count as f64
        }
    }

    pub fn diagnostics(&self) -> SamplerDiagnostics {
        SamplerDiagnostics {
            theta: self.theta,
            a: self.proposal_a,
            b: self.proposal_b,
            log_m: self.envelope_log_m,
            acceptance_rate: self.acceptance_rate(),
        }
    }

    /// `ln` of the normalized tilted density.
    pub fn log_tilted_density(&self, y: f64) -> f64 {
        let m = &self.model;
        m.ln_normalizer() + (m.gamma() - 1.0) * y.ln() + self.theta * y - m.k() * y.powf(m.beta()) - self.log_mgf
    }

    fn sample_right<R: Rng + ?Sized>(&mut self, rng: &mut R, ys: f64) -> Result<f64> {
        loop {
            let y: f64 = self.gamma_proposal.sample(rng);
            self.propose_count += 1;
            if y < ys || y <= 0.0 {
                continue;
            }
            let log_g = self.log_gamma_norm + (self.proposal_a - 1.0) * y.ln() - self.proposal_b * y;
            let excess = self.log_tilted_density(y) - log_g - self.envelope_log_m;
            if excess > 0.0 {
                return Err(Error::Envelope(format!(
                    "ratio exceeds envelope by {excess:e} (log scale) at y={y}"
                )));
            }
            let u: f64 = rng.random();
            if u.ln() < excess {
                self.accept_count += 1;
                return Ok(y);
            }
        }
    }

    fn sample_left<R: Rng + ?Sized>(&mut self, rng: &mut R, env: LeftEnvelope) -> Result<f64> {
        let gamma = self.model.gamma();
        let p1 = (env.log_mass1 - env.log_mass()).exp();
        loop {
            self.propose_count += 1;
            let (y, log_env) = if rng.random::<f64>() < p1 {
                let u: f64 = rng.random();
                let y = env.m * u.powf(1.0 / gamma);
                (y, env.log_base + env.slope * (env.m - env.ys) + (gamma - 1.0) * y.ln())
            } else {
                let v: f64 = rng.random();
                let span = env.ys - env.m;
                let y = env.ys + (1.0 - v * (-(-env.slope * span).exp_m1())).ln() / env.slope;
                let y = y.clamp(env.m, env.ys);
                (y, env.log_base + env.log_c2 + env.slope * (y - env.ys))
            };
            if !(y > 0.0) {
                continue;
            }
            let excess = self.log_tilted_density(y) - log_env;
            if excess > 1e-12 {
                return Err(Error::Envelope(format!(
                    "left-region ratio exceeds envelope by {excess:e} (log scale) at y={y}"
                )));
            }
            let u: f64 = rng.random();
            if u.ln() < excess {
                self.accept_count += 1;
                return Ok(y);
            }
        }
    }
}

/// One exact draw from the tilted density.
pub fn sample_tilted<R: Rng + ?Sized>(sampler: &mut TiltedSampler, rng: &mut R) -> Result<f64> {
    match sampler.left {
        Some(env) if rng.random::<f64>() < sampler.p_left => sampler.sample_left(rng, env),
        Some(env) => sampler.sample_right(rng, env.ys),
        None => sampler.sample_right(rng, 0.0),
    }
}

/// Cap on coordinate-descent rounds in [`tune_proposal`].
const MAX_TUNING_ROUNDS: usize = 100;

/// Searches `(μ, σ)` of the gamma proposal (`a = μ²/σ²`, `b = μ/σ²`) to reduce the
/// expected number of proposals per draw, by coordinate descent with golden-section
/// search on each coordinate (at least three rounds, then until the gain stalls).
/// Returns the input unchanged when no improvement is found.
pub fn tune_proposal(sampler: &TiltedSampler) -> Result<TiltedSampler> {
    let model = sampler.model;
    let (theta, log_mgf) = (sampler.theta, sampler.log_mgf);
    let cost = |mu: f64, sigma: f64| -> f64 {
        if !(mu > 0.0 && sigma > 0.0) {
            return f64::INFINITY;
        }
        let a = mu * mu / (sigma * sigma);
        let b = mu / (sigma * sigma);
        match envelope_shape(&model, theta, log_mgf, a, b) {
            Ok(shape) => log_expected_proposals(&shape),
            Err(_) => f64::INFINITY,
        }
    };
    let (mut mu, mut sigma) = sampler.proposal_moments();
    let start = cost(mu, sigma);
    let sd0 = sigma;
    let mut current = start;
    for round in 0..MAX_TUNING_ROUNDS {
        let (m, _) = golden_max(|v| -cost(v, sigma), mu - 2.0 * sd0, mu + 2.0 * sd0, 1e-12);
        let (s, _) = golden_max(|v| -cost(m, v), 0.5 * sigma, 2.0 * sigma, 1e-12);
        let next = cost(m, s);
        if next < current {
            mu = m;
            sigma = s;
        }
        let gain = current - next;
        current = current.min(next);
        if round >= 2 && !(gain > 1e-13) {
            break;
        }
    }
    let tuned = cost(mu, sigma);
    if !(tuned < start) {
        return Ok(sampler.clone());
    }
    build_sampler(
        &model,
        theta,
        sampler.center,
        log_mgf,
        mu * mu / (sigma * sigma),
        mu / (sigma * sigma),
        &QuadratureSpec::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rayleigh() -> GammaWeibullModel {
        GammaWeibullModel::new(1.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn mgf_asym_beta2_closed_form() {
        let w = WeibullLikeModel::vanilla(2.0, 1.0).unwrap();
        for &t in &[2.0, 8.0, 20.0] {
            let v = mgf_asym(&w, t).unwrap();
            let expect = t * t / 4.0 + t.ln() + 0.5 * std::f64::consts::PI.ln();
            assert!((v - expect).abs() < 1e-12);
            assert!((mgf_asym_weibull(2.0, t).unwrap() - expect).abs() < 1e-12);
        }
        assert!(mgf_asym(&w, 0.0).is_err());
    }

    #[test]
    fn mgf_asym_matches_weibull_closed_form() {
        for &beta in &[1.3, 1.5, 3.0] {
            let w = WeibullLikeModel::vanilla(beta, 1.0).unwrap();
            for &t in &[3.0, 10.0, 40.0] {
                let (a, b) = (mgf_asym(&w, t).unwrap(), mgf_asym_weibull(beta, t).unwrap());
                assert!(((a - b) / b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_c_is_scale_invariant() {
        // X' = c^{1/β} X has rate 1; F̂_X[θ] = F̂_{X'}[θ c^{-1/β}]
        let (beta, c) = (2.5, 3.0);
        let w = WeibullLikeModel::vanilla(beta, c).unwrap();
        let unit = WeibullLikeModel::vanilla(beta, 1.0).unwrap();
        for &t in &[5.0, 30.0] {
            let a = mgf_asym(&w, t).unwrap();
            let b = mgf_asym(&unit, t * c.powf(-1.0 / beta)).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tilted_moments() {
        let w = WeibullLikeModel::vanilla(2.0, 1.0).unwrap();
        assert_eq!(tilted_moment_asym(&w, 20.0, 0).unwrap(), mgf_asym(&w, 20.0).unwrap());
        assert_eq!(saddle_point(&w, 20.0), 10.0);
        let m1 = tilted_moment_asym(&w, 20.0, 1).unwrap() - mgf_asym(&w, 20.0).unwrap();
        assert!((m1 - 10f64.ln()).abs() < 1e-14);
        assert!(in_asymptotic_regime(&w, 2.0));
        assert!(!in_asymptotic_regime(&w, 1.0));
    }

    #[test]
    fn mgf_numeric_examples() {
        let spec = QuadratureSpec::default();
        let e = GammaWeibullModel::new(1.0, 1.0, 1.0).unwrap();
        let v = mgf_numeric(&e, 0.5, &spec).unwrap();
        assert!((v.log_mgf - 2f64.ln()).abs() < 1e-12);
        assert!(mgf_numeric(&e, 1.0, &spec).is_err());
        let r = mgf_numeric(&rayleigh(), 0.0, &spec).unwrap();
        assert!(r.log_mgf.abs() < 1e-12);
        let w = WeibullLikeModel::vanilla(2.0, 1.0).unwrap();
        let big = mgf_numeric(&rayleigh(), 10.0, &spec).unwrap();
        assert!(((big.log_mgf - mgf_asym(&w, 10.0).unwrap()) / big.log_mgf).abs() < 0.05);
    }

    #[test]
    fn mgf_numeric_small_shape_and_moments() {
        let spec = QuadratureSpec::default();
        // Gamma(0.3, 1): F̂ = (1-θ)^{-0.3}, mean 0.3/(1-θ), var 0.3/(1-θ)²
        let g = GammaWeibullModel::new(1.0, 1.0, 0.3).unwrap();
        let v = mgf_numeric(&g, 0.4, &spec).unwrap();
        assert!((v.log_mgf + 0.3 * 0.6f64.ln()).abs() < 1e-11);
        assert!((v.tilted_mean() - 0.5).abs() < 1e-10);
        assert!((v.tilted_variance() - 0.3 / 0.36).abs() < 1e-9);
    }

    #[test]
    fn derivative_consistency() {
        let spec = QuadratureSpec::default();
        let m = GammaWeibullModel::new(1.0, 1.5, 2.2).unwrap();
        let t = 4.0;
        let h = 1e-4;
        let up = mgf_numeric(&m, t + h, &spec).unwrap().log_mgf;
        let dn = mgf_numeric(&m, t - h, &spec).unwrap().log_mgf;
        let fd = (up - dn) / (2.0 * h);
        let mean = mgf_numeric(&m, t, &spec).unwrap().tilted_mean();
        assert!((fd / mean - 1.0).abs() < 1e-6);
    }

    #[test]
    fn asym_ratio_tends_to_one() {
        let spec = QuadratureSpec::default();
        let m = GammaWeibullModel::new(1.0, 1.5, 1.5).unwrap();
        let w = m.as_weibull_like().unwrap();
        let mut prev = f64::INFINITY;
        for &t in &[3.0, 6.0, 12.0, 24.0] {
            let gap = (mgf_numeric(&m, t, &spec).unwrap().log_mgf - mgf_asym(&w, t).unwrap()).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn sampler_worked_example() {
        let s = make_tilted_sampler(&rayleigh(), 12.0, 2).unwrap();
        assert_eq!(s.theta, 12.0);
        assert_eq!(s.proposal_a, 72.0);
        assert_eq!(s.proposal_b, 12.0);
        assert_eq!(s.proposal_a / s.proposal_b, 6.0);
        assert!(s.in_asymptotic_regime);
    }

    #[test]
    fn sampler_mean_and_determinism() {
        let mut s = make_tilted_sampler(&rayleigh(), 6.0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_tilted(&mut s, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let exact = mgf_numeric(&rayleigh(), 12.0, &QuadratureSpec::default()).unwrap();
        assert!((mean - exact.tilted_mean()).abs() < 3.0 * (var / n as f64).sqrt());
        // E_θX ∼ x/n only asymptotically; here the exact tilted mean is about 6.08
        assert!((mean - 6.0).abs() < 0.15);

        let mut s2 = make_tilted_sampler(&rayleigh(), 6.0, 1).unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(11);
        for d in draws.iter().take(100) {
            assert_eq!(*d, sample_tilted(&mut s2, &mut rng2).unwrap());
        }
    }

    #[test]
    fn acceptance_improves_with_x() {
        let mut rates = Vec::new();
        for &x in &[10.0, 40.0] {
            let mut s = make_tilted_sampler(&rayleigh(), x, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            while s.propose_count < 10_000 {
                sample_tilted(&mut s, &mut rng).unwrap();
            }
            rates.push(s.acceptance_rate());
        }
        assert!(rates[1] > rates[0], "{rates:?}");
    }

    #[test]
    fn tuning() {
        let s = make_tilted_sampler(&rayleigh(), 5.0, 1).unwrap();
        let t = tune_proposal(&s).unwrap();
        assert!(t.log_expected_proposals() <= s.log_expected_proposals());
        // the optimal sd approaches 1/√λ' from above: about +11% at x/n = 5, +7% at 10
        let (mu, sd) = t.proposal_moments();
        let sd0 = 1.0 / rayleigh().lambda_prime(5.0).sqrt();
        assert!((sd / sd0 - 1.0).abs() < 0.15, "{sd} vs {sd0}");
        assert!(mu > 5.0);
        let far = tune_proposal(&make_tilted_sampler(&rayleigh(), 10.0, 1).unwrap()).unwrap();
        let sd10 = 1.0 / rayleigh().lambda_prime(10.0).sqrt();
        assert!((far.proposal_moments().1 / sd10 - 1.0).abs() < 0.1);
        let again = tune_proposal(&t).unwrap();
        assert!((again.log_expected_proposals() - t.log_expected_proposals()).abs() < 1e-9);
    }

    #[test]
    fn rejects_exponential_class() {
        let e = GammaWeibullModel::new(1.0, 1.0, 2.0).unwrap();
        assert!(matches!(make_tilted_sampler(&e, 5.0, 1), Err(Error::Unsupported(_))));
    }
}
