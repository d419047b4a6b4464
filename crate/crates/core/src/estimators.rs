//! Monte Carlo estimators of `P(Sₙ > x)`.
//!
//! * [`crude_mc`]: `Z = 𝟙{Sₙ > x}`.
//! * [`is_tilted`]: importance sampling under the exponential tilt `θ = λ(x/n)`,
//!   `Z = 𝟙{Sₙ > x} F̂[θ]ⁿ e^{-θSₙ}`.
//! * [`cond_mc`]: conditional Monte Carlo, `Z = F̄(x - S_{n-1})`.
//! * [`ak_estimator`]: conditioning on the last summand being the maximum,
//!   `Z = n F̄(M_{n-1} ∨ (x - S_{n-1}))`.
//!
//! Samples are split over `n_chunks` fixed substreams of one ChaCha8 seed. Chunks
//! run in parallel and are reduced in chunk order with compensated sums, so a result
//! depends only on the configuration and never on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{GammaWeibullModel, ModelSpec, TailModel};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::quad::{integrate_log, QuadratureSpec};
use crate::special::{log_add_exp, NeumaierSum};
use crate::tilting::{make_tilted_sampler, sample_tilted};

/// Default number of substreams. Fixed rather than tied to the machine so that
/// results are reproducible everywhere.
pub const DEFAULT_CHUNKS: usize = 64;

/// Sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub n_chunks: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 1,
            n_chunks: DEFAULT_CHUNKS,
        }
    }
}

impl RunConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(domain("n_samples must be > 0"));
        }
        if self.n_chunks == 0 {
            return Err(domain("n_chunks must be > 0"));
        }
        Ok(())
    }

    fn chunk_sizes(&self) -> Vec<u64> {
        let k = self.n_chunks as u64;
        let (base, rem) = (self.n_samples / k, self.n_samples % k);
        (0..k).map(|i| base + u64::from(i < rem)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Crude,
    Is,
    Cond,
    Ak,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Crude, Method::Is, Method::Cond, Method::Ak];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Crude => "crude",
            Method::Is => "is",
            Method::Cond => "cond",
            Method::Ak => "ak",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crude" => Ok(Method::Crude),
            "is" => Ok(Method::Is),
            "cond" => Ok(Method::Cond),
            "ak" => Ok(Method::Ak),
            other => Err(domain(format!("unknown method {other:?}; expected crude, is, cond or ak"))),
        }
    }
}

/// Importance-sampling details.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsExtras {
    pub theta: f64,
    pub log_mgf: f64,
    /// `e^{-θx} F̂[θ]ⁿ · estimate`, an upper bound on `E Z²`.
    pub second_moment_bound: f64,
    pub acceptance_rate: f64,
}

/// One estimate with its sampling diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub n: usize,
    pub x: f64,
    pub estimate: f64,
    /// `log₁₀` of the estimate, accurate even where `estimate` underflows.
    pub log10_estimate: f64,
    pub std_error: f64,
    pub rel_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Sample mean of `Z²`.
    pub second_moment: f64,
    /// Sample mean of `Z⁴`, for the standard error of `second_moment`.
    pub fourth_moment: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub is_extras: Option<IsExtras>,
}

impl EstimateResult {
    /// Sample variance of `Z` (population form).
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.estimate * self.estimate).max(0.0)
    }

    /// Standard error of `second_moment`.
    pub fn second_moment_se(&self) -> f64 {
        ((self.fourth_moment - self.second_moment * self.second_moment).max(0.0) / self.n_samples as f64).sqrt()
    }

    /// Rough standard error of the variance estimate, `√((E Z⁴ - (E Z²)²)/N)`.
    pub fn variance_se(&self) -> f64 {
        self.second_moment_se()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    s1: NeumaierSum,
    s2: NeumaierSum,
    s4: NeumaierSum,
}

impl Moments {
    fn add(&mut self, z: f64) {
        let z2 = z * z;
        self.s1.add(z);
        self.s2.add(z2);
        self.s4.add(z2 * z2);
    }

    fn merge(&mut self, other: &Moments) {
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
        self.s4.merge(&other.s4);
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `draw` (returning `Z / e^{log_scale}`) over all chunks.
fn simulate<S, M, D>(cfg: &RunConfig, make_state: M, draw: D) -> Result<(Moments, Vec<S>)>
where
    S: Send,
    M: Fn() -> S + Sync,
    D: Fn(&mut S, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let sizes = cfg.chunk_sizes();
    let parts: Vec<Result<(Moments, S)>> = sizes
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let mut rng = chunk_rng(cfg.seed, i);
            let mut state = make_state();
            let mut acc = Moments::default();
            for _ in 0..m {
                acc.add(draw(&mut state, &mut rng)?);
            }
            Ok((acc, state))
        })
        .collect();
    let mut total = Moments::default();
    let mut states = Vec::with_capacity(parts.len());
    for p in parts {
        let (m, s) = p?;
        total.merge(&m);
        states.push(s);
    }
    Ok((total, states))
}

fn finish(method: Method, n: usize, x: f64, cfg: &RunConfig, log_scale: f64, m: &Moments) -> EstimateResult {
    let count = cfg.n_samples as f64;
    let mean = m.s1.value() / count;
    let mean2 = m.s2.value() / count;
    let mean4 = m.s4.value() / count;
    let scale = log_scale.exp();
    let estimate = mean * scale;
    let second_moment = mean2 * scale * scale;
    let fourth_moment = mean4 * scale.powi(4);
    let std_error = ((mean2 - mean * mean).max(0.0) / count).sqrt() * scale;
    let rel_error = if estimate > 0.0 { std_error / estimate } else { f64::INFINITY };
    EstimateResult {
        method,
        n,
        x,
        estimate,
        log10_estimate: (log_scale + mean.ln()) / std::f64::consts::LN_10,
        std_error,
        rel_error,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        second_moment,
        fourth_moment,
        ci95_low: (estimate - 1.96 * std_error).clamp(0.0, 1.0),
        ci95_high: (estimate + 1.96 * std_error).clamp(0.0, 1.0),
        is_extras: None,
    }
}

fn exact(model: &ModelSpec) -> Result<GammaWeibullModel> {
    model.exact_law().map_err(|_| {
        Error::Unsupported("Monte Carlo needs an exactly samplable law (plain Weibull or gamma-Weibull)".into())
    })
}

fn check_args(n: usize, x: f64, min_n: usize) -> Result<()> {
    ensure_finite("x", x)?;
    if n < min_n {
        return Err(domain(format!("this estimator needs n >= {min_n}, got {n}")));
    }
    Ok(())
}

/// Crude Monte Carlo, `Z = 𝟙{Sₙ > x}`.
pub fn crude_mc(model: &ModelSpec, n: usize, x: f64, cfg: &RunConfig) -> Result<EstimateResult> {
    check_args(n, x, 1)?;
    let law = exact(model)?;
    let (m, _) = simulate(cfg, || (), |_, rng| {
        let s: f64 = (0..n).map(|_| law.sample(rng)).sum();
        Ok(if s > x { 1.0 } else { 0.0 })
    })?;
    Ok(finish(Method::Crude, n, x, cfg, 0.0, &m))
}

/// Importance sampling under the tilt `θ = λ(x/n)`, with `F̂[θ]` from quadrature.
pub fn is_tilted(model: &ModelSpec, n: usize, x: f64, cfg: &RunConfig) -> Result<EstimateResult> {
    check_args(n, x, 1)?;
    if !(x > 0.0) {
        return Err(domain(format!("importance sampling needs x > 0, got {x}")));
    }
    let law = exact(model)?;
    let sampler = make_tilted_sampler(&law, x, n)?;
    let (theta, log_mgf) = (sampler.theta, sampler.log_mgf);
    // Z ≤ F̂ⁿ e^{-θx}; values are accumulated relative to that bound
    let log_scale = n as f64 * log_mgf - theta * x;
    let (m, states) = simulate(cfg, || sampler.clone(), |s, rng| {
        let mut total = 0.0;
        for _ in 0..n {
            total += sample_tilted(s, rng)?;
        }
        Ok(if total > x { (-theta * (total - x)).exp() } else { 0.0 })
    })?;
    let mut res = finish(Method::Is, n, x, cfg, log_scale, &m);
    let (acc, prop) = states
        .iter()
        .fold((0u64, 0u64), |(a, p), s| (a + s.accept_count, p + s.propose_count));
    res.is_extras = Some(IsExtras {
        theta,
        log_mgf,
        second_moment_bound: (log_scale + (res.log10_estimate * std::f64::consts::LN_10)).exp(),
        acceptance_rate: acc as f64 / prop.max(1) as f64,
    });
    Ok(res)
}

/// Conditional Monte Carlo, `Z = F̄(x - S_{n-1})`.
pub fn cond_mc(model: &ModelSpec, n: usize, x: f64, cfg: &RunConfig) -> Result<EstimateResult> {
    check_args(n, x, 2)?;
    let law = exact(model)?;
    let (m, _) = simulate(cfg, || (), |_, rng| {
        let s: f64 = (0..n - 1).map(|_| law.sample(rng)).sum();
        Ok(law.log_tail(x - s)?.exp())
    })?;
    Ok(finish(Method::Cond, n, x, cfg, 0.0, &m))
}

/// Max-conditioned estimator, `Z = n F̄(M_{n-1} ∨ (x - S_{n-1}))`.
pub fn ak_estimator(model: &ModelSpec, n: usize, x: f64, cfg: &RunConfig) -> Result<EstimateResult> {
    check_args(n, x, 2)?;
    let law = exact(model)?;
    let nf = n as f64;
    let (m, _) = simulate(cfg, || (), |_, rng| {
        let mut s = 0.0;
        let mut mx = 0.0f64;
        for _ in 0..n - 1 {
            let v = law.sample(rng);
            s += v;
            mx = mx.max(v);
        }
        Ok(nf * law.log_tail(mx.max(x - s))?.exp())
    })?;
    Ok(finish(Method::Ak, n, x, cfg, 0.0, &m))
}

/// Dispatches on `method`.
pub fn estimate(method: Method, model: &ModelSpec, n: usize, x: f64, cfg: &RunConfig) -> Result<EstimateResult> {
    match method {
        Method::Crude => crude_mc(model, n, x, cfg),
        Method::Is => is_tilted(model, n, x, cfg),
        Method::Cond => cond_mc(model, n, x, cfg),
        Method::Ak => ak_estimator(model, n, x, cfg),
    }
}

/// Variance exponent of conditional Monte Carlo, `E Z_Cd² ≈_log e^{-c_n x^β}`:
/// `c_n = (2 + 2^{β/(β-1)}(n-1)) / (1 + 2^{1/(β-1)}(n-1))^β` and `p_n = n^{β-1} c_n`.
pub fn cond_mc_exponent(beta: f64, n: usize) -> Result<(f64, f64)> {
    if !(beta > 1.0) || n < 2 {
        return Err(domain(format!("need beta > 1 and n >= 2, got beta={beta}, n={n}")));
    }
    let m = n as f64 - 1.0;
    let c = (2.0 + 2f64.powf(beta / (beta - 1.0)) * m) / (1.0 + 2f64.powf(1.0 / (beta - 1.0)) * m).powf(beta);
    Ok((c, (n as f64).powf(beta - 1.0) * c))
}

/// `ln E Z_Cd²` for `n = 2`: `∫₀ˣ F̄(x-y)² f(y) dy + F̄(x)`.
pub fn cond_second_moment_exact(model: &ModelSpec, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let law = exact(model)?;
    if !(x > 0.0) {
        return Ok(0.0);
    }
    let g = |y: f64| -> f64 {
        match (law.log_tail(x - y), law.log_density(y)) {
            (Ok(t), Ok(d)) => 2.0 * t + d,
            _ => f64::NAN,
        }
    };
    let shift = (0..=64).map(|i| g(x * (i as f64 + 0.5) / 65.0)).fold(f64::NEG_INFINITY, f64::max);
    let body = integrate_log(g, 0.0, x, shift, spec)?;
    Ok(log_add_exp(body.log_value, law.log_tail(x)?))
}

/// `ln E Z_AK²` for `n = 2`: `4 [∫₀^{x/2} F̄(x-y)² f(y) dy + F̄(x/2)³/3]`.
pub fn ak_second_moment_exact(model: &ModelSpec, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let law = exact(model)?;
    if !(x > 0.0) {
        return Ok(4f64.ln());
    }
    let g = |y: f64| -> f64 {
        match (law.log_tail(x - y), law.log_density(y)) {
            (Ok(t), Ok(d)) => 2.0 * t + d,
            _ => f64::NAN,
        }
    };
    let half = 0.5 * x;
    let shift = (0..=64).map(|i| g(half * (i as f64 + 0.5) / 65.0)).fold(f64::NEG_INFINITY, f64::max);
    let body = integrate_log(g, 0.0, half, shift, spec)?;
    let upper = 3.0 * law.log_tail(half)? - 3f64.ln();
    Ok(4f64.ln() + log_add_exp(body.log_value, upper))
}

/// One row of [`efficiency_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub method: Method,
    pub x: f64,
    pub estimate: f64,
    pub rel_error: f64,
    /// `E Z² / estimate²`.
    pub r2: f64,
    /// `ln E Z² / (2 ln estimate)`; tends to 1 for logarithmically efficient estimators.
    pub log_efficiency: f64,
}

/// Runs every applicable estimator on every `x` of the grid.
pub fn efficiency_report(model: &ModelSpec, n: usize, x_grid: &[f64], cfg: &RunConfig) -> Result<Vec<EfficiencyRow>> {
    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| n >= 2 || matches!(m, Method::Crude | Method::Is))
        .collect();
    let mut rows = Vec::with_capacity(methods.len() * x_grid.len());
    for &method in &methods {
        for &x in x_grid {
            let r = estimate(method, model, n, x, cfg)?;
            rows.push(EfficiencyRow {
                method,
                x,
                estimate: r.estimate,
                rel_error: r.rel_error,
                r2: r.second_moment / (r.estimate * r.estimate),
                log_efficiency: r.second_moment.ln() / (2.0 * r.estimate.ln()),
            });
        }
    }
    Ok(rows)
}

/// `Z` for one replication, exposed for matched-sample comparisons: the crude,
/// conditional and max-conditioned estimators evaluated on the same draw of
/// `X₁ … X_{n}`.
pub fn matched_draw<R: Rng + ?Sized>(law: &GammaWeibullModel, n: usize, x: f64, rng: &mut R) -> Result<[f64; 3]> {
    let mut s = 0.0;
    let mut mx = 0.0f64;
    for _ in 0..n - 1 {
        let v = law.sample(rng);
        s += v;
        mx = mx.max(v);
    }
    let last = law.sample(rng);
    let crude = if s + last > x { 1.0 } else { 0.0 };
    let cond = law.log_tail(x - s)?.exp();
    let ak = n as f64 * law.log_tail(mx.max(x - s))?.exp();
    Ok([crude, cond, ak])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rayleigh() -> ModelSpec {
        ModelSpec::GammaWeibull(GammaWeibullModel::new(1.0, 2.0, 2.0).unwrap())
    }

    #[test]
    fn trivial_x_zero() {
        let cfg = RunConfig::new(1000, 3);
        let r = crude_mc(&rayleigh(), 2, 0.0, &cfg).unwrap();
        assert_eq!((r.estimate, r.std_error), (1.0, 0.0));
        let c = cond_mc(&rayleigh(), 2, 0.0, &cfg).unwrap();
        assert_eq!(c.estimate, 1.0);
        assert!(cond_mc(&rayleigh(), 1, 1.0, &cfg).is_err());
        assert!(ak_estimator(&rayleigh(), 1, 1.0, &cfg).is_err());
    }

    #[test]
    fn crude_single_summand() {
        let cfg = RunConfig::new(1_000_000, 7);
        let r = crude_mc(&rayleigh(), 1, 1.0, &cfg).unwrap();
        assert!((r.estimate - (-1f64).exp()).abs() < 3.0 * r.std_error);
        let se2 = (r.second_moment - r.estimate * r.estimate) / r.n_samples as f64;
        assert!((r.std_error.powi(2) - se2).abs() <= 1e-12 * se2);
    }

    #[test]
    fn is_single_summand() {
        let cfg = RunConfig::new(100_000, 5);
        let r = is_tilted(&rayleigh(), 1, 5.0, &cfg).unwrap();
        let exact = (-25f64).exp();
        assert!((r.estimate - exact).abs() < 3.0 * r.std_error, "{} vs {exact}", r.estimate);
        let extras = r.is_extras.unwrap();
        assert!(r.second_moment <= extras.second_moment_bound * (1.0 + 1e-12));
    }

    #[test]
    fn determinism_across_threads() {
        let cfg = RunConfig {
            n_samples: 20_000,
            seed: 99,
            n_chunks: 16,
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        for method in Method::ALL {
            let a = one.install(|| estimate(method, &rayleigh(), 2, 3.0, &cfg)).unwrap();
            let b = four.install(|| estimate(method, &rayleigh(), 2, 3.0, &cfg)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn c_n_example() {
        let (c, p) = cond_mc_exponent(2.0, 2).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
        assert!((p - 4.0 / 3.0).abs() < 1e-15);
        for n in 2..8 {
            for &beta in &[1.5, 2.0, 3.0] {
                assert!(cond_mc_exponent(beta, n).unwrap().1 > 1.0);
            }
        }
    }

    #[test]
    fn exact_second_moments_bracket_probability() {
        let spec = QuadratureSpec::default();
        let p = crate::oracle::conv_tail_pair(&rayleigh(), &rayleigh(), 4.0, &spec).unwrap();
        let cd = cond_second_moment_exact(&rayleigh(), 4.0, &spec).unwrap();
        let ak = ak_second_moment_exact(&rayleigh(), 4.0, &spec).unwrap();
        // P² ≤ E Z² ≤ P for Z ∈ [0, 1]; AK can exceed P but not the crude second moment by much
        assert!(cd >= 2.0 * p && cd <= p);
        assert!(ak >= 2.0 * p && ak < cd);
    }

    #[test]
    fn exact_second_moment_matches_mc() {
        let spec = QuadratureSpec::default();
        let cfg = RunConfig::new(400_000, 21);
        let cd = cond_mc(&rayleigh(), 2, 3.0, &cfg).unwrap();
        let exact = cond_second_moment_exact(&rayleigh(), 3.0, &spec).unwrap().exp();
        assert!((cd.second_moment - exact).abs() < 3.0 * cd.second_moment_se());
        let ak = ak_estimator(&rayleigh(), 2, 3.0, &cfg).unwrap();
        let exact = ak_second_moment_exact(&rayleigh(), 3.0, &spec).unwrap().exp();
        assert!((ak.second_moment - exact).abs() < 3.0 * ak.second_moment_se());
    }

    #[test]
    fn report_shape() {
        let cfg = RunConfig::new(2_000, 1);
        let rows = efficiency_report(&rayleigh(), 2, &[2.0, 3.0], &cfg).unwrap();
        assert_eq!(rows.len(), 8);
        let single = efficiency_report(&rayleigh(), 1, &[2.0], &cfg).unwrap();
        assert_eq!(single.len(), 2);
    }

    #[test]
    fn serializes_required_fields() {
        let r = crude_mc(&rayleigh(), 2, 1.0, &RunConfig::new(100, 2)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["method", "n", "x", "estimate", "log10_estimate", "rel_error", "n_samples", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "crude");
    }
}
