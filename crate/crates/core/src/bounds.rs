//! Incomplete-gamma sandwich bounds for sums of gamma-Weibull variables.
//!
//! For independent `Xᵢ ~ GammaWeibull(k, β, γᵢ)` with `β ≥ 1` and `γ₀ = Σγᵢ`,
//!
//! ```text
//! Q(γ₀/β, k x^β) ≤ P(X₁+…+Xₙ > x) ≤ Q(γ₀/β, k x^β / n^{β-1})
//! ```
//!
//! for every `x > 0`. Both sides follow from comparing `Σ Xᵢ^β` (a gamma variable)
//! with `(Σ Xᵢ)^β` through the power-mean inequalities.

use serde::{Deserialize, Serialize};

use crate::asymptotics::nfold_asymptote;
use crate::distributions::GammaWeibullModel;
use crate::error::{domain, ensure_finite, Error, Result};
use crate::special::{gamma_q, ln_gamma, ln_gamma_pq, ln_gamma_q};

/// Regularized upper incomplete gamma function `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn upper_incomplete_gamma_reg(a: f64, x: f64) -> Result<f64> {
    gamma_q(a, x)
}

/// `ln Q(a, x)`, finite where `Q` itself underflows.
pub fn ln_upper_incomplete_gamma_reg(a: f64, x: f64) -> Result<f64> {
    ln_gamma_q(a, x)
}

/// `(ln P(a, x), ln Q(a, x))`.
pub fn ln_incomplete_gamma_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    ln_gamma_pq(a, x)
}

/// Sandwich bounds on `ln P(Sₙ > x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "GammaBoundRecord", from = "GammaBoundRecord")]
pub struct GammaBoundResult {
    /// Natural log of the lower bound.
    pub lower: f64,
    /// Natural log of the upper bound.
    pub upper: f64,
    /// `Σγᵢ`.
    pub gamma0: f64,
    pub n: usize,
}

impl GammaBoundResult {
    pub fn log10_lower(&self) -> f64 {
        self.lower / std::f64::consts::LN_10
    }
    pub fn log10_upper(&self) -> f64 {
        self.upper / std::f64::consts::LN_10
    }
}

#[derive(Serialize, Deserialize)]
struct GammaBoundRecord {
    log10_lower: f64,
    log10_upper: f64,
    gamma0: f64,
    n: usize,
}

impl From<GammaBoundResult> for GammaBoundRecord {
    fn from(r: GammaBoundResult) -> Self {
        Self {
            log10_lower: r.log10_lower(),
            log10_upper: r.log10_upper(),
            gamma0: r.gamma0,
            n: r.n,
        }
    }
}

impl From<GammaBoundRecord> for GammaBoundResult {
    fn from(r: GammaBoundRecord) -> Self {
        Self {
            lower: r.log10_lower * std::f64::consts::LN_10,
            upper: r.log10_upper * std::f64::consts::LN_10,
            gamma0: r.gamma0,
            n: r.n,
        }
    }
}

/// Lower and upper bounds on `P(X₁+…+Xₙ > x)` for `Xᵢ ~ GammaWeibull(k, β, γᵢ)`.
pub fn sum_tail_bounds(gammas: &[f64], k: f64, beta: f64, x: f64) -> Result<GammaBoundResult> {
    if !(beta >= 1.0) {
        return Err(Error::Unsupported(format!(
            "sandwich bounds need beta >= 1, got {beta}"
        )));
    }
    if gammas.is_empty() {
        return Err(domain("at least one shape is required"));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(domain(format!("shapes must be finite and > 0, got {g}")));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(domain(format!("k must be finite and > 0, got {k}")));
    }
    ensure_finite("x", x)?;
    if !(x > 0.0) {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    let n = gammas.len();
    let gamma0: f64 = gammas.iter().sum();
    let shape = gamma0 / beta;
    let kx = k * x.powf(beta);
    let lower = ln_gamma_q(shape, kx)?;
    let upper = if n == 1 || beta == 1.0 {
        lower
    } else {
        ln_gamma_q(shape, kx / (n as f64).powf(beta - 1.0))?
    };
    Ok(GammaBoundResult {
        lower,
        upper,
        gamma0,
        n,
    })
}

/// `ln` of the elementary lower bound on the unregularized `Γ(a, x)`:
/// `x^{a-1} e^{-x}` for `a ≥ 1` and `x^{a-1} e^{-x} · x/(x+1-a)` for `a < 1`.
pub fn simple_lower_bound_gamma(a: f64, x: f64) -> f64 {
    let base = (a - 1.0) * x.ln() - x;
    if a >= 1.0 {
        base
    } else {
        base + (x / (x + 1.0 - a)).ln()
    }
}

/// How far the upper bound sits above the `n`-fold asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuality {
    /// `ln(upper bound / n-fold asymptote)` at `x`.
    pub log_ratio: f64,
    /// Degree of the polynomial growth of the ratio, `β(n-1)/2`.
    pub polynomial_degree: f64,
    /// The leading-order ratio in closed form (plain Weibull summands only):
    /// `n^{n-1/2}/(n-1)! · [(β-1)k/(2πβ)]^{(n-1)/2} · (x/n)^{β(n-1)/2}`.
    pub closed_form_log_ratio: Option<f64>,
}

/// Ratio of the upper sandwich bound to the `n`-fold asymptote for i.i.d. summands.
pub fn upper_bound_quality(model: &GammaWeibullModel, n: usize, x: f64) -> Result<BoundQuality> {
    if n < 1 {
        return Err(domain("n must be >= 1"));
    }
    let beta = model.beta();
    if n == 1 {
        return Ok(BoundQuality {
            log_ratio: 0.0,
            polynomial_degree: 0.0,
            closed_form_log_ratio: model.is_vanilla().then_some(0.0),
        });
    }
    if beta == 1.0 {
        return Err(Error::Unsupported(
            "the n-fold asymptote needs beta > 1".into(),
        ));
    }
    let gammas = vec![model.gamma(); n];
    let bounds = sum_tail_bounds(&gammas, model.k(), beta, x)?;
    let asym = nfold_asymptote(&model.as_weibull_like()?, n)?;
    let nf = n as f64;
    let closed = model.is_vanilla().then(|| {
        (nf - 0.5) * nf.ln() - ln_gamma(nf)
            + 0.5 * (nf - 1.0) * ((beta - 1.0) * model.k() / (2.0 * std::f64::consts::PI * beta)).ln()
            + 0.5 * beta * (nf - 1.0) * (x / nf).ln()
    });
    Ok(BoundQuality {
        log_ratio: bounds.upper - asym.log_eval(x),
        polynomial_degree: beta * (nf - 1.0) / 2.0,
        closed_form_log_ratio: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_examples() {
        assert!((upper_incomplete_gamma_reg(3.0, 2.0).unwrap() - 0.676_676_416_183_063_9).abs() < 1e-15);
        assert!(upper_incomplete_gamma_reg(0.0, 2.0).is_err());
        let (lp, lq) = ln_incomplete_gamma_pair(2.5, 3.1).unwrap();
        assert!((lp.exp() + lq.exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn collapsing_cases() {
        let one = sum_tail_bounds(&[2.0], 1.5, 2.5, 3.0).unwrap();
        assert_eq!(one.lower, one.upper);
        assert!((one.lower - ln_gamma_q(0.8, 1.5 * 3f64.powf(2.5)).unwrap()).abs() < 1e-15);
        let exp_class = sum_tail_bounds(&[0.5, 1.0, 2.0], 2.0, 1.0, 4.0).unwrap();
        assert_eq!(exp_class.lower, exp_class.upper);
        assert_eq!(exp_class.gamma0, 3.5);
    }

    #[test]
    fn worked_example() {
        let b = sum_tail_bounds(&[2.0, 2.0], 1.0, 2.0, 4.0).unwrap();
        assert!((b.lower - (17f64.ln() - 16.0)).abs() < 1e-13);
        assert!((b.upper - (9f64.ln() - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn errors() {
        assert!(matches!(sum_tail_bounds(&[1.0], 1.0, 0.5, 1.0), Err(Error::Unsupported(_))));
        assert!(sum_tail_bounds(&[], 1.0, 2.0, 1.0).is_err());
        assert!(sum_tail_bounds(&[1.0], 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn serializes_in_log10() {
        let b = sum_tail_bounds(&[2.0, 2.0], 1.0, 2.0, 4.0).unwrap();
        let v = serde_json::to_value(b).unwrap();
        assert!((v["log10_upper"].as_f64().unwrap() - b.upper / std::f64::consts::LN_10).abs() < 1e-15);
        let back: GammaBoundResult = serde_json::from_value(v).unwrap();
        assert!((back.upper - b.upper).abs() < 1e-13);
    }

    #[test]
    fn simple_lower_bound_examples() {
        for &x in &[0.3, 2.0, 40.0] {
            assert_eq!(simple_lower_bound_gamma(1.0, x), -x);
        }
        let lg2 = 6f64.ln() - 5.0;
        assert!(simple_lower_bound_gamma(2.0, 5.0) < lg2);
        assert!((simple_lower_bound_gamma(2.0, 5.0) - (5f64.ln() - 5.0)).abs() < 1e-15);
        let half = simple_lower_bound_gamma(0.5, 4.0);
        assert!((half - (-0.5 * 4f64.ln() - 4.0 + (4.0f64 / 4.5).ln())).abs() < 1e-15);
        let exact = ln_gamma(0.5) + ln_gamma_q(0.5, 4.0).unwrap();
        assert!(half <= exact);
    }

    #[test]
    fn quality_degree_and_closed_form() {
        let m = GammaWeibullModel::new(1.0, 2.0, 2.0).unwrap();
        let q1 = upper_bound_quality(&m, 1, 5.0).unwrap();
        assert_eq!((q1.log_ratio, q1.polynomial_degree), (0.0, 0.0));
        let q3 = upper_bound_quality(&m, 3, 200.0).unwrap();
        assert_eq!(q3.polynomial_degree, 2.0);
        // the closed form is the leading-order ratio, exact up to O(x^{-β})
        assert!((q3.log_ratio - q3.closed_form_log_ratio.unwrap()).abs() < 1e-3);
    }

    #[test]
    fn quality_slope_matches_degree() {
        for &(beta, gamma, n) in &[(2.0, 2.0, 3usize), (1.5, 1.5, 2), (2.0, 3.0, 4)] {
            let m = GammaWeibullModel::new(1.0, beta, gamma).unwrap();
            let pts: Vec<(f64, f64)> = (0..=20)
                .map(|i| {
                    let x = 10f64 * 10f64.powf(i as f64 / 20.0);
                    (x.ln(), upper_bound_quality(&m, n, x).unwrap().log_ratio)
                })
                .collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let degree = beta * (n as f64 - 1.0) / 2.0;
            assert!(((sxy / sxx) / degree - 1.0).abs() < 0.05, "slope {}", sxy / sxx);
        }
    }
}
