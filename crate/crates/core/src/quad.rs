//! Globally adaptive Gauss–Kronrod (7/15) quadrature of functions given by their logarithm.
//!
//! The integrand is supplied as `ln g(x)` and a shift `s` close to `max ln g`; the
//! routine integrates `exp(ln g - s)` in linear space and returns `s + ln ∫`. This keeps
//! integrands at the scale of `e^{-700}` and below representable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerances for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Target relative error of the integral.
    pub rel_tol: f64,
    /// Contributions below `e^{abs_log_floor}` relative to the peak are ignored.
    pub abs_log_floor: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_log_floor: -60.0,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_log_floor: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            rel_tol,
            abs_log_floor,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(domain(format!("rel_tol must lie in (0, 1e-3], got {}", self.rel_tol)));
        }
        if self.max_subdivisions < 64 {
            return Err(domain(format!(
                "max_subdivisions must be >= 64, got {}",
                self.max_subdivisions
            )));
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Result of a log-space quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    /// `ln ∫ g`.
    pub log_value: f64,
    /// Estimated relative error.
    pub rel_error: f64,
}

/// `ln ∫_{lo}^{hi} exp(log_g(x)) dx` with `shift ≈ max log_g` on the interval.
pub fn integrate_log<F: Fn(f64) -> f64>(
    log_g: F,
    lo: f64,
    hi: f64,
    shift: f64,
    spec: &QuadratureSpec,
) -> Result<LogIntegral> {
    if !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain(format!("invalid integration range [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok(LogIntegral {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }
    let g = |x: f64| {
        let v = log_g(x) - shift;
        if v.is_nan() {
            0.0
        } else {
            v.exp()
        }
    };
    let floor = spec.abs_log_floor.exp() * (hi - lo);
    let first = gk15(&g, lo, hi);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut splits = 0;
    while total_err > (spec.rel_tol * total.abs()).max(floor) {
        if splits >= spec.max_subdivisions {
            let estimate = shift + total.ln();
            return Err(Error::Accuracy {
                message: format!("quadrature on [{lo}, {hi}] exceeded {} subdivisions", spec.max_subdivisions),
                estimate,
                achieved: total_err / total.abs(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval collapsed to floating-point resolution; accept what we have
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let left = gk15(&g, worst.lo, mid);
        let right = gk15(&g, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits % 64 == 0 {
            // refresh sums to avoid drift from incremental updates
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let total: f64 = heap.iter().map(|s| s.value).sum();
    let total_err: f64 = heap.iter().map(|s| s.error).sum();
    Ok(LogIntegral {
        log_value: shift + total.ln(),
        rel_error: if total > 0.0 { total_err / total } else { 0.0 },
    })
}

/// Integrates over consecutive pieces `[b_0, b_1], [b_1, b_2], …` and combines in log space.
pub fn integrate_log_pieces<F: Fn(f64) -> f64>(
    log_g: F,
    breaks: &[f64],
    shift: f64,
    spec: &QuadratureSpec,
) -> Result<LogIntegral> {
    let mut log_value = f64::NEG_INFINITY;
    let mut abs_err = 0.0;
    for w in breaks.windows(2) {
        let part = integrate_log(&log_g, w[0], w[1], shift, spec)?;
        if part.log_value > f64::NEG_INFINITY {
            abs_err += part.rel_error * (part.log_value - shift).exp();
            log_value = crate::special::log_add_exp(log_value, part.log_value);
        }
    }
    let scaled = (log_value - shift).exp();
    Ok(LogIntegral {
        log_value,
        rel_error: if scaled > 0.0 { abs_err / scaled } else { 0.0 },
    })
}
