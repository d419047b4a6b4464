//! Run configuration: command-line flags layered over an optional JSON file.
//!
//! The resolved [`CliConfig`] is echoed in every output, and that echo (or the whole
//! JSON output containing it) can be passed back through `--config`.

use std::path::PathBuf;

use clap::Args;
use lighttail::{GammaWeibullModel, ModelSpec, WeibullLikeModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Environment variable that overrides `--seed` (and the seed of a config file).
pub const SEED_ENV: &str = "LIGHTTAIL_SEED";

const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    /// Model family: weibull-like or gamma-weibull.
    #[arg(long)]
    pub family: Option<String>,
    /// Weibull-like: power of x in the density prefactor beyond x^{beta-1}.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Tail exponent (both families).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Weibull-like: rate in e^{-c x^beta}.
    #[arg(long)]
    pub c: Option<f64>,
    /// Weibull-like: density prefactor (defaults to beta*c, the plain Weibull law).
    #[arg(long)]
    pub d: Option<f64>,
    /// Gamma-Weibull: rate in e^{-k x^beta}.
    #[arg(long)]
    pub k: Option<f64>,
    /// Gamma-Weibull: density power, f(x) ∝ x^{gamma-1} e^{-k x^beta} (defaults to beta).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of summands.
    #[arg(long)]
    pub n: Option<usize>,
    /// A single x or a grid lo:hi:count.
    #[arg(long, value_parser = parse_x_arg)]
    #[serde(deserialize_with = "x_from_json")]
    pub x: Option<String>,
    /// Geometric spacing of the x-grid.
    #[arg(long)]
    pub geom: bool,
    /// Poisson mean (compound).
    #[arg(long)]
    pub mu: Option<f64>,
    /// estimate: crude|is|cond|ak; compound: esscher|logasym.
    #[arg(long)]
    pub method: Option<String>,
    /// Monte Carlo sample size.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Random seed (overridden by LIGHTTAIL_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random substreams (defaults to the available parallelism).
    #[arg(long)]
    pub chunks: Option<usize>,
    /// Output format: json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Emit compare columns as plain probabilities instead of log10.
    #[arg(long = "linear")]
    #[serde(skip)]
    pub linear: bool,
    #[arg(skip)]
    pub log10: Option<bool>,
    /// Read settings from a JSON file (flags given on the command line win).
    #[arg(long = "config")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn parse_x_arg(s: &str) -> Result<String, String> {
    parse_grid(s, false).map(|_| s.to_string())
}

fn x_from_json<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    match Option::<Value>::deserialize(d)? {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(other) => Err(serde::de::Error::custom(format!("x must be a number or a grid string, got {other}"))),
    }
}

/// Fully resolved settings, echoed as a flat record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliConfig {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub n: usize,
    pub x: String,
    pub geom: bool,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub samples: u64,
    pub seed: u64,
    pub chunks: usize,
    pub format: String,
    pub log10: bool,
    #[serde(skip)]
    pub model: Option<ModelSpec>,
}

impl RawConfig {
    fn or(self, file: RawConfig) -> RawConfig {
        RawConfig {
            family: self.family.or(file.family),
            alpha: self.alpha.or(file.alpha),
            beta: self.beta.or(file.beta),
            c: self.c.or(file.c),
            d: self.d.or(file.d),
            k: self.k.or(file.k),
            gamma: self.gamma.or(file.gamma),
            n: self.n.or(file.n),
            x: self.x.or(file.x),
            geom: self.geom || file.geom,
            mu: self.mu.or(file.mu),
            method: self.method.or(file.method),
            samples: self.samples.or(file.samples),
            seed: self.seed.or(file.seed),
            chunks: self.chunks.or(file.chunks),
            format: self.format.or(file.format),
            linear: self.linear,
            log10: if self.linear { Some(false) } else { self.log10.or(file.log10) },
            config: None,
        }
    }

    /// Merges the config file (if any), applies defaults and the seed override.
    pub fn resolve(mut self, seed_env: Option<String>) -> Result<CliConfig, CliError> {
        let merged = match self.config.take() {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                self.or(parse_config_text(&text)?)
            }
            None => self.or(RawConfig::default()),
        };
        let seed = match seed_env {
            Some(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be a non-negative integer, got {s:?}")))?,
            None => merged.seed.unwrap_or(DEFAULT_SEED),
        };
        let family = merged.family.clone().unwrap_or_else(|| "weibull-like".into());
        let beta = merged.beta.unwrap_or(2.0);
        let mut cfg = CliConfig {
            family: family.clone(),
            alpha: None,
            beta,
            c: None,
            d: None,
            k: None,
            gamma: None,
            n: merged.n.unwrap_or(2),
            x: merged.x.clone().unwrap_or_else(|| "5".into()),
            geom: merged.geom,
            mu: merged.mu.unwrap_or(1.0),
            method: merged.method.clone(),
            samples: merged.samples.unwrap_or(DEFAULT_SAMPLES),
            seed,
            chunks: merged.chunks.unwrap_or_else(default_chunks),
            format: merged.format.clone().unwrap_or_else(|| "json".into()),
            log10: merged.log10.unwrap_or(true),
            model: None,
        };
        match family.as_str() {
            "weibull-like" => {
                if merged.k.is_some() || merged.gamma.is_some() {
                    return Err(CliError::Usage("--k/--gamma belong to --family gamma-weibull".into()));
                }
                let (alpha, c) = (merged.alpha.unwrap_or(0.0), merged.c.unwrap_or(1.0));
                let d = merged.d.unwrap_or(beta * c);
                cfg.alpha = Some(alpha);
                cfg.c = Some(c);
                cfg.d = Some(d);
                cfg.model = Some(ModelSpec::WeibullLike(WeibullLikeModel::new(alpha, beta, c, d).map_err(infeasible)?));
            }
            "gamma-weibull" => {
                if merged.alpha.is_some() || merged.c.is_some() || merged.d.is_some() {
                    return Err(CliError::Usage("--alpha/--c/--d belong to --family weibull-like".into()));
                }
                let (k, gamma) = (merged.k.unwrap_or(1.0), merged.gamma.unwrap_or(beta));
                cfg.k = Some(k);
                cfg.gamma = Some(gamma);
                cfg.model = Some(ModelSpec::GammaWeibull(GammaWeibullModel::new(k, beta, gamma).map_err(infeasible)?));
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown family {other:?}; expected weibull-like or gamma-weibull"
                )))
            }
        }
        if cfg.n == 0 {
            return Err(CliError::Usage("--n must be >= 1".into()));
        }
        if cfg.samples == 0 || cfg.chunks == 0 {
            return Err(CliError::Usage("--samples and --chunks must be >= 1".into()));
        }
        if !(cfg.mu > 0.0) {
            return Err(CliError::Usage(format!("--mu must be > 0, got {}", cfg.mu)));
        }
        if cfg.format != "json" && cfg.format != "csv" {
            return Err(CliError::Usage(format!("--format must be json or csv, got {:?}", cfg.format)));
        }
        parse_grid(&cfg.x, cfg.geom).map_err(CliError::Usage)?;
        Ok(cfg)
    }
}

fn infeasible(e: lighttail::Error) -> CliError {
    CliError::Usage(format!("infeasible model parameters: {e}"))
}

fn default_chunks() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Accepts the flat record or a full JSON output holding it under `"config"`.
fn parse_config_text(text: &str) -> Result<RawConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    let record = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(record).map_err(|e| CliError::Usage(format!("invalid config record: {e}")))
}

/// `"6"` → `[6]`; `"lo:hi:count"` → `count` evenly (or geometrically) spaced points.
pub fn parse_grid(s: &str, geom: bool) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?} in x {s:?}"));
    match parts.as_slice() {
        [one] => {
            let x = num(one)?;
            if !x.is_finite() {
                return Err(format!("x must be finite, got {s:?}"));
            }
            Ok(vec![x])
        }
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("grid count must be a positive integer in {s:?}"))?;
            if count == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(format!("grid {s:?} needs finite lo <= hi and count >= 1"));
            }
            if count == 1 {
                return Ok(vec![lo]);
            }
            if geom && !(lo > 0.0) {
                return Err(format!("geometric grid {s:?} needs lo > 0"));
            }
            let step = |i: usize| i as f64 / (count - 1) as f64;
            Ok((0..count)
                .map(|i| if geom { lo * (hi / lo).powf(step(i)) } else { lo + (hi - lo) * step(i) })
                .collect())
        }
        _ => Err(format!("x must be a number or lo:hi:count, got {s:?}")),
    }
}
