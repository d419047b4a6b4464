use std::f64::consts::LN_10;

use lighttail::asymptotics::{bkr_split, nfold_asymptote};
use lighttail::bounds::{sum_tail_bounds, upper_bound_quality};
use lighttail::compound::{esscher_tail, log_asym_tail, log_asym_tail_with, AsymForm, CompoundModel, NumericMgf};
use lighttail::estimators::{estimate as run_estimator, Method};
use lighttail::oracle::nfold_tail_small;
use lighttail::{BkrModel, Error, ModelSpec, QuadratureSpec, RunConfig, TailModel};
use serde_json::Value;

use crate::config::{parse_grid, CliConfig};
use crate::output::{num, opt, Output, Row};
use crate::CliError;

fn model(cfg: &CliConfig) -> ModelSpec {
    cfg.model.expect("resolved config carries a model")
}

fn grid(cfg: &CliConfig) -> Vec<f64> {
    parse_grid(&cfg.x, cfg.geom).expect("grid validated during resolution")
}

fn run_config(cfg: &CliConfig) -> RunConfig {
    RunConfig {
        n_samples: cfg.samples,
        seed: cfg.seed,
        n_chunks: cfg.chunks,
    }
}

fn row(pairs: Vec<(&str, Value)>) -> Row {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// `Unsupported` and domain errors mean "not applicable here" for one cell.
fn applicable<T>(r: Result<T, Error>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Unsupported(_) | Error::Domain(_) | Error::NoSolution(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn asym(cfg: &CliConfig) -> Result<Output, CliError> {
    let wl = model(cfg).weibull_like()?;
    let a = nfold_asymptote(&wl, cfg.n)?;
    let mut out = Output::new("asym", &["x", "log10_tail", "tail", "split_q1", "split_q2"]);
    out.summary.insert("c_n".into(), num(a.c));
    out.summary.insert("p".into(), num(a.p));
    out.summary.insert("log_k".into(), num(a.log_k));
    out.summary.insert("k".into(), num(a.k()));
    let bkr = if cfg.n == 2 { Some(BkrModel::from_weibull_like(&wl)?) } else { None };
    for x in grid(cfg) {
        let split = match &bkr {
            Some(b) if x > 0.0 => Some(bkr_split(b, b, x)?),
            _ => None,
        };
        let log_tail = a.log_eval(x);
        out.rows.push(row(vec![
            ("x", num(x)),
            ("log10_tail", num(log_tail / LN_10)),
            ("tail", num(log_tail.exp())),
            ("split_q1", opt(split.map(|s| s.q1))),
            ("split_q2", opt(split.map(|s| s.q2))),
        ]));
    }
    if let Some(tail) = out.rows.first().and_then(|r| r.get("log10_tail")).cloned() {
        out.summary.insert("log10_tail".into(), tail);
    }
    Ok(out)
}

pub fn bounds(cfg: &CliConfig) -> Result<Output, CliError> {
    let law = model(cfg).exact_law()?;
    let gammas = vec![law.gamma(); cfg.n];
    let mut out = Output::new("bounds", &["x", "log10_lower", "log10_upper"]);
    out.summary.insert("gamma0".into(), num(law.gamma() * cfg.n as f64));
    if let Some(q) = applicable(upper_bound_quality(&law, cfg.n, grid(cfg)[0].max(1.0)))? {
        out.summary.insert("quality_degree".into(), num(q.polynomial_degree));
    }
    for x in grid(cfg) {
        let b = sum_tail_bounds(&gammas, law.k(), law.beta(), x)?;
        out.rows.push(row(vec![
            ("x", num(x)),
            ("log10_lower", num(b.log10_lower())),
            ("log10_upper", num(b.log10_upper())),
        ]));
    }
    Ok(out)
}

const ESTIMATE_COLUMNS: [&str; 11] = [
    "x",
    "method",
    "estimate",
    "log10_estimate",
    "std_error",
    "rel_error",
    "ci95_low",
    "ci95_high",
    "n_samples",
    "seed",
    "below_mc_resolution",
];

pub fn estimate(cfg: &CliConfig) -> Result<Output, CliError> {
    let method: Method = cfg.method.as_deref().unwrap_or("is").parse().map_err(CliError::from)?;
    let spec = model(cfg);
    let rc = run_config(cfg);
    let mut out = Output::new("estimate", &ESTIMATE_COLUMNS);
    for x in grid(cfg) {
        let r = run_estimator(method, &spec, cfg.n, x, &rc)?;
        let mut fields = serde_json::to_value(&r)
            .expect("estimate serializes")
            .as_object()
            .cloned()
            .unwrap_or_default();
        let empty = r.estimate == 0.0;
        fields.insert("below_mc_resolution".into(), empty.into());
        if empty {
            // no hits: no interval is reported
            for key in ["std_error", "rel_error", "ci95_low", "ci95_high"] {
                fields.insert(key.into(), Value::Null);
            }
        }
        out.rows.push(fields);
    }
    Ok(out)
}

pub fn compound(cfg: &CliConfig) -> Result<Output, CliError> {
    let spec = model(cfg);
    let cm = CompoundModel::new(cfg.mu, spec)?;
    let method = cfg.method.as_deref().unwrap_or("esscher");
    let mut out = Output::new("compound", &["x", "method", "log10_tail", "theta", "sigma_c", "log10_tail_printed"]);
    for x in grid(cfg) {
        let r = match method {
            "esscher" => {
                let e = esscher_tail(&cm, x, &NumericMgf::new(spec.exact_law()?))?;
                row(vec![
                    ("x", num(x)),
                    ("method", method.into()),
                    ("log10_tail", num(e.log_tail / LN_10)),
                    ("theta", num(e.theta)),
                    ("sigma_c", num(e.sigma_c)),
                ])
            }
            "logasym" => row(vec![
                ("x", num(x)),
                ("method", method.into()),
                ("log10_tail", num(log_asym_tail(&cm, x)? / LN_10)),
                ("log10_tail_printed", num(log_asym_tail_with(&cm, x, AsymForm::Printed)? / LN_10)),
            ]),
            other => {
                return Err(CliError::Usage(format!(
                    "compound --method must be esscher or logasym, got {other:?}"
                )))
            }
        };
        out.rows.push(r);
    }
    Ok(out)
}

fn oracle_log_tail(spec: &ModelSpec, n: usize, x: f64) -> Result<f64, Error> {
    if n == 1 {
        spec.log_tail(x)
    } else {
        nfold_tail_small(spec, n, x, &QuadratureSpec::default())
    }
}

pub fn oracle(cfg: &CliConfig) -> Result<Output, CliError> {
    if cfg.n > 4 {
        return Err(CliError::Usage(format!("oracle supports n <= 4, got {}", cfg.n)));
    }
    let spec = model(cfg);
    let mut out = Output::new("oracle", &["x", "log10_tail", "tail"]);
    for x in grid(cfg) {
        let lt = oracle_log_tail(&spec, cfg.n, x)?;
        out.rows.push(row(vec![("x", num(x)), ("log10_tail", num(lt / LN_10)), ("tail", num(lt.exp()))]));
    }
    Ok(out)
}

pub const COMPARE_COLUMNS: [&str; 10] = ["x", "asym", "lower", "upper", "crude", "is", "cond", "ak", "oracle", "flags"];

pub fn compare(cfg: &CliConfig) -> Result<Output, CliError> {
    let spec = model(cfg);
    let n = cfg.n;
    let rc = run_config(cfg);
    let asym = applicable(spec.weibull_like().and_then(|wl| nfold_asymptote(&wl, n)))?;
    let law = applicable(spec.exact_law())?;
    // cells hold natural-log probabilities until formatting
    let show = |log_p: Option<f64>| -> Value {
        match log_p {
            None => Value::Null,
            Some(lp) if cfg.log10 => {
                if lp == f64::NEG_INFINITY {
                    "-inf".into()
                } else {
                    num(lp / LN_10)
                }
            }
            Some(lp) => num(lp.exp()),
        }
    };
    let mut out = Output::new("compare", &COMPARE_COLUMNS);
    out.summary.insert("values".into(), if cfg.log10 { "log10 probability" } else { "probability" }.into());
    for x in grid(cfg) {
        let mut flags = Vec::new();
        let mut cells = vec![("x", num(x)), ("asym", show(asym.map(|a| a.log_eval(x))))];
        let b = match law {
            Some(l) => applicable(sum_tail_bounds(&vec![l.gamma(); n], l.k(), l.beta(), x))?,
            None => None,
        };
        cells.push(("lower", show(b.map(|b| b.lower))));
        cells.push(("upper", show(b.map(|b| b.upper))));
        for method in Method::ALL {
            let r = if law.is_some() { applicable(run_estimator(method, &spec, n, x, &rc))? } else { None };
            if let Some(r) = &r {
                if r.estimate == 0.0 {
                    flags.push(format!("{}:below_mc_resolution", method.name()));
                }
            }
            cells.push((method.name(), show(r.map(|r| r.log10_estimate * LN_10))));
        }
        let oracle = if n <= 4 && spec.is_exact() { applicable(oracle_log_tail(&spec, n, x))? } else { None };
        cells.push(("oracle", show(oracle)));
        cells.push(("flags", flags.join(";").into()));
        out.rows.push(row(cells));
    }
    Ok(out)
}
