use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use vnc_analysis::{
    beam_alpha, beta_analytic, chebycheff_pot, eta, lookahead_stats, prediction_rate, s_parallel,
    utility, AnalysisParams, PositionError,
};
use vnc_harness::ScenarioConfig;

use crate::{load_config, AnalyzeArgs, CliError};

/// Keys read alongside the model parameters.
const EXTRA: [&str; 3] = ["lambda_r", "p_oo", "events"];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeInputs {
    pub params: AnalysisParams,
    /// Real message rate; one virtual per real by default.
    pub lambda_r: f64,
    pub p_oo: f64,
    /// Event count the analytic figures refer to, when known.
    pub events: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSummary {
    pub pr: Option<f64>,
    pub s_parallel: Option<f64>,
    pub expected_la: Option<f64>,
    pub eta: Option<f64>,
    pub p_ot: Option<f64>,
    pub lambda_rb: Option<f64>,
    pub beta_verbatim: Option<f64>,
    pub beta_count: Option<f64>,
    pub alpha: Option<f64>,
    pub u_vnc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<u64>,
}

fn number(key: &str, v: &str) -> Result<Value, CliError> {
    if v == "none" {
        return Ok(Value::Null);
    }
    if let Ok(i) = v.parse::<u64>() {
        return Ok(Value::Number(Number::from(i)));
    }
    v.parse::<f64>()
        .ok()
        .and_then(Number::from_f64)
        .map(Value::Number)
        .ok_or_else(|| CliError::Config(format!("key {key}: cannot parse {v:?}")))
}

/// Reads model parameters from bare or `analysis.`-prefixed keys; anything
/// not set keeps its default.
pub fn analysis_inputs(cfg: &ScenarioConfig) -> Result<AnalyzeInputs, CliError> {
    let Value::Object(mut map) = serde_json::to_value(AnalysisParams::default())
        .map_err(|e| CliError::Runtime(e.to_string()))?
    else {
        unreachable!("parameters serialize to an object");
    };
    let mut extra = Map::new();
    for (k, v) in cfg.iter() {
        let key = k.strip_prefix("analysis.").unwrap_or(k);
        if key == "scenario" {
            continue;
        }
        if EXTRA.contains(&key) {
            extra.insert(key.to_string(), number(k, v)?);
        } else if map.contains_key(key) {
            map.insert(key.to_string(), number(k, v)?);
        } else {
            return Err(CliError::Config(format!("unknown analysis key {k}")));
        }
    }
    let params: AnalysisParams =
        serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(e.to_string()))?;
    params
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let get = |k: &str| extra.get(k).and_then(Value::as_f64);
    let events = match extra.get("events") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| CliError::Config("events must be a whole number".into()))?,
        ),
    };
    Ok(AnalyzeInputs {
        lambda_r: get("lambda_r").unwrap_or(params.lambda_vm),
        p_oo: get("p_oo").unwrap_or(0.0),
        params,
        events,
    })
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn analyze(inp: &AnalyzeInputs) -> AnalyticSummary {
    let p = &inp.params;
    let eta = eta(p).ok();
    let p_ot = chebycheff_pot(p.sigma2, p.theta);
    let lambda_rb = p.n_lps as f64 * p.r_m * (inp.p_oo + p_ot);
    let beta = beta_analytic(p.lambda_vm, inp.lambda_r, lambda_rb, p.big_lambda);
    let alpha = beam_alpha(PositionError::Gaussian { sigma: p.sigma2.sqrt() }, p.d, p.beam_theta);
    AnalyticSummary {
        pr: prediction_rate(p).ok(),
        s_parallel: s_parallel(p.p_procs, p.k_stages, p.mu).ok(),
        expected_la: lookahead_stats(p).ok().map(|s| s.expected_la),
        eta,
        p_ot: Some(p_ot),
        lambda_rb: Some(lambda_rb),
        beta_verbatim: finite(beta.verbatim),
        beta_count: finite(beta.count),
        alpha: Some(alpha),
        u_vnc: eta.and_then(|e| finite(utility(e, alpha, beta.count, p.phi_s, p.phi_w, p.phi_b))),
        events: inp.events,
    }
}

pub fn rows(s: &AnalyticSummary) -> Vec<(&'static str, Option<f64>)> {
    vec![
        ("PR", s.pr),
        ("S_parallel", s.s_parallel),
        ("E[LA]", s.expected_la),
        ("eta", s.eta),
        ("P_ot", s.p_ot),
        ("lambda_rb", s.lambda_rb),
        ("beta_verbatim", s.beta_verbatim),
        ("beta_count", s.beta_count),
        ("alpha", s.alpha),
        ("U_VNC", s.u_vnc),
    ]
}

pub fn command(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&a.cfg)?;
    let summary = analyze(&analysis_inputs(&cfg)?);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(path) = &a.out {
        std::fs::write(path, &json)?;
    }
    if a.json {
        writeln!(out, "{json}")?;
        return Ok(());
    }
    for (name, v) in rows(&summary) {
        match v {
            Some(x) => writeln!(out, "{name:<14} {x:.6}")?,
            None => writeln!(out, "{name:<14} undefined")?,
        }
    }
    Ok(())
}
