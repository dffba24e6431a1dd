use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use vnc_harness::ScenarioConfig;

use crate::analyze::{analysis_inputs, analyze, AnalyticSummary};
use crate::{CliError, CompareArgs};

/// The part of `summary.json` that has analytic counterparts.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct Measured {
    pub measured_speedup: Option<f64>,
    pub measured_beta: Option<f64>,
    #[serde(default)]
    pub events: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delta {
    pub metric: &'static str,
    pub measured: Option<f64>,
    pub analytic: Option<f64>,
}

impl Delta {
    pub fn delta(&self) -> Option<f64> {
        Some(self.measured? - self.analytic?)
    }
}

pub fn compare(m: &Measured, a: &AnalyticSummary) -> Vec<Delta> {
    vec![
        Delta {
            metric: "speedup",
            measured: m.measured_speedup,
            analytic: a.eta,
        },
        Delta {
            metric: "beta",
            measured: m.measured_beta,
            analytic: a.beta_count,
        },
    ]
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_analytic(path: &Path) -> Result<AnalyticSummary, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    let cfg = ScenarioConfig::parse(&text)?;
    Ok(analyze(&analysis_inputs(&cfg)?))
}

fn show(x: Option<f64>) -> String {
    x.map_or("-".to_string(), |v| format!("{v:.6}"))
}

pub fn command(a: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read(&a.measured)?;
    let measured: Measured = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.measured.display())))?;
    let analytic = load_analytic(&a.analytic)?;
    if let (Some(me), Some(ae)) = (measured.events, analytic.events) {
        if me != ae {
            writeln!(out, "warning: event counts differ (measured {me}, analytic {ae})")?;
        }
    }
    let rows = compare(&measured, &analytic);
    writeln!(out, "{:<8} {:>12} {:>12} {:>12}", "metric", "measured", "analytic", "delta")?;
    let mut worst: Option<(&str, f64)> = None;
    for r in &rows {
        let d = r.delta();
        writeln!(
            out,
            "{:<8} {:>12} {:>12} {:>12}",
            r.metric,
            show(r.measured),
            show(r.analytic),
            show(d)
        )?;
        match d {
            None => writeln!(out, "warning: {} has no value on one side", r.metric)?,
            Some(d) if worst.is_none_or(|(_, w)| d.abs() > w) => worst = Some((r.metric, d.abs())),
            Some(_) => {}
        }
    }
    if let (Some(tol), Some((metric, w))) = (a.tolerance, worst) {
        if w > tol {
            return Err(CliError::Assertion(format!("{metric} delta {w:.6} exceeds tolerance {tol}")));
        }
    }
    Ok(())
}
