use std::collections::BTreeMap;
use std::path::Path;

use vnc_core::{Cancellation, Mode};
use vnc_driver::ErrorModel;

use crate::transport::{DelayModel, DropWindow, TransportConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("key {key}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("missing key {0}")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Flat `key=value` configuration. Section prefixes (`ncp.`, `mgmt.`,
/// `transport.`) namespace scenario-specific keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioConfig {
    values: BTreeMap<String, String>,
}

impl ScenarioConfig {
    pub fn new(scenario: &str) -> Self {
        let mut c = ScenarioConfig::default();
        c.set("scenario", scenario);
        c
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            c.apply_override(line).map_err(|_| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.trim().to_string(), value.to_string().trim().to_string());
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        match kv.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                self.set(k, v);
                Ok(())
            }
            _ => Err(ConfigError::Syntax {
                line: 0,
                text: kv.to_string(),
            }),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.values
            .range(prefix.to_string()..)
            .take_while(move |(k, _)| k.starts_with(prefix))
            .map(move |(k, v)| (&k[prefix.len()..], v.as_str()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::Value {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| ConfigError::Value {
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn scenario(&self) -> Result<&str, ConfigError> {
        self.get("scenario")
            .ok_or_else(|| ConfigError::Missing("scenario".into()))
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.u64_or("seed", 0)
    }

    pub fn duration(&self, default: f64) -> Result<f64, ConfigError> {
        let d = self.f64_or("duration", default)?;
        if !(d > 0.0) {
            return Err(ConfigError::Invalid(format!("duration must be positive, got {d}")));
        }
        Ok(d)
    }

    pub fn mode(&self) -> Result<Mode, ConfigError> {
        match self.str_or("mode", "vnc") {
            "vnc" => Ok(Mode::Vnc),
            "sequential" => Ok(Mode::Sequential),
            v => Err(ConfigError::Value {
                key: "mode".into(),
                value: v.into(),
            }),
        }
    }

    pub fn cancellation(&self) -> Result<Cancellation, ConfigError> {
        match self.str_or("cancellation", "aggressive") {
            "aggressive" => Ok(Cancellation::Aggressive),
            "lazy" => Ok(Cancellation::Lazy),
            v => Err(ConfigError::Value {
                key: "cancellation".into(),
                value: v.into(),
            }),
        }
    }

    /// `none`, `normal(mean,variance)` or `exponential(rate)`.
    pub fn error_model(&self, key: &str, default: ErrorModel) -> Result<ErrorModel, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_error_model(v).ok_or_else(|| ConfigError::Value {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    /// `faults=KIND@start-end,KIND@start-end`.
    pub fn faults(&self) -> Result<Vec<DropWindow>, ConfigError> {
        let Some(v) = self.get("faults") else {
            return Ok(Vec::new());
        };
        let bad = || ConfigError::Value {
            key: "faults".into(),
            value: v.to_string(),
        };
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (kind, span) = item.split_once('@').ok_or_else(bad)?;
            let (a, b) = span.split_once('-').ok_or_else(bad)?;
            let start: f64 = a.trim().parse().map_err(|_| bad())?;
            let end: f64 = b.trim().parse().map_err(|_| bad())?;
            if !(start >= 0.0 && end >= start) {
                return Err(bad());
            }
            out.push(DropWindow {
                kind: kind.trim().to_string(),
                start,
                end,
            });
        }
        Ok(out)
    }

    /// Builds transport settings from `transport.*` keys over `base`.
    pub fn transport(&self, mut base: TransportConfig) -> Result<TransportConfig, ConfigError> {
        if let Some(d) = self.parsed::<f64>("transport.delay")? {
            base.delay = DelayModel::Constant(d);
        }
        let per_kind: Vec<(String, String)> = self
            .keys_with_prefix("transport.delay.")
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if !per_kind.is_empty() {
            let (mut table, default) = match base.delay {
                DelayModel::Constant(d) => (BTreeMap::new(), d),
                DelayModel::PerKind { table, default } => (table, default),
            };
            for (k, v) in per_kind {
                let d = v.parse().map_err(|_| ConfigError::Value {
                    key: format!("transport.delay.{k}"),
                    value: v.clone(),
                })?;
                table.insert(k, d);
            }
            base.delay = DelayModel::PerKind { table, default };
        }
        let drops: Vec<(String, String)> = self
            .keys_with_prefix("transport.drop.")
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in drops {
            let p: f64 = v.parse().map_err(|_| ConfigError::Value {
                key: format!("transport.drop.{k}"),
                value: v.clone(),
            })?;
            base.drop_prob.insert(k, p);
        }
        base.dup_prob = self.f64_or("transport.dup", base.dup_prob)?;
        base.reorder_window = self.f64_or("transport.reorder", base.reorder_window)?;
        base.drop_windows.extend(self.faults()?);
        base.seed = self.seed()?.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x7472;
        Ok(base)
    }

    /// Rejects negative values for every numeric key that names a time or rate.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario()?;
        self.mode()?;
        self.cancellation()?;
        for (k, v) in &self.values {
            if let Ok(x) = v.parse::<f64>() {
                if x < 0.0 && !k.ends_with("offset") {
                    return Err(ConfigError::Invalid(format!("{k} must be non-negative")));
                }
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

pub fn parse_error_model(v: &str) -> Option<ErrorModel> {
    let v = v.trim();
    if v == "none" {
        return Some(ErrorModel::None);
    }
    let (name, rest) = v.split_once('(')?;
    let args: Vec<f64> = rest
        .strip_suffix(')')?
        .split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<_>>()?;
    let m = match (name.trim(), args.as_slice()) {
        ("normal", [mean, variance]) => ErrorModel::Normal {
            mean: *mean,
            variance: *variance,
        },
        ("exponential", [rate]) => ErrorModel::Exponential { rate: *rate },
        _ => return None,
    };
    m.validate().ok().map(|_| m)
}
