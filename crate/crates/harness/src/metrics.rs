use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use vnc_core::{LpCounters, RTime, VncMessage};

use crate::transport::TransportCounters;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageClass {
    Real,
    Virtual,
    Anti,
}

impl MessageClass {
    pub fn of<P>(msg: &VncMessage<P>, now: RTime) -> Self {
        if msg.anti {
            MessageClass::Anti
        } else if msg.is_virtual(now) {
            MessageClass::Virtual
        } else {
            MessageClass::Real
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassTotals {
    pub real: u64,
    #[serde(rename = "virtual")]
    pub virtual_: u64,
    pub anti: u64,
}

/// A named CSV table carried alongside the standard series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub mode: String,
    pub lp: BTreeMap<String, LpCounters>,
    /// `(1-second bin, link, kind) -> count`.
    pub load: BTreeMap<(i64, String, String), u64>,
    pub class_totals: ClassTotals,
    pub lvt_trace: Vec<(f64, String, f64)>,
    pub latencies: Vec<f64>,
    pub measured_speedup: Option<f64>,
    pub measured_beta: Option<f64>,
    pub transport: TransportCounters,
    pub scalars: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Table>,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    mode: &'a str,
    class_totals: &'a ClassTotals,
    measured_speedup: Option<f64>,
    measured_beta: Option<f64>,
    mean_latency: Option<f64>,
    events: usize,
    transport: &'a TransportCounters,
    lp: &'a BTreeMap<String, LpCounters>,
    scalars: &'a BTreeMap<String, f64>,
}

impl MetricsReport {
    pub fn new(scenario: &str, seed: u64, mode: &str) -> Self {
        MetricsReport {
            scenario: scenario.to_string(),
            seed,
            mode: mode.to_string(),
            ..MetricsReport::default()
        }
    }

    /// Counts one transmission on `link` in the class it has at `now`.
    pub fn record_send<P>(&mut self, msg: &VncMessage<P>, now: RTime, link: &str) {
        let class = MessageClass::of(msg, now);
        match class {
            MessageClass::Real => self.class_totals.real += 1,
            MessageClass::Virtual => self.class_totals.virtual_ += 1,
            MessageClass::Anti => self.class_totals.anti += 1,
        }
        let kind = if msg.anti {
            format!("{}_anti", msg.kind)
        } else {
            msg.kind.to_string()
        };
        *self
            .load
            .entry((now.floor() as i64, link.to_string(), kind))
            .or_insert(0) += 1;
    }

    pub fn record_lvt(&mut self, t: RTime, lp: &str, lvt: f64) {
        self.lvt_trace.push((t, lp.to_string(), lvt));
    }

    pub fn mean_latency(&self) -> Option<f64> {
        if self.latencies.is_empty() {
            None
        } else {
            Some(self.latencies.iter().sum::<f64>() / self.latencies.len() as f64)
        }
    }

    pub fn total_load(&self) -> u64 {
        self.load.values().sum()
    }

    pub fn lvt_trace_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "lp", "lvt"])?;
        for (t, lp, lvt) in &self.lvt_trace {
            w.write_record([t.to_string(), lp.clone(), lvt.to_string()])?;
        }
        finish(w)
    }

    pub fn load_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "link", "kind", "count"])?;
        for ((t, link, kind), n) in &self.load {
            w.write_record([t.to_string(), link.clone(), kind.clone(), n.to_string()])?;
        }
        finish(w)
    }

    pub fn table_csv(&self, name: &str) -> Result<String, HarnessError> {
        let table = self
            .tables
            .get(name)
            .ok_or_else(|| HarnessError::Assertion(format!("no table {name}")))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        finish(w)
    }

    pub fn summary_json(&self) -> Result<String, HarnessError> {
        let s = Summary {
            scenario: &self.scenario,
            seed: self.seed,
            mode: &self.mode,
            class_totals: &self.class_totals,
            measured_speedup: self.measured_speedup,
            measured_beta: self.measured_beta,
            mean_latency: self.mean_latency(),
            events: self.latencies.len(),
            transport: &self.transport,
            lp: &self.lp,
            scalars: &self.scalars,
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }

    /// Writes `lvt_trace.csv`, `load.csv`, `summary.json` and one CSV per
    /// extra table into `dir`. Returns the file names written.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<String>, HarnessError> {
        fs::create_dir_all(dir)?;
        let mut files = vec![
            ("lvt_trace.csv".to_string(), self.lvt_trace_csv()?),
            ("load.csv".to_string(), self.load_csv()?),
            ("summary.json".to_string(), self.summary_json()?),
        ];
        for name in self.tables.keys() {
            files.push((name.clone(), self.table_csv(name)?));
        }
        let mut names = Vec::new();
        for (name, body) in files {
            fs::write(dir.join(&name), body)?;
            names.push(name);
        }
        Ok(names)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Assertion(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Mean task latency of `baseline` over that of `report`.
pub fn measure_speedup(report: &MetricsReport, baseline: &MetricsReport) -> Result<f64, HarnessError> {
    let vnc = report.mean_latency().ok_or(HarnessError::EmptyEvents)?;
    let base = baseline.mean_latency().ok_or(HarnessError::EmptyEvents)?;
    if report.latencies.len() != baseline.latencies.len() {
        return Err(HarnessError::Assertion(format!(
            "event counts differ: {} vs {}",
            report.latencies.len(),
            baseline.latencies.len()
        )));
    }
    Ok(base / vnc)
}

/// `(real + virtual + anti) / real` over all transmissions.
pub fn measure_beta(report: &MetricsReport) -> Result<f64, HarnessError> {
    let c = &report.class_totals;
    if c.real == 0 {
        return Err(HarnessError::NoRealMessages);
    }
    Ok((c.real + c.virtual_ + c.anti) as f64 / c.real as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_latencies(v: &[f64]) -> MetricsReport {
        MetricsReport {
            latencies: v.to_vec(),
            ..MetricsReport::default()
        }
    }

    #[test]
    fn speedup_examples() {
        let a = with_latencies(&[2.0, 4.0]);
        assert_eq!(measure_speedup(&a, &a).unwrap(), 1.0);
        let vnc = with_latencies(&[2.29]);
        let base = with_latencies(&[8.0]);
        assert!((measure_speedup(&vnc, &base).unwrap() - 3.49).abs() < 0.01);
        assert!(matches!(
            measure_speedup(&with_latencies(&[]), &base),
            Err(HarnessError::EmptyEvents)
        ));
    }

    #[test]
    fn beta_examples() {
        let mut r = MetricsReport::default();
        let real = VncMessage::new(0.0, 0.0, 0.0, 0, 1, "X", ());
        let virt = VncMessage::new(0.0, 5.0, 5.0, 0, 1, "X", ());
        for _ in 0..10 {
            r.record_send(&real, 0.0, "0->1");
            r.record_send(&virt, 0.0, "0->1");
        }
        assert_eq!(measure_beta(&r).unwrap(), 2.0);
        assert_eq!(r.total_load(), 20);
        assert!(matches!(
            measure_beta(&MetricsReport::default()),
            Err(HarnessError::NoRealMessages)
        ));
    }

    #[test]
    fn csv_shapes() {
        let mut r = MetricsReport::new("x", 1, "vnc");
        r.record_lvt(0.5, "lp1", 2.0);
        let csv = r.lvt_trace_csv().unwrap();
        assert_eq!(csv, "t,lp,lvt\n0.5,lp1,2\n");
        let msg = VncMessage::new(0.0, 0.0, 0.0, 0, 1, "USER_POS", ());
        r.record_send(&msg.anti_copy(), 1.5, "a->b");
        assert_eq!(r.load_csv().unwrap(), "t,link,kind,count\n1,a->b,USER_POS_anti,1\n");
    }
}
