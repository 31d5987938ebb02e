//! Experiment records and their JSON-lines / CSV serializations.
//!
//! Records are the single output currency of the CLI: every experiment and
//! every verification check emits one. Field order and map ordering are
//! fixed so identical inputs produce identical bytes. Wall time is kept on
//! the struct for interactive display but never serialized, since it would
//! break byte-level reproducibility.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: String,
    /// Full parameter set needed to reproduce the record.
    pub params: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<u64>,
    /// Point estimate or exact value; exact rationals are emitted as
    /// strings, floating estimates as numbers.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub estimate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paper_bound: Option<String>,
    pub pass: bool,
    #[serde(skip, default)]
    pub wall_time: Option<Duration>,
}

impl ExperimentRecord {
    pub fn new(experiment: impl Into<String>) -> ExperimentRecord {
        ExperimentRecord {
            experiment: experiment.into(),
            params: BTreeMap::new(),
            seed: None,
            trials: None,
            estimate: None,
            stderr: None,
            paper_bound: None,
            pass: true,
            wall_time: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn trials(mut self, trials: u64) -> Self {
        self.trials = Some(trials);
        self
    }

    pub fn estimate(mut self, value: impl Into<Value>) -> Self {
        self.estimate = Some(value.into());
        self
    }

    pub fn stderr(mut self, se: f64) -> Self {
        self.stderr = Some(se);
        self
    }

    pub fn paper_bound(mut self, bound: impl Into<String>) -> Self {
        self.paper_bound = Some(bound.into());
        self
    }

    pub fn pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }

    pub fn from_json_line(line: &str) -> Result<ExperimentRecord> {
        serde_json::from_str(line).map_err(|e| Error::Parse(format!("bad record line: {e}")))
    }
}

pub fn emit_jsonl(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

/// Fixed CSV column order; `params` is a JSON object in one quoted field.
pub const CSV_HEADER: &str = "experiment,seed,trials,estimate,stderr,paper_bound,pass,params";

pub fn emit_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let cells = [
            csv_escape(&r.experiment),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.trials.map(|t| t.to_string()).unwrap_or_default(),
            r.estimate
                .as_ref()
                .map(|v| csv_escape(&value_plain(v)))
                .unwrap_or_default(),
            r.stderr.map(|s| s.to_string()).unwrap_or_default(),
            r.paper_bound
                .as_ref()
                .map(|b| csv_escape(b))
                .unwrap_or_default(),
            r.pass.to_string(),
            csv_escape(&serde_json::to_string(&r.params).unwrap()),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn value_plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentRecord {
        ExperimentRecord::new("switch_fail_mc")
            .param("n", 4)
            .param("p", "1/4")
            .seed(7)
            .trials(100_000)
            .estimate(0.125)
            .stderr(0.001)
            .paper_bound("exp(-d^0.2)")
            .pass(true)
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let line = r.to_json_line();
        let back = ExperimentRecord::from_json_line(&line).unwrap();
        assert_eq!(back, r);
        // Key order inside params is sorted, so re-serialization is stable.
        assert_eq!(back.to_json_line(), line);
    }

    #[test]
    fn wall_time_never_serialized() {
        let mut r = sample();
        r.wall_time = Some(Duration::from_millis(12));
        assert!(!r.to_json_line().contains("wall"));
        let mut r2 = sample();
        r2.wall_time = Some(Duration::from_millis(99));
        assert_eq!(r.to_json_line(), r2.to_json_line());
    }

    #[test]
    fn absent_optionals_are_omitted() {
        let r = ExperimentRecord::new("x").pass(false);
        let line = r.to_json_line();
        assert!(!line.contains("estimate"));
        assert!(!line.contains("seed"));
        assert!(line.contains("\"pass\":false"));
    }

    #[test]
    fn csv_has_fixed_columns_and_escaping() {
        let mut r = sample();
        r.paper_bound = Some("a,b \"quoted\"".into());
        let csv = emit_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("switch_fail_mc,7,100000,0.125,0.001,"));
        assert!(row.contains("\"a,b \"\"quoted\"\"\""));
    }
}
