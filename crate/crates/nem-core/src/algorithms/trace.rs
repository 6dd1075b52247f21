use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const TRACE_SCHEMA: &str = "trace.v1";
const CSV_HEADER: &str = "step,t,radius_sq,u,aux";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    /// `kδ` for Hessian descent, the iteration index otherwise.
    pub t: f64,
    pub radius_sq: f64,
    /// Energy per equation `H/n`.
    pub u: f64,
    #[serde(default)]
    pub aux: BTreeMap<String, f64>,
}

/// Per-step record of one solver run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub schema: String,
    pub algorithm: String,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TraceParseError {
    #[error("missing or unknown schema header (expected {TRACE_SCHEMA})")]
    Schema,
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("json: {0}")]
    Json(String),
}

impl RunTrace {
    pub fn new(algorithm: &str) -> Self {
        RunTrace { schema: TRACE_SCHEMA.into(), algorithm: algorithm.into(), records: Vec::new() }
    }

    pub fn push(&mut self, step: usize, t: f64, radius_sq: f64, u: f64, aux: &[(&str, f64)]) {
        self.records.push(TraceRecord {
            step,
            t,
            radius_sq,
            u,
            aux: aux.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Appends another run's records, renumbering steps after this one's and
    /// tagging every appended record with `phase`.
    pub fn extend_phase(&mut self, other: RunTrace, phase: f64) {
        let base = self.records.last().map_or(0, |r| r.step + 1);
        for mut r in other.records {
            r.step += base;
            r.aux.insert("phase".into(), phase);
            self.records.push(r);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# {} algorithm={}\n{CSV_HEADER}\n", TRACE_SCHEMA, self.algorithm);
        for r in &self.records {
            let aux: Vec<String> = r.aux.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "{},{},{},{},{}", r.step, r.t, r.radius_sq, r.u, aux.join(";"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<RunTrace, TraceParseError> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or(TraceParseError::Schema)?;
        let rest = first.strip_prefix("# ").ok_or(TraceParseError::Schema)?;
        let mut parts = rest.split_whitespace();
        if parts.next() != Some(TRACE_SCHEMA) {
            return Err(TraceParseError::Schema);
        }
        let algorithm = parts.find_map(|p| p.strip_prefix("algorithm=")).unwrap_or("").to_string();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            Some((i, _)) => return Err(TraceParseError::Line { line: i + 1, msg: "bad column header".into() }),
            None => return Err(TraceParseError::Line { line: 2, msg: "missing column header".into() }),
        }
        let mut trace = RunTrace::new(&algorithm);
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| TraceParseError::Line { line: i + 1, msg: msg.into() };
            let cols: Vec<&str> = line.splitn(5, ',').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("not a number"));
            let mut aux = BTreeMap::new();
            for kv in cols[4].split(';').filter(|s| !s.is_empty()) {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad("aux entry without '='"))?;
                aux.insert(k.to_string(), num(v)?);
            }
            trace.records.push(TraceRecord {
                step: cols[0].parse().map_err(|_| bad("bad step"))?,
                t: num(cols[1])?,
                radius_sq: num(cols[2])?,
                u: num(cols[3])?,
                aux,
            });
        }
        Ok(trace)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace values are finite")
    }

    pub fn from_json(text: &str) -> Result<RunTrace, TraceParseError> {
        let t: RunTrace = serde_json::from_str(text).map_err(|e| TraceParseError::Json(e.to_string()))?;
        if t.schema != TRACE_SCHEMA {
            return Err(TraceParseError::Schema);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        let mut t = RunTrace::new("hd");
        t.push(0, 0.0, 0.02, 0.5, &[("rayleigh", -3.25)]);
        t.push(1, 0.02, 0.04, 0.4831234567891, &[("rayleigh", -3.0), ("descent", 1e-17)]);
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let csv = t.to_csv();
        assert!(csv.starts_with("# trace.v1 algorithm=hd\nstep,t,radius_sq,u,aux\n"));
        assert!(csv.contains("descent=0.00000000000000001;rayleigh=-3"));
        assert_eq!(RunTrace::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let j = t.to_json();
        assert!(j.contains("\"schema\": \"trace.v1\""));
        assert_eq!(RunTrace::from_json(&j).unwrap(), t);
    }

    #[test]
    fn rejects_unversioned() {
        assert_eq!(RunTrace::from_csv("step,t,radius_sq,u,aux\n"), Err(TraceParseError::Schema));
        assert!(RunTrace::from_json("{\"schema\":\"trace.v0\",\"algorithm\":\"x\",\"records\":[]}").is_err());
    }

    #[test]
    fn phases_renumber() {
        let mut a = sample();
        a.extend_phase(sample(), 2.0);
        let steps: Vec<usize> = a.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 1, 2, 3]);
        assert_eq!(a.records[3].aux["phase"], 2.0);
    }
}
