use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};

/// One tolerance comparison. Passes when `min <= value <= max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Check {
    pub fn below(name: &str, value: f64, max: f64) -> Self {
        Check {
            name: name.into(),
            value,
            min: None,
            max: Some(max),
        }
    }

    pub fn within(name: &str, value: f64, target: f64, halfwidth: f64) -> Self {
        Check {
            name: name.into(),
            value,
            min: Some(target - halfwidth),
            max: Some(target + halfwidth),
        }
    }

    pub fn passed(&self) -> bool {
        // NaN fails both comparisons
        self.min.map_or(true, |m| self.value >= m)
            && self.max.map_or(true, |m| self.value <= m)
            && !self.value.is_nan()
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": self.value,
            "min": self.min,
            "max": self.max,
            "pass": self.passed(),
        })
    }
}

/// Everything a run produces, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub sections: Map<String, Value>,
    pub levels: BTreeMap<usize, Map<String, Value>>,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn level_field(&mut self, n: usize, key: &str, value: Value) {
        let entry = self.levels.entry(n).or_default();
        entry.insert("level".into(), json!(n));
        entry.insert(key.into(), value);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn report(&self, command: &str, config: Value) -> Value {
        json!({
            "tool": {"name": "rfw", "version": env!("CARGO_PKG_VERSION")},
            "command": command,
            "config": config,
            "passed": self.passed(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "levels": self.levels.values().cloned().map(Value::Object).collect::<Vec<_>>(),
            "results": Value::Object(self.sections.clone()),
        })
    }

    /// Writes `report.json` and every CSV into `dir`.
    pub fn write(&self, dir: &Path, report: &Value) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        let mut text = serde_json::to_string_pretty(&round(report.clone()))?;
        text.push('\n');
        fs::write(dir.join("report.json"), text)
    }
}

/// Rounds every float to 12 significant digits; non-finite values become null.
pub fn round(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.11e}").parse().unwrap();
            json!(if r == 0.0 { 0.0 } else { r })
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect()),
        other => other,
    }
}

pub fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> rfw_core::Result<()>) -> rfw_core::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_stable() {
        let v = round(json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0, -0.0], "c": 3}));
        assert_eq!(v["a"], json!(0.3));
        assert_eq!(v["b"][0], json!(0.333333333333));
        assert_eq!(v["b"][1], json!(0.0));
        assert_eq!(v["c"], json!(3));
    }

    #[test]
    fn check_bounds() {
        assert!(Check::below("x", 1e-7, 1e-6).passed());
        assert!(!Check::below("x", f64::NAN, 1e-6).passed());
        assert!(Check::within("s", -1.95, -2.0, 0.2).passed());
        assert!(!Check::within("s", -2.3, -2.0, 0.2).passed());
    }

    #[test]
    fn empty_outcome_is_valid_json() {
        let o = Outcome::default();
        let r = o.report("spectrum", json!({}));
        assert_eq!(r["levels"], json!([]));
        assert_eq!(r["checks"], json!([]));
        assert_eq!(r["passed"], json!(true));
    }
}
