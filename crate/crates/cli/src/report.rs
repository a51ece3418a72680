use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{CliError, CliResult};

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// A real for CSV output: 12 significant digits, shortest form.
pub fn real(x: f64) -> String {
    format!("{}", round12(x))
}

fn round_tree(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            serde_json::Number::from_f64(round12(n.as_f64().unwrap())).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_tree).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_tree(v))).collect()),
        v => v,
    }
}

/// Pretty JSON with every real rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("reports serialize");
    let mut s = serde_json::to_string_pretty(&round_tree(v)).expect("values serialize");
    s.push('\n');
    s
}

/// `{"config": .., "result": ..}`.
pub fn json_report<T: Serialize>(config: &Value, result: &T) -> String {
    to_json(&json!({ "config": config, "result": result }))
}

/// CSV with the replay config on a leading `#` line.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(config: &Value, header: &[&str]) -> Self {
        let mut text = format!("# config: {}\n", serde_json::to_string(config).expect("config serializes"));
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Report body plus any side files (cache blocks) it produced.
pub struct Output {
    pub body: String,
    pub extension: &'static str,
    pub extra_outputs: Vec<PathBuf>,
}

pub fn manifest_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(real(0.5), "0.5");
        assert_eq!(real(1.0 / 3.0), "0.333333333333");
        assert_eq!(real(2.0f64.sqrt() * 1e-7), "0.000000141421356237");
        assert_eq!(real(123456789.123456789), "123456789.123");
        assert_eq!(round12(0.0), 0.0);
    }

    #[test]
    fn json_rounding_keeps_integers() {
        let s = to_json(&json!({"a": 1.0f64 / 3.0, "n": 10u64, "v": [0.1, 2]}));
        assert!(s.contains("0.333333333333"));
        assert!(s.contains("\"n\": 10"));
        assert!(!s.contains("0.3333333333333"));
    }

    #[test]
    fn manifest_next_to_report() {
        assert_eq!(manifest_path(Path::new("out/r.csv")), PathBuf::from("out/r.csv.manifest.json"));
    }
}
