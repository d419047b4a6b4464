use serde_json::{Map, Value};

use crate::config::CliConfig;

/// Version of the JSON record and of the CSV column layout.
pub const SCHEMA_VERSION: u32 = 1;

pub type Row = Map<String, Value>;

pub struct Output {
    pub command: &'static str,
    /// Quantities that do not depend on x.
    pub summary: Row,
    /// CSV column order; JSON rows carry the same keys.
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Output {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self {
            command,
            summary: Map::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self, cfg: &CliConfig) -> String {
        if cfg.format == "csv" {
            self.csv(cfg)
        } else {
            self.json(cfg)
        }
    }

    fn json(&self, cfg: &CliConfig) -> String {
        let mut top = Map::new();
        top.insert("schema_version".into(), SCHEMA_VERSION.into());
        top.insert("command".into(), self.command.into());
        top.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
        for (k, v) in &self.summary {
            top.insert(k.clone(), v.clone());
        }
        top.insert("results".into(), Value::Array(self.rows.iter().cloned().map(Value::Object).collect()));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("output serializes");
        s.push('\n');
        s
    }

    fn csv(&self, cfg: &CliConfig) -> String {
        let mut s = format!("# lighttail csv schema {SCHEMA_VERSION} command={}\n", self.command);
        s.push_str(&format!("# config {}\n", serde_json::to_string(cfg).expect("config serializes")));
        if !self.summary.is_empty() {
            s.push_str(&format!("# summary {}\n", Value::Object(self.summary.clone())));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = self.columns.iter().map(|c| cell(row.get(*c))).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// A JSON number, or `null` when the value is not finite.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}
