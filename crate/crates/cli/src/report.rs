//! Flat report rendering: `key=value` lines or a JSON object, preserving
//! insertion order.

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<Value>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        // serde_json rejects non-finite numbers; report them as strings
        if value.is_finite() {
            self.push(key, value);
        } else {
            self.push(key, value.to_string());
        }
    }

    pub fn push_list<T: Into<Value>>(&mut self, key: &str, values: Vec<T>) {
        self.entries.push((
            key.to_string(),
            Value::Array(values.into_iter().map(Into::into).collect()),
        ));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = String::new();
                for (key, value) in &self.entries {
                    let text = match value {
                        Value::String(s) => s.clone(),
                        Value::Array(items) => items
                            .iter()
                            .map(render_scalar)
                            .collect::<Vec<_>>()
                            .join(","),
                        other => render_scalar(other),
                    };
                    out.push_str(&format!("{key}={text}\n"));
                }
                out
            }
            Format::Json => {
                let mut map = Map::new();
                for (key, value) in &self.entries {
                    map.insert(key.clone(), value.clone());
                }
                let mut out =
                    serde_json::to_string_pretty(&Value::Object(map)).expect("report serializes");
                out.push('\n');
                out
            }
        }
    }
}

fn render_scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
