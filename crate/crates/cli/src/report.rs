//! The JSON report envelope every subcommand emits on stdout.
//!
//! Schema version 1; see `docs/report-schema.md`. Numbers are printed in
//! the shortest form that parses back to the identical f64, so a report
//! round-trips losslessly.

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub schema: u32,
    pub command: String,
    pub inputs_echo: Value,
    pub results: Value,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    pub fn new(command: &str, inputs_echo: Value, results: Value) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            inputs_echo,
            results,
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!(self)).expect("report serialization")
    }

    /// Aligned human-readable rendering for `--pretty`.
    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.command));
        render_value(&mut out, &self.results, 0);
        if !self.warnings.is_empty() {
            out.push_str("warnings:\n");
            for w in &self.warnings {
                out.push_str(&format!("  ! {w}\n"));
            }
        }
        out
    }
}

fn render_value(out: &mut String, value: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            // table rendering for metric -> number maps
            if !map.is_empty() && map.values().all(Value::is_number) {
                let width = map.keys().map(String::len).max().unwrap_or(0);
                for (k, v) in map {
                    out.push_str(&format!("{pad}{k:<width$}  {}\n", render_number(v)));
                }
            } else {
                for (k, v) in map {
                    match v {
                        Value::Object(_) | Value::Array(_) => {
                            out.push_str(&format!("{pad}{k}:\n"));
                            render_value(out, v, indent + 1);
                        }
                        _ => out.push_str(&format!("{pad}{k}: {}\n", render_scalar(v))),
                    }
                }
            }
        }
        Value::Array(items) => {
            // point series are elided in pretty mode
            if items.len() > 24 {
                out.push_str(&format!("{pad}[{} entries]\n", items.len()));
            } else {
                for item in items {
                    match item {
                        Value::Object(_) | Value::Array(_) => {
                            out.push_str(&format!("{pad}-\n"));
                            render_value(out, item, indent + 1);
                        }
                        _ => out.push_str(&format!("{pad}- {}\n", render_scalar(item))),
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", render_scalar(other))),
    }
}

fn render_scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(_) => render_number(v),
        other => other.to_string(),
    }
}

fn render_number(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if x.fract() != 0.0 => format!("{x:.4}"),
        _ => v.to_string(),
    }
}
