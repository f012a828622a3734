//! Deterministic report emission: JSON (byte-stable), CSV (flattened
//! key/value rows in serialization order), or a human-readable dump.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

pub fn emit<T: Serialize>(format: Format, name: &str, report: &T) {
    let value = serde_json::to_value(report).expect("report serialization cannot fail");
    match format {
        Format::Json => {
            let mut top = serde_json::Map::new();
            top.insert("report".into(), Value::String(name.into()));
            if let Value::Object(obj) = value {
                for (k, v) in obj {
                    top.insert(k, v);
                }
            }
            println!("{}", serde_json::to_string_pretty(&Value::Object(top)).unwrap());
        }
        Format::Csv => {
            println!("key,value");
            for (k, v) in flatten(&value) {
                println!("{k},{v}");
            }
        }
        Format::Human => {
            println!("# {name}");
            for (k, v) in flatten(&value) {
                println!("  {k:<32} {v}");
            }
        }
    }
}

/// Flatten nested JSON into dotted keys, preserving field order (serde_json
/// is configured to keep insertion order).
fn flatten(value: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

fn walk(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                walk(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => {
            // CSV-safe: quote anything containing a comma.
            if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        other => other.to_string(),
    }
}
