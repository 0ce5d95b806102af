use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Every command emits one of these: the inputs echoed next to the results.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub schema_version: &'static str,
    pub command: String,
    pub parameters: Map<String, Value>,
    pub results: Map<String, Value>,
}

impl OutputRecord {
    pub fn new(command: impl Into<String>) -> Self {
        Self { schema_version: SCHEMA_VERSION, command: command.into(), parameters: Map::new(), results: Map::new() }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_owned(), to_value(value));
        self
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_owned(), to_value(value));
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => {
                let mut cells = vec![
                    ("schema_version".to_owned(), self.schema_version.to_owned()),
                    ("command".to_owned(), self.command.clone()),
                ];
                flatten("", &Value::Object(self.parameters.clone()), &mut cells);
                flatten("", &Value::Object(self.results.clone()), &mut cells);
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(cells.iter().map(|(k, _)| k))?;
                w.write_record(cells.iter().map(|(_, v)| v))?;
                Ok(String::from_utf8(w.into_inner()?)?)
            }
        }
    }
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).expect("plain data serializes")
}

/// Dotted-path columns for a JSON tree; `null` becomes an empty cell.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let join = |key: &str| if prefix.is_empty() { key.to_owned() } else { format!("{prefix}.{key}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_owned(), String::new())),
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}

/// Writes to `path`, or to stdout when it is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            f.write_all(text.as_bytes())?;
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_flattens_nested_results() {
        let mut rec = OutputRecord::new("exact q").param("k", 2).param("p", 4);
        rec.result("rational", "1/6");
        rec.result("pmf", serde_json::json!({"2": {"rational": "1/6"}, "3": null}));
        let text = rec.render(Format::Csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "schema_version,command,k,p,rational,pmf.2.rational,pmf.3");
        assert_eq!(lines.next().unwrap(), "1,exact q,2,4,1/6,1/6,");
    }

    #[test]
    fn json_keeps_insertion_order() {
        let mut rec = OutputRecord::new("oracle").param("n", 3).param("k", 1);
        rec.result("z", 1);
        rec.result("a", 2);
        let text = rec.render(Format::Json).unwrap();
        assert!(text.find("\"n\"").unwrap() < text.find("\"k\"").unwrap());
        assert!(text.find("\"z\"").unwrap() < text.find("\"a\"").unwrap());
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], "1");
    }
}
