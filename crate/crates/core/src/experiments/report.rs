use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidParameter(format!("format must be csv or json, got `{s}`"))),
        }
    }
}

/// Output of one command: a table plus a summary object. Writers embed the
/// resolved configuration (which includes the master seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Value,
    /// `Some(false)` when the command ran a check that failed.
    pub passed: Option<bool>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new(command: &str, config: impl Serialize, columns: &[&str]) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            config: serde_json::to_value(config)?,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Value::Null,
            passed: None,
        })
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Json => {
                let rows: Vec<serde_json::Map<String, Value>> = self
                    .rows
                    .iter()
                    .map(|r| self.columns.iter().cloned().zip(r.iter().cloned()).collect())
                    .collect();
                let doc = serde_json::json!({
                    "command": self.command,
                    "config": self.config,
                    "rows": rows,
                    "summary": self.summary,
                    "passed": self.passed,
                });
                serde_json::to_writer_pretty(&mut out, &doc)?;
                writeln!(out)?;
            }
            Format::Csv => {
                writeln!(out, "# command: {}", self.command)?;
                writeln!(out, "# config: {}", serde_json::to_string(&self.config)?)?;
                {
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(&self.columns)?;
                    for r in &self.rows {
                        w.write_record(r.iter().map(cell))?;
                    }
                    w.flush()?;
                }
                writeln!(out, "# summary: {}", serde_json::to_string(&self.summary)?)?;
                if let Some(p) = self.passed {
                    writeln!(out, "# passed: {p}")?;
                }
            }
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf).expect("writers emit UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_and_json_layout() {
        let mut r = Report::new("demo", json!({"seed": 7}), &["a", "b"]).unwrap();
        r.push_row(vec![json!(1), json!("x,y")]);
        r.summary = json!({"n": 1});
        let csv = r.to_string(Format::Csv).unwrap();
        assert_eq!(csv, "# command: demo\n# config: {\"seed\":7}\na,b\n1,\"x,y\"\n# summary: {\"n\":1}\n");
        let v: Value = serde_json::from_str(&r.to_string(Format::Json).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["b"], json!("x,y"));
        assert_eq!(v["config"]["seed"], json!(7));
    }
}
