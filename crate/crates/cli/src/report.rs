//! Reports and their JSON / text renderings.

use serde_json::{json, Map, Value};

pub const SCHEMA: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A negative or inconclusive verdict.
    Negative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub results: Vec<Map<String, Value>>,
    pub status: Status,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), results: Vec::new(), status: Status::Success }
    }

    pub fn push(&mut self, v: Value) {
        match v {
            Value::Object(m) => self.results.push(m),
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                self.results.push(m);
            }
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "results": self.results,
        })
    }
}

pub fn emit_report(r: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&r.to_json()).expect("serializable");
            s.push('\n');
            s.into_bytes()
        }
        Format::Text => text(r).into_bytes(),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::Array(a) if a.is_empty() => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            a.iter().map(scalar).collect::<Vec<_>>().join(", ")
        }
        Value::Object(m) => m.iter().map(|(k, v)| format!("{k}={}", scalar(v))).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

fn is_table(v: &Value) -> bool {
    matches!(v, Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_object))
}

fn is_list(v: &Value) -> bool {
    matches!(v, Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_string))
        && v.as_array().unwrap().iter().any(|s| s.as_str().unwrap().len() > 30)
}

fn table(rows: &[Value], indent: &str, out: &mut String) {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        for k in r.as_object().unwrap().keys() {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = r.as_object().unwrap();
            cols.iter().map(|c| m.get(c).map(scalar).unwrap_or_default()).collect()
        })
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].chars().count()).chain([c.chars().count()]).max().unwrap())
        .collect();
    let line = |vals: &[String]| {
        let parts: Vec<String> = vals
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}", w = *w))
            .collect();
        format!("{indent}{}\n", parts.join("  ").trim_end())
    };
    out.push_str(&line(&cols));
    for r in &cells {
        out.push_str(&line(r));
    }
}

fn text(r: &Report) -> String {
    let mut out = format!("command: {}\n", r.command);
    if r.results.is_empty() {
        out.push_str("(no results)\n");
    }
    for (n, m) in r.results.iter().enumerate() {
        out.push('\n');
        out.push_str(&format!("[{}]\n", n + 1));
        let plain: Vec<(&String, &Value)> = m.iter().filter(|(_, v)| !is_table(v) && !is_list(v)).collect();
        let w = plain.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        for (k, v) in &plain {
            out.push_str(&format!("  {k:<w$}  {}\n", scalar(v)).replace("  \n", "\n"));
        }
        for (k, v) in m.iter().filter(|(_, v)| is_list(v)) {
            out.push_str(&format!("  {k}:\n"));
            for s in v.as_array().unwrap() {
                out.push_str(&format!("    {}\n", s.as_str().unwrap()));
            }
        }
        for (k, v) in m.iter().filter(|(_, v)| is_table(v)) {
            out.push_str(&format!("  {k}:\n"));
            table(v.as_array().unwrap(), "    ", &mut out);
        }
    }
    out
}
