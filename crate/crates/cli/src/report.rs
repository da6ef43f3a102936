//! Report records and their csv/json rendering.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};

/// Significant digits of every emitted float.
pub const DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Int(i64),
    Float(f64),
    Text(String),
}

/// One verified instance: parameters, measured values and the bounds they meet.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub id: String,
    pub params: Vec<(String, Param)>,
    pub values: Vec<(String, f64)>,
    pub bounds: Vec<(String, f64)>,
    pub pass: bool,
    pub seconds: Option<f64>,
}

impl Record {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), params: Vec::new(), values: Vec::new(), bounds: Vec::new(), pass: true, seconds: None }
    }

    pub fn int(mut self, key: &str, v: impl TryInto<i64>) -> Self {
        let v = v.try_into().unwrap_or(i64::MAX);
        self.params.push((key.into(), Param::Int(v)));
        self
    }

    pub fn float(mut self, key: &str, v: f64) -> Self {
        self.params.push((key.into(), Param::Float(v)));
        self
    }

    pub fn text(mut self, key: &str, v: impl Into<String>) -> Self {
        self.params.push((key.into(), Param::Text(v.into())));
        self
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.push((key.into(), v));
        self
    }

    pub fn bound(mut self, key: &str, v: f64) -> Self {
        self.bounds.push((key.into(), v));
        self
    }

    /// Conjoins `ok` into the pass flag.
    pub fn check(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

/// x rounded to DIGITS significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.*e}", DIGITS - 1).parse().unwrap_or(x)
}

fn float_json(x: f64) -> Value {
    Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null)
}

fn float_text(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        float_json(x).to_string()
    }
}

fn param_json(p: &Param) -> Value {
    match p {
        Param::Int(v) => Value::from(*v),
        Param::Float(v) => float_json(*v),
        Param::Text(s) => Value::from(s.clone()),
    }
}

fn param_text(p: &Param) -> String {
    match p {
        Param::Int(v) => v.to_string(),
        Param::Float(v) => float_text(*v),
        Param::Text(s) => s.clone(),
    }
}

fn section<T>(items: &[(String, T)], f: impl Fn(&T) -> Value) -> Value {
    Value::Object(items.iter().map(|(k, v)| (k.clone(), f(v))).collect::<Map<String, Value>>())
}

pub fn to_json(command: &str, config: &[(String, String)], records: &[Record]) -> String {
    let mut root = Map::new();
    root.insert("command".into(), Value::from(command));
    root.insert(
        "config".into(),
        Value::Object(config.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect()),
    );
    let list = records
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("id".into(), Value::from(r.id.clone()));
            m.insert("pass".into(), Value::from(r.pass));
            m.insert("params".into(), section(&r.params, param_json));
            m.insert("values".into(), section(&r.values, |v| float_json(*v)));
            m.insert("bounds".into(), section(&r.bounds, |v| float_json(*v)));
            if let Some(s) = r.seconds {
                m.insert("seconds".into(), float_json(s));
            }
            Value::Object(m)
        })
        .collect();
    root.insert("records".into(), Value::Array(list));
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
    text.push('\n');
    text
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header is the union of columns in first-seen order; absent cells stay empty.
pub fn to_csv(records: &[Record]) -> String {
    let mut columns: Vec<String> = vec!["id".into(), "pass".into()];
    let mut push = |c: String| {
        if !columns.contains(&c) {
            columns.push(c);
        }
    };
    for r in records {
        r.params.iter().for_each(|(k, _)| push(format!("param.{k}")));
        r.values.iter().for_each(|(k, _)| push(format!("value.{k}")));
        r.bounds.iter().for_each(|(k, _)| push(format!("bound.{k}")));
        if r.seconds.is_some() {
            push("seconds".into());
        }
    }
    let mut out = columns.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in records {
        let mut cells = vec![String::new(); columns.len()];
        let mut set = |name: String, v: String| {
            let i = columns.iter().position(|c| *c == name).expect("column collected");
            cells[i] = csv_cell(&v);
        };
        set("id".into(), r.id.clone());
        set("pass".into(), r.pass.to_string());
        r.params.iter().for_each(|(k, v)| set(format!("param.{k}"), param_text(v)));
        r.values.iter().for_each(|(k, v)| set(format!("value.{k}"), float_text(*v)));
        r.bounds.iter().for_each(|(k, v)| set(format!("bound.{k}"), float_text(*v)));
        if let Some(s) = r.seconds {
            set("seconds".into(), float_text(s));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.123456789012345), 0.123456789012);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(2.0), 2.0);
        assert_eq!(float_text(1e-20), "1e-20");
        assert_eq!(float_text(f64::INFINITY), "inf");
    }

    #[test]
    fn single_record_csv_has_header_and_row() {
        let r = Record::new("x").int("n", 3).value("achieved", 0.5).bound("bound", 1.0);
        let csv = to_csv(&[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, ["id,pass,param.n,value.achieved,bound.bound", "x,true,3,0.5,1.0"]);
    }

    #[test]
    fn csv_quotes_embedded_commas() {
        let r = Record::new("x").text("ladder", "1,2,4");
        assert!(to_csv(&[r]).contains("\"1,2,4\""));
    }
}
