//! Report rendering: pretty JSON, aligned tables and CSV. Floats are printed
//! at 12 significant digits so repeated runs are byte-identical.

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

use kdist::scalar::float_string;

use crate::Report;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Format {
    Json,
    Table,
    Csv,
}

impl Format {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Table => "table",
            Format::Csv => "csv",
        }
    }
}

/// Rounds every non-integer number to 12 significant digits.
fn round_floats(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            float_string(x)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), round_floats(v))).collect::<Map<_, _>>()),
        other => other.clone(),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => float_string(x),
            _ => n.to_string(),
        },
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// `(path, value)` for every leaf, in document order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        leaf => out.push((prefix.to_string(), scalar_text(leaf))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        out.push_str(&r.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, f) in widths.iter_mut().zip(r) {
            *w = (*w).max(f.chars().count());
        }
    }
    let line = |r: &[String]| {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(f, w)| format!("{f:<w$}")).collect();
        cells.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

pub(crate) fn render(report: &Report, format: Format) -> String {
    let (header, rows) = match &report.rows {
        Some((h, r)) => (h.clone(), r.clone()),
        None => {
            let mut leaves = Vec::new();
            flatten("", &report.body, &mut leaves);
            (
                vec!["key".to_string(), "value".to_string()],
                leaves.into_iter().map(|(k, v)| vec![k, v]).collect(),
            )
        }
    };
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&round_floats(&report.body)).unwrap_or_default();
            s.push('\n');
            s
        }
        Format::Csv => csv(&header, &rows),
        Format::Table => table(&header, &rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_are_rounded() {
        let v = round_floats(&json!({"x": 1.0 / 3.0, "n": 3, "s": "1/3"}));
        assert_eq!(v, json!({"x": 0.333333333333, "n": 3, "s": "1/3"}));
    }

    #[test]
    fn flatten_paths() {
        let mut out = Vec::new();
        flatten("", &json!({"a": [1, {"b": "x"}]}), &mut out);
        assert_eq!(out, vec![("a.0".into(), "1".into()), ("a.1.b".into(), "x".into())]);
    }

    #[test]
    fn csv_quotes() {
        assert_eq!(csv(&["a".into()], &[vec!["x,y".into()]]), "a\n\"x,y\"\n");
    }
}
