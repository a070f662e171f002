//! Plain-text table rendering of JSON results for `--pretty`.

use serde_json::Value;

/// Arrays longer than this are summarized instead of listed.
const INLINE_LIMIT: usize = 8;

pub fn table(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let width = rows
        .iter()
        .map(|(k, _)| k.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (key, cell) in rows {
        let pad = width - key.chars().count();
        out.push_str(&key);
        out.push_str(&" ".repeat(pad + 2));
        out.push_str(&cell);
        out.push('\n');
    }
    out
}

fn is_complex_list(items: &[Value]) -> bool {
    !items.is_empty()
        && items.iter().all(|v| {
            v.as_array()
                .is_some_and(|p| p.len() == 2 && p.iter().all(Value::is_number))
        })
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, rows);
            }
        }
        Value::Array(items) if is_complex_list(items) => {
            let n = items.len().isqrt();
            let cell = if n * n == items.len() {
                format!("<{n}x{n} complex matrix>")
            } else {
                format!("<{} complex entries>", items.len())
            };
            rows.push((prefix.to_string(), cell));
        }
        Value::Array(items) if items.iter().any(|v| v.is_object()) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::Array(items) if items.len() > INLINE_LIMIT => {
            rows.push((prefix.to_string(), format!("<{} entries>", items.len())));
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}
