//! Canonical instance serialization and digests.
//!
//! Reports identify their input by a SHA-256 digest of a canonical rendering
//! of the parsed JSON, so the identity is stable under whitespace, key order,
//! and the float formatting habits of whatever produced the file.

use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

/// Canonical rendering: no whitespace, object keys sorted, strings in JSON
/// escaping, integers as-is, and every non-integer number as a decimal with
/// 17 significant digits (enough to round-trip any f64 exactly).
pub fn canonical(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                // {:.16e} prints one digit before the point and sixteen
                // after: 17 significant digits.
                let _ = write!(out, "{:.16e}", n.as_f64().expect("JSON numbers are finite"));
            }
        }
        // serde_json applies standard JSON string escaping.
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is already ordered, but sorting here
            // keeps the digest independent of that implementation detail.
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", Value::String((*key).clone()));
                out.push(':');
                write_canonical(&map[key.as_str()], out);
            }
            out.push('}');
        }
    }
}

/// `sha256:<hex>` digest of the canonical rendering.
pub fn digest(value: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical(value).as_bytes());
    format!("sha256:{:x}", hasher.finalize())
}
