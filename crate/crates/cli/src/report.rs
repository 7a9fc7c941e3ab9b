//! JSON report envelopes.
//!
//! Reports are versioned and byte-stable: the serializer sorts object keys,
//! coefficients are rendered as exact rational strings, and nothing time- or
//! path-dependent is included. Running the same command on the same bytes
//! with the same seed reproduces the report exactly.

use crdeg_core::scalar::GaussianRational;
use serde_json::{json, Value};

pub const SCHEMA: &str = "crdeg/1";

/// A coefficient as `{"re": "a/b", "im": "c/d"}`.
pub fn scalar(q: &GaussianRational) -> Value {
    json!({ "re": q.re().to_string(), "im": q.im().to_string() })
}

pub fn scalar_row(row: &[GaussianRational]) -> Value {
    Value::Array(row.iter().map(scalar).collect())
}

/// Wraps a command result in the common envelope.
pub fn envelope(command: &str, order: u32, seed: u64, digests: &[String], result: Value) -> Value {
    let inputs: Vec<Value> = digests.iter().map(|d| json!({ "sha256": d })).collect();
    json!({
        "schema": SCHEMA,
        "tool": { "name": "crdeg", "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "order": order,
        "seed": seed,
        "inputs": inputs,
        "result": result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_serialization_is_key_sorted_and_stable() {
        let body = json!({ "zeta": 1, "alpha": 2 });
        let env = envelope("check", 6, 0, &[String::from("ab")], body);
        let text = serde_json::to_string(&env).unwrap();
        let again = serde_json::to_string(&envelope(
            "check",
            6,
            0,
            &[String::from("ab")],
            json!({ "zeta": 1, "alpha": 2 }),
        ))
        .unwrap();
        assert_eq!(text, again);
        let alpha = text.find("\"alpha\"").unwrap();
        let zeta = text.find("\"zeta\"").unwrap();
        assert!(alpha < zeta);
        assert!(text.contains("\"schema\":\"crdeg/1\""));
    }

    #[test]
    fn scalars_render_as_reduced_rational_strings() {
        let q = GaussianRational::parse_parts("2/4", "-6/3").unwrap();
        assert_eq!(scalar(&q), json!({ "re": "1/2", "im": "-2" }));
    }
}
