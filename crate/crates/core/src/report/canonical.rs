//! Comparison of JSON documents independent of formatting.

use std::fmt;

use serde_json::{Map, Number, Value};

/// Numbers become `f64` when that is exact, so `1e5`, `100000` and
/// `100000.0` compare equal. Object keys are sorted.
pub fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Number(n) => Value::Number(canonical_number(n)),
        Value::Array(items) => Value::Array(items.iter().map(canonicalize).collect()),
        Value::Object(map) => {
            let mut keys: Vec<_> = map.keys().collect();
            keys.sort();
            Value::Object(keys.into_iter().map(|k| (k.clone(), canonicalize(&map[k]))).collect::<Map<_, _>>())
        }
        other => other.clone(),
    }
}

fn canonical_number(n: &Number) -> Number {
    let exact_integer = |f: f64| f.fract() == 0.0 && f.abs() < 9_007_199_254_740_992.0;
    if let Some(i) = n.as_i64() {
        if exact_integer(i as f64) {
            return Number::from_f64(i as f64).expect("finite");
        }
    } else if let Some(u) = n.as_u64() {
        if exact_integer(u as f64) {
            return Number::from_f64(u as f64).expect("finite");
        }
    } else if let Some(f) = n.as_f64() {
        if let Some(x) = Number::from_f64(f + 0.0) {
            return x;
        }
    }
    n.clone()
}

/// Serialized canonical form; equal bytes mean equal documents.
pub fn canonical_bytes(v: &Value) -> Vec<u8> {
    serde_json::to_vec(&canonicalize(v)).expect("value serializes")
}

/// One field that differs between two documents.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDiff {
    /// JSON path such as `$.datacenters[0].scopes.scope2.emissions`.
    pub path: String,
    pub expected: Option<Value>,
    pub actual: Option<Value>,
}

impl fmt::Display for FieldDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<Value>| v.as_ref().map_or("<absent>".to_string(), Value::to_string);
        write!(f, "{}: expected {}, found {}", self.path, show(&self.expected), show(&self.actual))
    }
}

/// Leaf-level differences, in document order.
///
/// ```
/// use serde_json::json;
/// use tcf_core::report::diff_json;
/// let a = json!({"scopes": {"scope2": {"emissions": 1800000.0}}});
/// let b = json!({"scopes": {"scope2": {"emissions": 1800001.0}}});
/// let d = diff_json(&a, &b);
/// assert_eq!(d[0].path, "$.scopes.scope2.emissions");
/// assert!(diff_json(&a, &json!({"scopes": {"scope2": {"emissions": 1.8e6}}})).is_empty());
/// ```
pub fn diff_json(expected: &Value, actual: &Value) -> Vec<FieldDiff> {
    let mut out = Vec::new();
    walk("$".into(), Some(&canonicalize(expected)), Some(&canonicalize(actual)), &mut out);
    out
}

fn walk(path: String, e: Option<&Value>, a: Option<&Value>, out: &mut Vec<FieldDiff>) {
    match (e, a) {
        (Some(Value::Object(em)), Some(Value::Object(am))) => {
            let mut keys: Vec<&String> = em.keys().chain(am.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                walk(format!("{path}.{k}"), em.get(k), am.get(k), out);
            }
        }
        (Some(Value::Array(ea)), Some(Value::Array(aa))) => {
            for i in 0..ea.len().max(aa.len()) {
                walk(format!("{path}[{i}]"), ea.get(i), aa.get(i), out);
            }
        }
        (e, a) if e == a => {}
        (e, a) => out.push(FieldDiff { path, expected: e.cloned(), actual: a.cloned() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn number_spellings_agree() {
        let a: Value = serde_json::from_str(r#"{"b": 1e12, "a": [100000.0, 0.10]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": [100000, 0.1], "b": 1000000000000}"#).unwrap();
        assert_eq!(canonical_bytes(&a), canonical_bytes(&b));
        assert!(diff_json(&a, &b).is_empty());
    }

    #[test]
    fn large_integers_stay_exact() {
        let a = json!({"n": 9_007_199_254_740_993u64});
        let b = json!({"n": 9_007_199_254_740_992u64});
        assert_eq!(diff_json(&a, &b).len(), 1);
    }

    #[test]
    fn missing_and_extra_keys_reported() {
        let d = diff_json(&json!({"a": 1, "b": [1, 2]}), &json!({"b": [1], "c": true}));
        let paths: Vec<_> = d.iter().map(|x| x.path.as_str()).collect();
        assert_eq!(paths, ["$.a", "$.b[1]", "$.c"]);
        assert!(d[0].actual.is_none());
        assert!(d[2].expected.is_none());
        assert_eq!(d[1].to_string(), "$.b[1]: expected 2.0, found <absent>");
    }
}
