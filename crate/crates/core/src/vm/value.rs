use std::fmt;
use std::hash::{Hash, Hasher};

use serde_json::Number;

/// A dynamically typed runtime datum.
///
/// Floats held in a `Value` are always finite and never negative zero, so
/// equality and hashing can work on the bit pattern. Use [`Value::float`] to
/// build one from an arbitrary `f64`.
#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
}

/// Coarse type tag of a [`Value`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Null,
    Bool,
    Int,
    Float,
    Str,
    List,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Null => "null",
            ValueKind::Bool => "bool",
            ValueKind::Int => "int",
            ValueKind::Float => "float",
            ValueKind::Str => "string",
            ValueKind::List => "list",
        };
        f.write_str(s)
    }
}

impl Value {
    /// Builds a float value, returning `None` for NaN and infinities.
    pub fn float(f: f64) -> Option<Value> {
        if f.is_finite() {
            // folds -0.0 into 0.0
            Some(Value::Float(f + 0.0))
        } else {
            None
        }
    }

    /// Rough storage size: one per scalar, string byte and list element,
    /// counted recursively.
    pub fn weight(&self) -> usize {
        match self {
            Value::Str(s) => 1 + s.len(),
            Value::List(items) => 1 + items.iter().map(Value::weight).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Null => ValueKind::Null,
            Value::Bool(_) => ValueKind::Bool,
            Value::Int(_) => ValueKind::Int,
            Value::Float(_) => ValueKind::Float,
            Value::Str(_) => ValueKind::Str,
            Value::List(_) => ValueKind::List,
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self, Value::List(_))
    }

    /// Numeric view used by mixed int/float arithmetic and comparisons.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Writes the canonical literal text (no whitespace).
    pub fn write_literal(&self, out: &mut String) {
        match self {
            Value::Null => out.push_str("null"),
            Value::Bool(true) => out.push_str("true"),
            Value::Bool(false) => out.push_str("false"),
            Value::Int(i) => {
                use fmt::Write;
                let _ = write!(out, "{i}");
            }
            Value::Float(f) => out.push_str(&format_float(*f)),
            Value::Str(s) => {
                out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"))
            }
            Value::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_literal(out);
                }
                out.push(']');
            }
        }
    }

    pub fn to_literal(&self) -> String {
        let mut out = String::new();
        self.write_literal(&mut out);
        out
    }

    /// Converts from JSON. Numbers without a fraction or exponent become
    /// integers; objects are rejected.
    pub fn from_json(json: &serde_json::Value) -> Result<Value, String> {
        Ok(match json {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => number_to_value(n)?,
            serde_json::Value::String(s) => Value::Str(s.clone()),
            serde_json::Value::Array(items) => Value::List(
                items
                    .iter()
                    .map(Value::from_json)
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            serde_json::Value::Object(_) => return Err("objects are not supported values".into()),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(i) => serde_json::Value::Number((*i).into()),
            Value::Float(f) => serde_json::Value::Number(
                Number::from_f64(*f).expect("stored floats are finite"),
            ),
            Value::Str(s) => serde_json::Value::String(s.clone()),
            Value::List(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
        }
    }
}

fn number_to_value(n: &Number) -> Result<Value, String> {
    if let Some(i) = n.as_i64() {
        return Ok(Value::Int(i));
    }
    if n.is_u64() {
        return Err(format!("integer {n} does not fit in 64 signed bits"));
    }
    let f = n.as_f64().ok_or_else(|| format!("unrepresentable number {n}"))?;
    Value::float(f).ok_or_else(|| format!("non-finite number {n}"))
}

/// Shortest round-trip decimal form that always reads back as a float.
pub(crate) fn format_float(f: f64) -> String {
    // Debug formatting is shortest round-trip and keeps a fractional marker
    // ("1.0", "1e20", "1e-7").
    format!("{f:?}")
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::List(a), Value::List(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
            Value::List(items) => items.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Value {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Value {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Value {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Value {
        Value::Str(s)
    }
}

impl From<Vec<Value>> for Value {
    fn from(items: Vec<Value>) -> Value {
        Value::List(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_and_float_never_equal() {
        assert_ne!(Value::Int(1), Value::float(1.0).unwrap());
        assert_eq!(Value::List(vec![1.into(), 2.into()]), Value::List(vec![1.into(), 2.into()]));
    }

    #[test]
    fn negative_zero_is_folded() {
        assert_eq!(Value::float(-0.0).unwrap(), Value::float(0.0).unwrap());
        assert_eq!(Value::float(-0.0).unwrap().to_literal(), "0.0");
        assert!(Value::float(f64::NAN).is_none());
        assert!(Value::float(f64::INFINITY).is_none());
    }

    #[test]
    fn json_floats_round_trip_exactly() {
        for f in [-18.439999999999998, 51.56000000000001, 0.1 + 0.2, 1e-300, -2.5e17] {
            let v = Value::float(f).unwrap();
            let json: serde_json::Value = serde_json::from_str(&v.to_json().to_string()).unwrap();
            assert_eq!(Value::from_json(&json).unwrap(), v);
        }
    }

    #[test]
    fn literals() {
        assert_eq!(Value::float(2.5).unwrap().to_literal(), "2.5");
        assert_eq!(Value::float(3.0).unwrap().to_literal(), "3.0");
        assert_eq!(Value::from("a\"b").to_literal(), "\"a\\\"b\"");
        let list = Value::List(vec![Value::Int(-1), Value::Null, Value::List(vec![])]);
        assert_eq!(list.to_literal(), "[-1,null,[]]");
    }

    #[test]
    fn json_numbers_split_on_fraction() {
        let json: serde_json::Value = serde_json::from_str("[1, 1.0, -7, 2.5]").unwrap();
        let v = Value::from_json(&json).unwrap();
        assert_eq!(
            v,
            Value::List(vec![
                Value::Int(1),
                Value::Float(1.0),
                Value::Int(-7),
                Value::Float(2.5)
            ])
        );
        assert!(Value::from_json(&serde_json::json!({"a": 1})).is_err());
    }
}
