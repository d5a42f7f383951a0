use std::cmp::Ordering;
use std::fmt;

/// Handle of an object inside a [`crate::model::Model`]. Handles are stable
/// across snapshots, so a value computed against a pre-state snapshot still
/// designates the same object in the live model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjId(pub(crate) u32);

impl ObjId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Runtime values of the expression language. Sets keep insertion order and
/// never hold duplicates; sequences keep order and may.
#[derive(Debug, Clone)]
pub enum Value {
    Str(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    Obj(ObjId),
    Set(Vec<Value>),
    Seq(Vec<Value>),
}

impl Value {
    pub fn empty_set() -> Value {
        Value::Set(Vec::new())
    }

    /// Builds a set, dropping duplicates while keeping first occurrences.
    pub fn set_from(items: impl IntoIterator<Item = Value>) -> Value {
        let mut out: Vec<Value> = Vec::new();
        for v in items {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        Value::Set(out)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Bool(_) => "boolean",
            Value::Obj(_) => "object",
            Value::Set(_) => "set",
            Value::Seq(_) => "sequence",
        }
    }

    pub fn as_collection(&self) -> Option<&[Value]> {
        match self {
            Value::Set(v) | Value::Seq(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_collection(&self) -> bool {
        self.as_collection().is_some()
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_obj(&self) -> Option<ObjId> {
        match self {
            Value::Obj(o) => Some(*o),
            _ => None,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Ordering for `<`, `<=`, `>`, `>=`: numbers (mixed integer/real) and strings.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            _ => self.as_f64()?.partial_cmp(&other.as_f64()?),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => self.as_f64() == other.as_f64(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Obj(a), Value::Obj(b)) => a == b,
            (Value::Seq(a), Value::Seq(b)) => a == b,
            (Value::Set(a), Value::Set(b)) => a.len() == b.len() && a.iter().all(|x| b.contains(x)),
            _ => false,
        }
    }
}

/// Renders a real so that the lexer reads it back as a real.
pub fn format_real(r: f64) -> String {
    let s = format!("{r:?}");
    if s.contains(['.', 'e', 'E']) || !r.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// Quotes a string with the escapes the lexer understands.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Value {
    /// Objects print as `#index`; use [`crate::model::Model::render`] for labels.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(&quote(s)),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&format_real(*r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Obj(o) => write!(f, "#{}", o.0),
            Value::Set(items) | Value::Seq(items) => {
                f.write_str(if matches!(self, Value::Seq(_)) { "Sequence{" } else { "{" })?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}
