//! Events and runtime values.
//!
//! A [`RawEvent`] is what arrives on the wire: a name, a timestamp and named
//! arguments. It only becomes typed when a view admits it and its arguments
//! are resolved against the bound signature.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::dsl::{EventSignature, ParamType};
use crate::rat::Rat;

/// Runtime value of a state variable or parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Rat(Rat),
    Text(String),
    Metric { key: String, value: Rat },
    Bool(bool),
}

impl Value {
    pub fn as_rat(&self) -> Option<Rat> {
        match self {
            Value::Int(n) => Some(Rat::from_bigint(n.clone())),
            Value::Rat(r) => Some(r.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => write!(f, "{r}"),
            Value::Text(s) => write!(f, "\"{s}\""),
            Value::Metric { key, value } => write!(f, "(\"{key}\", {value})"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Argument value as it appears on the wire, before signature resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgValue {
    Int(BigInt),
    Rat(Rat),
    Text(String),
}

impl ArgValue {
    /// Canonical form: integral rationals are integers, matching what the
    /// wire reader produces.
    pub fn from_rat(r: Rat) -> ArgValue {
        if r.is_integer() {
            ArgValue::Int(r.numer().clone())
        } else {
            ArgValue::Rat(r)
        }
    }
}

/// A named, timestamped service interaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub name: String,
    pub time_ms: i64,
    pub args: BTreeMap<String, ArgValue>,
}

impl RawEvent {
    pub fn new(name: impl Into<String>, time_ms: i64) -> Self {
        RawEvent {
            name: name.into(),
            time_ms,
            args: BTreeMap::new(),
        }
    }

    pub fn with_arg(mut self, name: impl Into<String>, value: ArgValue) -> Self {
        self.args.insert(name.into(), value);
        self
    }

    pub fn with_rat_arg(self, name: impl Into<String>, value: Rat) -> Self {
        self.with_arg(name, ArgValue::from_rat(value))
    }

    /// The `invoke(t, procTime)` event emitted for a completed request.
    pub fn invoke(t_ms: i64, proc_time_ms: Rat) -> Self {
        RawEvent::new("invoke", t_ms).with_arg("procTime_ms", ArgValue::from_rat(proc_time_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArgError {
    #[error("missing argument `{param}` for event `{event}`")]
    Missing { event: String, param: String },
    #[error("argument `{param}` of event `{event}`: expected {expected}, got {found}")]
    Type {
        event: String,
        param: String,
        expected: &'static str,
        found: String,
    },
}

/// Resolves wire arguments against a signature.
///
/// Lookup accepts both the bare parameter name and a `_ms`-suffixed key, so
/// the wire form `{"procTime_ms": 300}` satisfies the parameter `procTime`.
/// A missing `Time` parameter falls back to the event's own timestamp, which
/// is how `invoke(Time t, ...)` receives `t` from `time_ms`.
pub fn resolve_args(event: &RawEvent, signature: &EventSignature) -> Result<Vec<Value>, ArgError> {
    let mut out = Vec::with_capacity(signature.params.len());
    for param in &signature.params {
        let arg = event
            .args
            .get(&param.name)
            .or_else(|| event.args.get(&format!("{}_ms", param.name)));
        let value = match (arg, param.ty) {
            (None, ParamType::Time) => Value::Int(BigInt::from(event.time_ms)),
            (None, _) => {
                return Err(ArgError::Missing {
                    event: event.name.clone(),
                    param: param.name.clone(),
                })
            }
            (Some(a), ty) => coerce_arg(a, ty).ok_or_else(|| ArgError::Type {
                event: event.name.clone(),
                param: param.name.clone(),
                expected: expected_name(ty),
                found: found_name(a),
            })?,
        };
        out.push(value);
    }
    Ok(out)
}

fn coerce_arg(arg: &ArgValue, ty: ParamType) -> Option<Value> {
    match ty {
        ParamType::Time | ParamType::Integer => match arg {
            ArgValue::Int(n) => Some(Value::Int(n.clone())),
            ArgValue::Rat(r) if r.is_integer() => Some(Value::Int(r.numer().clone())),
            ArgValue::Text(s) => {
                let r = Rat::parse(s).ok()?;
                r.is_integer().then(|| Value::Int(r.numer().clone()))
            }
            _ => None,
        },
        ParamType::Rational => match arg {
            ArgValue::Int(n) => Some(Value::Rat(Rat::from_bigint(n.clone()))),
            ArgValue::Rat(r) => Some(Value::Rat(r.clone())),
            ArgValue::Text(s) => Rat::parse(s).ok().map(Value::Rat),
        },
        ParamType::Text => match arg {
            ArgValue::Text(s) => Some(Value::Text(s.clone())),
            _ => None,
        },
    }
}

fn expected_name(ty: ParamType) -> &'static str {
    match ty {
        ParamType::Time => "integer milliseconds",
        ParamType::Integer => "integer",
        ParamType::Rational => "rational",
        ParamType::Text => "string",
    }
}

fn found_name(arg: &ArgValue) -> String {
    match arg {
        ArgValue::Int(n) => format!("integer {n}"),
        ArgValue::Rat(r) => format!("rational {r}"),
        ArgValue::Text(s) => format!("string \"{s}\""),
    }
}
