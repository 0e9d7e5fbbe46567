//! JSON Lines wire format for event traces.
//!
//! One event per line: `{"name":"invoke","time_ms":1000,"args":{"procTime_ms":300}}`.
//! Argument numbers are read exactly (decimals via their shortest
//! representation); rationals are written as numbers when integral and as
//! `"num/den"` strings otherwise.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::event::{ArgValue, RawEvent};
use crate::rat::Rat;

#[derive(Debug, Serialize, Deserialize)]
struct WireEvent {
    name: String,
    time_ms: i64,
    #[serde(default)]
    args: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn arg_from_json(value: &serde_json::Value) -> Result<ArgValue, String> {
    match value {
        serde_json::Value::Number(n) => {
            let r = Rat::from_json_number(n).map_err(|e| e.to_string())?;
            if r.is_integer() {
                Ok(ArgValue::Int(r.numer().clone()))
            } else {
                Ok(ArgValue::Rat(r))
            }
        }
        serde_json::Value::String(s) => Ok(ArgValue::Text(s.clone())),
        other => Err(format!("unsupported argument value {other}")),
    }
}

fn arg_to_json(value: &ArgValue) -> serde_json::Value {
    match value {
        ArgValue::Int(n) => match n.to_i64() {
            Some(i) => serde_json::Value::from(i),
            None => serde_json::Value::from(n.to_string()),
        },
        ArgValue::Rat(r) => {
            if r.is_integer() {
                match r.numer().to_i64() {
                    Some(i) => serde_json::Value::from(i),
                    None => serde_json::Value::from(r.to_string()),
                }
            } else {
                serde_json::Value::from(r.to_string())
            }
        }
        ArgValue::Text(s) => serde_json::Value::from(s.clone()),
    }
}

pub fn event_to_json(event: &RawEvent) -> String {
    let wire = WireEvent {
        name: event.name.clone(),
        time_ms: event.time_ms,
        args: event
            .args
            .iter()
            .map(|(k, v)| (k.clone(), arg_to_json(v)))
            .collect(),
    };
    serde_json::to_string(&wire).expect("event serializes")
}

pub fn events_to_jsonl(events: &[RawEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&event_to_json(ev));
        out.push('\n');
    }
    out
}

pub fn event_from_json(line: &str, line_no: usize) -> Result<RawEvent, TraceFileError> {
    let wire: WireEvent =
        serde_json::from_str(line).map_err(|e| TraceFileError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
    let mut args = BTreeMap::new();
    for (k, v) in &wire.args {
        let arg = arg_from_json(v).map_err(|message| TraceFileError::Malformed {
            line: line_no,
            message: format!("argument `{k}`: {message}"),
        })?;
        args.insert(k.clone(), arg);
    }
    Ok(RawEvent {
        name: wire.name,
        time_ms: wire.time_ms,
        args,
    })
}

/// Builds an event from already-parsed JSON parts, as the HTTP gateway
/// receives them.
pub fn raw_event_from_parts(
    name: &str,
    time_ms: i64,
    args: &BTreeMap<String, serde_json::Value>,
) -> Result<RawEvent, String> {
    let mut converted = BTreeMap::new();
    for (k, v) in args {
        let arg = arg_from_json(v).map_err(|e| format!("argument `{k}`: {e}"))?;
        converted.insert(k.clone(), arg);
    }
    Ok(RawEvent {
        name: name.to_string(),
        time_ms,
        args: converted,
    })
}

/// Parses a whole JSONL document; blank lines and `#` comments are skipped.
pub fn events_from_jsonl(text: &str) -> Result<Vec<RawEvent>, TraceFileError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        events.push(event_from_json(trimmed, i + 1)?);
    }
    Ok(events)
}
