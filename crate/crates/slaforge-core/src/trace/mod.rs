//! Incremental evaluation of metric definitions over event traces.
//!
//! An evaluator holds the current nonterminal and the state-variable
//! valuation; each accepted event fires one production's action block. Work
//! per step is bounded by the size of that action, never by how many events
//! were already consumed, which is what makes re-parsing the whole trace
//! unnecessary.
//!
//! Events whose name the view does not select are *ignored* (no-ops); events
//! that are selected but have no production from the current nonterminal are
//! *rejected* — the mapping from traces to values is deliberately partial so
//! illegal orderings are detected. A rejected step leaves the valuation
//! frozen at the last accepted state.
//!
//! Concurrency: one writer per evaluator. Snapshots ([`EvaluatorState::metrics`])
//! are plain clones and may be handed to other threads freely.

mod event;
mod history;
mod json;

use std::sync::Arc;



use crate::dsl::{ArithOp, CExpr, CmpOp, CompiledAction, Literal, MetricDefinition, StateType};
use crate::rat::Rat;

pub use event::{resolve_args, ArgError, ArgValue, RawEvent, Value};
pub use history::{HistoryEntry, HistoryError, MetricHistory};
pub use json::{
    event_from_json, event_to_json, events_from_jsonl, events_to_jsonl, raw_event_from_parts,
    TraceFileError,
};

/// Why a bound event could not be consumed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RejectReason {
    #[error(
        "illegal ordering: no production from `{nonterminal}` on terminal `{terminal}` \
         (event `{event}`)"
    )]
    IllegalOrdering {
        nonterminal: String,
        terminal: String,
        event: String,
    },
    #[error("trace already ended by a terminal-only production (event `{event}`)")]
    RunEnded { event: String },
    #[error("bad arguments: {0}")]
    BadArgs(#[from] ArgError),
    #[error("action evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

/// Result of feeding one event to an evaluator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    /// The event was consumed and the valuation advanced.
    Stepped,
    /// The event's name is not selected by the view; state unchanged.
    Ignored,
    /// The event is selected but cannot be consumed; state unchanged.
    Rejected(RejectReason),
}

/// A trace-level rejection: the offending event index plus the cause.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event {index} rejected: {reason}")]
pub struct TraceRejection {
    pub index: usize,
    pub reason: RejectReason,
}

/// Incremental parser state for one metric definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluatorState {
    def: Arc<MetricDefinition>,
    current: Option<usize>,
    vars: Vec<Value>,
    events_consumed: u64,
    last_step_ops: u64,
}

fn initial_value(literal: &Literal) -> Value {
    match literal {
        Literal::Int(n) => Value::Int(n.clone()),
        Literal::Rat(r) => Value::Rat(r.clone()),
        Literal::Pair { key, value } => Value::Metric {
            key: key.clone(),
            value: value.clone(),
        },
    }
}

impl EvaluatorState {
    /// Fresh evaluator: declared initial values, positioned at the start
    /// symbol, zero events consumed.
    pub fn new(def: Arc<MetricDefinition>) -> Self {
        let vars = def.states.iter().map(|s| initial_value(&s.initial)).collect();
        EvaluatorState {
            current: Some(def.start),
            vars,
            def,
            events_consumed: 0,
            last_step_ops: 0,
        }
    }

    pub fn definition(&self) -> &Arc<MetricDefinition> {
        &self.def
    }

    /// Current nonterminal name; `None` once a terminal-only production has
    /// ended the run.
    pub fn current_nonterminal(&self) -> Option<&str> {
        self.current.map(|i| self.def.nonterminal_name(i))
    }

    pub fn events_consumed(&self) -> u64 {
        self.events_consumed
    }

    /// Expression nodes evaluated by the most recent accepted step; the
    /// operation-count probe behind the constant-work property.
    pub fn last_step_ops(&self) -> u64 {
        self.last_step_ops
    }

    pub fn var(&self, name: &str) -> Option<&Value> {
        let idx = self.def.state_index(name)?;
        Some(&self.vars[idx])
    }

    /// Current `(key, value)` of every exported metric state. Keys are
    /// dynamic: they come from the pair value, not the declaration.
    pub fn metrics(&self) -> Vec<(String, Rat)> {
        self.def
            .exports
            .iter()
            .map(|&i| match &self.vars[i] {
                Value::Metric { key, value } => (key.clone(), value.clone()),
                other => unreachable!("export `{}` holds non-pair {other}", self.def.states[i].name),
            })
            .collect()
    }

    pub fn metric_value(&self, key: &str) -> Option<Rat> {
        self.metrics().into_iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Feeds one event. The valuation only changes on [`StepOutcome::Stepped`].
    pub fn step(&mut self, event: &RawEvent) -> StepOutcome {
        let Some(binding_idx) = self.def.binding_for_event(&event.name) else {
            return StepOutcome::Ignored;
        };
        let Some(current) = self.current else {
            return StepOutcome::Rejected(RejectReason::RunEnded {
                event: event.name.clone(),
            });
        };
        let binding = &self.def.view.bindings[binding_idx];
        let Some(production) = self.def.transition(current, binding_idx) else {
            return StepOutcome::Rejected(RejectReason::IllegalOrdering {
                nonterminal: self.def.nonterminal_name(current).to_string(),
                terminal: binding.terminal.clone(),
                event: event.name.clone(),
            });
        };

        let params = match resolve_args(event, &binding.signature) {
            Ok(p) => p,
            Err(e) => return StepOutcome::Rejected(RejectReason::BadArgs(e)),
        };

        let mut scratch = self.vars.clone();
        let mut ops: u64 = 0;
        if let Err(e) = run_action(&production.action, &mut scratch, &params, &mut ops) {
            return StepOutcome::Rejected(RejectReason::Eval(e));
        }

        self.vars = scratch;
        self.current = production.continuation;
        self.events_consumed += 1;
        self.last_step_ops = ops;
        StepOutcome::Stepped
    }
}

/// Folds [`EvaluatorState::step`] over a trace. Equivalent to a batch
/// re-parse from scratch; the first rejection aborts with its index.
pub fn evaluate_trace(
    def: &Arc<MetricDefinition>,
    trace: &[RawEvent],
) -> Result<EvaluatorState, TraceRejection> {
    let mut state = EvaluatorState::new(Arc::clone(def));
    for (index, event) in trace.iter().enumerate() {
        match state.step(event) {
            StepOutcome::Stepped | StepOutcome::Ignored => {}
            StepOutcome::Rejected(reason) => return Err(TraceRejection { index, reason }),
        }
    }
    Ok(state)
}

fn run_action(
    action: &CompiledAction,
    vars: &mut [Value],
    params: &[Value],
    ops: &mut u64,
) -> Result<(), EvalError> {
    // Statements run in order and each one sees the previous assignments:
    // the degradation grammar relies on `cnt` being incremented before the
    // division that uses it.
    for stmt in &action.statements {
        let value = eval(&stmt.expr, vars, params, ops)?;
        vars[stmt.target] = coerce_assign(value, stmt.target_ty);
    }
    Ok(())
}

fn coerce_assign(value: Value, target: StateType) -> Value {
    match (target, value) {
        (StateType::Rational, Value::Int(n)) => Value::Rat(Rat::from_bigint(n)),
        (_, v) => v,
    }
}

fn eval(
    expr: &CExpr,
    vars: &[Value],
    params: &[Value],
    ops: &mut u64,
) -> Result<Value, EvalError> {
    *ops += 1;
    match expr {
        CExpr::Int(n) => Ok(Value::Int(n.clone())),
        CExpr::Text(s) => Ok(Value::Text(s.clone())),
        CExpr::State(i) => Ok(vars[*i].clone()),
        CExpr::Param(i) => Ok(params[*i].clone()),
        CExpr::Arith(op, a, b) => {
            let va = eval(a, vars, params, ops)?;
            let vb = eval(b, vars, params, ops)?;
            arith(*op, va, vb)
        }
        CExpr::Cmp(op, a, b) => {
            let va = eval(a, vars, params, ops)?;
            let vb = eval(b, vars, params, ops)?;
            Ok(Value::Bool(compare(*op, &va, &vb)))
        }
        CExpr::Case {
            cond,
            on_true,
            on_false,
        } => {
            // Only the taken branch is evaluated, so a comparison guard
            // protects a division in the other branch.
            match eval(cond, vars, params, ops)? {
                Value::Bool(true) => eval(on_true, vars, params, ops),
                Value::Bool(false) => eval(on_false, vars, params, ops),
                other => unreachable!("type checker admitted non-bool case condition {other}"),
            }
        }
        CExpr::Max(a, b) => {
            let va = eval(a, vars, params, ops)?;
            let vb = eval(b, vars, params, ops)?;
            match (&va, &vb) {
                (Value::Int(x), Value::Int(y)) => Ok(Value::Int(x.clone().max(y.clone()))),
                _ => {
                    let ra = va.as_rat().expect("numeric");
                    let rb = vb.as_rat().expect("numeric");
                    Ok(Value::Rat(ra.max(rb)))
                }
            }
        }
        CExpr::Pair(k, v) => {
            let key = match eval(k, vars, params, ops)? {
                Value::Text(s) => s,
                other => unreachable!("type checker admitted non-text pair key {other}"),
            };
            let value = eval(v, vars, params, ops)?
                .as_rat()
                .expect("type checker admitted non-numeric pair value");
            Ok(Value::Metric { key, value })
        }
    }
}

fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, EvalError> {
    if op != ArithOp::Div {
        if let (Value::Int(x), Value::Int(y)) = (&a, &b) {
            return Ok(Value::Int(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => unreachable!(),
            }));
        }
    }
    let ra = a.as_rat().expect("numeric operand");
    let rb = b.as_rat().expect("numeric operand");
    match op {
        ArithOp::Add => Ok(Value::Rat(ra + rb)),
        ArithOp::Sub => Ok(Value::Rat(ra - rb)),
        ArithOp::Mul => Ok(Value::Rat(ra * rb)),
        ArithOp::Div => ra.checked_div(&rb).map(Value::Rat).ok_or(EvalError::DivisionByZero),
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> bool {
    if let (Value::Text(x), Value::Text(y)) = (a, b) {
        return match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => unreachable!("type checker admitted ordering on text"),
        };
    }
    let ra = a.as_rat().expect("numeric operand");
    let rb = b.as_rat().expect("numeric operand");
    match op {
        CmpOp::Gt => ra > rb,
        CmpOp::Lt => ra < rb,
        CmpOp::Ge => ra >= rb,
        CmpOp::Le => ra <= rb,
        CmpOp::Eq => ra == rb,
        CmpOp::Ne => ra != rb,
    }
}
