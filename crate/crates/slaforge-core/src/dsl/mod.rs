//! The metric DSL: service views and regular attribute grammars.
//!
//! A *view* names the service events relevant to one metric and maps them to
//! grammar terminals. A *grammar* declares attribute state and gives regular
//! productions whose action blocks update that state as events are parsed.
//! [`bind`] fuses both into an executable [`MetricDefinition`].
//!
//! File conventions: `.view` holds one view, `.metric` one grammar, and a
//! combined `.sla-metric` file one view followed by one grammar. All files
//! are UTF-8 with `#` line comments.

pub mod ast;
mod bind;
pub mod builtin;
mod lexer;
mod parser;
pub mod pretty;
mod validate;

pub use ast::{
    ActionBlock, ArithOp, Assign, CmpOp, EventSignature, Expr, GrammarParts, Literal, Param,
    ParamType, Production, RawProduction, RhsSymbol, ServiceView, StateDecl, StateType,
    ViewBinding,
};
pub use bind::{bind, BoundProduction, CExpr, CompiledAction, CompiledAssign, MetricDefinition};
pub use parser::{parse_combined, parse_grammar, parse_view};
pub use validate::{validate_regular, RegularViolation, ViolationKind};

/// Errors from parsing, validating or binding DSL sources.
#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("event `{event}` bound twice in view (at {line}:{col})")]
    DuplicateEvent { event: String, line: u32, col: u32 },
    #[error("terminal `{terminal}` declared twice in view (at {line}:{col})")]
    DuplicateTerminal {
        terminal: String,
        line: u32,
        col: u32,
    },
    #[error("duplicate parameter `{param}` on event `{event}` (at {line}:{col})")]
    DuplicateParam {
        event: String,
        param: String,
        line: u32,
        col: u32,
    },
    #[error("state variable `{name}` declared twice")]
    DuplicateState { name: String },
    #[error("initializer for `{name}` does not match declared type {ty} (at {line}:{col})")]
    InitializerType {
        name: String,
        ty: String,
        line: u32,
        col: u32,
    },
    #[error("grammar is not regular:\n{}", format_violations(.0))]
    NotRegular(Vec<RegularViolation>),
    #[error("terminal `{terminal}` in production `{production}` has no binding in view `{view}`")]
    UnboundTerminal {
        terminal: String,
        production: String,
        view: String,
    },
    #[error("undeclared state variable `{name}` in production `{production}`")]
    UndeclaredState { name: String, production: String },
    #[error("`{name}` is not a parameter of event `{event}` (production `{production}`)")]
    UnknownParam {
        name: String,
        event: String,
        production: String,
    },
    #[error("cannot assign to event parameter `{param}` in production `{production}`")]
    AssignToParam { param: String, production: String },
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: String,
        expected: String,
        found: String,
    },
    #[error("division by literal zero in production `{production}`")]
    DivisionByZeroLiteral { production: String },
    #[error(
        "ambiguous grammar: two productions for `{lhs}` on terminal `{terminal}`; \
         incremental parsing requires a deterministic grammar"
    )]
    Nondeterministic { lhs: String, terminal: String },
}

impl DslError {
    pub(crate) fn syntax(line: u32, col: u32, message: impl Into<String>) -> Self {
        DslError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }
}

fn format_violations(violations: &[RegularViolation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
