//! Syntax trees for service views and attribute grammars.
//!
//! The parser produces these byte-for-byte position free; spans live in the
//! lexer tokens and only surface in error values. Identifier case decides the
//! symbol class in production bodies: `S`, `T` are nonterminals, `query`,
//! `open` are terminals.

use num_bigint::BigInt;

use crate::rat::Rat;

/// Types an event parameter may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Time,
    Rational,
    Integer,
    Text,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Time => "Time",
            ParamType::Rational => "Rat",
            ParamType::Integer => "Int",
            ParamType::Text => "String",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

/// A named service event with its typed parameter list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSignature {
    pub name: String,
    pub params: Vec<Param>,
}

impl EventSignature {
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }
}

/// One `event(params) terminal` binding inside a view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewBinding {
    pub signature: EventSignature,
    pub terminal: String,
}

/// Selects the events relevant for one metric and names them as terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceView {
    pub name: String,
    pub bindings: Vec<ViewBinding>,
}

impl ServiceView {
    pub fn binding_for_event(&self, event: &str) -> Option<(usize, &ViewBinding)> {
        self.bindings
            .iter()
            .enumerate()
            .find(|(_, b)| b.signature.name == event)
    }

    pub fn binding_for_terminal(&self, terminal: &str) -> Option<(usize, &ViewBinding)> {
        self.bindings
            .iter()
            .enumerate()
            .find(|(_, b)| b.terminal == terminal)
    }
}

/// Declared type of a grammar state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateType {
    Integer,
    Rational,
    /// `Pair<String, Rat>`: a labeled metric output.
    MetricPair,
}

impl StateType {
    pub fn keyword(self) -> &'static str {
        match self {
            StateType::Integer => "Int",
            StateType::Rational => "Rat",
            StateType::MetricPair => "Pair<String, Rat>",
        }
    }
}

/// Initializer literal of a state declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(BigInt),
    Rat(Rat),
    Pair { key: String, value: Rat },
}

/// `Int cnt = 0;` and friends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub ty: StateType,
    pub initial: Literal,
}

/// A single `var = expr;` inside an action block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub target: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionBlock {
    pub statements: Vec<Assign>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Action expressions: exact-rational arithmetic, comparisons, a two-branch
/// boolean `case`, `max` and labeled-pair construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Text(String),
    /// State variable or event parameter, resolved during binding.
    Var(String),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Case {
        cond: Box<Expr>,
        on_true: Box<Expr>,
        on_false: Box<Expr>,
    },
    Max(Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
}

/// One symbol in a raw production body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhsSymbol {
    /// Lowercase-first identifier.
    Terminal(String),
    /// Uppercase-first identifier.
    Nonterminal(String),
    Action(ActionBlock),
}

/// A production exactly as parsed, before the regular-form check shapes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawProduction {
    pub lhs: String,
    pub rhs: Vec<RhsSymbol>,
}

/// Parsed grammar source: declarations, productions, start symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarParts {
    pub states: Vec<StateDecl>,
    pub productions: Vec<RawProduction>,
    pub start: String,
}

/// A production in regular form: one terminal, an optional action, an
/// optional trailing nonterminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: String,
    pub terminal: String,
    pub action: Option<ActionBlock>,
    pub continuation: Option<String>,
}

pub(crate) fn is_nonterminal_ident(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}
