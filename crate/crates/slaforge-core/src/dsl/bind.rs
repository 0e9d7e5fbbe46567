//! Binds a view and a validated grammar into an executable metric
//! definition: terminals are resolved against view bindings, action blocks
//! are type-checked with the bound signature's parameters in scope, and
//! variable references are compiled to indices.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;

use super::ast::*;
use super::validate::validate_regular;
use super::DslError;

/// Static type of an action expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Rat,
    Text,
    Bool,
    Pair,
}

impl Ty {
    pub fn name(self) -> &'static str {
        match self {
            Ty::Int => "Int",
            Ty::Rat => "Rat",
            Ty::Text => "String",
            Ty::Bool => "Bool",
            Ty::Pair => "Pair<String, Rat>",
        }
    }

    fn is_numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Rat)
    }
}

fn param_ty(ty: ParamType) -> Ty {
    match ty {
        ParamType::Time | ParamType::Integer => Ty::Int,
        ParamType::Rational => Ty::Rat,
        ParamType::Text => Ty::Text,
    }
}

fn state_ty(ty: StateType) -> Ty {
    match ty {
        StateType::Integer => Ty::Int,
        StateType::Rational => Ty::Rat,
        StateType::MetricPair => Ty::Pair,
    }
}

/// Expression with resolved variable references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CExpr {
    Int(BigInt),
    Text(String),
    State(usize),
    Param(usize),
    Arith(ArithOp, Box<CExpr>, Box<CExpr>),
    Cmp(CmpOp, Box<CExpr>, Box<CExpr>),
    Case {
        cond: Box<CExpr>,
        on_true: Box<CExpr>,
        on_false: Box<CExpr>,
    },
    Max(Box<CExpr>, Box<CExpr>),
    Pair(Box<CExpr>, Box<CExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledAssign {
    pub target: usize,
    pub target_ty: StateType,
    pub expr: CExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompiledAction {
    pub statements: Vec<CompiledAssign>,
}

/// A production after binding: the terminal is an index into the view's
/// bindings, nonterminals are interned ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundProduction {
    pub lhs: usize,
    pub binding: usize,
    pub terminal: String,
    pub action: CompiledAction,
    pub continuation: Option<usize>,
}

/// Executable form of a service metric: a view plus a regular attribute
/// grammar with compiled actions. Prefix-closure is implicit: every
/// nonterminal accepts, so every prefix of an accepted trace is accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricDefinition {
    pub view: ServiceView,
    pub states: Vec<StateDecl>,
    pub productions: Vec<BoundProduction>,
    pub nonterminals: Vec<String>,
    pub start: usize,
    /// Indices of `Pair<String, Rat>` states exported as metric outputs.
    pub exports: Vec<usize>,
    transitions: HashMap<(usize, usize), usize>,
    events: HashMap<String, usize>,
}

impl MetricDefinition {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn nonterminal_name(&self, id: usize) -> &str {
        &self.nonterminals[id]
    }

    /// Binding index for an event name, if the view selects it.
    pub fn binding_for_event(&self, event: &str) -> Option<usize> {
        self.events.get(event).copied()
    }

    /// Production to take from `nonterminal` on `binding`, if any.
    pub fn transition(&self, nonterminal: usize, binding: usize) -> Option<&BoundProduction> {
        self.transitions
            .get(&(nonterminal, binding))
            .map(|&i| &self.productions[i])
    }

    /// Names of exported metric states with their declared keys.
    pub fn export_names(&self) -> impl Iterator<Item = (&str, &str)> {
        self.exports.iter().map(|&i| {
            let decl = &self.states[i];
            let key = match &decl.initial {
                Literal::Pair { key, .. } => key.as_str(),
                _ => unreachable!("exports are pair-typed"),
            };
            (decl.name.as_str(), key)
        })
    }
}

struct Binder<'a> {
    view: &'a ServiceView,
    states: &'a [StateDecl],
    state_index: HashMap<&'a str, usize>,
}

impl<'a> Binder<'a> {
    fn bind_action(
        &self,
        action: &ActionBlock,
        binding: &ViewBinding,
        lhs: &str,
    ) -> Result<CompiledAction, DslError> {
        let mut statements = Vec::with_capacity(action.statements.len());
        for assign in &action.statements {
            if binding.signature.param_index(&assign.target).is_some() {
                return Err(DslError::AssignToParam {
                    param: assign.target.clone(),
                    production: lhs.to_string(),
                });
            }
            let target = *self.state_index.get(assign.target.as_str()).ok_or_else(|| {
                DslError::UndeclaredState {
                    name: assign.target.clone(),
                    production: lhs.to_string(),
                }
            })?;
            let target_ty = self.states[target].ty;
            let (expr, ty) = self.bind_expr(&assign.expr, binding, lhs)?;
            let ok = match target_ty {
                StateType::Integer => ty == Ty::Int,
                StateType::Rational => ty.is_numeric(),
                StateType::MetricPair => ty == Ty::Pair,
            };
            if !ok {
                return Err(DslError::TypeMismatch {
                    context: format!(
                        "assignment to `{}` in production `{lhs}`",
                        assign.target
                    ),
                    expected: state_ty(target_ty).name().to_string(),
                    found: ty.name().to_string(),
                });
            }
            statements.push(CompiledAssign {
                target,
                target_ty,
                expr,
            });
        }
        Ok(CompiledAction { statements })
    }

    fn bind_expr(
        &self,
        expr: &Expr,
        binding: &ViewBinding,
        lhs: &str,
    ) -> Result<(CExpr, Ty), DslError> {
        match expr {
            Expr::Int(n) => Ok((CExpr::Int(n.clone()), Ty::Int)),
            Expr::Text(s) => Ok((CExpr::Text(s.clone()), Ty::Text)),
            Expr::Var(name) => {
                if let Some(i) = binding.signature.param_index(name) {
                    return Ok((CExpr::Param(i), param_ty(binding.signature.params[i].ty)));
                }
                if let Some(&i) = self.state_index.get(name.as_str()) {
                    return Ok((CExpr::State(i), state_ty(self.states[i].ty)));
                }
                let known_elsewhere = self
                    .view
                    .bindings
                    .iter()
                    .any(|b| b.signature.param_index(name).is_some());
                if known_elsewhere {
                    Err(DslError::UnknownParam {
                        name: name.clone(),
                        event: binding.signature.name.clone(),
                        production: lhs.to_string(),
                    })
                } else {
                    Err(DslError::UndeclaredState {
                        name: name.clone(),
                        production: lhs.to_string(),
                    })
                }
            }
            Expr::Arith(op, a, b) => {
                if *op == ArithOp::Div {
                    if let Expr::Int(n) = b.as_ref() {
                        if n.is_zero() {
                            return Err(DslError::DivisionByZeroLiteral {
                                production: lhs.to_string(),
                            });
                        }
                    }
                }
                let (ca, ta) = self.bind_expr(a, binding, lhs)?;
                let (cb, tb) = self.bind_expr(b, binding, lhs)?;
                if !ta.is_numeric() || !tb.is_numeric() {
                    return Err(self.mismatch(lhs, op.symbol(), ta, tb));
                }
                let ty = if *op == ArithOp::Div {
                    Ty::Rat
                } else if ta == Ty::Int && tb == Ty::Int {
                    Ty::Int
                } else {
                    Ty::Rat
                };
                Ok((CExpr::Arith(*op, Box::new(ca), Box::new(cb)), ty))
            }
            Expr::Cmp(op, a, b) => {
                let (ca, ta) = self.bind_expr(a, binding, lhs)?;
                let (cb, tb) = self.bind_expr(b, binding, lhs)?;
                let ok = (ta.is_numeric() && tb.is_numeric())
                    || (ta == Ty::Text
                        && tb == Ty::Text
                        && matches!(op, CmpOp::Eq | CmpOp::Ne));
                if !ok {
                    return Err(self.mismatch(lhs, op.symbol(), ta, tb));
                }
                Ok((CExpr::Cmp(*op, Box::new(ca), Box::new(cb)), Ty::Bool))
            }
            Expr::Case {
                cond,
                on_true,
                on_false,
            } => {
                let (cc, tc) = self.bind_expr(cond, binding, lhs)?;
                if tc != Ty::Bool {
                    return Err(DslError::TypeMismatch {
                        context: format!("case condition in production `{lhs}`"),
                        expected: "Bool".to_string(),
                        found: tc.name().to_string(),
                    });
                }
                let (ct, tt) = self.bind_expr(on_true, binding, lhs)?;
                let (cf, tf) = self.bind_expr(on_false, binding, lhs)?;
                let ty = join(tt, tf).ok_or_else(|| DslError::TypeMismatch {
                    context: format!("case branches in production `{lhs}`"),
                    expected: tt.name().to_string(),
                    found: tf.name().to_string(),
                })?;
                Ok((
                    CExpr::Case {
                        cond: Box::new(cc),
                        on_true: Box::new(ct),
                        on_false: Box::new(cf),
                    },
                    ty,
                ))
            }
            Expr::Max(a, b) => {
                let (ca, ta) = self.bind_expr(a, binding, lhs)?;
                let (cb, tb) = self.bind_expr(b, binding, lhs)?;
                if !ta.is_numeric() || !tb.is_numeric() {
                    return Err(self.mismatch(lhs, "max", ta, tb));
                }
                let ty = join(ta, tb).expect("numeric join");
                Ok((CExpr::Max(Box::new(ca), Box::new(cb)), ty))
            }
            Expr::Pair(k, v) => {
                let (ck, tk) = self.bind_expr(k, binding, lhs)?;
                let (cv, tv) = self.bind_expr(v, binding, lhs)?;
                if tk != Ty::Text || !tv.is_numeric() {
                    return Err(DslError::TypeMismatch {
                        context: format!("Pair construction in production `{lhs}`"),
                        expected: "(String, Rat)".to_string(),
                        found: format!("({}, {})", tk.name(), tv.name()),
                    });
                }
                Ok((CExpr::Pair(Box::new(ck), Box::new(cv)), Ty::Pair))
            }
        }
    }

    fn mismatch(&self, lhs: &str, op: &str, a: Ty, b: Ty) -> DslError {
        DslError::TypeMismatch {
            context: format!("operator `{op}` in production `{lhs}`"),
            expected: "numeric operands".to_string(),
            found: format!("({}, {})", a.name(), b.name()),
        }
    }
}

fn join(a: Ty, b: Ty) -> Option<Ty> {
    match (a, b) {
        _ if a == b => Some(a),
        (Ty::Int, Ty::Rat) | (Ty::Rat, Ty::Int) => Some(Ty::Rat),
        _ => None,
    }
}

/// Binds `view` and grammar `parts` into a [`MetricDefinition`]. Runs the
/// regular-form check first; no production is ever silently dropped.
pub fn bind(view: &ServiceView, parts: &GrammarParts) -> Result<MetricDefinition, DslError> {
    let shaped = validate_regular(&parts.productions).map_err(DslError::NotRegular)?;

    let mut state_index = HashMap::new();
    for (i, s) in parts.states.iter().enumerate() {
        state_index.insert(s.name.as_str(), i);
    }
    let binder = Binder {
        view,
        states: &parts.states,
        state_index,
    };

    // Intern nonterminals: production heads first, then dangling
    // continuations (accepting states with no outgoing productions).
    let mut nonterminals: Vec<String> = Vec::new();
    let mut nt_index: HashMap<String, usize> = HashMap::new();
    let intern = |name: &str, table: &mut Vec<String>, index: &mut HashMap<String, usize>| {
        if let Some(&i) = index.get(name) {
            i
        } else {
            let i = table.len();
            table.push(name.to_string());
            index.insert(name.to_string(), i);
            i
        }
    };
    for p in &shaped {
        intern(&p.lhs, &mut nonterminals, &mut nt_index);
    }
    for p in &shaped {
        if let Some(c) = &p.continuation {
            intern(c, &mut nonterminals, &mut nt_index);
        }
    }

    let mut productions = Vec::with_capacity(shaped.len());
    let mut transitions: HashMap<(usize, usize), usize> = HashMap::new();
    for p in &shaped {
        let (binding_idx, binding) =
            view.binding_for_terminal(&p.terminal)
                .ok_or_else(|| DslError::UnboundTerminal {
                    terminal: p.terminal.clone(),
                    production: p.lhs.clone(),
                    view: view.name.clone(),
                })?;
        let action = match &p.action {
            Some(a) => binder.bind_action(a, binding, &p.lhs)?,
            None => CompiledAction::default(),
        };
        let lhs = nt_index[&p.lhs];
        let continuation = p.continuation.as_ref().map(|c| nt_index[c]);
        let idx = productions.len();
        if transitions.insert((lhs, binding_idx), idx).is_some() {
            return Err(DslError::Nondeterministic {
                lhs: p.lhs.clone(),
                terminal: p.terminal.clone(),
            });
        }
        productions.push(BoundProduction {
            lhs,
            binding: binding_idx,
            terminal: p.terminal.clone(),
            action,
            continuation,
        });
    }

    let events = view
        .bindings
        .iter()
        .enumerate()
        .map(|(i, b)| (b.signature.name.clone(), i))
        .collect();

    let exports = parts
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.ty == StateType::MetricPair)
        .map(|(i, _)| i)
        .collect();

    let start = nt_index[&parts.start];
    Ok(MetricDefinition {
        view: view.clone(),
        states: parts.states.clone(),
        productions,
        nonterminals,
        start,
        exports,
        transitions,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::builtin;
    use crate::dsl::parser::{parse_grammar, parse_view};

    fn degradation() -> (ServiceView, GrammarParts) {
        (
            parse_view(&builtin::degradation_view_source()).unwrap(),
            parse_grammar(&builtin::degradation_grammar_source(200)).unwrap(),
        )
    }

    #[test]
    fn binds_degradation_definition() {
        let (view, parts) = degradation();
        let def = bind(&view, &parts).unwrap();
        assert_eq!(def.nonterminals, vec!["S".to_string()]);
        assert_eq!(def.start, 0);
        assert_eq!(def.exports.len(), 1);
        let (name, key) = def.export_names().next().unwrap();
        assert_eq!(name, "degradation");
        assert_eq!(key, "fas.200");
        assert!(def.binding_for_event("invoke").is_some());
        assert!(def.binding_for_event("heartbeat").is_none());
        assert!(def.transition(0, 0).is_some());
    }

    #[test]
    fn rejects_unbound_terminal() {
        let view = parse_view("view V { invoke(Time t) query }").unwrap();
        let parts = parse_grammar("S ::= qry S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::UnboundTerminal { ref terminal, .. } if terminal == "qry"));
    }

    #[test]
    fn rejects_param_missing_from_bound_event() {
        let view = parse_view("view V { invoke(Time t) query }").unwrap();
        let parts =
            parse_grammar("Int c = 0; S ::= query { c = c + procTime; } S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        // `procTime` is not a parameter of any view event, so it reads as an
        // undeclared state variable.
        assert!(matches!(err, DslError::UndeclaredState { ref name, .. } if name == "procTime"));
    }

    #[test]
    fn distinguishes_param_of_other_event() {
        let view =
            parse_view("view V { invoke(Time t) query  other(Rat procTime) o }").unwrap();
        let parts =
            parse_grammar("Int c = 0; S ::= query { c = c + procTime; } S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::UnknownParam { ref name, .. } if name == "procTime"));
    }

    #[test]
    fn rejects_undeclared_state() {
        let view = parse_view("view V { q() q }").unwrap();
        let parts = parse_grammar("S ::= q { c = c + 1; } S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::UndeclaredState { ref name, .. } if name == "c"));
    }

    #[test]
    fn rejects_nondeterministic_grammar() {
        let view = parse_view("view V { q() q }").unwrap();
        let parts = parse_grammar("S ::= q S  S ::= q").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::Nondeterministic { .. }));
    }

    #[test]
    fn rejects_int_var_holding_division() {
        let view = parse_view("view V { q(Rat x) q }").unwrap();
        let parts = parse_grammar("Int c = 0; S ::= q { c = x / 2; } S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::TypeMismatch { .. }));
    }

    #[test]
    fn rejects_division_by_zero_literal() {
        let view = parse_view("view V { q() q }").unwrap();
        let parts = parse_grammar("Rat r = 0; S ::= q { r = 1 / 0; } S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::DivisionByZeroLiteral { .. }));
    }

    #[test]
    fn rejects_assignment_to_param() {
        let view = parse_view("view V { q(Rat x) q }").unwrap();
        let parts = parse_grammar("Rat r = 0; S ::= q { x = 1; } S").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::AssignToParam { .. }));
    }

    #[test]
    fn propagates_regularity_violations() {
        let view = parse_view("view V { q() q }").unwrap();
        let parts = parse_grammar("S ::= q S T").unwrap();
        let err = bind(&view, &parts).unwrap_err();
        assert!(matches!(err, DslError::NotRegular(_)));
    }

    #[test]
    fn dangling_continuation_is_an_accepting_dead_end() {
        let view = parse_view("view V { q() q }").unwrap();
        let parts = parse_grammar("S ::= q T").unwrap();
        let def = bind(&view, &parts).unwrap();
        assert_eq!(def.nonterminals, vec!["S".to_string(), "T".to_string()]);
        assert!(def.transition(1, 0).is_none());
    }
}
