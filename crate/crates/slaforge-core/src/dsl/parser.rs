//! Recursive-descent parser for `.view` and `.metric` sources.
//!
//! Views:
//!
//! ```text
//! view Degradation { invoke(Time t, Rat procTime) query }
//! ```
//!
//! Grammars: state declarations first, then productions.
//!
//! ```text
//! Pair<String, Rat> degradation = Pair("fas.200", 0);
//! Int cnt = 0;
//!
//! S ::= query { cnt = cnt + 1; } S
//! ```
//!
//! Production bodies are parsed as flat symbol lists; the regular-form check
//! shapes them afterwards so violations can be reported precisely.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::Zero;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::DslError;
use crate::rat::Rat;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Self, DslError> {
        Ok(Parser {
            tokens: tokenize(source)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn check(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, DslError> {
        if self.check(&kind) {
            Ok(self.advance())
        } else {
            Err(self.error_here(format!("expected {kind}, found {}", self.peek().kind)))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, u32, u32), DslError> {
        match &self.peek().kind {
            TokenKind::Ident(_) => {
                let tok = self.advance();
                match tok.kind {
                    TokenKind::Ident(name) => Ok((name, tok.line, tok.col)),
                    _ => unreachable!(),
                }
            }
            other => Err(self.error_here(format!("expected {what}, found {other}"))),
        }
    }

    fn error_here(&self, msg: impl Into<String>) -> DslError {
        let tok = self.peek();
        DslError::syntax(tok.line, tok.col, msg)
    }

    fn at_eof(&self) -> bool {
        self.check(&TokenKind::Eof)
    }

    // ---- views ----

    fn view(&mut self) -> Result<ServiceView, DslError> {
        self.expect(TokenKind::View)?;
        let (name, _, _) = self.expect_ident("view name")?;
        self.expect(TokenKind::LBrace)?;
        let mut bindings = Vec::new();
        let mut seen_events: HashSet<String> = HashSet::new();
        let mut seen_terminals: HashSet<String> = HashSet::new();
        while !self.check(&TokenKind::RBrace) {
            let (event, ev_line, ev_col) = self.expect_ident("event name")?;
            if !seen_events.insert(event.clone()) {
                return Err(DslError::DuplicateEvent {
                    event,
                    line: ev_line,
                    col: ev_col,
                });
            }
            self.expect(TokenKind::LParen)?;
            let mut params = Vec::new();
            let mut seen_params: HashSet<String> = HashSet::new();
            if !self.check(&TokenKind::RParen) {
                loop {
                    let ty = self.param_type()?;
                    let (pname, p_line, p_col) = self.expect_ident("parameter name")?;
                    if !seen_params.insert(pname.clone()) {
                        return Err(DslError::DuplicateParam {
                            event: event.clone(),
                            param: pname,
                            line: p_line,
                            col: p_col,
                        });
                    }
                    params.push(Param { name: pname, ty });
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
            }
            self.expect(TokenKind::RParen)?;
            let (terminal, t_line, t_col) = self.expect_ident("terminal name")?;
            if is_nonterminal_ident(&terminal) {
                return Err(DslError::syntax(
                    t_line,
                    t_col,
                    format!("terminal `{terminal}` must start with a lowercase letter"),
                ));
            }
            if !seen_terminals.insert(terminal.clone()) {
                return Err(DslError::DuplicateTerminal {
                    terminal,
                    line: t_line,
                    col: t_col,
                });
            }
            bindings.push(ViewBinding {
                signature: EventSignature {
                    name: event,
                    params,
                },
                terminal,
            });
        }
        self.expect(TokenKind::RBrace)?;
        Ok(ServiceView { name, bindings })
    }

    fn param_type(&mut self) -> Result<ParamType, DslError> {
        let ty = match self.peek().kind {
            TokenKind::TyTime => ParamType::Time,
            TokenKind::TyRat => ParamType::Rational,
            TokenKind::TyInt => ParamType::Integer,
            TokenKind::TyString => ParamType::Text,
            ref other => {
                return Err(self.error_here(format!(
                    "expected parameter type (Time, Rat, Int, String), found {other}"
                )))
            }
        };
        self.advance();
        Ok(ty)
    }

    // ---- grammars ----

    fn grammar(&mut self) -> Result<GrammarParts, DslError> {
        let mut states = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        while self.at_state_decl() {
            let decl = self.state_decl()?;
            if !seen.insert(decl.name.clone()) {
                return Err(DslError::DuplicateState { name: decl.name });
            }
            states.push(decl);
        }

        let mut productions = Vec::new();
        while !self.at_eof() {
            productions.push(self.production()?);
        }
        if productions.is_empty() {
            return Err(self.error_here("expected at least one production"));
        }
        let start = productions[0].lhs.clone();
        Ok(GrammarParts {
            states,
            productions,
            start,
        })
    }

    fn at_state_decl(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::TyInt | TokenKind::TyRat | TokenKind::Pair
        )
    }

    fn state_decl(&mut self) -> Result<StateDecl, DslError> {
        let ty = match self.peek().kind {
            TokenKind::TyInt => {
                self.advance();
                StateType::Integer
            }
            TokenKind::TyRat => {
                self.advance();
                StateType::Rational
            }
            TokenKind::Pair => {
                self.advance();
                self.expect(TokenKind::Lt)?;
                self.expect(TokenKind::TyString)?;
                self.expect(TokenKind::Comma)?;
                self.expect(TokenKind::TyRat)?;
                self.expect(TokenKind::Gt)?;
                StateType::MetricPair
            }
            _ => unreachable!("checked by at_state_decl"),
        };
        let (name, _, _) = self.expect_ident("state variable name")?;
        self.expect(TokenKind::Assign)?;
        let initial = self.literal(ty, &name)?;
        self.expect(TokenKind::Semi)?;
        Ok(StateDecl { name, ty, initial })
    }

    fn signed_int(&mut self) -> Result<BigInt, DslError> {
        let negative = self.eat(&TokenKind::Minus);
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.advance();
                Ok(if negative { -n } else { n })
            }
            other => Err(self.error_here(format!("expected integer literal, found {other}"))),
        }
    }

    fn rat_literal(&mut self) -> Result<Rat, DslError> {
        let tok = self.peek().clone();
        let num = self.signed_int()?;
        if self.eat(&TokenKind::Slash) {
            let den = self.signed_int()?;
            if den.is_zero() {
                return Err(DslError::syntax(
                    tok.line,
                    tok.col,
                    "zero denominator in rational literal",
                ));
            }
            Ok(Rat::from_big(num, den).expect("nonzero denominator"))
        } else {
            Ok(Rat::from_bigint(num))
        }
    }

    fn literal(&mut self, ty: StateType, name: &str) -> Result<Literal, DslError> {
        let tok = self.peek().clone();
        match ty {
            StateType::Integer => {
                if self.check(&TokenKind::Pair) {
                    return Err(self.initializer_mismatch(name, ty, &tok));
                }
                Ok(Literal::Int(self.signed_int()?))
            }
            StateType::Rational => {
                if self.check(&TokenKind::Pair) {
                    return Err(self.initializer_mismatch(name, ty, &tok));
                }
                Ok(Literal::Rat(self.rat_literal()?))
            }
            StateType::MetricPair => {
                if !self.eat(&TokenKind::Pair) {
                    return Err(self.initializer_mismatch(name, ty, &tok));
                }
                self.expect(TokenKind::LParen)?;
                let key = match self.peek().kind.clone() {
                    TokenKind::Str(s) => {
                        self.advance();
                        s
                    }
                    other => {
                        return Err(
                            self.error_here(format!("expected string metric key, found {other}"))
                        )
                    }
                };
                self.expect(TokenKind::Comma)?;
                let value = self.rat_literal()?;
                self.expect(TokenKind::RParen)?;
                Ok(Literal::Pair { key, value })
            }
        }
    }

    fn initializer_mismatch(&self, name: &str, ty: StateType, tok: &Token) -> DslError {
        DslError::InitializerType {
            name: name.to_string(),
            ty: ty.keyword().to_string(),
            line: tok.line,
            col: tok.col,
        }
    }

    fn production(&mut self) -> Result<RawProduction, DslError> {
        let (lhs, line, col) = self.expect_ident("nonterminal")?;
        if !is_nonterminal_ident(&lhs) {
            return Err(DslError::syntax(
                line,
                col,
                format!("nonterminal `{lhs}` must start with an uppercase letter"),
            ));
        }
        self.expect(TokenKind::Produces)?;
        let mut rhs = Vec::new();
        loop {
            match self.peek().kind.clone() {
                TokenKind::Ident(name) => {
                    // `X ::=` starts the next production.
                    if matches!(self.peek_at(1).kind, TokenKind::Produces) {
                        break;
                    }
                    self.advance();
                    if is_nonterminal_ident(&name) {
                        rhs.push(RhsSymbol::Nonterminal(name));
                    } else {
                        rhs.push(RhsSymbol::Terminal(name));
                    }
                }
                TokenKind::LBrace => {
                    rhs.push(RhsSymbol::Action(self.action_block()?));
                }
                TokenKind::Eof => break,
                ref other => {
                    return Err(self.error_here(format!(
                        "expected grammar symbol or action block, found {other}"
                    )))
                }
            }
        }
        Ok(RawProduction { lhs, rhs })
    }

    fn action_block(&mut self) -> Result<ActionBlock, DslError> {
        self.expect(TokenKind::LBrace)?;
        let mut statements = Vec::new();
        while !self.check(&TokenKind::RBrace) {
            let (target, _, _) = self.expect_ident("assignment target")?;
            self.expect(TokenKind::Assign)?;
            let expr = self.expr()?;
            self.expect(TokenKind::Semi)?;
            statements.push(Assign { target, expr });
        }
        self.expect(TokenKind::RBrace)?;
        Ok(ActionBlock { statements })
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, DslError> {
        let lhs = self.additive()?;
        let op = match self.peek().kind {
            TokenKind::Gt => Some(CmpOp::Gt),
            TokenKind::Lt => Some(CmpOp::Lt),
            TokenKind::Ge => Some(CmpOp::Ge),
            TokenKind::Le => Some(CmpOp::Le),
            TokenKind::EqEq => Some(CmpOp::Eq),
            TokenKind::Ne => Some(CmpOp::Ne),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let rhs = self.additive()?;
            Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => ArithOp::Add,
                TokenKind::Minus => ArithOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => ArithOp::Mul,
                TokenKind::Slash => ArithOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.check(&TokenKind::Minus) {
            let tok = self.peek().clone();
            self.advance();
            match self.peek().kind.clone() {
                TokenKind::Int(n) => {
                    self.advance();
                    Ok(Expr::Int(-n))
                }
                _ => Err(DslError::syntax(
                    tok.line,
                    tok.col,
                    "`-` is only allowed before an integer literal",
                )),
            }
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Expr::Text(s))
            }
            TokenKind::Ident(name) => {
                self.advance();
                Ok(Expr::Var(name))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Case => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let cond = self.expr()?;
                self.expect(TokenKind::RParen)?;
                self.expect(TokenKind::LBrace)?;
                let (first_is_true, first) = self.case_arm()?;
                let (second_is_true, second) = self.case_arm()?;
                if first_is_true == second_is_true {
                    return Err(self
                        .error_here("case must have exactly one `True` and one `False` arm"));
                }
                self.expect(TokenKind::RBrace)?;
                let (on_true, on_false) = if first_is_true {
                    (first, second)
                } else {
                    (second, first)
                };
                Ok(Expr::Case {
                    cond: Box::new(cond),
                    on_true: Box::new(on_true),
                    on_false: Box::new(on_false),
                })
            }
            TokenKind::Max => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let a = self.expr()?;
                self.expect(TokenKind::Comma)?;
                let b = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::Max(Box::new(a), Box::new(b)))
            }
            TokenKind::Pair => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let key = self.expr()?;
                self.expect(TokenKind::Comma)?;
                let value = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::Pair(Box::new(key), Box::new(value)))
            }
            other => Err(self.error_here(format!("expected expression, found {other}"))),
        }
    }

    fn case_arm(&mut self) -> Result<(bool, Expr), DslError> {
        let is_true = match self.peek().kind {
            TokenKind::True => true,
            TokenKind::False => false,
            ref other => {
                return Err(self.error_here(format!("expected `True` or `False`, found {other}")))
            }
        };
        self.advance();
        self.expect(TokenKind::FatArrow)?;
        let e = self.expr()?;
        self.expect(TokenKind::Semi)?;
        Ok((is_true, e))
    }
}

/// Parses a `.view` source into a [`ServiceView`].
pub fn parse_view(source: &str) -> Result<ServiceView, DslError> {
    let mut p = Parser::new(source)?;
    let view = p.view()?;
    if !p.at_eof() {
        return Err(p.error_here("trailing input after view"));
    }
    Ok(view)
}

/// Parses a `.metric` source: state declarations followed by productions.
/// The first production's left-hand side is the start symbol.
pub fn parse_grammar(source: &str) -> Result<GrammarParts, DslError> {
    let mut p = Parser::new(source)?;
    p.grammar()
}

/// Parses a combined `.sla-metric` source: one view followed by one grammar.
pub fn parse_combined(source: &str) -> Result<(ServiceView, GrammarParts), DslError> {
    let mut p = Parser::new(source)?;
    let view = p.view()?;
    let grammar = p.grammar()?;
    Ok((view, grammar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::builtin;

    #[test]
    fn parses_degradation_view() {
        let v = parse_view("view Degradation { invoke(Time t, Rat procTime) query }").unwrap();
        assert_eq!(v.name, "Degradation");
        assert_eq!(v.bindings.len(), 1);
        let b = &v.bindings[0];
        assert_eq!(b.terminal, "query");
        assert_eq!(b.signature.name, "invoke");
        assert_eq!(
            b.signature
                .params
                .iter()
                .map(|p| (p.name.as_str(), p.ty))
                .collect::<Vec<_>>(),
            vec![("t", ParamType::Time), ("procTime", ParamType::Rational)]
        );
    }

    #[test]
    fn parses_empty_view() {
        let v = parse_view("view V { }").unwrap();
        assert_eq!(v.name, "V");
        assert!(v.bindings.is_empty());
    }

    #[test]
    fn rejects_event_bound_twice() {
        let err = parse_view("view V { a(Time t) x  a(Time t) y }").unwrap_err();
        assert!(matches!(err, DslError::DuplicateEvent { ref event, .. } if event == "a"));
    }

    #[test]
    fn rejects_duplicate_terminal() {
        let err = parse_view("view V { a(Time t) x  b(Time t) x }").unwrap_err();
        assert!(matches!(err, DslError::DuplicateTerminal { ref terminal, .. } if terminal == "x"));
    }

    #[test]
    fn rejects_duplicate_param() {
        let err = parse_view("view V { a(Time t, Rat t) x }").unwrap_err();
        assert!(matches!(err, DslError::DuplicateParam { ref param, .. } if param == "t"));
    }

    #[test]
    fn parses_degradation_grammar() {
        let g = parse_grammar(&builtin::degradation_grammar_source(200)).unwrap();
        assert_eq!(g.states.len(), 3);
        assert_eq!(g.states[0].name, "degradation");
        assert_eq!(g.states[1].name, "cnt");
        assert_eq!(g.states[2].name, "slowCnt");
        assert_eq!(g.productions.len(), 1);
        assert_eq!(g.start, "S");
        let p = &g.productions[0];
        assert_eq!(p.lhs, "S");
        assert_eq!(p.rhs.len(), 3);
        assert!(matches!(p.rhs[0], RhsSymbol::Terminal(ref t) if t == "query"));
        assert!(matches!(p.rhs[1], RhsSymbol::Action(_)));
        assert!(matches!(p.rhs[2], RhsSymbol::Nonterminal(ref n) if n == "S"));
    }

    #[test]
    fn parses_minimal_counter_grammar() {
        let g = parse_grammar("Int c = 0; S ::= q { c = c + 1; } S").unwrap();
        assert_eq!(g.states.len(), 1);
        assert_eq!(g.productions.len(), 1);
        assert_eq!(g.start, "S");
    }

    #[test]
    fn splits_consecutive_productions() {
        let g = parse_grammar("S ::= open { } T  T ::= close { } S").unwrap();
        assert_eq!(g.productions.len(), 2);
        assert_eq!(g.productions[0].lhs, "S");
        assert!(
            matches!(g.productions[0].rhs[2], RhsSymbol::Nonterminal(ref n) if n == "T"),
            "continuation should stay with the first production"
        );
        assert_eq!(g.productions[1].lhs, "T");
    }

    #[test]
    fn terminal_only_production_before_next() {
        let g = parse_grammar("S ::= stop  T ::= go S").unwrap();
        assert_eq!(g.productions.len(), 2);
        assert_eq!(g.productions[0].rhs.len(), 1);
    }

    #[test]
    fn declaration_after_production_is_rejected() {
        assert!(parse_grammar("S ::= q S  Int c = 0;").is_err());
    }

    #[test]
    fn initializer_type_mismatch() {
        let err = parse_grammar("Int c = Pair(\"x\", 0); S ::= q S").unwrap_err();
        assert!(matches!(err, DslError::InitializerType { .. }));
        let err = parse_grammar("Int c = 1/2; S ::= q S").unwrap_err();
        // An Int initializer stops before `/`, leaving a syntax error.
        assert!(matches!(err, DslError::Syntax { .. }));
    }

    #[test]
    fn rat_initializer_accepts_fraction() {
        let g = parse_grammar("Rat r = 1/2; S ::= q S").unwrap();
        assert_eq!(g.states[0].initial, Literal::Rat(Rat::new(1, 2)));
    }

    #[test]
    fn duplicate_state_rejected() {
        let err = parse_grammar("Int c = 0; Int c = 1; S ::= q S").unwrap_err();
        assert!(matches!(err, DslError::DuplicateState { ref name } if name == "c"));
    }

    #[test]
    fn combined_file_parses_view_then_grammar() {
        let src = format!(
            "{}\n{}",
            builtin::degradation_view_source(),
            builtin::degradation_grammar_source(200)
        );
        let (v, g) = parse_combined(&src).unwrap();
        assert_eq!(v.name, "Degradation");
        assert_eq!(g.start, "S");
    }

    #[test]
    fn syntax_error_carries_line_and_column() {
        let err = parse_view("view V {\n  invoke(Time t query\n}").unwrap_err();
        match err {
            DslError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
