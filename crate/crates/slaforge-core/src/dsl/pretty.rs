//! Canonical pretty-printer. `parse(pretty(x))` is structurally equal to `x`.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_view(view: &ServiceView) -> String {
    let mut out = String::new();
    if view.bindings.is_empty() {
        return format!("view {} {{ }}\n", view.name);
    }
    let _ = writeln!(out, "view {} {{", view.name);
    for b in &view.bindings {
        let params = b
            .signature
            .params
            .iter()
            .map(|p| format!("{} {}", p.ty.keyword(), p.name))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "  {}({}) {}", b.signature.name, params, b.terminal);
    }
    out.push_str("}\n");
    out
}

pub fn pretty_grammar(parts: &GrammarParts) -> String {
    let mut out = String::new();
    for s in &parts.states {
        let init = match &s.initial {
            Literal::Int(n) => n.to_string(),
            Literal::Rat(r) => {
                if r.is_integer() {
                    r.numer().to_string()
                } else {
                    format!("{} / {}", r.numer(), r.denom())
                }
            }
            Literal::Pair { key, value } => {
                if value.is_integer() {
                    format!("Pair(\"{key}\", {})", value.numer())
                } else {
                    format!("Pair(\"{key}\", {} / {})", value.numer(), value.denom())
                }
            }
        };
        let _ = writeln!(out, "{} {} = {};", s.ty.keyword(), s.name, init);
    }
    if !parts.states.is_empty() {
        out.push('\n');
    }
    for p in &parts.productions {
        let _ = write!(out, "{} ::=", p.lhs);
        for sym in &p.rhs {
            match sym {
                RhsSymbol::Terminal(t) => {
                    let _ = write!(out, " {t}");
                }
                RhsSymbol::Nonterminal(n) => {
                    let _ = write!(out, " {n}");
                }
                RhsSymbol::Action(a) => {
                    out.push_str(" {\n");
                    for st in &a.statements {
                        let _ = writeln!(out, "  {} = {};", st.target, pretty_expr(&st.expr));
                    }
                    out.push('}');
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Negative literals in declarations round-trip through the same grammar
/// rules; rational initializers print as `num / den` divisions only where
/// the declaration syntax allows a fraction.
pub fn pretty_expr(expr: &Expr) -> String {
    print_expr(expr, 0)
}

// Precedence levels: 0 comparison, 1 additive, 2 multiplicative, 3 atom.
fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Cmp(..) => 0,
        Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => 1,
        Expr::Arith(ArithOp::Mul | ArithOp::Div, ..) => 2,
        _ => 3,
    }
}

fn print_expr(expr: &Expr, min_prec: u8) -> String {
    let prec = precedence(expr);
    let body = match expr {
        Expr::Int(n) => n.to_string(),
        Expr::Text(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        Expr::Var(v) => v.clone(),
        Expr::Arith(op, a, b) => {
            // Left associative: the right child needs strictly higher binding.
            format!(
                "{} {} {}",
                print_expr(a, prec),
                op.symbol(),
                print_expr(b, prec + 1)
            )
        }
        Expr::Cmp(op, a, b) => format!(
            "{} {} {}",
            print_expr(a, 1),
            op.symbol(),
            print_expr(b, 1)
        ),
        Expr::Case {
            cond,
            on_true,
            on_false,
        } => format!(
            "case ({}) {{True => {}; False => {};}}",
            print_expr(cond, 0),
            print_expr(on_true, 0),
            print_expr(on_false, 0)
        ),
        Expr::Max(a, b) => format!("max({}, {})", print_expr(a, 0), print_expr(b, 0)),
        Expr::Pair(k, v) => format!("Pair({}, {})", print_expr(k, 0), print_expr(v, 0)),
    };
    if prec < min_prec {
        format!("({body})")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::builtin;
    use crate::dsl::parser::{parse_grammar, parse_view};

    #[test]
    fn view_round_trips() {
        let src = builtin::degradation_view_source();
        let v = parse_view(&src).unwrap();
        let printed = pretty_view(&v);
        assert_eq!(parse_view(&printed).unwrap(), v);
    }

    #[test]
    fn grammar_round_trips() {
        let src = builtin::degradation_grammar_source(200);
        let g = parse_grammar(&src).unwrap();
        let printed = pretty_grammar(&g);
        assert_eq!(parse_grammar(&printed).unwrap(), g);
    }

    #[test]
    fn parenthesizes_only_when_needed() {
        let g = parse_grammar("Rat r = 0; S ::= q { r = (r + 1) * 2 - 3; } S").unwrap();
        let printed = pretty_grammar(&g);
        assert!(printed.contains("(r + 1) * 2 - 3"));
        let re = parse_grammar(&printed).unwrap();
        assert_eq!(re, g);
    }

    #[test]
    fn nested_division_round_trips() {
        let g = parse_grammar("Rat r = 0; S ::= q { r = 100 * r / (r + 1); } S").unwrap();
        let printed = pretty_grammar(&g);
        assert_eq!(parse_grammar(&printed).unwrap(), g);
    }
}
