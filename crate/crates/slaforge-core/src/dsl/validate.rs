//! Regular-form validation of parsed productions.
//!
//! Accepted bodies are exactly `terminal`, `terminal action`,
//! `terminal Nonterminal` and `terminal action Nonterminal`: at most one
//! nonterminal, and it must be the very last symbol.

use std::fmt;

use super::ast::{ActionBlock, Production, RawProduction, RhsSymbol};

/// One offending production. `position` indexes into the production body
/// (0-based), counting action blocks as symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularViolation {
    pub production_index: usize,
    pub lhs: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NonterminalNotLast { nonterminal: String, position: usize },
    MultipleNonterminals { positions: Vec<usize> },
    MissingTerminal,
    ExtraTerminal { terminal: String, position: usize },
    MisplacedAction { position: usize },
}

impl fmt::Display for RegularViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "production {} (`{}`): ", self.production_index, self.lhs)?;
        match &self.kind {
            ViolationKind::NonterminalNotLast {
                nonterminal,
                position,
            } => write!(
                f,
                "nonterminal `{nonterminal}` at position {position} is not the last symbol"
            ),
            ViolationKind::MultipleNonterminals { positions } => {
                write!(f, "more than one nonterminal (positions {positions:?})")
            }
            ViolationKind::MissingTerminal => write!(f, "no terminal symbol"),
            ViolationKind::ExtraTerminal { terminal, position } => write!(
                f,
                "extra terminal `{terminal}` at position {position}; each production carries exactly one"
            ),
            ViolationKind::MisplacedAction { position } => write!(
                f,
                "action block at position {position} must directly follow the terminal"
            ),
        }
    }
}

/// Checks every production against the regular-form restriction and shapes
/// the conforming ones. All violations are collected, not just the first.
pub fn validate_regular(
    productions: &[RawProduction],
) -> Result<Vec<Production>, Vec<RegularViolation>> {
    let mut shaped = Vec::with_capacity(productions.len());
    let mut violations = Vec::new();

    for (index, prod) in productions.iter().enumerate() {
        match shape_production(prod) {
            Ok(p) => shaped.push(p),
            Err(kinds) => violations.extend(kinds.into_iter().map(|kind| RegularViolation {
                production_index: index,
                lhs: prod.lhs.clone(),
                kind,
            })),
        }
    }

    if violations.is_empty() {
        Ok(shaped)
    } else {
        Err(violations)
    }
}

fn shape_production(prod: &RawProduction) -> Result<Production, Vec<ViolationKind>> {
    let mut violations = Vec::new();
    let last = prod.rhs.len().saturating_sub(1);

    let nonterminals: Vec<(usize, &String)> = prod
        .rhs
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            RhsSymbol::Nonterminal(n) => Some((i, n)),
            _ => None,
        })
        .collect();
    if nonterminals.len() > 1 {
        violations.push(ViolationKind::MultipleNonterminals {
            positions: nonterminals.iter().map(|(i, _)| *i).collect(),
        });
    } else if let Some(&(pos, name)) = nonterminals.first() {
        if pos != last {
            violations.push(ViolationKind::NonterminalNotLast {
                nonterminal: name.clone(),
                position: pos,
            });
        }
    }

    let terminals: Vec<(usize, &String)> = prod
        .rhs
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            RhsSymbol::Terminal(t) => Some((i, t)),
            _ => None,
        })
        .collect();
    let mut terminal: Option<&String> = None;
    match terminals.as_slice() {
        [] => violations.push(ViolationKind::MissingTerminal),
        [(0, t)] => terminal = Some(t),
        [(pos, t)] => {
            // Single terminal but something precedes it (an action block).
            terminal = Some(t);
            violations.push(ViolationKind::MisplacedAction { position: pos - 1 });
        }
        [(0, t), rest @ ..] => {
            terminal = Some(t);
            for (pos, extra) in rest {
                violations.push(ViolationKind::ExtraTerminal {
                    terminal: (*extra).clone(),
                    position: *pos,
                });
            }
        }
        [(pos, t), ..] => {
            terminal = Some(t);
            violations.push(ViolationKind::MisplacedAction { position: pos - 1 });
        }
    }

    let actions: Vec<(usize, &ActionBlock)> = prod
        .rhs
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            RhsSymbol::Action(a) => Some((i, a)),
            _ => None,
        })
        .collect();
    if let Some(&(pos, _)) = actions.first() {
        if pos != 1 {
            violations.push(ViolationKind::MisplacedAction { position: pos });
        }
    }
    for &(pos, _) in actions.iter().skip(1) {
        violations.push(ViolationKind::MisplacedAction { position: pos });
    }

    if !violations.is_empty() {
        violations.dedup();
        return Err(violations);
    }

    let continuation = nonterminals.first().map(|(_, n)| (*n).clone());
    let action = actions.first().map(|(_, a)| (*a).clone());
    Ok(Production {
        lhs: prod.lhs.clone(),
        terminal: terminal.expect("terminal present when no violations").clone(),
        action,
        continuation,
    })
}
