//! Tokenizer for the view/grammar DSL. `#` starts a line comment.

use std::fmt;

use num_bigint::BigInt;

use super::DslError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(BigInt),
    Str(String),

    // keywords
    View,
    Case,
    True,
    False,
    Max,
    Pair,
    TyInt,
    TyRat,
    TyTime,
    TyString,

    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Produces, // ::=
    Assign,   // =
    FatArrow, // =>
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,

    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Int(n) => write!(f, "integer `{n}`"),
            TokenKind::Str(s) => write!(f, "string \"{s}\""),
            TokenKind::View => f.write_str("`view`"),
            TokenKind::Case => f.write_str("`case`"),
            TokenKind::True => f.write_str("`True`"),
            TokenKind::False => f.write_str("`False`"),
            TokenKind::Max => f.write_str("`max`"),
            TokenKind::Pair => f.write_str("`Pair`"),
            TokenKind::TyInt => f.write_str("`Int`"),
            TokenKind::TyRat => f.write_str("`Rat`"),
            TokenKind::TyTime => f.write_str("`Time`"),
            TokenKind::TyString => f.write_str("`String`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Produces => f.write_str("`::=`"),
            TokenKind::Assign => f.write_str("`=`"),
            TokenKind::FatArrow => f.write_str("`=>`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::EqEq => f.write_str("`==`"),
            TokenKind::Ne => f.write_str("`!=`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, DslError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(ch) = c {
                if ch == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            c
        }};
    }

    loop {
        let (tok_line, tok_col) = (line, col);
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => break,
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        Some('"') => break,
                        Some('\\') => match bump!() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            other => {
                                return Err(DslError::syntax(
                                    line,
                                    col,
                                    format!("unsupported escape {other:?} in string literal"),
                                ))
                            }
                        },
                        Some('\n') | None => {
                            return Err(DslError::syntax(
                                tok_line,
                                tok_col,
                                "unterminated string literal",
                            ))
                        }
                        Some(ch) => s.push(ch),
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Str(s),
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                let value: BigInt = digits.parse().expect("digits parse as BigInt");
                tokens.push(Token {
                    kind: TokenKind::Int(value),
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        word.push(ch);
                        bump!();
                    } else {
                        break;
                    }
                }
                let kind = match word.as_str() {
                    "view" => TokenKind::View,
                    "case" => TokenKind::Case,
                    "True" => TokenKind::True,
                    "False" => TokenKind::False,
                    "max" => TokenKind::Max,
                    "Pair" => TokenKind::Pair,
                    "Int" => TokenKind::TyInt,
                    "Rat" => TokenKind::TyRat,
                    "Time" => TokenKind::TyTime,
                    "String" => TokenKind::TyString,
                    _ => TokenKind::Ident(word),
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            _ => {
                bump!();
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    ';' => TokenKind::Semi,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    '<' => {
                        if chars.peek() == Some(&'=') {
                            bump!();
                            TokenKind::Le
                        } else {
                            TokenKind::Lt
                        }
                    }
                    '>' => {
                        if chars.peek() == Some(&'=') {
                            bump!();
                            TokenKind::Ge
                        } else {
                            TokenKind::Gt
                        }
                    }
                    '=' => {
                        if chars.peek() == Some(&'=') {
                            bump!();
                            TokenKind::EqEq
                        } else if chars.peek() == Some(&'>') {
                            bump!();
                            TokenKind::FatArrow
                        } else {
                            TokenKind::Assign
                        }
                    }
                    '!' => {
                        if chars.peek() == Some(&'=') {
                            bump!();
                            TokenKind::Ne
                        } else {
                            return Err(DslError::syntax(tok_line, tok_col, "stray `!`"));
                        }
                    }
                    ':' => {
                        if chars.peek() == Some(&':') {
                            bump!();
                            if chars.peek() == Some(&'=') {
                                bump!();
                                TokenKind::Produces
                            } else {
                                return Err(DslError::syntax(
                                    tok_line,
                                    tok_col,
                                    "expected `::=`",
                                ));
                            }
                        } else {
                            return Err(DslError::syntax(tok_line, tok_col, "stray `:`"));
                        }
                    }
                    other => {
                        return Err(DslError::syntax(
                            tok_line,
                            tok_col,
                            format!("unexpected character `{other}`"),
                        ))
                    }
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
        }
    }

    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        col,
    });
    Ok(tokens)
}
