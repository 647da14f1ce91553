//! Tokenizer for the surface syntax.
//!
//! Comments are `(* ... *)` (nesting allowed). Directive comments of the form
//! `(*# ... #*)` are collected separately rather than discarded.

use num_bigint::BigInt;

use crate::ast::Span;
use crate::frontend::diag::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Let,
    In,
    Match,
    With,
    If,
    Then,
    Else,
    Tick,
    Not,
    True,
    False,
    Ident(String),
    Int(BigInt),
    // punctuation and operators
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    Arrow,
    Equal,
    Less,
    Plus,
    Minus,
    Star,
    Slash,
    At,
    ColonColon,
    Comma,
    Semi,
    OrOr,
    AndAnd,
    Underscore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// A `(*# ... #*)` directive with its span.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDirective {
    pub text: String,
    pub span: Span,
}

pub struct LexOutput {
    pub tokens: Vec<Token>,
    pub directives: Vec<RawDirective>,
}

pub fn lex(src: &str) -> Result<LexOutput, Diagnostic> {
    let b = src.as_bytes();
    let mut i = 0usize;
    let mut tokens = Vec::new();
    let mut directives = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // comments and directives
        if c == b'(' && i + 1 < b.len() && b[i + 1] == b'*' {
            let start = i;
            if i + 2 < b.len() && b[i + 2] == b'#' {
                // directive comment
                let body_start = i + 3;
                let mut j = body_start;
                while j + 2 < b.len() && !(b[j] == b'#' && b[j + 1] == b'*' && b[j + 2] == b')') {
                    j += 1;
                }
                if j + 2 >= b.len() {
                    return Err(Diagnostic::error(
                        "unterminated directive comment",
                        Span::new(start as u32, b.len() as u32),
                    ));
                }
                directives.push(RawDirective {
                    text: src[body_start..j].trim().to_string(),
                    span: Span::new(start as u32, (j + 3) as u32),
                });
                i = j + 3;
                continue;
            }
            // ordinary comment, possibly nested
            let mut depth = 1;
            let mut j = i + 2;
            while j < b.len() && depth > 0 {
                if j + 1 < b.len() && b[j] == b'(' && b[j + 1] == b'*' {
                    depth += 1;
                    j += 2;
                } else if j + 1 < b.len() && b[j] == b'*' && b[j + 1] == b')' {
                    depth -= 1;
                    j += 2;
                } else {
                    j += 1;
                }
            }
            if depth > 0 {
                return Err(Diagnostic::error(
                    "unterminated comment",
                    Span::new(start as u32, b.len() as u32),
                ));
            }
            i = j;
            continue;
        }
        let start = i as u32;
        let mut push = |tok: Tok, end: usize| {
            tokens.push(Token {
                tok,
                span: Span::new(start, end as u32),
            });
        };
        match c {
            b'(' => {
                push(Tok::LParen, i + 1);
                i += 1;
            }
            b')' => {
                push(Tok::RParen, i + 1);
                i += 1;
            }
            b'[' => {
                push(Tok::LBracket, i + 1);
                i += 1;
            }
            b']' => {
                push(Tok::RBracket, i + 1);
                i += 1;
            }
            b'|' if i + 1 < b.len() && b[i + 1] == b'|' => {
                push(Tok::OrOr, i + 2);
                i += 2;
            }
            b'|' => {
                push(Tok::Bar, i + 1);
                i += 1;
            }
            b'&' if i + 1 < b.len() && b[i + 1] == b'&' => {
                push(Tok::AndAnd, i + 2);
                i += 2;
            }
            b'-' if i + 1 < b.len() && b[i + 1] == b'>' => {
                push(Tok::Arrow, i + 2);
                i += 2;
            }
            b'-' => {
                push(Tok::Minus, i + 1);
                i += 1;
            }
            b'=' => {
                push(Tok::Equal, i + 1);
                i += 1;
            }
            b'<' => {
                push(Tok::Less, i + 1);
                i += 1;
            }
            b'+' => {
                push(Tok::Plus, i + 1);
                i += 1;
            }
            b'*' => {
                push(Tok::Star, i + 1);
                i += 1;
            }
            b'/' => {
                push(Tok::Slash, i + 1);
                i += 1;
            }
            b'@' => {
                push(Tok::At, i + 1);
                i += 1;
            }
            b':' if i + 1 < b.len() && b[i + 1] == b':' => {
                push(Tok::ColonColon, i + 2);
                i += 2;
            }
            b',' => {
                push(Tok::Comma, i + 1);
                i += 1;
            }
            b';' => {
                push(Tok::Semi, i + 1);
                i += 1;
            }
            b'0'..=b'9' => {
                let mut j = i;
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                let n: BigInt = src[i..j].parse().unwrap();
                push(Tok::Int(n), j);
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < b.len()
                    && (b[j].is_ascii_alphanumeric() || b[j] == b'_' || b[j] == b'\'')
                {
                    j += 1;
                }
                let word = &src[i..j];
                let tok = match word {
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    "match" => Tok::Match,
                    "with" => Tok::With,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    "tick" => Tok::Tick,
                    "not" => Tok::Not,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "_" => Tok::Underscore,
                    w => Tok::Ident(w.to_string()),
                };
                push(tok, j);
                i = j;
            }
            other => {
                return Err(Diagnostic::error(
                    format!("unexpected character `{}`", other as char),
                    Span::new(start, start + 1),
                ));
            }
        }
    }
    Ok(LexOutput { tokens, directives })
}
