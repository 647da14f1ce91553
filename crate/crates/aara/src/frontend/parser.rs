//! Recursive-descent parser for the surface syntax.
//!
//! Precedence, tightest first: application; unary `-`/`not`; `*`; `+`, `-`;
//! `::`, `@` (right associative); `=`, `<`; `&&`; `||`; `;` (right
//! associative). `let … in`, `if`, `match`, and `tick` extend as far right as
//! possible.

use num_traits::Zero;

use crate::ast::{BinOp, Span, UnOp};
use crate::frontend::diag::Diagnostic;
use crate::frontend::lexer::{lex, RawDirective, Tok, Token};
use crate::frontend::surface::{AssumeSpec, SExpr, SFunDef, SKind, SurfaceProgram};
use crate::rational::{parse_rat, Rat};

pub fn parse(source: &str) -> Result<SurfaceProgram, Vec<Diagnostic>> {
    let out = lex(source).map_err(|d| vec![d])?;
    let assumptions = out
        .directives
        .iter()
        .map(parse_directive)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|d| vec![d])?;
    let mut p = Parser {
        toks: out.tokens,
        pos: 0,
    };
    let mut functions: Vec<SFunDef> = Vec::new();
    while !p.at_end() {
        let f = p.fundef().map_err(|d| vec![d])?;
        if functions.iter().any(|g| g.name == f.name) {
            return Err(vec![Diagnostic::error(
                format!("duplicate function name `{}`", f.name),
                f.span,
            )]);
        }
        functions.push(f);
    }
    Ok(SurfaceProgram {
        functions,
        assumptions,
    })
}

fn parse_directive(raw: &RawDirective) -> Result<AssumeSpec, Diagnostic> {
    let words: Vec<&str> = raw.text.split_whitespace().collect();
    match words.as_slice() {
        ["assume", name, "linear", amount] => {
            let cost: Rat = parse_rat(amount).ok_or_else(|| {
                Diagnostic::error(format!("bad rational `{amount}` in directive"), raw.span)
            })?;
            if cost < Rat::zero() {
                return Err(Diagnostic::error(
                    "assumed per-element cost must be nonnegative",
                    raw.span,
                ));
            }
            Ok(AssumeSpec {
                function: name.to_string(),
                linear_cost: cost,
                span: raw.span,
            })
        }
        _ => Err(Diagnostic::error(
            format!(
                "unrecognized directive `{}` (expected `assume <fn> linear <cost>`)",
                raw.text
            ),
            raw.span,
        )),
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.pos + off).map(|t| &t.tok)
    }

    fn span_here(&self) -> Span {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.span)
            .unwrap_or_default()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok, what: &str) -> Result<Span, Diagnostic> {
        match self.peek() {
            Some(t) if t == tok => Ok(self.bump().unwrap().span),
            _ => Err(Diagnostic::error(
                format!("expected {what}"),
                self.span_here(),
            )),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().unwrap();
                if let Tok::Ident(s) = t.tok {
                    Ok((s, t.span))
                } else {
                    unreachable!()
                }
            }
            _ => Err(Diagnostic::error(
                format!("expected {what}"),
                self.span_here(),
            )),
        }
    }

    /// A binder: an identifier or `_`.
    fn binder(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        if matches!(self.peek(), Some(Tok::Underscore)) {
            let t = self.bump().unwrap();
            return Ok(("_".to_string(), t.span));
        }
        self.ident(what)
    }

    fn fundef(&mut self) -> Result<SFunDef, Diagnostic> {
        let start = self.eat(&Tok::Let, "`let` to start a function definition")?;
        let (name, _) = self.ident("function name")?;
        let mut params = Vec::new();
        while matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Underscore)) {
            params.push(self.binder("parameter")?.0);
        }
        if params.is_empty() {
            return Err(Diagnostic::error(
                format!("function `{name}` needs at least one parameter"),
                start,
            ));
        }
        self.eat(&Tok::Equal, "`=` after the parameter list")?;
        let body = self.expr()?;
        let span = start.join(body.span);
        Ok(SFunDef {
            name,
            params,
            body,
            span,
        })
    }

    /// True when the upcoming tokens start a new top-level definition rather
    /// than a `let … in` expression.
    fn at_toplevel_let(&self) -> bool {
        matches!(self.peek(), Some(Tok::Let))
            && matches!(
                self.peek_at(1),
                Some(Tok::Ident(_)) | Some(Tok::Underscore)
            )
            && !matches!(self.peek_at(2), Some(Tok::Equal))
    }

    fn expr(&mut self) -> Result<SExpr, Diagnostic> {
        let e1 = self.control()?;
        if matches!(self.peek(), Some(Tok::Semi)) {
            self.bump();
            let e2 = self.expr()?;
            let span = e1.span.join(e2.span);
            return Ok(SExpr::new(SKind::Seq(Box::new(e1), Box::new(e2)), span));
        }
        Ok(e1)
    }

    /// `let … in`, `if`, `match`, or an operator expression.
    fn control(&mut self) -> Result<SExpr, Diagnostic> {
        match self.peek() {
            Some(Tok::Let) if !self.at_toplevel_let() => {
                let start = self.bump().unwrap().span;
                let (x, _) = self.binder("binder after `let`")?;
                self.eat(&Tok::Equal, "`=` in let binding")?;
                let e1 = self.expr()?;
                self.eat(&Tok::In, "`in` after let binding")?;
                let e2 = self.expr()?;
                let span = start.join(e2.span);
                Ok(SExpr::new(
                    SKind::Let(x, Box::new(e1), Box::new(e2)),
                    span,
                ))
            }
            Some(Tok::If) => {
                let start = self.bump().unwrap().span;
                let c = self.or_expr()?;
                self.eat(&Tok::Then, "`then`")?;
                let t = self.expr()?;
                self.eat(&Tok::Else, "`else`")?;
                let f = self.expr()?;
                let span = start.join(f.span);
                Ok(SExpr::new(
                    SKind::If(Box::new(c), Box::new(t), Box::new(f)),
                    span,
                ))
            }
            Some(Tok::Match) => self.match_expr(),
            _ => self.or_expr(),
        }
    }

    fn match_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let start = self.eat(&Tok::Match, "`match`")?;
        let scrutinee = self.or_expr()?;
        self.eat(&Tok::With, "`with`")?;
        #[derive(Debug)]
        enum Pat {
            Nil,
            Cons(String, String),
            Pair(String, String),
            Bool(bool),
        }
        let mut arms: Vec<(Pat, SExpr)> = Vec::new();
        while matches!(self.peek(), Some(Tok::Bar)) {
            self.bump();
            let pat = match self.peek() {
                Some(Tok::LBracket) => {
                    self.bump();
                    self.eat(&Tok::RBracket, "`]` to close the empty-list pattern")?;
                    Pat::Nil
                }
                Some(Tok::LParen) => {
                    self.bump();
                    let (a, _) = self.binder("pattern binder")?;
                    self.eat(&Tok::Comma, "`,` in pair pattern")?;
                    let (b, _) = self.binder("pattern binder")?;
                    self.eat(&Tok::RParen, "`)` to close pair pattern")?;
                    Pat::Pair(a, b)
                }
                Some(Tok::True) => {
                    self.bump();
                    Pat::Bool(true)
                }
                Some(Tok::False) => {
                    self.bump();
                    Pat::Bool(false)
                }
                Some(Tok::Ident(_)) | Some(Tok::Underscore) => {
                    let (h, _) = self.binder("pattern binder")?;
                    self.eat(&Tok::ColonColon, "`::` in cons pattern")?;
                    let (t, _) = self.binder("pattern binder")?;
                    Pat::Cons(h, t)
                }
                Some(Tok::Int(_)) => {
                    return Err(Diagnostic::error(
                        "integer patterns are not supported",
                        self.span_here(),
                    ))
                }
                _ => {
                    return Err(Diagnostic::error(
                        "expected a pattern after `|`",
                        self.span_here(),
                    ))
                }
            };
            self.eat(&Tok::Arrow, "`->` after the pattern")?;
            let body = self.expr()?;
            arms.push((pat, body));
        }
        let end = arms
            .last()
            .map(|(_, b)| b.span)
            .ok_or_else(|| Diagnostic::error("match needs at least one arm", start))?;
        let span = start.join(end);
        let s = Box::new(scrutinee);
        match arms.len() {
            1 => match arms.pop_two_or_one() {
                (Some((Pat::Pair(a, b), body)), None) => Ok(SExpr::new(
                    SKind::MatchPair {
                        scrutinee: s,
                        left: a,
                        right: b,
                        body: Box::new(body),
                    },
                    span,
                )),
                _ => Err(Diagnostic::error(
                    "single-arm match must use a pair pattern",
                    span,
                )),
            },
            2 => match arms.pop_two_or_one() {
                (Some((p1, b1)), Some((p2, b2))) => match (p1, p2) {
                    (Pat::Nil, Pat::Cons(h, t)) => Ok(SExpr::new(
                        SKind::MatchList {
                            scrutinee: s,
                            nil_body: Box::new(b1),
                            head: h,
                            tail: t,
                            cons_body: Box::new(b2),
                        },
                        span,
                    )),
                    (Pat::Cons(h, t), Pat::Nil) => Ok(SExpr::new(
                        SKind::MatchList {
                            scrutinee: s,
                            nil_body: Box::new(b2),
                            head: h,
                            tail: t,
                            cons_body: Box::new(b1),
                        },
                        span,
                    )),
                    (Pat::Bool(true), Pat::Bool(false)) => Ok(SExpr::new(
                        SKind::If(s, Box::new(b1), Box::new(b2)),
                        span,
                    )),
                    (Pat::Bool(false), Pat::Bool(true)) => Ok(SExpr::new(
                        SKind::If(s, Box::new(b2), Box::new(b1)),
                        span,
                    )),
                    _ => Err(Diagnostic::error(
                        "match arms must cover `[]` and `_::_`, or `true` and `false`",
                        span,
                    )),
                },
                _ => unreachable!(),
            },
            n => Err(Diagnostic::error(
                format!("unsupported number of match arms: {n}"),
                span,
            )),
        }
    }

    fn or_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let mut e = self.and_expr()?;
        while matches!(self.peek(), Some(Tok::OrOr)) {
            self.bump();
            let rhs = self.and_expr()?;
            let span = e.span.join(rhs.span);
            e = SExpr::new(SKind::Binop(BinOp::Or, Box::new(e), Box::new(rhs)), span);
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let mut e = self.cmp_expr()?;
        while matches!(self.peek(), Some(Tok::AndAnd)) {
            self.bump();
            let rhs = self.cmp_expr()?;
            let span = e.span.join(rhs.span);
            e = SExpr::new(SKind::Binop(BinOp::And, Box::new(e), Box::new(rhs)), span);
        }
        Ok(e)
    }

    fn cmp_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let e = self.cons_expr()?;
        let op = match self.peek() {
            Some(Tok::Equal) => Some(BinOp::Eq),
            Some(Tok::Less) => Some(BinOp::Lt),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.cons_expr()?;
            let span = e.span.join(rhs.span);
            return Ok(SExpr::new(SKind::Binop(op, Box::new(e), Box::new(rhs)), span));
        }
        Ok(e)
    }

    /// `::` and `@`, right associative.
    fn cons_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let e = self.add_expr()?;
        match self.peek() {
            Some(Tok::ColonColon) => {
                self.bump();
                let rhs = self.cons_expr()?;
                let span = e.span.join(rhs.span);
                Ok(SExpr::new(SKind::Cons(Box::new(e), Box::new(rhs)), span))
            }
            Some(Tok::At) => {
                self.bump();
                let rhs = self.cons_expr()?;
                let span = e.span.join(rhs.span);
                Ok(SExpr::new(
                    SKind::Binop(BinOp::Append, Box::new(e), Box::new(rhs)),
                    span,
                ))
            }
            _ => Ok(e),
        }
    }

    fn add_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let mut e = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.mul_expr()?;
            let span = e.span.join(rhs.span);
            e = SExpr::new(SKind::Binop(op, Box::new(e), Box::new(rhs)), span);
        }
        Ok(e)
    }

    fn mul_expr(&mut self) -> Result<SExpr, Diagnostic> {
        let mut e = self.app_expr()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.bump();
            let rhs = self.app_expr()?;
            let span = e.span.join(rhs.span);
            e = SExpr::new(SKind::Binop(BinOp::Mul, Box::new(e), Box::new(rhs)), span);
        }
        Ok(e)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_))
                | Some(Tok::Int(_))
                | Some(Tok::True)
                | Some(Tok::False)
                | Some(Tok::LParen)
                | Some(Tok::LBracket)
        )
    }

    fn app_expr(&mut self) -> Result<SExpr, Diagnostic> {
        match self.peek() {
            Some(Tok::Tick) => {
                let start = self.bump().unwrap().span;
                let neg = if matches!(self.peek(), Some(Tok::Minus)) {
                    self.bump();
                    true
                } else {
                    false
                };
                let (num, mut span) = match self.bump() {
                    Some(Token {
                        tok: Tok::Int(n),
                        span,
                    }) => (n, span),
                    _ => {
                        return Err(Diagnostic::error(
                            "expected a rational amount after `tick`",
                            start,
                        ))
                    }
                };
                let mut r = Rat::from_integer(num);
                if matches!(self.peek(), Some(Tok::Slash)) {
                    self.bump();
                    match self.bump() {
                        Some(Token {
                            tok: Tok::Int(d),
                            span: dspan,
                        }) => {
                            if d.is_zero() {
                                return Err(Diagnostic::error("zero denominator", dspan));
                            }
                            span = span.join(dspan);
                            r /= Rat::from_integer(d);
                        }
                        _ => {
                            return Err(Diagnostic::error(
                                "expected a denominator after `/`",
                                self.span_here(),
                            ))
                        }
                    }
                }
                if neg {
                    r = -r;
                }
                Ok(SExpr::new(SKind::Tick(r), start.join(span)))
            }
            Some(Tok::Not) => {
                let start = self.bump().unwrap().span;
                let e = self.app_expr()?;
                let span = start.join(e.span);
                Ok(SExpr::new(SKind::Unop(UnOp::Not, Box::new(e)), span))
            }
            Some(Tok::Minus) => {
                let start = self.bump().unwrap().span;
                if let Some(Tok::Int(_)) = self.peek() {
                    if let Some(Token {
                        tok: Tok::Int(n),
                        span,
                    }) = self.bump()
                    {
                        return Ok(SExpr::new(SKind::Int(-n), start.join(span)));
                    }
                    unreachable!()
                }
                let e = self.atom()?;
                let span = start.join(e.span);
                Ok(SExpr::new(SKind::Unop(UnOp::Neg, Box::new(e)), span))
            }
            _ => {
                let head = self.atom()?;
                let mut args = Vec::new();
                while self.starts_atom() {
                    args.push(self.atom()?);
                }
                if args.is_empty() {
                    return Ok(head);
                }
                match head.kind {
                    SKind::Var(name) => {
                        let span = args
                            .iter()
                            .fold(head.span, |acc, a| acc.join(a.span));
                        Ok(SExpr::new(SKind::App(name, args), span))
                    }
                    _ => Err(Diagnostic::error(
                        "only named functions can be applied",
                        head.span,
                    )),
                }
            }
        }
    }

    fn atom(&mut self) -> Result<SExpr, Diagnostic> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().unwrap();
                if let Tok::Ident(name) = t.tok {
                    Ok(SExpr::new(SKind::Var(name), t.span))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::Int(_)) => {
                let t = self.bump().unwrap();
                if let Tok::Int(n) = t.tok {
                    Ok(SExpr::new(SKind::Int(n), t.span))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::True) => {
                let t = self.bump().unwrap();
                Ok(SExpr::new(SKind::Bool(true), t.span))
            }
            Some(Tok::False) => {
                let t = self.bump().unwrap();
                Ok(SExpr::new(SKind::Bool(false), t.span))
            }
            Some(Tok::LBracket) => {
                let start = self.bump().unwrap().span;
                if matches!(self.peek(), Some(Tok::RBracket)) {
                    let end = self.bump().unwrap().span;
                    return Ok(SExpr::new(SKind::Nil, start.join(end)));
                }
                let mut items = vec![self.control()?];
                while matches!(self.peek(), Some(Tok::Semi)) {
                    self.bump();
                    items.push(self.control()?);
                }
                let end = self.eat(&Tok::RBracket, "`]` to close the list literal")?;
                Ok(SExpr::new(SKind::ListLit(items), start.join(end)))
            }
            Some(Tok::LParen) => {
                let start = self.bump().unwrap().span;
                if matches!(self.peek(), Some(Tok::RParen)) {
                    let end = self.bump().unwrap().span;
                    return Ok(SExpr::new(SKind::Unit, start.join(end)));
                }
                let mut items = vec![self.expr()?];
                while matches!(self.peek(), Some(Tok::Comma)) {
                    self.bump();
                    items.push(self.expr()?);
                }
                let end = self.eat(&Tok::RParen, "`)`")?;
                let span = start.join(end);
                if items.len() == 1 {
                    let mut e = items.pop().unwrap();
                    e.span = span;
                    Ok(e)
                } else {
                    Ok(SExpr::new(SKind::Tuple(items), span))
                }
            }
            _ => Err(Diagnostic::error("expected an expression", self.span_here())),
        }
    }
}

trait PopTwo<T> {
    fn pop_two_or_one(&mut self) -> (Option<T>, Option<T>);
}

impl<T> PopTwo<T> for Vec<T> {
    fn pop_two_or_one(&mut self) -> (Option<T>, Option<T>) {
        let second = if self.len() >= 2 { self.pop() } else { None };
        let first = self.pop();
        match second {
            Some(s) => (first, Some(s)),
            None => (first, None),
        }
    }
}
