//! Canonical text form for core expressions, with a parser that round-trips
//! the printer's output. Used for debugging and golden tests.
//!
//! The notation mirrors the core constructors directly:
//! `let(e1; x.e2)`, `share(x; a,b.e)`, `listMatch(x; e1; h,t.e2)`,
//! `pairMatch(x; a,b.e)`, `cond(x; e1; e2)`, `app{f}(x)`, `binop{+}(x; y)`,
//! `unop{not}(x)`, `pair(x; y)`, `cons(h; t)`, `nil`, `tick{3/2}`, `lit{42}`.

use num_bigint::BigInt;

use crate::ast::{BinOp, Expr, ExprKind, Lit, Span, UnOp};
use crate::rational::parse_rat;

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Lit(Lit::Int(n)) => format!("lit{{{n}}}"),
        ExprKind::Lit(Lit::Bool(b)) => format!("lit{{{b}}}"),
        ExprKind::Lit(Lit::Unit) => "lit{()}".to_string(),
        ExprKind::Var(x) => x.clone(),
        ExprKind::Binop(op, a, b) => format!("binop{{{}}}({a}; {b})", op.symbol()),
        ExprKind::Unop(op, a) => format!("unop{{{}}}({a})", op.symbol()),
        ExprKind::App(f, x) => format!("app{{{f}}}({x})"),
        ExprKind::Let(e1, x, e2) => {
            format!("let({}; {x}.{})", print_expr(e1), print_expr(e2))
        }
        ExprKind::Share(x, a, b, body) => {
            format!("share({x}; {a},{b}.{})", print_expr(body))
        }
        ExprKind::Tick(r) => format!("tick{{{r}}}"),
        ExprKind::Pair(a, b) => format!("pair({a}; {b})"),
        ExprKind::Nil => "nil".to_string(),
        ExprKind::Cons(h, t) => format!("cons({h}; {t})"),
        ExprKind::Cond(x, t, f) => {
            format!("cond({x}; {}; {})", print_expr(t), print_expr(f))
        }
        ExprKind::PairMatch(x, a, b, body) => {
            format!("pairMatch({x}; {a},{b}.{})", print_expr(body))
        }
        ExprKind::ListMatch(x, e1, h, t, e2) => format!(
            "listMatch({x}; {}; {h},{t}.{})",
            print_expr(e1),
            print_expr(e2)
        ),
    }
}

pub fn parse_expr(s: &str) -> Result<Expr, String> {
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(format!("trailing input at byte {}", p.pos));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), String> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected `{}` at byte {}", c as char, self.pos))
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'#' || c == b'%' || c == b'\'' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(format!("expected identifier at byte {start}"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).to_string())
    }

    fn braced(&mut self) -> Result<String, String> {
        self.expect(b'{')?;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != b'}' {
            self.pos += 1;
        }
        let body = String::from_utf8_lossy(&self.src[start..self.pos]).to_string();
        self.expect(b'}')?;
        Ok(body)
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let sp = Span::default();
        let head = self.ident()?;
        let mk = |kind| Ok(Expr::new(kind, sp));
        match head.as_str() {
            "nil" => mk(ExprKind::Nil),
            "lit" => {
                let body = self.braced()?;
                let lit = match body.as_str() {
                    "true" => Lit::Bool(true),
                    "false" => Lit::Bool(false),
                    "()" => Lit::Unit,
                    n => Lit::Int(
                        n.parse::<BigInt>()
                            .map_err(|_| format!("bad int literal `{n}`"))?,
                    ),
                };
                mk(ExprKind::Lit(lit))
            }
            "tick" => {
                let body = self.braced()?;
                let r = parse_rat(&body).ok_or_else(|| format!("bad rational `{body}`"))?;
                mk(ExprKind::Tick(r))
            }
            "binop" => {
                let sym = self.braced()?;
                let op = [
                    BinOp::Add,
                    BinOp::Sub,
                    BinOp::Mul,
                    BinOp::Eq,
                    BinOp::Lt,
                    BinOp::Or,
                    BinOp::And,
                    BinOp::Append,
                ]
                .into_iter()
                .find(|o| o.symbol() == sym)
                .ok_or_else(|| format!("unknown binop `{sym}`"))?;
                self.expect(b'(')?;
                let a = self.ident()?;
                self.expect(b';')?;
                let b = self.ident()?;
                self.expect(b')')?;
                mk(ExprKind::Binop(op, a, b))
            }
            "unop" => {
                let sym = self.braced()?;
                let op = [UnOp::Not, UnOp::Neg]
                    .into_iter()
                    .find(|o| o.symbol() == sym)
                    .ok_or_else(|| format!("unknown unop `{sym}`"))?;
                self.expect(b'(')?;
                let a = self.ident()?;
                self.expect(b')')?;
                mk(ExprKind::Unop(op, a))
            }
            "app" => {
                let f = self.braced()?;
                self.expect(b'(')?;
                let x = self.ident()?;
                self.expect(b')')?;
                mk(ExprKind::App(f, x))
            }
            "pair" | "cons" => {
                self.expect(b'(')?;
                let a = self.ident()?;
                self.expect(b';')?;
                let b = self.ident()?;
                self.expect(b')')?;
                if head == "pair" {
                    mk(ExprKind::Pair(a, b))
                } else {
                    mk(ExprKind::Cons(a, b))
                }
            }
            "let" => {
                self.expect(b'(')?;
                let e1 = self.expr()?;
                self.expect(b';')?;
                let x = self.ident()?;
                self.expect(b'.')?;
                let e2 = self.expr()?;
                self.expect(b')')?;
                mk(ExprKind::Let(Box::new(e1), x, Box::new(e2)))
            }
            "share" => {
                self.expect(b'(')?;
                let x = self.ident()?;
                self.expect(b';')?;
                let a = self.ident()?;
                self.expect(b',')?;
                let b = self.ident()?;
                self.expect(b'.')?;
                let body = self.expr()?;
                self.expect(b')')?;
                mk(ExprKind::Share(x, a, b, Box::new(body)))
            }
            "cond" => {
                self.expect(b'(')?;
                let x = self.ident()?;
                self.expect(b';')?;
                let t = self.expr()?;
                self.expect(b';')?;
                let f = self.expr()?;
                self.expect(b')')?;
                mk(ExprKind::Cond(x, Box::new(t), Box::new(f)))
            }
            "pairMatch" => {
                self.expect(b'(')?;
                let x = self.ident()?;
                self.expect(b';')?;
                let a = self.ident()?;
                self.expect(b',')?;
                let b = self.ident()?;
                self.expect(b'.')?;
                let body = self.expr()?;
                self.expect(b')')?;
                mk(ExprKind::PairMatch(x, a, b, Box::new(body)))
            }
            "listMatch" => {
                self.expect(b'(')?;
                let x = self.ident()?;
                self.expect(b';')?;
                let e1 = self.expr()?;
                self.expect(b';')?;
                let h = self.ident()?;
                self.expect(b',')?;
                let t = self.ident()?;
                self.expect(b'.')?;
                let e2 = self.expr()?;
                self.expect(b')')?;
                mk(ExprKind::ListMatch(x, Box::new(e1), h, t, Box::new(e2)))
            }
            // A bare identifier not followed by `{` or `(` is a variable.
            _ => {
                if matches!(self.peek(), Some(b'{') | Some(b'(')) {
                    Err(format!("unknown constructor `{head}`"))
                } else {
                    mk(ExprKind::Var(head))
                }
            }
        }
    }
}

/// Structural equality ignoring spans and node ids.
pub fn same_shape(a: &Expr, b: &Expr) -> bool {
    print_expr(a) == print_expr(b)
}
