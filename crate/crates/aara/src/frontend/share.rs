//! Automatic insertion of `share` nodes.
//!
//! Any variable used more than once along an execution path gets its uses
//! renamed apart and a chain of shares placed at the lowest expression that
//! dominates all of them. A variable used n times generates n-1 shares.
//! Fresh names follow the scheme `x#1, x#2, …` with one counter per base
//! name, so the result is deterministic.

use std::collections::HashMap;

use crate::ast::{Expr, ExprKind, Name, Program, use_count};

pub fn insert_shares(p: &Program) -> Program {
    let mut functions = Vec::new();
    for f in &p.functions {
        let mut fresh = Fresh::default();
        let mut body = fix(f.body.clone(), &mut fresh);
        if use_count(&f.param, &body) >= 2 {
            body = make_linear(&f.param, body, &mut fresh);
        }
        functions.push(crate::ast::FunDef {
            name: f.name.clone(),
            param: f.param.clone(),
            body,
            span: f.span,
        });
    }
    Program { functions }
}

#[derive(Default)]
struct Fresh {
    counters: HashMap<Name, u32>,
}

impl Fresh {
    /// Next name in x's family: `x#1`, `x#2`, … (the family of `x#2` is `x`).
    fn next(&mut self, name: &str) -> Name {
        let base = name.split('#').next().unwrap_or(name).to_string();
        let c = self.counters.entry(base.clone()).or_insert(0);
        *c += 1;
        format!("{base}#{c}")
    }
}

/// Bottom-up pass: children first, then linearize every variable bound here.
fn fix(e: Expr, fresh: &mut Fresh) -> Expr {
    let span = e.span;
    match e.kind {
        ExprKind::Let(e1, x, e2) => {
            let c1 = fix(*e1, fresh);
            let mut c2 = fix(*e2, fresh);
            if use_count(&x, &c2) >= 2 {
                c2 = make_linear(&x, c2, fresh);
            }
            Expr::new(ExprKind::Let(Box::new(c1), x, Box::new(c2)), span)
        }
        ExprKind::Share(x, a, b, body) => {
            let mut cb = fix(*body, fresh);
            for n in [&a, &b] {
                if use_count(n, &cb) >= 2 {
                    cb = make_linear(n, cb, fresh);
                }
            }
            Expr::new(ExprKind::Share(x, a, b, Box::new(cb)), span)
        }
        ExprKind::Cond(x, t, f) => Expr::new(
            ExprKind::Cond(x, Box::new(fix(*t, fresh)), Box::new(fix(*f, fresh))),
            span,
        ),
        ExprKind::PairMatch(x, a, b, body) => {
            let mut cb = fix(*body, fresh);
            for n in [&a, &b] {
                if use_count(n, &cb) >= 2 {
                    cb = make_linear(n, cb, fresh);
                }
            }
            Expr::new(ExprKind::PairMatch(x, a, b, Box::new(cb)), span)
        }
        ExprKind::ListMatch(x, e_nil, h, t, e_cons) => {
            let cn = fix(*e_nil, fresh);
            let mut cc = fix(*e_cons, fresh);
            for n in [&h, &t] {
                if use_count(n, &cc) >= 2 {
                    cc = make_linear(n, cc, fresh);
                }
            }
            Expr::new(
                ExprKind::ListMatch(x, Box::new(cn), h, t, Box::new(cc)),
                span,
            )
        }
        other => Expr::new(other, span),
    }
}

/// Ensures `x` is used at most once per path in `e`, inserting shares at the
/// lowest node that dominates multiple uses.
fn make_linear(x: &str, e: Expr, fresh: &mut Fresh) -> Expr {
    if use_count(x, &e) < 2 {
        return e;
    }
    let span = e.span;
    // Wraps `e` in a share of two fresh copies: the first use on each path
    // gets the first copy, every later use the second, recursively.
    let split = |e: Expr, fresh: &mut Fresh| -> Expr {
        let a = fresh.next(x);
        let b = fresh.next(x);
        let renamed = split_rename(&e, x, &a, &b);
        let renamed = make_linear(&a, renamed, fresh);
        let renamed = make_linear(&b, renamed, fresh);
        Expr::new(
            ExprKind::Share(x.to_string(), a, b, Box::new(renamed)),
            span,
        )
    };
    match e.kind {
        ExprKind::Let(e1, y, e2) => {
            let u1 = use_count(x, &e1);
            let u2 = if y == x { 0 } else { use_count(x, &e2) };
            if u1 == 0 {
                let c2 = make_linear(x, *e2, fresh);
                Expr::new(ExprKind::Let(e1, y, Box::new(c2)), span)
            } else if u2 == 0 {
                let c1 = make_linear(x, *e1, fresh);
                Expr::new(ExprKind::Let(Box::new(c1), y, e2), span)
            } else {
                split(Expr::new(ExprKind::Let(e1, y, e2), span), fresh)
            }
        }
        ExprKind::Cond(c, t, f) => {
            let ct = make_linear(x, *t, fresh);
            let cf = make_linear(x, *f, fresh);
            Expr::new(ExprKind::Cond(c, Box::new(ct), Box::new(cf)), span)
        }
        ExprKind::ListMatch(s, e_nil, h, t, e_cons) => {
            if s == x {
                split(
                    Expr::new(ExprKind::ListMatch(s, e_nil, h, t, e_cons), span),
                    fresh,
                )
            } else {
                let cn = make_linear(x, *e_nil, fresh);
                let cc = if h == x || t == x {
                    *e_cons
                } else {
                    make_linear(x, *e_cons, fresh)
                };
                Expr::new(
                    ExprKind::ListMatch(s, Box::new(cn), h, t, Box::new(cc)),
                    span,
                )
            }
        }
        ExprKind::PairMatch(s, a, b, body) => {
            if s == x {
                split(Expr::new(ExprKind::PairMatch(s, a, b, body), span), fresh)
            } else {
                let cb = if a == x || b == x {
                    *body
                } else {
                    make_linear(x, *body, fresh)
                };
                Expr::new(ExprKind::PairMatch(s, a, b, Box::new(cb)), span)
            }
        }
        ExprKind::Share(s, a, b, body) => {
            if s == x {
                split(Expr::new(ExprKind::Share(s, a, b, body), span), fresh)
            } else {
                let cb = if a == x || b == x {
                    *body
                } else {
                    make_linear(x, *body, fresh)
                };
                Expr::new(ExprKind::Share(s, a, b, Box::new(cb)), span)
            }
        }
        // Leaf forms with two operand occurrences, e.g. x + x.
        kind @ (ExprKind::Binop(..) | ExprKind::Pair(..) | ExprKind::Cons(..)) => {
            split(Expr::new(kind, span), fresh)
        }
        other => Expr::new(other, span),
    }
}

/// Renames the first-in-evaluation-order use of `x` on every path to `a` and
/// all remaining uses to `b`.
fn split_rename(e: &Expr, x: &str, a: &str, b: &str) -> Expr {
    // Rename the first use to `a`, tracking whether it happened; remaining
    // uses become `b`. Branch alternatives each get their own "first".
    fn go(e: &Expr, x: &str, a: &str, b: &str, taken: bool) -> (Expr, bool) {
        let span = e.span;
        let pick = |taken: bool| if taken { b } else { a };
        match &e.kind {
            ExprKind::Lit(_) | ExprKind::Nil | ExprKind::Tick(_) => (e.clone(), taken),
            ExprKind::Var(n) => {
                if n == x {
                    (
                        Expr::new(ExprKind::Var(pick(taken).to_string()), span),
                        true,
                    )
                } else {
                    (e.clone(), taken)
                }
            }
            ExprKind::Binop(op, n1, n2) => {
                let mut t = taken;
                let r1 = if n1 == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    n1.clone()
                };
                let r2 = if n2 == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    n2.clone()
                };
                (Expr::new(ExprKind::Binop(*op, r1, r2), span), t)
            }
            ExprKind::Pair(n1, n2) | ExprKind::Cons(n1, n2) => {
                let mut t = taken;
                let r1 = if n1 == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    n1.clone()
                };
                let r2 = if n2 == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    n2.clone()
                };
                let kind = if matches!(e.kind, ExprKind::Pair(..)) {
                    ExprKind::Pair(r1, r2)
                } else {
                    ExprKind::Cons(r1, r2)
                };
                (Expr::new(kind, span), t)
            }
            ExprKind::Unop(op, n) => {
                if n == x {
                    (
                        Expr::new(ExprKind::Unop(*op, pick(taken).to_string()), span),
                        true,
                    )
                } else {
                    (e.clone(), taken)
                }
            }
            ExprKind::App(f, n) => {
                if n == x {
                    (
                        Expr::new(ExprKind::App(f.clone(), pick(taken).to_string()), span),
                        true,
                    )
                } else {
                    (e.clone(), taken)
                }
            }
            ExprKind::Let(e1, y, e2) => {
                let (c1, t1) = go(e1, x, a, b, taken);
                let (c2, t2) = if y == x {
                    ((**e2).clone(), t1)
                } else {
                    go(e2, x, a, b, t1)
                };
                (
                    Expr::new(ExprKind::Let(Box::new(c1), y.clone(), Box::new(c2)), span),
                    t2,
                )
            }
            ExprKind::Share(s, sa, sb, body) => {
                let mut t = taken;
                let rs = if s == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    s.clone()
                };
                let (cb, t2) = if sa == x || sb == x {
                    ((**body).clone(), t)
                } else {
                    go(body, x, a, b, t)
                };
                (
                    Expr::new(
                        ExprKind::Share(rs, sa.clone(), sb.clone(), Box::new(cb)),
                        span,
                    ),
                    t2,
                )
            }
            ExprKind::Cond(c, et, ef) => {
                // alternatives: each side renames its own first use
                let (ct, tt) = go(et, x, a, b, taken);
                let (cf, tf) = go(ef, x, a, b, taken);
                (
                    Expr::new(
                        ExprKind::Cond(c.clone(), Box::new(ct), Box::new(cf)),
                        span,
                    ),
                    tt || tf,
                )
            }
            ExprKind::PairMatch(s, pa, pb, body) => {
                let mut t = taken;
                let rs = if s == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    s.clone()
                };
                let (cb, t2) = if pa == x || pb == x {
                    ((**body).clone(), t)
                } else {
                    go(body, x, a, b, t)
                };
                (
                    Expr::new(
                        ExprKind::PairMatch(rs, pa.clone(), pb.clone(), Box::new(cb)),
                        span,
                    ),
                    t2,
                )
            }
            ExprKind::ListMatch(s, e_nil, h, tl, e_cons) => {
                let mut t = taken;
                let rs = if s == x {
                    let r = pick(t).to_string();
                    t = true;
                    r
                } else {
                    s.clone()
                };
                let (cn, tn) = go(e_nil, x, a, b, t);
                let (cc, tc) = if h == x || tl == x {
                    ((**e_cons).clone(), t)
                } else {
                    go(e_cons, x, a, b, t)
                };
                (
                    Expr::new(
                        ExprKind::ListMatch(
                            rs,
                            Box::new(cn),
                            h.clone(),
                            tl.clone(),
                            Box::new(cc),
                        ),
                        span,
                    ),
                    tn || tc,
                )
            }
        }
    }
    go(e, x, a, b, false).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{check_linear, free_vars, BinOp, Span};
    use crate::core_text::print_expr;

    fn ex(kind: ExprKind) -> Expr {
        Expr::new(kind, Span::default())
    }

    #[test]
    fn double_use_becomes_share() {
        let e = ex(ExprKind::Binop(BinOp::Add, "x".into(), "x".into()));
        let mut fresh = Fresh::default();
        let out = make_linear("x", e, &mut fresh);
        assert_eq!(print_expr(&out), "share(x; x#1,x#2.binop{+}(x#1; x#2))");
        assert!(check_linear(&out).is_ok());
    }

    #[test]
    fn triple_use_nests_two_shares() {
        // let a = x in let b = x in x  — three sequential uses
        let e = ex(ExprKind::Let(
            Box::new(ex(ExprKind::Var("x".into()))),
            "a".into(),
            Box::new(ex(ExprKind::Let(
                Box::new(ex(ExprKind::Var("x".into()))),
                "b".into(),
                Box::new(ex(ExprKind::Var("x".into()))),
            ))),
        ));
        let mut fresh = Fresh::default();
        let out = make_linear("x", e, &mut fresh);
        assert!(check_linear(&out).is_ok());
        let mut shares = 0;
        out.visit(&mut |n| {
            if matches!(n.kind, ExprKind::Share(..)) {
                shares += 1;
            }
        });
        assert_eq!(shares, 2);
    }

    #[test]
    fn free_vars_preserved() {
        let e = ex(ExprKind::Let(
            Box::new(ex(ExprKind::Binop(BinOp::Add, "x".into(), "y".into()))),
            "a".into(),
            Box::new(ex(ExprKind::Binop(BinOp::Mul, "a".into(), "x".into()))),
        ));
        let before = free_vars(&e);
        let mut fresh = Fresh::default();
        let out = make_linear("x", e, &mut fresh);
        assert_eq!(free_vars(&out), before);
        assert!(check_linear(&out).is_ok());
    }

    #[test]
    fn branch_uses_do_not_share() {
        // if b then x else x — one use per branch, no share needed
        let e = ex(ExprKind::Cond(
            "b".into(),
            Box::new(ex(ExprKind::Var("x".into()))),
            Box::new(ex(ExprKind::Var("x".into()))),
        ));
        let mut fresh = Fresh::default();
        let out = make_linear("x", e.clone(), &mut fresh);
        assert_eq!(out, e);
    }
}
