//! Desugaring and let-normalization.
//!
//! Multi-parameter functions become a single pair parameter destructured by
//! leading pair matches; multi-argument calls build the matching right-nested
//! tuple. Every compound operand is hoisted into a fresh `let`, preserving
//! left-to-right call-by-value order; `e1; e2` becomes a wildcard let. After
//! normalization all binders are renamed apart, so later passes never see
//! shadowing. Generated names contain `#`, which source identifiers cannot.

use std::collections::{HashMap, HashSet};

use crate::ast::{Expr, ExprKind, FunDef, Lit, Name, Program, Span};
use crate::frontend::surface::{SExpr, SFunDef, SKind, SurfaceProgram};

pub fn normalize_program(surface: &SurfaceProgram) -> Program {
    let mut norm = Norm { next: 0 };
    let mut functions = Vec::new();
    for f in &surface.functions {
        functions.push(norm.fundef(f));
    }
    let mut program = Program { functions };
    uniquify(&mut program);
    program
}

struct Norm {
    next: u32,
}

impl Norm {
    fn fresh_tmp(&mut self) -> Name {
        let n = self.next;
        self.next += 1;
        format!("#t{n}")
    }

    fn fresh_wild(&mut self) -> Name {
        let n = self.next;
        self.next += 1;
        format!("#w{n}")
    }

    fn binder(&mut self, name: &str) -> Name {
        if name == "_" {
            self.fresh_wild()
        } else {
            name.to_string()
        }
    }

    fn fundef(&mut self, f: &SFunDef) -> FunDef {
        let body = self.to_core(&f.body);
        let (param, body) = if f.params.len() == 1 {
            (self.binder(&f.params[0]), body)
        } else {
            // let f a b c = e  ~~>  one pair parameter (a,(b,c)) destructured
            // by nested pair matches.
            let top = format!("#p_{}", f.name);
            let mut current = top.clone();
            let mut matches: Vec<(Name, Name, Name)> = Vec::new();
            for i in 0..f.params.len() - 1 {
                let left = self.binder(&f.params[i]);
                let right = if i == f.params.len() - 2 {
                    self.binder(&f.params[i + 1])
                } else {
                    let t = self.fresh_tmp();
                    t
                };
                matches.push((current.clone(), left, right.clone()));
                current = right;
            }
            let mut acc = body;
            for (scrut, l, r) in matches.into_iter().rev() {
                let span = acc.span;
                acc = Expr::new(ExprKind::PairMatch(scrut, l, r, Box::new(acc)), span);
            }
            (top, acc)
        };
        FunDef {
            name: f.name.clone(),
            param,
            body,
            span: f.span,
        }
    }

    /// Normalizes `e` to a variable, emitting a binding when it is compound.
    fn atomize(&mut self, e: &SExpr, binds: &mut Vec<(Name, Expr)>) -> Name {
        match &e.kind {
            SKind::Var(x) => x.clone(),
            _ => {
                let ce = self.to_core(e);
                let t = self.fresh_tmp();
                binds.push((t.clone(), ce));
                t
            }
        }
    }

    fn wrap(binds: Vec<(Name, Expr)>, core: Expr) -> Expr {
        binds.into_iter().rev().fold(core, |acc, (name, rhs)| {
            let span = rhs.span.join(acc.span);
            Expr::new(ExprKind::Let(Box::new(rhs), name, Box::new(acc)), span)
        })
    }

    /// Builds a right-nested tuple from already-atomized component names.
    fn build_tuple(
        &mut self,
        names: Vec<Name>,
        binds: &mut Vec<(Name, Expr)>,
        span: Span,
    ) -> Name {
        let mut iter = names.into_iter().rev();
        let mut acc = iter.next().expect("tuple needs at least one component");
        for name in iter {
            let t = self.fresh_tmp();
            binds.push((
                t.clone(),
                Expr::new(ExprKind::Pair(name, acc.clone()), span),
            ));
            acc = t;
        }
        acc
    }

    fn to_core(&mut self, e: &SExpr) -> Expr {
        let span = e.span;
        match &e.kind {
            SKind::Int(n) => Expr::new(ExprKind::Lit(Lit::Int(n.clone())), span),
            SKind::Bool(b) => Expr::new(ExprKind::Lit(Lit::Bool(*b)), span),
            SKind::Unit => Expr::new(ExprKind::Lit(Lit::Unit), span),
            SKind::Var(x) => Expr::new(ExprKind::Var(x.clone()), span),
            SKind::Tick(r) => Expr::new(ExprKind::Tick(r.clone()), span),
            SKind::Nil => Expr::new(ExprKind::Nil, span),
            SKind::Binop(op, a, b) => {
                let mut binds = Vec::new();
                let na = self.atomize(a, &mut binds);
                let nb = self.atomize(b, &mut binds);
                Self::wrap(binds, Expr::new(ExprKind::Binop(*op, na, nb), span))
            }
            SKind::Unop(op, a) => {
                let mut binds = Vec::new();
                let na = self.atomize(a, &mut binds);
                Self::wrap(binds, Expr::new(ExprKind::Unop(*op, na), span))
            }
            SKind::Cons(h, t) => {
                let mut binds = Vec::new();
                let nh = self.atomize(h, &mut binds);
                let nt = self.atomize(t, &mut binds);
                Self::wrap(binds, Expr::new(ExprKind::Cons(nh, nt), span))
            }
            SKind::Tuple(items) => {
                // (a, b, c) is the right-nested pair (a, (b, c)); inner pairs
                // are bound, the outermost is the result expression.
                let mut binds = Vec::new();
                let names: Vec<Name> =
                    items.iter().map(|i| self.atomize(i, &mut binds)).collect();
                let mut rest = names.into_iter().rev();
                let mut acc = rest.next().unwrap();
                let rest: Vec<Name> = rest.collect();
                let mut result = None;
                for (i, name) in rest.iter().enumerate() {
                    let pair = Expr::new(ExprKind::Pair(name.clone(), acc.clone()), span);
                    if i == rest.len() - 1 {
                        result = Some(pair);
                    } else {
                        let t = self.fresh_tmp();
                        binds.push((t.clone(), pair));
                        acc = t;
                    }
                }
                Self::wrap(binds, result.expect("tuple has at least two components"))
            }
            SKind::ListLit(items) => {
                let mut binds = Vec::new();
                let names: Vec<Name> =
                    items.iter().map(|i| self.atomize(i, &mut binds)).collect();
                let nil = self.fresh_tmp();
                binds.push((nil.clone(), Expr::new(ExprKind::Nil, span)));
                let mut acc = nil;
                let mut extra: Vec<(Name, Expr)> = Vec::new();
                for (i, name) in names.iter().enumerate().rev() {
                    let cons = Expr::new(ExprKind::Cons(name.clone(), acc.clone()), span);
                    if i == 0 {
                        binds.extend(extra);
                        return Self::wrap(binds, cons);
                    }
                    let t = self.fresh_tmp();
                    extra.push((t.clone(), cons));
                    acc = t;
                }
                unreachable!("non-empty list literal")
            }
            SKind::App(f, args) => {
                let mut binds = Vec::new();
                let names: Vec<Name> =
                    args.iter().map(|a| self.atomize(a, &mut binds)).collect();
                let arg = if names.len() == 1 {
                    names.into_iter().next().unwrap()
                } else {
                    self.build_tuple(names, &mut binds, span)
                };
                Self::wrap(binds, Expr::new(ExprKind::App(f.clone(), arg), span))
            }
            SKind::Let(x, e1, e2) => {
                let c1 = self.to_core(e1);
                let c2 = self.to_core(e2);
                let x = self.binder(x);
                Expr::new(ExprKind::Let(Box::new(c1), x, Box::new(c2)), span)
            }
            SKind::Seq(e1, e2) => {
                let c1 = self.to_core(e1);
                let c2 = self.to_core(e2);
                let w = self.fresh_wild();
                Expr::new(ExprKind::Let(Box::new(c1), w, Box::new(c2)), span)
            }
            SKind::If(c, t, f) => {
                let mut binds = Vec::new();
                let nc = self.atomize(c, &mut binds);
                let ct = self.to_core(t);
                let cf = self.to_core(f);
                Self::wrap(
                    binds,
                    Expr::new(ExprKind::Cond(nc, Box::new(ct), Box::new(cf)), span),
                )
            }
            SKind::MatchList {
                scrutinee,
                nil_body,
                head,
                tail,
                cons_body,
            } => {
                let mut binds = Vec::new();
                let ns = self.atomize(scrutinee, &mut binds);
                let cn = self.to_core(nil_body);
                let cc = self.to_core(cons_body);
                let h = self.binder(head);
                let t = self.binder(tail);
                Self::wrap(
                    binds,
                    Expr::new(
                        ExprKind::ListMatch(ns, Box::new(cn), h, t, Box::new(cc)),
                        span,
                    ),
                )
            }
            SKind::MatchPair {
                scrutinee,
                left,
                right,
                body,
            } => {
                let mut binds = Vec::new();
                let ns = self.atomize(scrutinee, &mut binds);
                let cb = self.to_core(body);
                let l = self.binder(left);
                let r = self.binder(right);
                Self::wrap(
                    binds,
                    Expr::new(ExprKind::PairMatch(ns, l, r, Box::new(cb)), span),
                )
            }
        }
    }
}

/// Renames binders apart so every binder in a function is unique.
fn uniquify(p: &mut Program) {
    for f in &mut p.functions {
        let mut used: HashSet<Name> = HashSet::new();
        used.insert(f.param.clone());
        let mut counter = 0u32;
        let mut env: HashMap<Name, Name> = HashMap::new();
        env.insert(f.param.clone(), f.param.clone());
        f.body = uniq(&f.body, &env, &mut used, &mut counter);
    }
}

fn uniq(
    e: &Expr,
    env: &HashMap<Name, Name>,
    used: &mut HashSet<Name>,
    counter: &mut u32,
) -> Expr {
    fn rename(n: &Name, env: &HashMap<Name, Name>) -> Name {
        env.get(n).cloned().unwrap_or_else(|| n.clone())
    }
    fn bind(
        n: &Name,
        env: &mut HashMap<Name, Name>,
        used: &mut HashSet<Name>,
        counter: &mut u32,
    ) -> Name {
        let fresh = if used.contains(n) {
            *counter += 1;
            format!("{n}#u{counter}")
        } else {
            n.clone()
        };
        used.insert(fresh.clone());
        env.insert(n.clone(), fresh.clone());
        fresh
    }
    let span = e.span;
    match &e.kind {
        ExprKind::Lit(_) | ExprKind::Nil | ExprKind::Tick(_) => e.clone(),
        ExprKind::Var(x) => Expr::new(ExprKind::Var(rename(x, env)), span),
        ExprKind::Binop(op, a, b) => Expr::new(
            ExprKind::Binop(*op, rename(a, env), rename(b, env)),
            span,
        ),
        ExprKind::Unop(op, a) => Expr::new(ExprKind::Unop(*op, rename(a, env)), span),
        ExprKind::App(f, x) => Expr::new(ExprKind::App(f.clone(), rename(x, env)), span),
        ExprKind::Pair(a, b) => {
            Expr::new(ExprKind::Pair(rename(a, env), rename(b, env)), span)
        }
        ExprKind::Cons(a, b) => {
            Expr::new(ExprKind::Cons(rename(a, env), rename(b, env)), span)
        }
        ExprKind::Let(e1, x, e2) => {
            let c1 = uniq(e1, env, used, counter);
            let mut env2 = env.clone();
            let nx = bind(x, &mut env2, used, counter);
            let c2 = uniq(e2, &env2, used, counter);
            Expr::new(ExprKind::Let(Box::new(c1), nx, Box::new(c2)), span)
        }
        ExprKind::Share(x, a, b, body) => {
            let sx = rename(x, env);
            let mut env2 = env.clone();
            let na = bind(a, &mut env2, used, counter);
            let nb = bind(b, &mut env2, used, counter);
            let cb = uniq(body, &env2, used, counter);
            Expr::new(ExprKind::Share(sx, na, nb, Box::new(cb)), span)
        }
        ExprKind::Cond(x, t, f) => Expr::new(
            ExprKind::Cond(
                rename(x, env),
                Box::new(uniq(t, env, used, counter)),
                Box::new(uniq(f, env, used, counter)),
            ),
            span,
        ),
        ExprKind::PairMatch(x, a, b, body) => {
            let sx = rename(x, env);
            let mut env2 = env.clone();
            let na = bind(a, &mut env2, used, counter);
            let nb = bind(b, &mut env2, used, counter);
            let cb = uniq(body, &env2, used, counter);
            Expr::new(ExprKind::PairMatch(sx, na, nb, Box::new(cb)), span)
        }
        ExprKind::ListMatch(x, e_nil, h, t, e_cons) => {
            let sx = rename(x, env);
            let cn = uniq(e_nil, env, used, counter);
            let mut env2 = env.clone();
            let nh = bind(h, &mut env2, used, counter);
            let nt = bind(t, &mut env2, used, counter);
            let cc = uniq(e_cons, &env2, used, counter);
            Expr::new(
                ExprKind::ListMatch(sx, Box::new(cn), nh, nt, Box::new(cc)),
                span,
            )
        }
    }
}

/// Counts tick nodes by amount, for the normalization invariant.
pub fn tick_multiset(e: &Expr) -> Vec<crate::rational::Rat> {
    let mut out = Vec::new();
    e.visit(&mut |n| {
        if let ExprKind::Tick(r) = &n.kind {
            out.push(r.clone());
        }
    });
    out.sort();
    out
}
