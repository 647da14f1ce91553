//! Simple type inference by unification.
//!
//! Whole-program and monomorphic: every function gets a single parameter and
//! result type, all call sites unify against the same pair, and any type
//! variable left unresolved after solving is rejected.

use std::collections::{BTreeMap, HashMap};

use crate::ast::{
    BinOp, Expr, ExprKind, FunDef, Lit, Name, NodeId, Program, SimpleType, Span, UnOp,
};
use crate::frontend::diag::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Int,
    Bool,
    Unit,
    Var(usize),
    List(Box<Ty>),
    Pair(Box<Ty>, Box<Ty>),
}

#[derive(Debug, Clone)]
pub struct FnTypeInfo {
    pub param: SimpleType,
    pub result: SimpleType,
    /// Type of every binder in the elaborated body (binders are unique).
    pub binders: HashMap<Name, SimpleType>,
    /// Type of every expression node.
    pub node_types: HashMap<NodeId, SimpleType>,
}

#[derive(Debug, Clone, Default)]
pub struct TypeInfo {
    pub fns: BTreeMap<Name, FnTypeInfo>,
}

struct Unifier {
    subst: Vec<Option<Ty>>,
}

impl Unifier {
    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Var(self.subst.len() - 1)
    }

    fn resolve(&self, t: &Ty) -> Ty {
        match t {
            Ty::Var(i) => match &self.subst[*i] {
                Some(inner) => self.resolve(&inner.clone()),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: usize, t: &Ty) -> bool {
        match self.resolve(t) {
            Ty::Var(i) => i == v,
            Ty::List(e) => self.occurs(v, &e),
            Ty::Pair(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            _ => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty, span: Span) -> Result<(), Diagnostic> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (Ty::Int, Ty::Int) | (Ty::Bool, Ty::Bool) | (Ty::Unit, Ty::Unit) => Ok(()),
            (Ty::Var(i), _) => {
                if let Ty::Var(j) = b {
                    if j == *i {
                        return Ok(());
                    }
                }
                if self.occurs(*i, &b) {
                    return Err(Diagnostic::error(
                        "cannot construct an infinite type",
                        span,
                    ));
                }
                self.subst[*i] = Some(b);
                Ok(())
            }
            (_, Ty::Var(_)) => self.unify(&b, &a, span),
            (Ty::List(x), Ty::List(y)) => self.unify(x, y, span),
            (Ty::Pair(x1, x2), Ty::Pair(y1, y2)) => {
                self.unify(x1, y1, span)?;
                self.unify(x2, y2, span)
            }
            _ => Err(Diagnostic::error(
                format!(
                    "type mismatch: {} vs {}",
                    self.describe(&a),
                    self.describe(&b)
                ),
                span,
            )),
        }
    }

    fn describe(&self, t: &Ty) -> String {
        match self.resolve(t) {
            Ty::Int => "int".into(),
            Ty::Bool => "bool".into(),
            Ty::Unit => "unit".into(),
            Ty::Var(i) => format!("'t{i}"),
            Ty::List(e) => format!("{} list", self.describe(&e)),
            Ty::Pair(a, b) => format!("({} * {})", self.describe(&a), self.describe(&b)),
        }
    }

    /// Grounds a type; `None` if any variable is still free.
    fn zonk(&self, t: &Ty) -> Option<SimpleType> {
        match self.resolve(t) {
            Ty::Int => Some(SimpleType::int()),
            Ty::Bool => Some(SimpleType::bool()),
            Ty::Unit => Some(SimpleType::unit()),
            Ty::Var(_) => None,
            Ty::List(e) => Some(SimpleType::list(self.zonk(&e)?)),
            Ty::Pair(a, b) => Some(SimpleType::pair(self.zonk(&a)?, self.zonk(&b)?)),
        }
    }
}

struct Inference<'p> {
    uni: Unifier,
    fn_tys: HashMap<Name, (Ty, Ty)>,
    program: &'p Program,
    // raw (pre-zonk) recordings
    binder_tys: HashMap<Name, Vec<(Name, Ty)>>,
    node_tys: HashMap<Name, Vec<(NodeId, Ty)>>,
}

pub fn infer_simple_types(program: &Program) -> Result<TypeInfo, Vec<Diagnostic>> {
    let mut inf = Inference {
        uni: Unifier { subst: Vec::new() },
        fn_tys: HashMap::new(),
        program,
        binder_tys: HashMap::new(),
        node_tys: HashMap::new(),
    };
    for f in &program.functions {
        let p = inf.uni.fresh();
        let r = inf.uni.fresh();
        inf.fn_tys.insert(f.name.clone(), (p, r));
    }
    let mut diags = Vec::new();
    for f in &program.functions {
        if let Err(d) = inf.infer_function(f) {
            diags.push(d);
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    // A function whose whole parameter or result type is still a bare
    // variable is genuinely ambiguous and gets rejected; element types no
    // operation constrains are irrelevant to cost and default to int.
    for f in &program.functions {
        let (pt, rt) = inf.fn_tys[&f.name].clone();
        for (what, t) in [("parameter", &pt), ("result", &rt)] {
            if matches!(inf.uni.resolve(t), Ty::Var(_)) {
                diags.push(Diagnostic::error(
                    format!(
                        "cannot infer a concrete {what} type for `{}`; \
                         the language has no type annotations, so give it a monomorphic use",
                        f.name
                    ),
                    f.span,
                ));
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    for i in 0..inf.uni.subst.len() {
        if inf.uni.subst[i].is_none() {
            inf.uni.subst[i] = Some(Ty::Int);
        }
    }
    let mut info = TypeInfo::default();
    for f in &program.functions {
        let (pt, rt) = inf.fn_tys[&f.name].clone();
        let (param, result) = match (inf.uni.zonk(&pt), inf.uni.zonk(&rt)) {
            (Some(p), Some(r)) => (p, r),
            _ => unreachable!("all type variables are defaulted"),
        };
        let mut fti = FnTypeInfo {
            param,
            result,
            binders: HashMap::new(),
            node_types: HashMap::new(),
        };
        for (name, ty) in inf.binder_tys.remove(&f.name).unwrap_or_default() {
            match inf.uni.zonk(&ty) {
                Some(t) => {
                    fti.binders.insert(name, t);
                }
                None => diags.push(Diagnostic::error(
                    format!("ambiguous type for binder `{name}` in `{}`", f.name),
                    f.span,
                )),
            }
        }
        for (id, ty) in inf.node_tys.remove(&f.name).unwrap_or_default() {
            match inf.uni.zonk(&ty) {
                Some(t) => {
                    fti.node_types.insert(id, t);
                }
                None => diags.push(Diagnostic::error(
                    format!("ambiguous type for an expression in `{}`", f.name),
                    f.span,
                )),
            }
        }
        info.fns.insert(f.name.clone(), fti);
    }
    if diags.is_empty() {
        Ok(info)
    } else {
        Err(diags)
    }
}

impl<'p> Inference<'p> {
    fn infer_function(&mut self, f: &FunDef) -> Result<(), Diagnostic> {
        let (pt, rt) = self.fn_tys[&f.name].clone();
        let mut env: HashMap<Name, Ty> = HashMap::new();
        env.insert(f.param.clone(), pt.clone());
        self.binder_tys
            .entry(f.name.clone())
            .or_default()
            .push((f.param.clone(), pt));
        let body_ty = self.infer(&f.name, &f.body, &mut env)?;
        self.uni.unify(&body_ty, &rt, f.span)
    }

    fn lookup(&self, env: &HashMap<Name, Ty>, x: &str, span: Span) -> Result<Ty, Diagnostic> {
        env.get(x).cloned().ok_or_else(|| {
            let hint = if self.program.function(x).is_some() {
                " (functions are not values in this first-order language)"
            } else {
                ""
            };
            Diagnostic::error(format!("unknown identifier `{x}`{hint}"), span)
        })
    }

    fn record_binder(&mut self, fname: &str, name: &Name, ty: Ty) {
        self.binder_tys
            .entry(fname.to_string())
            .or_default()
            .push((name.clone(), ty));
    }

    fn infer(
        &mut self,
        fname: &str,
        e: &Expr,
        env: &mut HashMap<Name, Ty>,
    ) -> Result<Ty, Diagnostic> {
        let ty = self.infer_kind(fname, e, env)?;
        self.node_tys
            .entry(fname.to_string())
            .or_default()
            .push((e.id, ty.clone()));
        Ok(ty)
    }

    fn infer_kind(
        &mut self,
        fname: &str,
        e: &Expr,
        env: &mut HashMap<Name, Ty>,
    ) -> Result<Ty, Diagnostic> {
        let span = e.span;
        match &e.kind {
            ExprKind::Lit(Lit::Int(_)) => Ok(Ty::Int),
            ExprKind::Lit(Lit::Bool(_)) => Ok(Ty::Bool),
            ExprKind::Lit(Lit::Unit) => Ok(Ty::Unit),
            ExprKind::Tick(_) => Ok(Ty::Unit),
            ExprKind::Var(x) => self.lookup(env, x, span),
            ExprKind::Binop(op, a, b) => {
                let ta = self.lookup(env, a, span)?;
                let tb = self.lookup(env, b, span)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        self.uni.unify(&ta, &Ty::Int, span)?;
                        self.uni.unify(&tb, &Ty::Int, span)?;
                        Ok(Ty::Int)
                    }
                    BinOp::Eq | BinOp::Lt => {
                        self.uni.unify(&ta, &Ty::Int, span)?;
                        self.uni.unify(&tb, &Ty::Int, span)?;
                        Ok(Ty::Bool)
                    }
                    BinOp::Or | BinOp::And => {
                        self.uni.unify(&ta, &Ty::Bool, span)?;
                        self.uni.unify(&tb, &Ty::Bool, span)?;
                        Ok(Ty::Bool)
                    }
                    BinOp::Append => {
                        let elem = self.uni.fresh();
                        let list = Ty::List(Box::new(elem));
                        self.uni.unify(&ta, &list, span)?;
                        self.uni.unify(&tb, &list, span)?;
                        Ok(list)
                    }
                }
            }
            ExprKind::Unop(op, a) => {
                let ta = self.lookup(env, a, span)?;
                match op {
                    UnOp::Not => {
                        self.uni.unify(&ta, &Ty::Bool, span)?;
                        Ok(Ty::Bool)
                    }
                    UnOp::Neg => {
                        self.uni.unify(&ta, &Ty::Int, span)?;
                        Ok(Ty::Int)
                    }
                }
            }
            ExprKind::App(f, x) => {
                let (pt, rt) = self
                    .fn_tys
                    .get(f)
                    .cloned()
                    .ok_or_else(|| Diagnostic::error(format!("unknown function `{f}`"), span))?;
                let tx = self.lookup(env, x, span)?;
                self.uni.unify(&tx, &pt, span)?;
                Ok(rt)
            }
            ExprKind::Let(e1, x, e2) => {
                let t1 = self.infer(fname, e1, env)?;
                self.record_binder(fname, x, t1.clone());
                env.insert(x.clone(), t1);
                self.infer(fname, e2, env)
            }
            ExprKind::Share(x, a, b, body) => {
                let tx = self.lookup(env, x, span)?;
                self.record_binder(fname, a, tx.clone());
                self.record_binder(fname, b, tx.clone());
                env.insert(a.clone(), tx.clone());
                env.insert(b.clone(), tx);
                self.infer(fname, body, env)
            }
            ExprKind::Pair(a, b) => {
                let ta = self.lookup(env, a, span)?;
                let tb = self.lookup(env, b, span)?;
                Ok(Ty::Pair(Box::new(ta), Box::new(tb)))
            }
            ExprKind::Nil => Ok(Ty::List(Box::new(self.uni.fresh()))),
            ExprKind::Cons(h, t) => {
                let th = self.lookup(env, h, span)?;
                let tt = self.lookup(env, t, span)?;
                let list = Ty::List(Box::new(th));
                self.uni.unify(&tt, &list, span)?;
                Ok(list)
            }
            ExprKind::Cond(x, t, f) => {
                let tx = self.lookup(env, x, span)?;
                self.uni.unify(&tx, &Ty::Bool, span)?;
                let tt = self.infer(fname, t, env)?;
                let tf = self.infer(fname, f, env)?;
                self.uni.unify(&tt, &tf, span)?;
                Ok(tt)
            }
            ExprKind::PairMatch(x, a, b, body) => {
                let tx = self.lookup(env, x, span)?;
                let ta = self.uni.fresh();
                let tb = self.uni.fresh();
                self.uni
                    .unify(&tx, &Ty::Pair(Box::new(ta.clone()), Box::new(tb.clone())), span)?;
                self.record_binder(fname, a, ta.clone());
                self.record_binder(fname, b, tb.clone());
                env.insert(a.clone(), ta);
                env.insert(b.clone(), tb);
                self.infer(fname, body, env)
            }
            ExprKind::ListMatch(x, e_nil, h, t, e_cons) => {
                let tx = self.lookup(env, x, span)?;
                let elem = self.uni.fresh();
                let list = Ty::List(Box::new(elem.clone()));
                self.uni.unify(&tx, &list, span)?;
                let tn = self.infer(fname, e_nil, env)?;
                self.record_binder(fname, h, elem.clone());
                self.record_binder(fname, t, list.clone());
                env.insert(h.clone(), elem);
                env.insert(t.clone(), list);
                let tc = self.infer(fname, e_cons, env)?;
                self.uni.unify(&tn, &tc, span)?;
                Ok(tn)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::number_nodes;
    use crate::frontend::normalize::normalize_program;
    use crate::frontend::parser::parse;

    fn infer(src: &str) -> Result<TypeInfo, Vec<Diagnostic>> {
        let mut p = normalize_program(&parse(src).unwrap());
        number_nodes(&mut p);
        infer_simple_types(&p)
    }

    #[test]
    fn snoc_type() {
        let src = "let snoc x xs =\n  match xs with\n  | [] -> tick 1; x :: []\n  | hd :: tl -> tick 1; hd :: snoc x tl\n";
        let info = infer(src).unwrap();
        let f = &info.fns["snoc"];
        assert_eq!(
            f.param,
            SimpleType::pair(SimpleType::int(), SimpleType::list(SimpleType::int()))
        );
        assert_eq!(f.result, SimpleType::list(SimpleType::int()));
    }

    #[test]
    fn subset_sum_type() {
        let src = "let subsetSum nums target =\n  match nums with\n  | [] -> tick 1; target = 0\n  | hd :: tl ->\n    tick 1;\n    let newTarget = target - hd in\n    let withNum = subsetSum tl newTarget in\n    let without = subsetSum tl target in\n    tick 1; withNum || without\n";
        let info = infer(src).unwrap();
        let f = &info.fns["subsetSum"];
        assert_eq!(
            f.param,
            SimpleType::pair(SimpleType::list(SimpleType::int()), SimpleType::int())
        );
        assert_eq!(f.result, SimpleType::bool());
    }

    #[test]
    fn identity_rejected_as_ambiguous() {
        let err = infer("let f x = x").unwrap_err();
        assert!(err[0].message.contains("cannot infer a concrete"));
    }

    #[test]
    fn self_application_rejected() {
        let err = infer("let f x = x x").unwrap_err();
        assert!(
            err[0].message.contains("unknown function")
                || err[0].message.contains("infinite type"),
            "{}",
            err[0].message
        );
    }

    #[test]
    fn occurs_check_fires() {
        let err = infer("let f x = f (x :: [])").unwrap_err();
        assert!(err
            .iter()
            .any(|d| d.message.contains("infinite type") || d.message.contains("mismatch")));
    }
}
