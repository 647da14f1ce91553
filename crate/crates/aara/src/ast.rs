//! Let-normal core syntax, simple types, values, and programs.
//!
//! Every operand position holds a variable name; compound subexpressions are
//! bound by `let`. After elaboration each variable is used at most once per
//! scope (per branch), with `share` providing explicit duplication.

use num_bigint::BigInt;
use std::collections::BTreeSet;
use std::fmt;

use crate::rational::Rat;

/// Byte range in the source file, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub lo: u32,
    pub hi: u32,
}

impl Span {
    pub fn new(lo: u32, hi: u32) -> Self {
        Span { lo, hi }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Post-elaboration node identifier, unique within a program.
pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasicTy {
    Int,
    Bool,
    Unit,
}

impl fmt::Display for BasicTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicTy::Int => write!(f, "int"),
            BasicTy::Bool => write!(f, "bool"),
            BasicTy::Unit => write!(f, "unit"),
        }
    }
}

/// Unannotated types: basics, lists, and pairs. First-order by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimpleType {
    Basic(BasicTy),
    List(Box<SimpleType>),
    Pair(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn int() -> Self {
        SimpleType::Basic(BasicTy::Int)
    }
    pub fn bool() -> Self {
        SimpleType::Basic(BasicTy::Bool)
    }
    pub fn unit() -> Self {
        SimpleType::Basic(BasicTy::Unit)
    }
    pub fn list(elem: SimpleType) -> Self {
        SimpleType::List(Box::new(elem))
    }
    pub fn pair(l: SimpleType, r: SimpleType) -> Self {
        SimpleType::Pair(Box::new(l), Box::new(r))
    }

    /// Number of list types occurring anywhere in this type.
    pub fn list_count(&self) -> usize {
        match self {
            SimpleType::Basic(_) => 0,
            SimpleType::List(e) => 1 + e.list_count(),
            SimpleType::Pair(l, r) => l.list_count() + r.list_count(),
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Basic(b) => write!(f, "{b}"),
            SimpleType::List(e) => match **e {
                SimpleType::Pair(..) => write!(f, "({e}) list"),
                _ => write!(f, "{e} list"),
            },
            SimpleType::Pair(l, r) => write!(f, "{l} * {r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    Or,
    And,
    Append,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "=",
            BinOp::Lt => "<",
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Append => "@",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Not => "not",
            UnOp::Neg => "-",
        }
    }
}

/// Runtime values. Lists are stored as sequences with index 0 as the head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Unit,
    Pair(Box<Value>, Box<Value>),
    List(Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }

    pub fn matches_type(&self, ty: &SimpleType) -> bool {
        match (self, ty) {
            (Value::Int(_), SimpleType::Basic(BasicTy::Int)) => true,
            (Value::Bool(_), SimpleType::Basic(BasicTy::Bool)) => true,
            (Value::Unit, SimpleType::Basic(BasicTy::Unit)) => true,
            (Value::Pair(a, b), SimpleType::Pair(l, r)) => {
                a.matches_type(l) && b.matches_type(r)
            }
            (Value::List(items), SimpleType::List(e)) => {
                items.iter().all(|v| v.matches_type(e))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => write!(f, "()"),
            Value::Pair(a, b) => write!(f, "({a},{b})"),
            Value::List(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Literals that may appear directly in core expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lit {
    Int(BigInt),
    Bool(bool),
    Unit,
}

impl Lit {
    pub fn to_value(&self) -> Value {
        match self {
            Lit::Int(n) => Value::Int(n.clone()),
            Lit::Bool(b) => Value::Bool(*b),
            Lit::Unit => Value::Unit,
        }
    }
}

pub type Name = String;

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Lit),
    Var(Name),
    Binop(BinOp, Name, Name),
    Unop(UnOp, Name),
    App(Name, Name),
    Let(Box<Expr>, Name, Box<Expr>),
    /// `share(x; a, b. body)`: both `a` and `b` denote `x`'s value in `body`.
    Share(Name, Name, Name, Box<Expr>),
    Tick(Rat),
    Pair(Name, Name),
    Nil,
    Cons(Name, Name),
    Cond(Name, Box<Expr>, Box<Expr>),
    PairMatch(Name, Name, Name, Box<Expr>),
    ListMatch(Name, Box<Expr>, Name, Name, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub id: NodeId,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span, id: 0 }
    }

    /// Walks the tree, calling `f` on every node.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Let(e1, _, e2) => {
                e1.visit(f);
                e2.visit(f);
            }
            ExprKind::Share(_, _, _, b) => b.visit(f),
            ExprKind::Cond(_, t, e) => {
                t.visit(f);
                e.visit(f);
            }
            ExprKind::PairMatch(_, _, _, b) => b.visit(f),
            ExprKind::ListMatch(_, e1, _, _, e2) => {
                e1.visit(f);
                e2.visit(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunDef {
    pub name: Name,
    pub param: Name,
    pub body: Expr,
    pub span: Span,
}

/// A program is an ordered collection of single-parameter functions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub functions: Vec<FunDef>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// The analysis entry point: the last function defined.
    pub fn entry(&self) -> Option<&FunDef> {
        self.functions.last()
    }
}

/// Free variables of a core expression under standard binding rules.
pub fn free_vars(e: &Expr) -> BTreeSet<Name> {
    fn go(e: &Expr, out: &mut BTreeSet<Name>) {
        match &e.kind {
            ExprKind::Lit(_) | ExprKind::Nil | ExprKind::Tick(_) => {}
            ExprKind::Var(x) => {
                out.insert(x.clone());
            }
            ExprKind::Binop(_, a, b) | ExprKind::Pair(a, b) | ExprKind::Cons(a, b) => {
                out.insert(a.clone());
                out.insert(b.clone());
            }
            ExprKind::Unop(_, x) | ExprKind::App(_, x) => {
                out.insert(x.clone());
            }
            ExprKind::Let(e1, x, e2) => {
                go(e1, out);
                let mut inner = BTreeSet::new();
                go(e2, &mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            ExprKind::Share(x, a, b, body) => {
                out.insert(x.clone());
                let mut inner = BTreeSet::new();
                go(body, &mut inner);
                inner.remove(a);
                inner.remove(b);
                out.extend(inner);
            }
            ExprKind::Cond(x, t, f) => {
                out.insert(x.clone());
                go(t, out);
                go(f, out);
            }
            ExprKind::PairMatch(x, a, b, body) => {
                out.insert(x.clone());
                let mut inner = BTreeSet::new();
                go(body, &mut inner);
                inner.remove(a);
                inner.remove(b);
                out.extend(inner);
            }
            ExprKind::ListMatch(x, e_nil, h, t, e_cons) => {
                out.insert(x.clone());
                go(e_nil, out);
                let mut inner = BTreeSet::new();
                go(e_cons, &mut inner);
                inner.remove(h);
                inner.remove(t);
                out.extend(inner);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut out);
    out
}

/// Counts uses of `x` in `e`. Alternative branches contribute their maximum,
/// since only one of them runs; a cond scrutinee is not consumed.
pub fn use_count(x: &str, e: &Expr) -> usize {
    let hit = |n: &str| usize::from(n == x);
    match &e.kind {
        ExprKind::Lit(_) | ExprKind::Nil | ExprKind::Tick(_) => 0,
        ExprKind::Var(n) => hit(n),
        ExprKind::Binop(_, a, b) | ExprKind::Pair(a, b) | ExprKind::Cons(a, b) => {
            hit(a) + hit(b)
        }
        ExprKind::Unop(_, n) | ExprKind::App(_, n) => hit(n),
        ExprKind::Let(e1, y, e2) => {
            use_count(x, e1) + if y == x { 0 } else { use_count(x, e2) }
        }
        ExprKind::Share(s, a, b, body) => {
            hit(s)
                + if a == x || b == x {
                    0
                } else {
                    use_count(x, body)
                }
        }
        ExprKind::Cond(_, t, f) => use_count(x, t).max(use_count(x, f)),
        ExprKind::PairMatch(s, a, b, body) => {
            hit(s)
                + if a == x || b == x {
                    0
                } else {
                    use_count(x, body)
                }
        }
        ExprKind::ListMatch(s, e_nil, h, t, e_cons) => {
            let cons = if h == x || t == x {
                0
            } else {
                use_count(x, e_cons)
            };
            hit(s) + use_count(x, e_nil).max(cons)
        }
    }
}

/// A linearity violation: a variable used more than once in one scope.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearityViolation {
    pub var: Name,
    pub first_use: Span,
    pub second_use: Span,
}

impl fmt::Display for LinearityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "variable `{}` used more than once (bytes {}..{} and {}..{})",
            self.var, self.first_use.lo, self.first_use.hi, self.second_use.lo, self.second_use.hi
        )
    }
}

/// Checks that every variable is used at most once per scope (branches of a
/// match or cond count separately). Succeeds on elaborated programs.
pub fn check_linear(e: &Expr) -> Result<(), LinearityViolation> {
    // Collects, per free variable, the spans of its uses along any single
    // execution path (branch alternatives are merged by keeping both sides'
    // use lists but never adding them together).
    fn uses(e: &Expr) -> Result<std::collections::BTreeMap<Name, Vec<Span>>, LinearityViolation> {
        use std::collections::BTreeMap;
        fn merge_seq(
            mut a: BTreeMap<Name, Vec<Span>>,
            b: BTreeMap<Name, Vec<Span>>,
        ) -> Result<BTreeMap<Name, Vec<Span>>, LinearityViolation> {
            for (k, mut v) in b {
                let entry = a.entry(k.clone()).or_default();
                entry.append(&mut v);
                if entry.len() > 1 {
                    return Err(LinearityViolation {
                        var: k,
                        first_use: entry[0],
                        second_use: entry[1],
                    });
                }
            }
            Ok(a)
        }
        fn merge_alt(
            mut a: BTreeMap<Name, Vec<Span>>,
            b: BTreeMap<Name, Vec<Span>>,
        ) -> BTreeMap<Name, Vec<Span>> {
            for (k, v) in b {
                let entry = a.entry(k).or_default();
                if v.len() > entry.len() {
                    *entry = v;
                }
            }
            a
        }
        let single = |n: &Name, sp: Span| {
            let mut m = BTreeMap::new();
            m.insert(n.clone(), vec![sp]);
            m
        };
        let without = |m: Result<BTreeMap<Name, Vec<Span>>, LinearityViolation>,
                       names: &[&Name]|
         -> Result<BTreeMap<Name, Vec<Span>>, LinearityViolation> {
            let mut m = m?;
            for n in names {
                m.remove(*n);
            }
            Ok(m)
        };
        match &e.kind {
            ExprKind::Lit(_) | ExprKind::Nil | ExprKind::Tick(_) => Ok(BTreeMap::new()),
            ExprKind::Var(n) => Ok(single(n, e.span)),
            ExprKind::Binop(_, a, b) | ExprKind::Pair(a, b) | ExprKind::Cons(a, b) => {
                merge_seq(single(a, e.span), single(b, e.span))
            }
            ExprKind::Unop(_, n) | ExprKind::App(_, n) => Ok(single(n, e.span)),
            ExprKind::Let(e1, x, e2) => {
                let u2 = without(uses(e2), &[x])?;
                merge_seq(uses(e1)?, u2)
            }
            ExprKind::Share(s, a, b, body) => {
                let ub = without(uses(body), &[a, b])?;
                merge_seq(single(s, e.span), ub)
            }
            ExprKind::Cond(_, t, f) => Ok(merge_alt(uses(t)?, uses(f)?)),
            ExprKind::PairMatch(s, a, b, body) => {
                let ub = without(uses(body), &[a, b])?;
                merge_seq(single(s, e.span), ub)
            }
            ExprKind::ListMatch(s, e_nil, h, t, e_cons) => {
                let uc = without(uses(e_cons), &[h, t])?;
                let branches = merge_alt(uses(e_nil)?, uc);
                merge_seq(single(s, e.span), branches)
            }
        }
    }
    uses(e).map(|_| ())
}

/// Assigns fresh sequential node ids across the whole program.
pub fn number_nodes(p: &mut Program) {
    let mut next: NodeId = 0;
    fn go(e: &mut Expr, next: &mut NodeId) {
        e.id = *next;
        *next += 1;
        match &mut e.kind {
            ExprKind::Let(e1, _, e2) => {
                go(e1, next);
                go(e2, next);
            }
            ExprKind::Share(_, _, _, b) => go(b, next),
            ExprKind::Cond(_, t, f) => {
                go(t, next);
                go(f, next);
            }
            ExprKind::PairMatch(_, _, _, b) => go(b, next),
            ExprKind::ListMatch(_, e1, _, _, e2) => {
                go(e1, next);
                go(e2, next);
            }
            _ => {}
        }
    }
    for f in &mut p.functions {
        go(&mut f.body, &mut next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn var(n: &str) -> Expr {
        Expr::new(ExprKind::Var(n.into()), Span::default())
    }

    #[test]
    fn free_vars_examples() {
        assert_eq!(
            free_vars(&var("x")),
            ["x".to_string()].into_iter().collect()
        );
        assert!(free_vars(&Expr::new(ExprKind::Nil, Span::default())).is_empty());
        // let x = y in x :: z  has free {y, z}
        let e = Expr::new(
            ExprKind::Let(
                Box::new(var("y")),
                "x".into(),
                Box::new(Expr::new(
                    ExprKind::Cons("x".into(), "z".into()),
                    Span::default(),
                )),
            ),
            Span::default(),
        );
        assert_eq!(
            free_vars(&e),
            ["y".to_string(), "z".to_string()].into_iter().collect()
        );
    }

    #[test]
    fn linearity() {
        let dup = Expr::new(ExprKind::Binop(BinOp::Add, "x".into(), "x".into()), Span::default());
        let v = check_linear(&dup).unwrap_err();
        assert_eq!(v.var, "x");

        let shared = Expr::new(
            ExprKind::Share(
                "x".into(),
                "a".into(),
                "b".into(),
                Box::new(Expr::new(
                    ExprKind::Binop(BinOp::Add, "a".into(), "b".into()),
                    Span::default(),
                )),
            ),
            Span::default(),
        );
        assert!(check_linear(&shared).is_ok());

        // One use per branch of a cond is fine.
        let cond = Expr::new(
            ExprKind::Cond("b".into(), Box::new(var("x")), Box::new(var("x"))),
            Span::default(),
        );
        assert!(check_linear(&cond).is_ok());
    }

    #[test]
    fn use_count_branch_max() {
        let cond = Expr::new(
            ExprKind::Cond(
                "b".into(),
                Box::new(Expr::new(
                    ExprKind::Binop(BinOp::Add, "x".into(), "x".into()),
                    Span::default(),
                )),
                Box::new(var("x")),
            ),
            Span::default(),
        );
        assert_eq!(use_count("x", &cond), 2);
        assert_eq!(use_count("b", &cond), 0); // scrutinee not consumed
    }

    #[test]
    fn tick_holds_rationals() {
        let t = Expr::new(ExprKind::Tick(rat(-1)), Span::default());
        assert_eq!(free_vars(&t).len(), 0);
    }
}
