//! Surface expression trees, faithful to the source text.
use num_bigint::BigInt;


use crate::ast::{BinOp, Span, UnOp};
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq)]
pub struct SExpr {
    pub kind: SKind,
    pub span: Span,
}

impl SExpr {
    pub fn new(kind: SKind, span: Span) -> Self {
        SExpr { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SKind {
    Int(BigInt),
    Bool(bool),
    Unit,
    Var(String),
    Binop(BinOp, Box<SExpr>, Box<SExpr>),
    Unop(UnOp, Box<SExpr>),
    /// Application of a named function to one or more arguments.
    App(String, Vec<SExpr>),
    Let(String, Box<SExpr>, Box<SExpr>),
    Seq(Box<SExpr>, Box<SExpr>),
    Tick(Rat),
    /// Tuple of two or more components.
    Tuple(Vec<SExpr>),
    Nil,
    Cons(Box<SExpr>, Box<SExpr>),
    /// `[a; b; c]`
    ListLit(Vec<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    MatchList {
        scrutinee: Box<SExpr>,
        nil_body: Box<SExpr>,
        head: String,
        tail: String,
        cons_body: Box<SExpr>,
    },
    MatchPair {
        scrutinee: Box<SExpr>,
        left: String,
        right: String,
        body: Box<SExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SFunDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: SExpr,
    pub span: Span,
}

/// A function whose signature is assumed rather than derived: its body is
/// interpreted but excluded from constraint generation; the signature
/// conserves list potential except for `linear_cost` units of linear
/// potential consumed per element.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumeSpec {
    pub function: String,
    pub linear_cost: Rat,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceProgram {
    pub functions: Vec<SFunDef>,
    pub assumptions: Vec<AssumeSpec>,
}
