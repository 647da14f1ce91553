//! Big-step cost interpreter.
//!
//! Evaluation carries a resource pair (q, q'): q is the high-water mark and
//! q - q' the net consumption. `tick r` costs (max(r,0), max(-r,0)); data
//! construction and destruction are free; `let` composes the pairs as
//! (q + max(p - q', 0), p' + max(q' - p, 0)). Each rule application consumes
//! one unit of fuel, which bounds divergent programs and yields the partial
//! high-water mark of the explored prefix.

use num_traits::Zero;
use std::fmt;
use std::rc::Rc;

use crate::ast::{BinOp, Expr, ExprKind, Name, Program, UnOp, Value};
use crate::rational::{pos_part, Rat};

/// Result of a terminating evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CostOutcome {
    pub value: Value,
    /// High-water mark; never negative.
    pub high_water: Rat,
    /// Resources left over after evaluation; never negative.
    pub leftover: Rat,
    /// Rule applications used.
    pub steps: u64,
}

/// High-water mark of the evaluation prefix explored within the fuel budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialOutcome {
    pub watermark: Rat,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuntimeError {
    UnknownFunction(Name),
    UnboundVariable(Name),
    MatchFailure(String),
    TypeMismatch(String),
    DivisionByZero,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeError::UnknownFunction(n) => write!(f, "unknown function `{n}`"),
            RuntimeError::UnboundVariable(n) => write!(f, "unbound variable `{n}`"),
            RuntimeError::MatchFailure(m) => write!(f, "match failure: {m}"),
            RuntimeError::TypeMismatch(m) => write!(f, "operand mismatch: {m}"),
            RuntimeError::DivisionByZero => write!(f, "division by zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalResult {
    Done(CostOutcome),
    FuelExhausted(PartialOutcome),
}

/// Persistent environment: a chain of bindings. Shadowing is allowed; lookup
/// finds the innermost binding.
#[derive(Debug, Clone, Default)]
struct Env(Option<Rc<Frame>>);

#[derive(Debug)]
struct Frame {
    name: Name,
    value: Value,
    parent: Env,
}

impl Env {
    fn bind(&self, name: Name, value: Value) -> Env {
        Env(Some(Rc::new(Frame {
            name,
            value,
            parent: self.clone(),
        })))
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = self;
        while let Some(f) = &cur.0 {
            if f.name == name {
                return Some(&f.value);
            }
            cur = &f.parent;
        }
        None
    }
}

/// Outcome of evaluating one expression: either a value with its resource
/// pair, or the watermark of the partial evaluation when fuel ran out.
enum Step {
    Done(Value, Rat, Rat),
    Partial(Rat),
}

struct Machine<'p> {
    program: &'p Program,
    fuel: u64,
    used: u64,
}

impl<'p> Machine<'p> {
    fn take_fuel(&mut self) -> bool {
        if self.fuel == 0 {
            false
        } else {
            self.fuel -= 1;
            self.used += 1;
            true
        }
    }

    fn get(&self, env: &Env, name: &str) -> Result<Value, RuntimeError> {
        env.lookup(name)
            .cloned()
            .ok_or_else(|| RuntimeError::UnboundVariable(name.to_string()))
    }

    fn eval(&mut self, env: &Env, e: &Expr) -> Result<Step, RuntimeError> {
        if !self.take_fuel() {
            // Out of fuel: the empty partial evaluation uses no resources.
            return Ok(Step::Partial(Rat::zero()));
        }
        match &e.kind {
            ExprKind::Lit(l) => Ok(Step::Done(l.to_value(), Rat::zero(), Rat::zero())),
            ExprKind::Var(x) => Ok(Step::Done(self.get(env, x)?, Rat::zero(), Rat::zero())),
            ExprKind::Tick(r) => Ok(Step::Done(
                Value::Unit,
                pos_part(r),
                pos_part(&-r.clone()),
            )),
            ExprKind::Binop(op, a, b) => {
                let va = self.get(env, a)?;
                let vb = self.get(env, b)?;
                Ok(Step::Done(apply_binop(*op, va, vb)?, Rat::zero(), Rat::zero()))
            }
            ExprKind::Unop(op, a) => {
                let va = self.get(env, a)?;
                Ok(Step::Done(apply_unop(*op, va)?, Rat::zero(), Rat::zero()))
            }
            ExprKind::Pair(a, b) => Ok(Step::Done(
                Value::Pair(Box::new(self.get(env, a)?), Box::new(self.get(env, b)?)),
                Rat::zero(),
                Rat::zero(),
            )),
            ExprKind::Nil => Ok(Step::Done(Value::List(vec![]), Rat::zero(), Rat::zero())),
            ExprKind::Cons(h, t) => {
                let vh = self.get(env, h)?;
                match self.get(env, t)? {
                    Value::List(mut items) => {
                        items.insert(0, vh);
                        Ok(Step::Done(Value::List(items), Rat::zero(), Rat::zero()))
                    }
                    other => Err(RuntimeError::TypeMismatch(format!(
                        "cons tail is not a list: {other}"
                    ))),
                }
            }
            ExprKind::Let(e1, x, e2) => {
                match self.eval(env, e1)? {
                    Step::Partial(w) => Ok(Step::Partial(w)),
                    Step::Done(v1, q, q1) => {
                        let env2 = env.bind(x.clone(), v1);
                        match self.eval(&env2, e2)? {
                            Step::Partial(p) => {
                                Ok(Step::Partial(&q + pos_part(&(p - &q1))))
                            }
                            Step::Done(v2, p, p1) => {
                                let high = &q + pos_part(&(&p - &q1));
                                let left = &p1 + pos_part(&(&q1 - &p));
                                Ok(Step::Done(v2, high, left))
                            }
                        }
                    }
                }
            }
            ExprKind::Share(x, a, b, body) => {
                let v = self.get(env, x)?;
                let env2 = env.bind(a.clone(), v.clone()).bind(b.clone(), v);
                self.eval(&env2, body)
            }
            ExprKind::Cond(x, t, f) => match self.get(env, x)? {
                Value::Bool(true) => self.eval(env, t),
                Value::Bool(false) => self.eval(env, f),
                other => Err(RuntimeError::TypeMismatch(format!(
                    "cond scrutinee is not a bool: {other}"
                ))),
            },
            ExprKind::PairMatch(x, a, b, body) => match self.get(env, x)? {
                Value::Pair(va, vb) => {
                    let env2 = env.bind(a.clone(), *va).bind(b.clone(), *vb);
                    self.eval(&env2, body)
                }
                other => Err(RuntimeError::MatchFailure(format!(
                    "pair match on non-pair: {other}"
                ))),
            },
            ExprKind::ListMatch(x, e_nil, h, t, e_cons) => match self.get(env, x)? {
                Value::List(items) => {
                    if items.is_empty() {
                        self.eval(env, e_nil)
                    } else {
                        let mut items = items;
                        let head = items.remove(0);
                        let env2 = env
                            .bind(h.clone(), head)
                            .bind(t.clone(), Value::List(items));
                        self.eval(&env2, e_cons)
                    }
                }
                other => Err(RuntimeError::MatchFailure(format!(
                    "list match on non-list: {other}"
                ))),
            },
            ExprKind::App(fname, x) => {
                let def = self
                    .program
                    .function(fname)
                    .ok_or_else(|| RuntimeError::UnknownFunction(fname.clone()))?;
                let arg = self.get(env, x)?;
                // Functions are first-order and see only their parameter.
                let callee_env = Env::default().bind(def.param.clone(), arg);
                self.eval(&callee_env, &def.body)
            }
        }
    }
}

fn apply_binop(op: BinOp, a: Value, b: Value) -> Result<Value, RuntimeError> {
    use Value::*;
    match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Ok(Int(x + y)),
        (BinOp::Sub, Int(x), Int(y)) => Ok(Int(x - y)),
        (BinOp::Mul, Int(x), Int(y)) => Ok(Int(x * y)),
        (BinOp::Eq, Int(x), Int(y)) => Ok(Bool(x == y)),
        (BinOp::Lt, Int(x), Int(y)) => Ok(Bool(x < y)),
        (BinOp::Or, Bool(x), Bool(y)) => Ok(Bool(x || y)),
        (BinOp::And, Bool(x), Bool(y)) => Ok(Bool(x && y)),
        (BinOp::Append, List(mut x), List(y)) => {
            x.extend(y);
            Ok(List(x))
        }
        (op, a, b) => Err(RuntimeError::TypeMismatch(format!(
            "{} applied to {a} and {b}",
            op.symbol()
        ))),
    }
}

fn apply_unop(op: UnOp, a: Value) -> Result<Value, RuntimeError> {
    use Value::*;
    match (op, a) {
        (UnOp::Not, Bool(x)) => Ok(Bool(!x)),
        (UnOp::Neg, Int(x)) => Ok(Int(-x)),
        (op, a) => Err(RuntimeError::TypeMismatch(format!(
            "{} applied to {a}",
            op.symbol()
        ))),
    }
}

/// Runs `entry` on `arg` with the given fuel budget.
///
/// Evaluation recurses as deeply as the evaluated program does, so it runs on
/// a dedicated thread with a generous stack.
pub fn eval(
    program: &Program,
    entry: &str,
    arg: Value,
    fuel: u64,
) -> Result<EvalResult, RuntimeError> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 * 1024 * 1024)
            .spawn_scoped(s, move || eval_on_this_thread(program, entry, arg, fuel))
            .expect("spawn evaluator thread")
            .join()
            .expect("evaluator thread panicked")
    })
}

fn eval_on_this_thread(
    program: &Program,
    entry: &str,
    arg: Value,
    fuel: u64,
) -> Result<EvalResult, RuntimeError> {
    let def = program
        .function(entry)
        .ok_or_else(|| RuntimeError::UnknownFunction(entry.to_string()))?;
    let mut m = Machine {
        program,
        fuel,
        used: 0,
    };
    let env = Env::default().bind(def.param.clone(), arg);
    match m.eval(&env, &def.body)? {
        Step::Done(value, high_water, leftover) => Ok(EvalResult::Done(CostOutcome {
            value,
            high_water,
            leftover,
            steps: m.used,
        })),
        Step::Partial(watermark) => Ok(EvalResult::FuelExhausted(PartialOutcome {
            watermark,
            exhausted: true,
        })),
    }
}

/// High-water mark of the (possibly partial) evaluation explored within
/// `fuel`; equals the terminating high-water mark when fuel suffices.
pub fn watermark(
    program: &Program,
    entry: &str,
    arg: Value,
    fuel: u64,
) -> Result<PartialOutcome, RuntimeError> {
    match eval(program, entry, arg, fuel)? {
        EvalResult::Done(out) => Ok(PartialOutcome {
            watermark: out.high_water,
            exhausted: false,
        }),
        EvalResult::FuelExhausted(p) => Ok(p),
    }
}

/// Evaluates a closed expression (used by tests).
pub fn eval_expr_closed(e: &Expr, fuel: u64) -> Result<EvalResult, RuntimeError> {
    let program = Program::default();
    let mut m = Machine {
        program: &program,
        fuel,
        used: 0,
    };
    match m.eval(&Env::default(), e)? {
        Step::Done(value, high_water, leftover) => Ok(EvalResult::Done(CostOutcome {
            value,
            high_water,
            leftover,
            steps: m.used,
        })),
        Step::Partial(watermark) => Ok(EvalResult::FuelExhausted(PartialOutcome {
            watermark,
            exhausted: true,
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Span;
    use crate::rational::rat;

    fn ex(kind: ExprKind) -> Expr {
        Expr::new(kind, Span::default())
    }

    fn tick(r: i64) -> Expr {
        ex(ExprKind::Tick(rat(r)))
    }

    fn let_(e1: Expr, x: &str, e2: Expr) -> Expr {
        ex(ExprKind::Let(Box::new(e1), x.into(), Box::new(e2)))
    }

    #[test]
    fn tick_negative_releases() {
        match eval_expr_closed(&tick(-1), 100).unwrap() {
            EvalResult::Done(out) => {
                assert_eq!(out.high_water, rat(0));
                assert_eq!(out.leftover, rat(1));
            }
            _ => panic!("should terminate"),
        }
    }

    #[test]
    fn let_composition_spot_check() {
        // e1 with (2,1), e2 with (3,0) composes to (4,0)
        let e1 = let_(tick(2), "_a", tick(-1)); // (2,1)
        let e2 = tick(3); // (3,0)
        match eval_expr_closed(&let_(e1.clone(), "_b", e2), 100).unwrap() {
            EvalResult::Done(out) => {
                assert_eq!(out.high_water, rat(4));
                assert_eq!(out.leftover, rat(0));
            }
            _ => panic!("should terminate"),
        }
        // sanity: e1 alone is (2,1)
        match eval_expr_closed(&e1, 100).unwrap() {
            EvalResult::Done(out) => {
                assert_eq!((out.high_water, out.leftover), (rat(2), rat(1)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn fuel_zero_gives_zero_watermark() {
        match eval_expr_closed(&tick(5), 0).unwrap() {
            EvalResult::FuelExhausted(p) => {
                assert_eq!(p.watermark, rat(0));
                assert!(p.exhausted);
            }
            _ => panic!("should exhaust"),
        }
    }

    #[test]
    fn partial_watermark_through_let() {
        // let _ = tick 2 in tick 3, with just enough fuel to finish tick 2
        // (let itself consumes a unit first).
        let e = let_(tick(2), "_x", tick(3));
        match eval_expr_closed(&e, 2).unwrap() {
            EvalResult::FuelExhausted(p) => assert_eq!(p.watermark, rat(2)),
            _ => panic!("should exhaust"),
        }
    }
}
