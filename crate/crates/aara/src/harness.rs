//! Differential testing: enumerate inputs, run the cost interpreter, and
//! check every inferred bound against measured high-water marks.
//!
//! For a signature with argument potential Φ and turnstile (q, q'), every
//! terminating run with cost pair (p, p') must satisfy both
//! `p <= Φ(input) + q` and `p - p' <= Φ(input) + q - Φ(result) - q'`,
//! with exact rational comparison.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{BasicTy, SimpleType, Value};
use crate::basis::{value_potential, AnnotatedType, BasisConfig};
use crate::interp::{eval, EvalResult};
use crate::rational::Rat;
use crate::report::FunctionReport;

/// Deterministic input enumeration: all values of the type up to the size
/// bound with integer components in [-value_bound, value_bound]; when a
/// list length admits more element combinations than `cap_per_len`, a seeded
/// sample (plus a canonical duplicate-free list and an all-equal list) is
/// used instead.
pub fn enumerate_inputs(
    ty: &SimpleType,
    size_bound: usize,
    value_bound: i64,
    cap_per_len: usize,
    seed: u64,
) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    enum_ty(ty, size_bound, value_bound, cap_per_len, &mut rng)
}

fn enum_ty(
    ty: &SimpleType,
    size_bound: usize,
    value_bound: i64,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Value> {
    match ty {
        SimpleType::Basic(BasicTy::Int) => (-value_bound..=value_bound)
            .map(Value::int)
            .collect(),
        SimpleType::Basic(BasicTy::Bool) => vec![Value::Bool(false), Value::Bool(true)],
        SimpleType::Basic(BasicTy::Unit) => vec![Value::Unit],
        SimpleType::Pair(l, r) => {
            let ls = enum_ty(l, size_bound, value_bound, cap, rng);
            let rs = enum_ty(r, size_bound, value_bound, cap, rng);
            let mut out = Vec::new();
            for a in &ls {
                for b in &rs {
                    out.push(Value::Pair(Box::new(a.clone()), Box::new(b.clone())));
                    if out.len() >= cap * (size_bound + 1) {
                        return out;
                    }
                }
            }
            out
        }
        SimpleType::List(elem) => {
            let elems = enum_ty(elem, size_bound.saturating_sub(1), value_bound, cap, rng);
            let mut out = Vec::new();
            for len in 0..=size_bound {
                let total = (elems.len() as f64).powi(len as i32);
                if total <= cap as f64 {
                    // exhaustive combinations at this length
                    let mut combos: Vec<Vec<Value>> = vec![vec![]];
                    for _ in 0..len {
                        let mut next = Vec::new();
                        for c in &combos {
                            for e in &elems {
                                let mut c2 = c.clone();
                                c2.push(e.clone());
                                next.push(c2);
                            }
                        }
                        combos = next;
                    }
                    out.extend(combos.into_iter().map(Value::List));
                } else {
                    // canonical duplicate-free list
                    if matches!(**elem, SimpleType::Basic(BasicTy::Int)) {
                        out.push(Value::List(
                            (1..=len as i64).map(Value::int).collect(),
                        ));
                        // all-equal list (maximal duplication)
                        out.push(Value::List(vec![Value::int(0); len]));
                    }
                    let samples = cap.min(5);
                    for _ in 0..samples {
                        let l: Vec<Value> = (0..len)
                            .map(|_| elems[rng.gen_range(0..elems.len())].clone())
                            .collect();
                        out.push(Value::List(l));
                    }
                }
            }
            out
        }
    }
}

/// One differential check.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub input: Value,
    pub measured_high: Rat,
    pub measured_left: Rat,
    pub potential_in: Rat,
    pub potential_out: Rat,
    /// Φ(input) + q — the high-water bound.
    pub bound: Rat,
    pub slack: Rat,
    pub violation: bool,
}

#[derive(Debug, Clone)]
pub struct BoundCheckReport {
    pub function: String,
    pub checks: Vec<BoundCheck>,
    pub fuel_exhausted: usize,
    pub violations: usize,
    pub max_slack: Option<Rat>,
    pub min_slack: Option<Rat>,
    /// Inputs achieving zero slack.
    pub tight: usize,
}

impl BoundCheckReport {
    pub fn summary(&self) -> String {
        format!(
            "{}: {} inputs, {} violations, {} tight, slack in [{}, {}]{}",
            self.function,
            self.checks.len(),
            self.violations,
            self.tight,
            self.min_slack
                .as_ref()
                .map(|r| r.to_string())
                .unwrap_or_else(|| "-".into()),
            self.max_slack
                .as_ref()
                .map(|r| r.to_string())
                .unwrap_or_else(|| "-".into()),
            if self.fuel_exhausted > 0 {
                format!(" ({} runs out of fuel, excluded)", self.fuel_exhausted)
            } else {
                String::new()
            }
        )
    }
}

/// Runs the interpreter on every input and checks both soundness
/// inequalities against the function's inferred signature.
pub fn check_bound(
    program: &crate::ast::Program,
    report: &FunctionReport,
    inputs: &[Value],
    fuel: u64,
) -> Result<BoundCheckReport, crate::interp::RuntimeError> {
    let cfg: BasisConfig = report.cfg;
    let mut checks = Vec::new();
    let mut fuel_exhausted = 0usize;
    for input in inputs {
        match eval(program, &report.function, input.clone(), fuel)? {
            EvalResult::FuelExhausted(_) => fuel_exhausted += 1,
            EvalResult::Done(out) => {
                let phi_in = potential_of(input, &report.arg_type, &cfg);
                let phi_out = potential_of(&out.value, &report.result_type, &cfg);
                let bound = &phi_in + &report.q_in;
                let high_ok = out.high_water <= bound;
                let net_lhs = &out.high_water - &out.leftover;
                let net_rhs = &bound - &phi_out - &report.q_out;
                let net_ok = net_lhs <= net_rhs;
                let slack = &bound - &out.high_water;
                checks.push(BoundCheck {
                    input: input.clone(),
                    measured_high: out.high_water,
                    measured_left: out.leftover,
                    potential_in: phi_in,
                    potential_out: phi_out,
                    bound,
                    slack,
                    violation: !(high_ok && net_ok),
                });
            }
        }
    }
    let violations = checks.iter().filter(|c| c.violation).count();
    let tight = checks.iter().filter(|c| c.slack.is_zero()).count();
    let max_slack = checks.iter().map(|c| c.slack.clone()).max();
    let min_slack = checks.iter().map(|c| c.slack.clone()).min();
    Ok(BoundCheckReport {
        function: report.function.clone(),
        checks,
        fuel_exhausted,
        violations,
        max_slack,
        min_slack,
        tight,
    })
}

fn potential_of(v: &Value, t: &AnnotatedType, cfg: &BasisConfig) -> Rat {
    value_potential(v, t, cfg).expect("value matches the signature type")
}

/// Parses a CLI value literal: `[1,2,3]`, `(1,[2])`, `true`, `42`, `()`.
pub fn parse_value(s: &str) -> Result<Value, String> {
    let b = s.as_bytes();
    let (v, rest) = parse_val(b, 0)?;
    let rest = skip_ws(b, rest);
    if rest != b.len() {
        return Err(format!("trailing input at byte {rest}"));
    }
    Ok(v)
}

fn skip_ws(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn parse_val(b: &[u8], i: usize) -> Result<(Value, usize), String> {
    let i = skip_ws(b, i);
    match b.get(i) {
        Some(b'[') => {
            let mut i = skip_ws(b, i + 1);
            let mut items = Vec::new();
            if b.get(i) == Some(&b']') {
                return Ok((Value::List(items), i + 1));
            }
            loop {
                let (v, j) = parse_val(b, i)?;
                items.push(v);
                i = skip_ws(b, j);
                match b.get(i) {
                    Some(b',') => i = i + 1,
                    Some(b']') => return Ok((Value::List(items), i + 1)),
                    _ => return Err(format!("expected `,` or `]` at byte {i}")),
                }
            }
        }
        Some(b'(') => {
            let j = skip_ws(b, i + 1);
            if b.get(j) == Some(&b')') {
                return Ok((Value::Unit, j + 1));
            }
            let (a, j) = parse_val(b, i + 1)?;
            let j = skip_ws(b, j);
            if b.get(j) != Some(&b',') {
                return Err(format!("expected `,` in pair at byte {j}"));
            }
            let (bv, j) = parse_val(b, j + 1)?;
            let j = skip_ws(b, j);
            if b.get(j) != Some(&b')') {
                return Err(format!("expected `)` at byte {j}"));
            }
            Ok((Value::Pair(Box::new(a), Box::new(bv)), j + 1))
        }
        Some(b't') if b[i..].starts_with(b"true") => Ok((Value::Bool(true), i + 4)),
        Some(b'f') if b[i..].starts_with(b"false") => Ok((Value::Bool(false), i + 5)),
        Some(c) if c.is_ascii_digit() || *c == b'-' => {
            let mut j = i + 1;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let text = std::str::from_utf8(&b[i..j]).unwrap();
            let n: BigInt = text
                .parse()
                .map_err(|_| format!("bad integer `{text}`"))?;
            Ok((Value::Int(n), j))
        }
        _ => Err(format!("expected a value at byte {i}")),
    }
}
