//! Expansion of `q + φ(n, P)` into the canonical form
//! `Σ_b poly_b(n) · b^n + poly(n)`, using the alternating-sum identity
//! `S(n+1,b+1) = (1/b!) Σ_{i=0}^{b} (-1)^{b-i} C(b,i) (i+1)^n`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

use crate::basis::{binomial, Annotation, BasisConfig};
use crate::rational::Rat;

/// A polynomial in n with exact rational coefficients; `coeffs[j]` is the
/// coefficient of n^j.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub coeffs: Vec<Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add_scaled(&mut self, other: &Poly, scale: &Rat) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), Rat::zero());
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            self.coeffs[i] = &self.coeffs[i] + c * scale;
        }
    }

    /// Multiply by (n - r).
    fn mul_linear(&mut self, r: i64) {
        let mut out = vec![Rat::zero(); self.coeffs.len() + 1];
        let rr = Rat::from_integer(BigInt::from(r));
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] = &out[i + 1] + c;
            out[i] = &out[i] - c * &rr;
        }
        self.coeffs = out;
    }

    pub fn eval(&self, n: u64) -> Rat {
        let nr = Rat::from_integer(BigInt::from(n));
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * &nr + c;
        }
        acc
    }
}

/// C(n,k) expanded as a polynomial in n.
fn binomial_poly(k: u32) -> Poly {
    let mut p = Poly::constant(Rat::one());
    let mut fact = BigInt::one();
    for i in 0..k {
        p.mul_linear(i as i64);
        fact *= BigInt::from(i + 1);
    }
    let inv = Rat::new(BigInt::one(), fact);
    for c in &mut p.coeffs {
        *c = &*c * &inv;
    }
    p
}

/// `q + φ(n, P)` as polynomials grouped by exponential base. Base 1 is the
/// plain polynomial part.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub terms: BTreeMap<u64, Poly>,
}

impl ClosedForm {
    pub fn of(cfg: &BasisConfig, p: &Annotation, q: &Rat) -> Self {
        let mut terms: BTreeMap<u64, Poly> = BTreeMap::new();
        terms.insert(1, Poly::constant(q.clone()));
        for (idx, coeff) in cfg.indices().iter().zip(&p.coeffs) {
            if coeff.is_zero() {
                continue;
            }
            let cnk = binomial_poly(idx.k);
            let b = idx.b as u64;
            let mut b_fact = BigInt::one();
            for i in 1..=b {
                b_fact *= BigInt::from(i);
            }
            for i in 0..=b {
                // weight of (i+1)^n inside S(n+1,b+1)
                let sign = if (b - i) % 2 == 0 {
                    BigInt::one()
                } else {
                    -BigInt::one()
                };
                let w = Rat::new(sign * binomial(b, i), b_fact.clone());
                let scale = coeff * &w;
                terms
                    .entry(i + 1)
                    .or_insert_with(Poly::zero)
                    .add_scaled(&cnk, &scale);
            }
        }
        terms.retain(|base, poly| *base == 1 || !poly.is_zero());
        ClosedForm { terms }
    }

    pub fn eval(&self, n: u64) -> Rat {
        let mut total = Rat::zero();
        for (base, poly) in &self.terms {
            let pow = Rat::from_integer(BigInt::from(*base).pow(n as u32));
            total += poly.eval(n) * pow;
        }
        total
    }

    /// Renders with the length variable called `var`, e.g. `3·2^n - 2`.
    pub fn render(&self, var: &str) -> String {
        let mut pieces: Vec<(Rat, String)> = Vec::new();
        for (base, poly) in self.terms.iter().rev() {
            for (j, c) in poly.coeffs.iter().enumerate().rev() {
                if c.is_zero() {
                    continue;
                }
                let mut sym = String::new();
                if j == 1 {
                    sym.push_str(var);
                } else if j > 1 {
                    sym.push_str(&format!("{var}^{j}"));
                }
                if *base > 1 {
                    if !sym.is_empty() {
                        sym.push('·');
                    }
                    sym.push_str(&format!("{base}^{var}"));
                }
                pieces.push((c.clone(), sym));
            }
        }
        if pieces.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (c, sym)) in pieces.iter().enumerate() {
            let mag = c.abs();
            let sign_neg = c.is_negative();
            if i == 0 {
                if sign_neg {
                    out.push('-');
                }
            } else if sign_neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            if sym.is_empty() {
                out.push_str(&mag.to_string());
            } else if mag.is_one() {
                out.push_str(sym);
            } else {
                out.push_str(&format!("{mag}·{sym}"));
            }
        }
        out
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("n"))
    }
}
