//! Exact rational arithmetic helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_max(a: &Rat, b: &Rat) -> Rat {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// `max(r, 0)` — the nonnegative part.
pub fn pos_part(r: &Rat) -> Rat {
    if r.is_positive() {
        r.clone()
    } else {
        Rat::zero()
    }
}

/// Parses `3`, `-1`, `5/2`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
        None => {
            let n: BigInt = s.parse().ok()?;
            Some(Rat::from_integer(n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3").unwrap(), rat(3));
        assert_eq!(parse_rat("-1").unwrap(), rat(-1));
        assert_eq!(parse_rat("5/2").unwrap(), rat_frac(5, 2));
        assert!(parse_rat("1/0").is_none());
        assert!(parse_rat("x").is_none());
    }

    #[test]
    fn pos_part_clamps() {
        assert_eq!(pos_part(&rat(-3)), rat(0));
        assert_eq!(pos_part(&rat_frac(5, 2)), rat_frac(5, 2));
    }
}
