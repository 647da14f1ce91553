//! Potential function bases and annotation arithmetic.
//!
//! Every basis function is a product C(n,k) · S(n+1,b+1) of a binomial
//! coefficient and an offset Stirling number of the second kind, indexed by a
//! pair (b,k). The binomial basis is the row b = 0, the Stirling basis the
//! column k = 0, and the mixed basis the full rectangle; the index (0,0)
//! (the constant function) is excluded because constant potential is carried
//! by the turnstile. All basis functions vanish at n = 0.
//!
//! Potential of a list of length n under annotation P = (p_i) is
//! φ(n,P) = Σ_i p_i · f_i(n). The shift operator ◁ and constant difference δ
//! satisfy φ(n+1,P) = δ(P) + φ(n,◁P), both linear in P:
//!
//!   ◁p_{b,k} = (b+1)·p_{b,k} + (b+1)·p_{b,k+1} + p_{b+1,k} + p_{b+1,k+1}
//!   δ(P)     = p_{0,1} + p_{1,0} + p_{1,1}
//!
//! with out-of-prefix coefficients read as zero.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;
use std::sync::OnceLock;

use crate::ast::{BasicTy, SimpleType, Value};
use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Binomial,
    Stirling,
    Mixed,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::Binomial => write!(f, "binomial"),
            BasisKind::Stirling => write!(f, "stirling"),
            BasisKind::Mixed => write!(f, "mixed"),
        }
    }
}

/// Index of a basis function C(n,k) · S(n+1,b+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex {
    pub b: u32,
    pub k: u32,
}

impl BasisIndex {
    pub fn new(b: u32, k: u32) -> Self {
        BasisIndex { b, k }
    }

    /// True iff the basis function grows linearly (it is C(n,1)).
    pub fn is_linear(self) -> bool {
        self.b == 0 && self.k == 1
    }
}

/// A chosen finite basis prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisConfig {
    pub kind: BasisKind,
    /// Maximum binomial degree K (binomial and mixed kinds).
    pub poly_degree: u32,
    /// Maximum Stirling degree B (stirling and mixed kinds).
    pub exp_degree: u32,
    /// Allow negative binomial-row coefficients guarded by p_{0,k} + p_{1,0} ≥ 0.
    pub demotion: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl BasisConfig {
    pub fn new(
        kind: BasisKind,
        poly_degree: u32,
        exp_degree: u32,
        demotion: bool,
    ) -> Result<Self, ConfigError> {
        match kind {
            BasisKind::Binomial if poly_degree < 1 => {
                return Err(ConfigError("binomial basis needs poly degree >= 1".into()))
            }
            BasisKind::Stirling if exp_degree < 1 => {
                return Err(ConfigError("stirling basis needs exp degree >= 1".into()))
            }
            BasisKind::Mixed if poly_degree < 1 || exp_degree < 1 => {
                return Err(ConfigError("mixed basis needs both degrees >= 1".into()))
            }
            _ => {}
        }
        if demotion && kind != BasisKind::Mixed {
            return Err(ConfigError("demotion requires the mixed basis".into()));
        }
        Ok(BasisConfig {
            kind,
            poly_degree,
            exp_degree,
            demotion,
        })
    }

    pub fn binomial(k: u32) -> Self {
        Self::new(BasisKind::Binomial, k, 0, false).unwrap()
    }

    pub fn stirling(b: u32) -> Self {
        Self::new(BasisKind::Stirling, 0, b, false).unwrap()
    }

    pub fn mixed(b: u32, k: u32, demotion: bool) -> Self {
        Self::new(BasisKind::Mixed, k, b, demotion).unwrap()
    }

    /// The index prefix in canonical order (b-major, then k).
    pub fn indices(&self) -> Vec<BasisIndex> {
        match self.kind {
            BasisKind::Binomial => (1..=self.poly_degree).map(|k| BasisIndex::new(0, k)).collect(),
            BasisKind::Stirling => (1..=self.exp_degree).map(|b| BasisIndex::new(b, 0)).collect(),
            BasisKind::Mixed => {
                let mut out = Vec::new();
                for b in 0..=self.exp_degree {
                    for k in 0..=self.poly_degree {
                        if b == 0 && k == 0 {
                            continue;
                        }
                        out.push(BasisIndex::new(b, k));
                    }
                }
                out
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.indices().len()
    }

    pub fn contains(&self, idx: BasisIndex) -> bool {
        self.indices().contains(&idx)
    }

    /// Position of `idx` in the canonical order.
    pub fn position(&self, idx: BasisIndex) -> Option<usize> {
        self.indices().iter().position(|i| *i == idx)
    }

    /// Position of the linear index C(n,1), if the prefix has one.
    pub fn linear_position(&self) -> Option<usize> {
        self.position(BasisIndex::new(0, 1))
    }

    /// `◁` as a row description: for each target index, the (coefficient,
    /// source-position) pairs of the linear map, out-of-prefix sources dropped.
    pub fn shift_rows(&self) -> Vec<Vec<(Rat, usize)>> {
        let idxs = self.indices();
        idxs.iter()
            .map(|t| {
                let mut row = Vec::new();
                let sources = [
                    (Rat::from_integer(BigInt::from(t.b + 1)), BasisIndex::new(t.b, t.k)),
                    (
                        Rat::from_integer(BigInt::from(t.b + 1)),
                        BasisIndex::new(t.b, t.k + 1),
                    ),
                    (Rat::one(), BasisIndex::new(t.b + 1, t.k)),
                    (Rat::one(), BasisIndex::new(t.b + 1, t.k + 1)),
                ];
                for (c, src) in sources {
                    if let Some(pos) = self.position(src) {
                        row.push((c, pos));
                    }
                }
                row
            })
            .collect()
    }

    /// δ as the positions whose coefficients sum to the released constant:
    /// p_{0,1} + p_{1,0} + p_{1,1}, restricted to the prefix.
    pub fn delta_positions(&self) -> Vec<usize> {
        [
            BasisIndex::new(0, 1),
            BasisIndex::new(1, 0),
            BasisIndex::new(1, 1),
        ]
        .into_iter()
        .filter_map(|i| self.position(i))
        .collect()
    }
}

static BINOM_MEMO: OnceLock<Mutex<HashMap<(u64, u64), BigInt>>> = OnceLock::new();
static STIRLING_MEMO: OnceLock<Mutex<HashMap<(u64, u64), BigInt>>> = OnceLock::new();

/// Binomial coefficient C(n,k).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    if k == 0 || k == n {
        return BigInt::one();
    }
    let memo = BINOM_MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = memo.lock().unwrap().get(&(n, k)) {
        return v.clone();
    }
    let v = binomial(n - 1, k - 1) + binomial(n - 1, k);
    memo.lock().unwrap().insert((n, k), v.clone());
    v
}

/// Stirling number of the second kind S(n,k), by the recurrence
/// S(n+1,k+1) = (k+1)·S(n,k+1) + S(n,k) with S(0,0) = 1.
pub fn stirling2(n: u64, k: u64) -> BigInt {
    if n == 0 && k == 0 {
        return BigInt::one();
    }
    if n == 0 || k == 0 || k > n {
        return BigInt::zero();
    }
    let memo = STIRLING_MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = memo.lock().unwrap().get(&(n, k)) {
        return v.clone();
    }
    let v = BigInt::from(k) * stirling2(n - 1, k) + stirling2(n - 1, k - 1);
    memo.lock().unwrap().insert((n, k), v.clone());
    v
}

/// Value of the basis function at `idx` for a list of length `n`:
/// C(n,k) · S(n+1,b+1). Zero at n = 0 for every admissible index.
pub fn basis_value(idx: BasisIndex, n: u64) -> BigInt {
    binomial(n, idx.k as u64) * stirling2(n + 1, idx.b as u64 + 1)
}

/// A concrete annotation: rational coefficients over a config's prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub coeffs: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainError(pub String);

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Annotation {
    pub fn zero(cfg: &BasisConfig) -> Self {
        Annotation {
            coeffs: vec![Rat::zero(); cfg.dim()],
        }
    }

    pub fn from_coeffs(cfg: &BasisConfig, coeffs: Vec<Rat>) -> Self {
        assert_eq!(coeffs.len(), cfg.dim(), "annotation dimension mismatch");
        Annotation { coeffs }
    }

    pub fn get(&self, cfg: &BasisConfig, idx: BasisIndex) -> Rat {
        cfg.position(idx)
            .map(|p| self.coeffs[p].clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Checks the domain invariant: all coefficients nonnegative, except that
    /// with demotion the row b = 0 satisfies p_{0,k} + p_{1,0} ≥ 0 instead.
    pub fn check_domain(&self, cfg: &BasisConfig) -> Result<(), DomainError> {
        let idxs = cfg.indices();
        let p10 = self.get(cfg, BasisIndex::new(1, 0));
        for (i, idx) in idxs.iter().enumerate() {
            let v = &self.coeffs[i];
            if cfg.demotion && idx.b == 0 {
                if (v + &p10).is_negative() {
                    return Err(DomainError(format!(
                        "p_{{0,{}}} + p_{{1,0}} = {} < 0",
                        idx.k,
                        v + &p10
                    )));
                }
            } else if v.is_negative() {
                return Err(DomainError(format!(
                    "coefficient at ({},{}) is negative: {}",
                    idx.b, idx.k, v
                )));
            }
        }
        Ok(())
    }
}

/// Pointwise sum, splitting potential between shared copies.
pub fn add(p: &Annotation, q: &Annotation) -> Annotation {
    assert_eq!(p.coeffs.len(), q.coeffs.len());
    Annotation {
        coeffs: p
            .coeffs
            .iter()
            .zip(&q.coeffs)
            .map(|(a, b)| a + b)
            .collect(),
    }
}

/// φ(n, P): potential stored on the list spine alone.
pub fn phi(cfg: &BasisConfig, n: u64, p: &Annotation) -> Rat {
    cfg.indices()
        .iter()
        .zip(&p.coeffs)
        .map(|(idx, c)| c * Rat::from_integer(basis_value(*idx, n)))
        .sum()
}

/// ◁P: the annotation a list's tail carries.
pub fn shift(cfg: &BasisConfig, p: &Annotation) -> Annotation {
    let rows = cfg.shift_rows();
    Annotation {
        coeffs: rows
            .iter()
            .map(|row| row.iter().map(|(c, pos)| c * &p.coeffs[*pos]).sum())
            .collect(),
    }
}

/// δ(P): the constant released when a list with annotation P is matched.
pub fn delta(cfg: &BasisConfig, p: &Annotation) -> Rat {
    cfg.delta_positions()
        .iter()
        .map(|pos| p.coeffs[*pos].clone())
        .sum()
}

/// Moves `s` units of S(n+1,2) potential into one unit of every binomial
/// potential simultaneously: p_{1,0} -= s, p_{0,k} += s for k = 1..K.
pub fn demote(cfg: &BasisConfig, p: &Annotation, s: &Rat) -> Result<Annotation, DomainError> {
    if !(cfg.kind == BasisKind::Mixed && cfg.demotion) {
        return Err(DomainError(
            "demotion requires a mixed basis with demotion enabled".into(),
        ));
    }
    if s.is_negative() {
        return Err(DomainError("demotion amount must be nonnegative".into()));
    }
    let mut out = p.clone();
    for (i, idx) in cfg.indices().iter().enumerate() {
        if *idx == BasisIndex::new(1, 0) {
            out.coeffs[i] = &out.coeffs[i] - s;
        } else if idx.b == 0 {
            out.coeffs[i] = &out.coeffs[i] + s;
        }
    }
    out.check_domain(cfg)?;
    Ok(out)
}

/// A type with concrete annotations on every list layer.
#[derive(Debug, Clone, PartialEq)]
pub enum AnnotatedType {
    Basic(BasicTy),
    List(Box<AnnotatedType>, Annotation),
    Pair(Box<AnnotatedType>, Box<AnnotatedType>),
}

impl AnnotatedType {
    pub fn erase(&self) -> SimpleType {
        match self {
            AnnotatedType::Basic(b) => SimpleType::Basic(*b),
            AnnotatedType::List(e, _) => SimpleType::List(Box::new(e.erase())),
            AnnotatedType::Pair(l, r) => {
                SimpleType::Pair(Box::new(l.erase()), Box::new(r.erase()))
            }
        }
    }

    /// All-zero annotations over the shape of `ty`.
    pub fn zero_of(cfg: &BasisConfig, ty: &SimpleType) -> Self {
        match ty {
            SimpleType::Basic(b) => AnnotatedType::Basic(*b),
            SimpleType::List(e) => {
                AnnotatedType::List(Box::new(Self::zero_of(cfg, e)), Annotation::zero(cfg))
            }
            SimpleType::Pair(l, r) => AnnotatedType::Pair(
                Box::new(Self::zero_of(cfg, l)),
                Box::new(Self::zero_of(cfg, r)),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMismatch(pub String);

impl fmt::Display for ShapeMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Φ(v : T): total potential stored in a value, defined recursively —
/// basics carry none, pairs add components, nil carries none, and a cons
/// releases δ(P) plus head potential plus tail potential at ◁P.
pub fn value_potential(
    v: &Value,
    t: &AnnotatedType,
    cfg: &BasisConfig,
) -> Result<Rat, ShapeMismatch> {
    match (v, t) {
        (Value::Int(_), AnnotatedType::Basic(BasicTy::Int))
        | (Value::Bool(_), AnnotatedType::Basic(BasicTy::Bool))
        | (Value::Unit, AnnotatedType::Basic(BasicTy::Unit)) => Ok(Rat::zero()),
        (Value::Pair(a, b), AnnotatedType::Pair(l, r)) => {
            Ok(value_potential(a, l, cfg)? + value_potential(b, r, cfg)?)
        }
        (Value::List(items), AnnotatedType::List(elem, ann)) => {
            let mut total = Rat::zero();
            let mut cur = ann.clone();
            for (i, item) in items.iter().enumerate() {
                // item i is a cons cell whose remaining spine has annotation cur
                let remaining = items.len() - i;
                debug_assert!(remaining >= 1);
                total += delta(cfg, &cur);
                total += value_potential(item, elem, cfg)?;
                cur = shift(cfg, &cur);
            }
            Ok(total)
        }
        _ => Err(ShapeMismatch(format!("value {v} does not match type shape"))),
    }
}

/// Lemma-style closed form: φ(n,P) plus the element potentials.
pub fn value_potential_closed(
    v: &Value,
    t: &AnnotatedType,
    cfg: &BasisConfig,
) -> Result<Rat, ShapeMismatch> {
    match (v, t) {
        (Value::List(items), AnnotatedType::List(elem, ann)) => {
            let mut total = phi(cfg, items.len() as u64, ann);
            for item in items {
                total += value_potential_closed(item, elem, cfg)?;
            }
            Ok(total)
        }
        (Value::Pair(a, b), AnnotatedType::Pair(l, r)) => Ok(value_potential_closed(a, l, cfg)?
            + value_potential_closed(b, r, cfg)?),
        _ => value_potential(v, t, cfg),
    }
}

/// Renders an annotation the way signatures print it: `L^{3}`, `L^{2,2}`,
/// `L^{0,2,1}` (canonical order; rows separated by `;` when B ≥ 2 and K ≥ 1).
pub fn render_annotation(cfg: &BasisConfig, ann: &Annotation) -> String {
    let idxs = cfg.indices();
    let mut parts: Vec<String> = Vec::new();
    let mut cur_row = idxs.first().map(|i| i.b).unwrap_or(0);
    let mut out = String::new();
    for (i, idx) in idxs.iter().enumerate() {
        if idx.b != cur_row {
            parts.push(out.clone());
            out.clear();
            cur_row = idx.b;
        }
        if !out.is_empty() {
            out.push(',');
        }
        out.push_str(&ann.coeffs[i].to_string());
    }
    parts.push(out);
    // Only use row separators when the rectangle is wide enough to be
    // ambiguous; the common small shapes print flat, e.g. L^{0,2,1}.
    if cfg.kind == BasisKind::Mixed && cfg.exp_degree >= 2 && cfg.poly_degree >= 1 {
        format!("L^{{{}}}", parts.join(";"))
    } else {
        format!("L^{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_frac};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force count of ways to partition {0..n-1} into exactly k
    /// nonempty blocks — the independent oracle for stirling2.
    fn partitions_brute(n: u64, k: u64) -> u64 {
        fn go(remaining: u64, blocks: &mut Vec<Vec<u64>>, k: u64, total: u64) -> u64 {
            if remaining == total {
                // placed everything
                return u64::from(blocks.len() as u64 == k);
            }
            let item = remaining;
            let mut count = 0;
            for i in 0..blocks.len() {
                blocks[i].push(item);
                count += go(remaining + 1, blocks, k, total);
                blocks[i].pop();
            }
            blocks.push(vec![item]);
            count += go(remaining + 1, blocks, k, total);
            blocks.pop();
            count
        }
        if n == 0 {
            return u64::from(k == 0);
        }
        go(0, &mut Vec::new(), k, n)
    }

    #[test]
    fn stirling_against_enumeration() {
        for n in 0..=7 {
            for k in 0..=7 {
                assert_eq!(
                    stirling2(n, k),
                    BigInt::from(partitions_brute(n, k)),
                    "S({n},{k})"
                );
            }
        }
        assert_eq!(stirling2(4, 2), BigInt::from(7));
    }

    #[test]
    fn stirling_base_cases_and_powers() {
        assert_eq!(stirling2(0, 0), BigInt::one());
        assert_eq!(stirling2(3, 0), BigInt::zero());
        for n in 0..=10u32 {
            let expect = BigInt::from(2u64).pow(n) - 1;
            assert_eq!(stirling2(n as u64 + 1, 2), expect, "S(n+1,2) = 2^n - 1");
        }
    }

    #[test]
    fn basis_values() {
        let mixed11 = BasisIndex::new(1, 1);
        assert_eq!(basis_value(mixed11, 3), BigInt::from(21)); // C(3,1)*S(4,2)
        assert_eq!(basis_value(BasisIndex::new(0, 2), 4), BigInt::from(6)); // C(4,2)
        for idx in BasisConfig::mixed(3, 3, false).indices() {
            assert_eq!(basis_value(idx, 0), BigInt::zero(), "f_i(0) = 0");
        }
    }

    #[test]
    fn phi_examples() {
        let st = BasisConfig::stirling(1);
        let p = Annotation::from_coeffs(&st, vec![rat(3)]);
        assert_eq!(phi(&st, 3, &p), rat(21));

        let mx = BasisConfig::mixed(1, 1, false);
        let p = Annotation::from_coeffs(&mx, vec![rat(0), rat(2), rat(1)]);
        assert_eq!(phi(&mx, 3, &p), rat(35));
        assert_eq!(phi(&mx, 0, &p), rat(0));
    }

    #[test]
    fn shift_examples() {
        let st = BasisConfig::stirling(1);
        let p = Annotation::from_coeffs(&st, vec![rat(3)]);
        assert_eq!(shift(&st, &p).coeffs, vec![rat(6)]);

        let st2 = BasisConfig::stirling(2);
        let p = Annotation::from_coeffs(&st2, vec![rat(2), rat(2)]);
        assert_eq!(shift(&st2, &p).coeffs, vec![rat(6), rat(6)]);

        let mx = BasisConfig::mixed(1, 1, false);
        let p = Annotation::from_coeffs(&mx, vec![rat(0), rat(2), rat(1)]);
        assert_eq!(shift(&mx, &p).coeffs, vec![rat(1), rat(6), rat(2)]);

        let mxd = BasisConfig::mixed(1, 1, true);
        let p = Annotation::from_coeffs(&mxd, vec![rat(-1), rat(4), rat(0)]);
        assert_eq!(shift(&mxd, &p).coeffs, vec![rat(-1), rat(8), rat(0)]);
    }

    #[test]
    fn delta_examples() {
        let st = BasisConfig::stirling(1);
        assert_eq!(
            delta(&st, &Annotation::from_coeffs(&st, vec![rat(3)])),
            rat(3)
        );
        let mx = BasisConfig::mixed(1, 1, false);
        assert_eq!(
            delta(&mx, &Annotation::from_coeffs(&mx, vec![rat(0), rat(2), rat(1)])),
            rat(3)
        );
        let bi = BasisConfig::binomial(1);
        assert_eq!(
            delta(&bi, &Annotation::from_coeffs(&bi, vec![rat(1)])),
            rat(1)
        );
    }

    #[test]
    fn add_examples() {
        let st = BasisConfig::stirling(1);
        let three = Annotation::from_coeffs(&st, vec![rat(3)]);
        assert_eq!(add(&three, &three).coeffs, vec![rat(6)]);
        let zero = Annotation::zero(&st);
        assert_eq!(add(&three, &zero), three);

        let st2 = BasisConfig::stirling(2);
        let two2 = Annotation::from_coeffs(&st2, vec![rat(2), rat(2)]);
        assert_eq!(add(&add(&two2, &two2), &two2).coeffs, vec![rat(6), rat(6)]);
    }

    #[test]
    fn demote_examples() {
        let cfg = BasisConfig::mixed(1, 1, true);
        let p = Annotation::from_coeffs(&cfg, vec![rat(0), rat(4), rat(2)]);
        let d = demote(&cfg, &p, &rat(1)).unwrap();
        assert_eq!(d.coeffs, vec![rat(1), rat(3), rat(2)]);
        assert_eq!(demote(&cfg, &p, &rat(0)).unwrap(), p);
        // over-demoting would break p_{0,k} + p_{1,0} >= 0 once p_{1,0} < -p_{0,k}
        let q = Annotation::from_coeffs(&cfg, vec![rat(-1), rat(1), rat(0)]);
        assert!(demote(&cfg, &q, &rat(2)).is_err());
    }

    fn rand_ann(cfg: &BasisConfig, rng: &mut ChaCha8Rng) -> Annotation {
        Annotation {
            coeffs: (0..cfg.dim())
                .map(|_| rat_frac(rng.gen_range(0..=20), rng.gen_range(1..=8)))
                .collect(),
        }
    }

    #[test]
    fn shift_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cfgs = vec![];
        for d in 1..=4 {
            cfgs.push(BasisConfig::binomial(d));
            cfgs.push(BasisConfig::stirling(d));
        }
        for b in 1..=3 {
            for k in 1..=3 {
                cfgs.push(BasisConfig::mixed(b, k, false));
            }
        }
        for cfg in &cfgs {
            for _ in 0..40 {
                let p = rand_ann(cfg, &mut rng);
                let d = delta(cfg, &p);
                let sh = shift(cfg, &p);
                for n in 0..=20 {
                    assert_eq!(
                        phi(cfg, n + 1, &p),
                        &d + phi(cfg, n, &sh),
                        "shift identity at n={n} cfg={cfg:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn value_potential_examples() {
        let st = BasisConfig::stirling(1);
        let t = AnnotatedType::List(
            Box::new(AnnotatedType::Basic(BasicTy::Int)),
            Annotation::from_coeffs(&st, vec![rat(3)]),
        );
        let empty = Value::List(vec![]);
        assert_eq!(value_potential(&empty, &t, &st).unwrap(), rat(0));
        let l = Value::List(vec![Value::int(1), Value::int(2), Value::int(3)]);
        assert_eq!(value_potential(&l, &t, &st).unwrap(), rat(21));
        assert_eq!(value_potential_closed(&l, &t, &st).unwrap(), rat(21));
        // shape mismatch
        assert!(value_potential(&Value::int(3), &t, &st).is_err());
    }

    #[test]
    fn value_potential_matches_closed_form_on_nested_lists() {
        let cfg = BasisConfig::mixed(2, 2, false);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let inner_ann = rand_ann(&cfg, &mut rng);
            let outer_ann = rand_ann(&cfg, &mut rng);
            let t = AnnotatedType::List(
                Box::new(AnnotatedType::List(
                    Box::new(AnnotatedType::Basic(BasicTy::Int)),
                    inner_ann,
                )),
                outer_ann,
            );
            let outer_len = rng.gen_range(0..6);
            let v = Value::List(
                (0..outer_len)
                    .map(|_| {
                        Value::List(
                            (0..rng.gen_range(0..5)).map(|i| Value::int(i)).collect(),
                        )
                    })
                    .collect(),
            );
            assert_eq!(
                value_potential(&v, &t, &cfg).unwrap(),
                value_potential_closed(&v, &t, &cfg).unwrap()
            );
        }
    }

    #[test]
    fn render_shapes() {
        let st = BasisConfig::stirling(1);
        assert_eq!(
            render_annotation(&st, &Annotation::from_coeffs(&st, vec![rat(3)])),
            "L^{3}"
        );
        let st2 = BasisConfig::stirling(2);
        assert_eq!(
            render_annotation(&st2, &Annotation::from_coeffs(&st2, vec![rat(2), rat(2)])),
            "L^{2,2}"
        );
        let mx = BasisConfig::mixed(1, 1, true);
        assert_eq!(
            render_annotation(&mx, &Annotation::from_coeffs(&mx, vec![rat(-1), rat(4), rat(0)])),
            "L^{-1,4,0}"
        );
    }
}
