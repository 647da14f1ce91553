//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Everything is checked with exact rational arithmetic; signature
//! coefficients are compared for equality, and closed-form bounds are
//! evaluated pointwise against their expected formulas.

use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aara::ast::Value;
use aara::basis::{
    add, basis_value, delta, demote, phi, shift, value_potential, AnnotatedType, Annotation,
    BasisConfig,
};
use aara::frontend::elaborate;
use aara::harness::{check_bound, enumerate_inputs};
use aara::interp::{eval, watermark, EvalResult};
use aara::pipeline::{analyze_source, AnalysisError};
use aara::rational::{rat, rat_frac, Rat};
use aara::report::FunctionReport;

fn corpus_path(name: &str) -> String {
    format!("{}/corpus/{name}.aex", env!("CARGO_MANIFEST_DIR"))
}

fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap()
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_aara")
}

fn pass(n: u32, what: &str) {
    println!("criterion {n}: PASS — {what}");
}

fn arg_list_coeffs(r: &FunctionReport) -> Vec<Rat> {
    // coefficients of the first (often only) list in the argument type
    fn first_list(t: &AnnotatedType) -> Option<&Annotation> {
        match t {
            AnnotatedType::Basic(_) => None,
            AnnotatedType::List(_, ann) => Some(ann),
            AnnotatedType::Pair(l, r) => first_list(l).or_else(|| first_list(r)),
        }
    }
    first_list(&r.arg_type).expect("argument has a list").coeffs.clone()
}

fn pow2(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(2u8).pow(n as u32))
}

fn pow3(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(3u8).pow(n as u32))
}

#[test]
fn criterion_1_subset_sum_stirling() {
    let start = Instant::now();
    let out = Command::new(bin())
        .args([
            "analyze",
            &corpus_path("subsetSum"),
            "--basis",
            "stirling",
            "--exp-degree",
            "1",
        ])
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("subsetSum : L^{3}(int) × int --1/0--> bool"),
        "{text}"
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");

    let a = analyze_source(&corpus("subsetSum"), &BasisConfig::stirling(1)).unwrap();
    let r = a.report_for("subsetSum").unwrap();
    assert_eq!(r.q_in, rat(1));
    assert_eq!(r.q_out, rat(0));
    assert_eq!(arg_list_coeffs(r), vec![rat(3)]);
    for n in 0..=20u64 {
        assert_eq!(r.bound.eval(&[n]), rat(3) * pow2(n) - rat(2), "n={n}");
    }
    pass(1, "subsetSum: L^{3}, 1/0, bound 3·2^n - 2, under 1s");
}

#[test]
fn criterion_2_ball_bins_stirling2() {
    let a = analyze_source(&corpus("ballBins3"), &BasisConfig::stirling(2)).unwrap();
    let r = a.report_for("ballBins3").unwrap();
    assert_eq!(arg_list_coeffs(r), vec![rat(2), rat(2)]);
    assert_eq!(r.q_in, rat(1));
    assert_eq!(r.q_out, rat(0));
    for n in 0..=12u64 {
        assert_eq!(r.bound.eval(&[n]), pow3(n), "n={n}");
    }
    // the result list annotations are all zeros
    fn all_zero(t: &AnnotatedType) -> bool {
        match t {
            AnnotatedType::Basic(_) => true,
            AnnotatedType::List(e, ann) => {
                ann.coeffs.iter().all(|c| c.is_zero()) && all_zero(e)
            }
            AnnotatedType::Pair(l, r) => all_zero(l) && all_zero(r),
        }
    }
    assert!(all_zero(&r.result_type));
    pass(2, "ballBins3: L^{2,2}, 1/0, bound 3^n, zero result potential");
}

#[test]
fn criterion_3_snoc_binomial() {
    let a = analyze_source(&corpus("snoc"), &BasisConfig::binomial(1)).unwrap();
    let r = a.report_for("snoc").unwrap();
    assert_eq!(arg_list_coeffs(r), vec![rat(1)]);
    assert_eq!(r.q_in, rat(1));
    for n in 0..=20u64 {
        assert_eq!(r.bound.eval(&[n]), rat(1) + rat(n as i64), "n={n}");
    }
    pass(3, "snoc: L^{1}, q = 1, bound n + 1");
}

#[test]
fn criterion_4_sub_sum1_mixed_both_variants() {
    // without demotion
    let a = analyze_source(&corpus("subSum1"), &BasisConfig::mixed(1, 1, false)).unwrap();
    let r = a.report_for("subSum1").unwrap();
    assert_eq!(arg_list_coeffs(r), vec![rat(0), rat(2), rat(1)]);
    assert_eq!(r.q_in, rat(1));
    for n in 0..=16u64 {
        let nn = rat(n as i64);
        let expect = &nn * pow2(n) + rat(2) * pow2(n) - &nn - rat(1);
        assert_eq!(r.bound.eval(&[n]), expect, "n={n}");
    }
    // with demotion
    let a = analyze_source(&corpus("subSum1"), &BasisConfig::mixed(1, 1, true)).unwrap();
    let r = a.report_for("subSum1").unwrap();
    assert_eq!(arg_list_coeffs(r), vec![rat(-1), rat(4), rat(0)]);
    assert_eq!(r.q_in, rat(1));
    for n in 0..=16u64 {
        let expect = rat(4) * pow2(n) - rat(n as i64) - rat(3);
        assert_eq!(r.bound.eval(&[n]), expect, "n={n}");
    }
    pass(
        4,
        "subSum1: (0,2,1)/1 without demotion; (-1,4,0)/1 with demotion",
    );
}

#[test]
fn criterion_5_differential_soundness() {
    let start = Instant::now();
    let fuel = 10_000_000u64;
    // (corpus file, function to check, basis, exhaustive size bound,
    //  must be tight on every input)
    let entries: Vec<(&str, &str, BasisConfig, usize, bool)> = vec![
        ("snoc", "snoc", BasisConfig::binomial(1), 64, true),
        ("subsetSum", "subsetSum", BasisConfig::stirling(1), 8, true),
        ("ballBins3", "ballBins3", BasisConfig::stirling(2), 8, false),
        ("ballBins3", "helper", BasisConfig::stirling(2), 4, false),
        ("subSum1", "subSum1", BasisConfig::mixed(1, 1, false), 8, false),
        ("subSum1", "subSum1", BasisConfig::mixed(1, 1, true), 8, false),
        ("subSum1", "remove", BasisConfig::mixed(1, 1, false), 8, false),
        ("halfLog", "half", BasisConfig::binomial(1), 64, false),
        ("halfLog", "log", BasisConfig::binomial(1), 64, false),
    ];
    for (file, function, cfg, size, must_be_tight) in entries {
        let a = analyze_source(&corpus(file), &cfg).unwrap();
        let r = a.report_for(function).unwrap();
        let inputs = enumerate_inputs(&r.arg_type.erase(), size, 3, 60, 11);
        let rep = check_bound(&a.elaborated.program, r, &inputs, fuel).unwrap();
        assert_eq!(
            rep.violations, 0,
            "{function} under {cfg:?} violated the bound"
        );
        assert_eq!(rep.fuel_exhausted, 0, "{function}: fuel too small");
        assert!(!rep.checks.is_empty());
        if must_be_tight {
            assert_eq!(
                rep.tight,
                rep.checks.len(),
                "{function}: slack must be 0 on every input"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    pass(
        5,
        "zero violations across the corpus; subsetSum and snoc tight everywhere",
    );
}

// --- criterion 6: basis property suite -------------------------------------

fn random_annotation(cfg: &BasisConfig, rng: &mut ChaCha8Rng, relaxed: bool) -> Annotation {
    let idxs = cfg.indices();
    let mut coeffs: Vec<Rat> = idxs
        .iter()
        .map(|_| rat_frac(rng.gen_range(0..=12), rng.gen_range(1..=6)))
        .collect();
    if relaxed && cfg.demotion {
        // make some binomial-row entries negative while respecting
        // p_{0,k} + p_{1,0} >= 0
        let p10_pos = cfg
            .indices()
            .iter()
            .position(|i| i.b == 1 && i.k == 0)
            .unwrap();
        let p10 = coeffs[p10_pos].clone();
        for (i, idx) in idxs.iter().enumerate() {
            if idx.b == 0 && rng.gen_bool(0.5) {
                // in [-p10, 0]
                let f = rat_frac(rng.gen_range(0..=8), 8);
                coeffs[i] = -f * &p10;
            }
        }
    }
    Annotation::from_coeffs(cfg, coeffs)
}

fn random_int_list(rng: &mut ChaCha8Rng, max_len: usize) -> Value {
    let len = rng.gen_range(0..=max_len);
    Value::List((0..len).map(|_| Value::int(rng.gen_range(-5..=5))).collect())
}

#[test]
fn criterion_6_basis_property_suite() {
    let mut cfgs: Vec<BasisConfig> = Vec::new();
    for d in 1..=4 {
        cfgs.push(BasisConfig::binomial(d));
        cfgs.push(BasisConfig::stirling(d));
    }
    for (b, k) in [(1, 1), (2, 2), (1, 4), (4, 1), (3, 3)] {
        cfgs.push(BasisConfig::mixed(b, k, false));
    }
    cfgs.push(BasisConfig::mixed(1, 1, true));
    cfgs.push(BasisConfig::mixed(2, 2, true));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for cfg in &cfgs {
        // every admissible index vanishes at n = 0
        for idx in cfg.indices() {
            assert_eq!(basis_value(idx, 0), BigInt::zero());
        }
        for trial in 0..200 {
            let p = random_annotation(cfg, &mut rng, true);
            p.check_domain(cfg).unwrap();
            // shift identity, exactly, for n in 0..25
            let d = delta(cfg, &p);
            let sh = shift(cfg, &p);
            assert_eq!(phi(cfg, 0, &p), Rat::zero(), "φ(0, P) = 0");
            let mut prev = Rat::zero();
            for n in 0..=25u64 {
                if n < 25 {
                    assert_eq!(
                        phi(cfg, n + 1, &p),
                        &d + phi(cfg, n, &sh),
                        "shift identity {cfg:?} trial {trial} n {n}"
                    );
                }
                // monotone and nonnegative (including relaxed annotations)
                let cur = phi(cfg, n, &p);
                assert!(cur >= prev, "monotone {cfg:?} at n={n}");
                assert!(!cur.is_negative());
                prev = cur;
            }

            // sharing additivity and subtype monotonicity on random lists
            let q = random_annotation(cfg, &mut rng, false);
            let int_elem = AnnotatedType::Basic(aara::ast::BasicTy::Int);
            let t_p = AnnotatedType::List(Box::new(int_elem.clone()), p.clone());
            let t_q = AnnotatedType::List(Box::new(int_elem.clone()), q.clone());
            let t_pq = AnnotatedType::List(Box::new(int_elem.clone()), add(&p, &q));
            let l = random_int_list(&mut rng, 12);
            let vp_p = value_potential(&l, &t_p, cfg).unwrap();
            let vp_q = value_potential(&l, &t_q, cfg).unwrap();
            let vp_pq = value_potential(&l, &t_pq, cfg).unwrap();
            assert_eq!(vp_pq, &vp_p + &vp_q, "sharing additivity");
            // pointwise-larger annotation never has less potential
            let bigger = add(&p, &q);
            let t_big = AnnotatedType::List(Box::new(int_elem.clone()), bigger);
            let vp_big = value_potential(&l, &t_big, cfg).unwrap();
            assert!(vp_big >= vp_p, "subtype monotonicity");
        }
    }

    // demotion inequality on the mixed bases
    for cfg in [BasisConfig::mixed(1, 1, true), BasisConfig::mixed(2, 3, true)] {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let int_elem = AnnotatedType::Basic(aara::ast::BasicTy::Int);
        for _ in 0..200 {
            let p = random_annotation(&cfg, &mut rng, false);
            let p10 = p.get(&cfg, aara::basis::BasisIndex::new(1, 0));
            let s = &p10 * rat_frac(rng.gen_range(0..=4), 4);
            let demoted = demote(&cfg, &p, &s).unwrap();
            for n in 0..=30usize {
                let l = Value::List(vec![Value::int(1); n]);
                let before =
                    value_potential(&l, &AnnotatedType::List(Box::new(int_elem.clone()), p.clone()), &cfg)
                        .unwrap();
                let after = value_potential(
                    &l,
                    &AnnotatedType::List(Box::new(int_elem.clone()), demoted.clone()),
                    &cfg,
                )
                .unwrap();
                assert!(after <= before, "demotion must not increase potential");
            }
        }
    }
    pass(
        6,
        "shift identity, φ(0)=0, monotonicity, additivity, subtyping, demotion",
    );
}

// --- criterion 7: the paper's printed witnesses are feasible ---------------

mod witness {
    use super::*;
    use aara::constraints::{generate, ConstraintSystem};
    use aara::simplex::{solve, LpOutcome, Rel};

    /// Share-split output vectors (left, right) of the shares on `label`'s
    /// family (`x`, `x#2`, …) in a function, in node order.
    pub fn shares(
        sys: &ConstraintSystem,
        func: &str,
        label: &str,
        dim: usize,
    ) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for v in &sys.vars {
            if let Some(rest) = v.name.strip_prefix(&format!("{func}.n")) {
                let Some(node) = rest.split('.').next() else {
                    continue;
                };
                let Some(open) = rest.find("share[") else {
                    continue;
                };
                let Some(close) = rest[open..].find(']') else {
                    continue;
                };
                let shared = &rest[open + 6..open + close];
                let family = shared.split('#').next().unwrap_or(shared);
                if family == label && rest.ends_with("].l.0") && seen.insert(node.to_string()) {
                    let l: Vec<usize> = (0..dim)
                        .map(|d| {
                            let name = format!("{func}.n{node}.share[{shared}].l.{d}");
                            sys.vars.iter().position(|v| v.name == name).unwrap()
                        })
                        .collect();
                    let r: Vec<usize> = (0..dim)
                        .map(|d| {
                            let name = format!("{func}.n{node}.share[{shared}].r.{d}");
                            sys.vars.iter().position(|v| v.name == name).unwrap()
                        })
                        .collect();
                    out.push((l, r));
                }
            }
        }
        out
    }

    pub fn var(sys: &ConstraintSystem, name: &str) -> usize {
        sys.vars
            .iter()
            .position(|v| v.name == name)
            .unwrap_or_else(|| panic!("missing var {name}"))
    }

    /// Adds `var = value` rows and checks the system stays feasible.
    pub fn feasible_with(sys: &ConstraintSystem, pins: &[(usize, Rat)]) -> bool {
        let mut lp = sys.to_lp();
        lp.objective = Vec::new();
        for (i, (v, val)) in pins.iter().enumerate() {
            lp.add_row(
                format!("pin{i}"),
                vec![(Rat::one(), *v)],
                Rel::Eq,
                val.clone(),
            );
        }
        matches!(solve(&lp), LpOutcome::Optimal { .. })
    }

    pub fn build(file: &str, cfg: &BasisConfig) -> ConstraintSystem {
        let elab = elaborate(&corpus(file)).unwrap();
        generate(&elab, cfg)
    }
}

#[test]
fn criterion_7_paper_witnesses_are_feasible_points() {
    use witness::*;

    // subsetSum under the degree-1 exponential basis: nums L^{3}, 1/0,
    // the tail share splitting L^{6} as L^{3} + L^{3}.
    let sys = build("subsetSum", &BasisConfig::stirling(1));
    let mut pins = vec![
        (var(&sys, "subsetSum.sig.arg.l.0"), rat(3)),
        (var(&sys, "subsetSum.sig.q"), rat(1)),
        (var(&sys, "subsetSum.sig.q'"), rat(0)),
    ];
    let sh = shares(&sys, "subsetSum", "tl", 1);
    assert_eq!(sh.len(), 1, "one list share in subsetSum");
    pins.push((sh[0].0[0], rat(3)));
    pins.push((sh[0].1[0], rat(3)));
    assert!(feasible_with(&sys, &pins), "subsetSum witness infeasible");
    // and a wrong witness is rejected: claiming L^{2} with q = 1
    let bad = vec![
        (var(&sys, "subsetSum.sig.arg.l.0"), rat(2)),
        (var(&sys, "subsetSum.sig.q"), rat(1)),
    ];
    assert!(!feasible_with(&sys, &bad), "under-annotated witness must fail");

    // ballBins3 under the degree-2 exponential basis: xs L^{2,2}, shares of
    // the tail L^{6,6} split as (2,2) then (2,2)+(2,2); zero result
    // annotations; helper and wrapper at 1/0.
    let sys = build("ballBins3", &BasisConfig::stirling(2));
    let mut pins = vec![
        (var(&sys, "ballBins3.sig.arg.0"), rat(2)),
        (var(&sys, "ballBins3.sig.arg.1"), rat(2)),
        (var(&sys, "ballBins3.sig.q"), rat(1)),
        (var(&sys, "ballBins3.sig.q'"), rat(0)),
        (var(&sys, "helper.sig.arg.l.0"), rat(2)),
        (var(&sys, "helper.sig.arg.l.1"), rat(2)),
        (var(&sys, "helper.sig.q"), rat(1)),
        (var(&sys, "helper.sig.q'"), rat(0)),
        // accumulator bins and result carry no potential
        (var(&sys, "helper.sig.arg.r.l.0"), rat(0)),
        (var(&sys, "helper.sig.arg.r.l.1"), rat(0)),
        (var(&sys, "helper.sig.arg.r.r.l.0"), rat(0)),
        (var(&sys, "helper.sig.arg.r.r.l.1"), rat(0)),
        (var(&sys, "helper.sig.arg.r.r.r.0"), rat(0)),
        (var(&sys, "helper.sig.arg.r.r.r.1"), rat(0)),
        (var(&sys, "helper.sig.res.0"), rat(0)),
        (var(&sys, "helper.sig.res.1"), rat(0)),
    ];
    let sh = shares(&sys, "helper", "tl", 2);
    assert_eq!(sh.len(), 2, "tail shared twice in helper");
    // first split: tl -> (2,2) used now, (4,4) kept
    pins.push((sh[0].0[0], rat(2)));
    pins.push((sh[0].0[1], rat(2)));
    pins.push((sh[0].1[0], rat(4)));
    pins.push((sh[0].1[1], rat(4)));
    // second split: (4,4) -> (2,2) + (2,2)
    pins.push((sh[1].0[0], rat(2)));
    pins.push((sh[1].0[1], rat(2)));
    pins.push((sh[1].1[0], rat(2)));
    pins.push((sh[1].1[1], rat(2)));
    assert!(feasible_with(&sys, &pins), "ballBins3 witness infeasible");

    // subSum1 without demotion: nums L^{0,2,1}, 1/0; remove instantiated at
    // int × L^{1,6,2} -> L^{0,6,2}; otherNums shared as two L^{0,2,1}.
    let sys = build("subSum1", &BasisConfig::mixed(1, 1, false));
    let mut pins = vec![
        (var(&sys, "subSum1.sig.arg.l.0"), rat(0)),
        (var(&sys, "subSum1.sig.arg.l.1"), rat(2)),
        (var(&sys, "subSum1.sig.arg.l.2"), rat(1)),
        (var(&sys, "subSum1.sig.q"), rat(1)),
        (var(&sys, "subSum1.sig.q'"), rat(0)),
        (var(&sys, "remove.sig.arg.r.0"), rat(1)),
        (var(&sys, "remove.sig.arg.r.1"), rat(6)),
        (var(&sys, "remove.sig.arg.r.2"), rat(2)),
        (var(&sys, "remove.sig.res.0"), rat(0)),
        (var(&sys, "remove.sig.res.1"), rat(6)),
        (var(&sys, "remove.sig.res.2"), rat(2)),
    ];
    let sh = shares(&sys, "subSum1", "otherNums", 3);
    assert_eq!(sh.len(), 1, "otherNums shared once");
    for (side, vals) in [(&sh[0].0, [0, 2, 1]), (&sh[0].1, [0, 2, 1])] {
        for (d, v) in vals.iter().enumerate() {
            pins.push((side[d], rat(*v)));
        }
    }
    assert!(feasible_with(&sys, &pins), "subSum1 witness infeasible");

    // demoted subSum1: nums L^{-1,4,0}, remove at int × L^{-1,8,0} ->
    // L^{-2,8,0}, shares two L^{-1,4,0}.
    let sys = build("subSum1", &BasisConfig::mixed(1, 1, true));
    let mut pins = vec![
        (var(&sys, "subSum1.sig.arg.l.0"), rat(-1)),
        (var(&sys, "subSum1.sig.arg.l.1"), rat(4)),
        (var(&sys, "subSum1.sig.arg.l.2"), rat(0)),
        (var(&sys, "subSum1.sig.q"), rat(1)),
        (var(&sys, "subSum1.sig.q'"), rat(0)),
        (var(&sys, "remove.sig.arg.r.0"), rat(-1)),
        (var(&sys, "remove.sig.arg.r.1"), rat(8)),
        (var(&sys, "remove.sig.arg.r.2"), rat(0)),
        (var(&sys, "remove.sig.res.0"), rat(-2)),
        (var(&sys, "remove.sig.res.1"), rat(8)),
        (var(&sys, "remove.sig.res.2"), rat(0)),
    ];
    let sh = shares(&sys, "subSum1", "otherNums", 3);
    for (side, vals) in [(&sh[0].0, [-1, 4, 0]), (&sh[0].1, [-1, 4, 0])] {
        for (d, v) in vals.iter().enumerate() {
            pins.push((side[d], rat(*v)));
        }
    }
    assert!(feasible_with(&sys, &pins), "demoted subSum1 witness infeasible");

    pass(7, "printed annotations satisfy the generated systems exactly");
}

#[test]
fn criterion_8_subset_sum_binomial_infeasible() {
    for k in ["1", "2", "3"] {
        let out = Command::new(bin())
            .args([
                "analyze",
                &corpus_path("subsetSum"),
                "--basis",
                "binomial",
                "--poly-degree",
                k,
            ])
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(3),
            "degree {k}: expected exit 3, got {:?}\n{}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    pass(8, "polynomial analysis of subsetSum exits 3 at degrees 1, 2, 3");
}

#[test]
fn criterion_9_watermarks() {
    let elab = elaborate(&corpus("loop")).unwrap();
    for f in [100u64, 1_000, 10_000] {
        let w1 = watermark(&elab.program, "loop", Value::int(0), f).unwrap();
        let w2 = watermark(&elab.program, "loop", Value::int(0), 2 * f).unwrap();
        assert!(
            w2.watermark > w1.watermark,
            "fuel {f}: {} !> {}",
            w2.watermark,
            w1.watermark
        );
    }
    // terminating programs: watermark equals the evaluation's high-water mark
    let ss = elaborate(&corpus("subsetSum")).unwrap();
    for n in 0..=6i64 {
        let arg = Value::Pair(
            Box::new(Value::List((1..=n).map(Value::int).collect())),
            Box::new(Value::int(0)),
        );
        let full = match eval(&ss.program, "subsetSum", arg.clone(), 10_000_000).unwrap() {
            EvalResult::Done(out) => out,
            _ => panic!("terminates"),
        };
        let w = watermark(&ss.program, "subsetSum", arg, 10_000_000).unwrap();
        assert_eq!(w.watermark, full.high_water);
        assert!(!w.exhausted);
    }
    pass(9, "divergent watermark strictly grows; terminating watermark = q");
}
