//! End-to-end analysis: elaborate, generate constraints, solve, report.

use std::fmt;
use std::time::Instant;

use crate::ast::{Expr, ExprKind, NodeId, Program};
use crate::basis::BasisConfig;
use crate::constraints::{generate, ConstraintSystem};
use crate::frontend::diag::{line_col, Diagnostic};
use crate::frontend::{elaborate, Elaborated};
use crate::rational::Rat;
use crate::report::{FunctionReport, SolveStats};
use crate::simplex::{solve_lexicographic, LpOutcome};

#[derive(Debug)]
pub enum AnalysisError {
    /// Parse or type errors.
    Diagnostics(Vec<Diagnostic>),
    /// No bound derivable at this degree; carries rendered hints.
    Infeasible { details: Vec<String> },
    /// Should not happen for well-formed systems.
    Unbounded,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Diagnostics(ds) => {
                for d in ds {
                    writeln!(f, "{d}")?;
                }
                Ok(())
            }
            AnalysisError::Infeasible { details } => {
                writeln!(f, "no bound derivable at this degree")?;
                for d in details {
                    writeln!(f, "  {d}")?;
                }
                Ok(())
            }
            AnalysisError::Unbounded => writeln!(f, "internal: objective unbounded"),
        }
    }
}

pub struct Analysis {
    pub elaborated: Elaborated,
    pub cfg: BasisConfig,
    pub system: ConstraintSystem,
    pub solution: Vec<Rat>,
    pub reports: Vec<FunctionReport>,
    pub stats: SolveStats,
}

impl Analysis {
    pub fn report_for(&self, function: &str) -> Option<&FunctionReport> {
        self.reports.iter().find(|r| r.function == function)
    }
}

fn find_node(p: &Program, id: NodeId) -> Option<&Expr> {
    fn go(e: &Expr, id: NodeId) -> Option<&Expr> {
        if e.id == id {
            return Some(e);
        }
        match &e.kind {
            ExprKind::Let(e1, _, e2) => go(e1, id).or_else(|| go(e2, id)),
            ExprKind::Share(_, _, _, b) => go(b, id),
            ExprKind::Cond(_, t, f) => go(t, id).or_else(|| go(f, id)),
            ExprKind::PairMatch(_, _, _, b) => go(b, id),
            ExprKind::ListMatch(_, e1, _, _, e2) => go(e1, id).or_else(|| go(e2, id)),
            _ => None,
        }
    }
    p.functions.iter().find_map(|f| go(&f.body, id))
}

/// Analyzes already-elaborated input under a basis config.
pub fn analyze_elaborated(
    elab: &Elaborated,
    cfg: &BasisConfig,
) -> Result<Analysis, AnalysisError> {
    let start = Instant::now();
    let system = generate(elab, cfg);
    let lp = system.to_lp();
    let outcome = solve_lexicographic(&lp, &system.objectives());
    match outcome {
        LpOutcome::Optimal {
            assignment,
            objective: _,
            pivots,
        } => {
            system
                .check_assignment(&assignment)
                .expect("solver returned an exactly feasible point");
            let stats = SolveStats {
                variables: system.vars.len(),
                constraints: system.constraints.len(),
                pivots,
                wall_ms: start.elapsed().as_millis(),
            };
            let mut reports = Vec::new();
            for f in &elab.program.functions {
                let sig = &system.sigs[&f.name];
                reports.push(FunctionReport::new(
                    f.name.clone(),
                    *cfg,
                    sig.arg.instantiate(cfg, &assignment),
                    sig.result.instantiate(cfg, &assignment),
                    assignment[sig.q_in.0].clone(),
                    assignment[sig.q_out.0].clone(),
                    stats.clone(),
                ));
            }
            Ok(Analysis {
                elaborated: elab.clone(),
                cfg: *cfg,
                system,
                solution: assignment,
                reports,
                stats,
            })
        }
        LpOutcome::Infeasible { certificate_rows } => {
            let mut details = Vec::new();
            let mut saw_recursive_call = false;
            for row in certificate_rows.iter().take(6) {
                let c = &system.constraints[*row];
                let (line, col) = line_col(&elab.source, c.origin.span.lo);
                let mut note = format!(
                    "constraint from rule `{}` in `{}` (line {line}, column {col})",
                    c.origin.rule, c.origin.function
                );
                if let Some(node) = c.origin.node.and_then(|id| find_node(&elab.program, id)) {
                    if let ExprKind::App(callee, _) = &node.kind {
                        note.push_str(&format!(" — call to `{callee}`"));
                        if *callee == c.origin.function {
                            saw_recursive_call = true;
                        }
                    }
                }
                details.push(note);
            }
            if saw_recursive_call {
                details.push(
                    "a recursive call cannot reuse the function's own signature here; \
                     this program may need resource-polymorphic recursion, which is not \
                     supported"
                        .to_string(),
                );
            }
            Err(AnalysisError::Infeasible { details })
        }
        LpOutcome::Unbounded { .. } => Err(AnalysisError::Unbounded),
    }
}

/// Parses, elaborates, and analyzes a source file.
pub fn analyze_source(source: &str, cfg: &BasisConfig) -> Result<Analysis, AnalysisError> {
    let elab = elaborate(source).map_err(AnalysisError::Diagnostics)?;
    analyze_elaborated(&elab, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn corpus(name: &str) -> String {
        let path = format!("{}/corpus/{name}.aex", env!("CARGO_MANIFEST_DIR"));
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn subset_sum_end_to_end() {
        let a = analyze_source(&corpus("subsetSum"), &BasisConfig::stirling(1)).unwrap();
        let r = a.report_for("subsetSum").unwrap();
        assert_eq!(r.q_in, rat(1));
        assert_eq!(r.q_out, rat(0));
        assert_eq!(r.bound.render(), "3·2^n - 2");
        for n in 0..=20u64 {
            assert_eq!(
                r.bound.eval(&[n]),
                rat(3) * Rat::from_integer(num_bigint::BigInt::from(2u8).pow(n as u32)) - rat(2)
            );
        }
    }

    #[test]
    fn loop_is_infeasible_with_hint() {
        let err = match analyze_source(&corpus("loop"), &BasisConfig::binomial(2)) {
            Err(e) => e,
            Ok(_) => panic!("loop must be infeasible"),
        };
        match err {
            AnalysisError::Infeasible { details } => {
                assert!(
                    details.iter().any(|d| d.contains("resource-polymorphic")
                        || d.contains("loop")),
                    "{details:?}"
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn half_and_log_get_zero_bounds() {
        let a = analyze_source(&corpus("halfLog"), &BasisConfig::binomial(1)).unwrap();
        for name in ["half", "log"] {
            let r = a.report_for(name).unwrap();
            assert_eq!(r.q_in, rat(0), "{name}");
            assert_eq!(r.bound.eval(&[10]), rat(0), "{name}");
        }
    }

    #[test]
    fn parse_error_is_reported() {
        let err = match analyze_source("let f = ", &BasisConfig::binomial(1)) {
            Err(e) => e,
            Ok(_) => panic!("parse must fail"),
        };
        assert!(matches!(err, AnalysisError::Diagnostics(_)));
    }
}
