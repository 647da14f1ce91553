//! Rendering LP solutions as annotated signatures, closed-form bounds, and
//! machine-readable reports.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::ast::BasicTy;
use crate::basis::{
    phi, render_annotation, Annotation, AnnotatedType, BasisConfig, BasisKind,
};
use crate::closed_form::ClosedForm;
use crate::rational::Rat;

/// Solver statistics carried on every report entry.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolveStats {
    pub variables: usize,
    pub constraints: usize,
    pub pivots: u64,
    pub wall_ms: u128,
}

/// One list argument's contribution to the bound.
#[derive(Debug, Clone)]
pub struct ListBound {
    /// Rendered length-variable name (`n`, or `n1`, `n2`, …).
    pub var: String,
    /// Where the list sits in the argument type, e.g. `arg.1`.
    pub path: String,
    pub annotation: Annotation,
    /// Closed form of this list's potential (no constant part).
    pub closed: ClosedForm,
}

/// The high-water bound `q + Σ φ(n_i, P_i)` over the argument lists.
#[derive(Debug, Clone)]
pub struct Bound {
    pub q: Rat,
    pub lists: Vec<ListBound>,
    pub cfg: BasisConfig,
}

impl Bound {
    /// Evaluates the bound with every list length set from `lengths`
    /// (by position).
    pub fn eval(&self, lengths: &[u64]) -> Rat {
        let mut total = self.q.clone();
        for (lb, n) in self.lists.iter().zip(lengths) {
            total += lb.closed.eval(*n);
        }
        total
    }

    pub fn render(&self) -> String {
        match self.lists.len() {
            0 => self.q.to_string(),
            1 => {
                // fold the constant into the single closed form
                ClosedForm::of(&self.cfg, &self.lists[0].annotation, &self.q)
                    .render(&self.lists[0].var)
            }
            _ => {
                let mut out = ClosedForm::of(&self.cfg, &self.lists[0].annotation, &self.q)
                    .render(&self.lists[0].var);
                for lb in &self.lists[1..] {
                    let piece = lb.closed.render(&lb.var);
                    if let Some(stripped) = piece.strip_prefix('-') {
                        out.push_str(" - ");
                        out.push_str(stripped.trim_start());
                    } else if piece != "0" {
                        out.push_str(" + ");
                        out.push_str(&piece);
                    }
                }
                out
            }
        }
    }

    pub fn where_clause(&self) -> String {
        self.lists
            .iter()
            .map(|lb| format!("{} = |{}|", lb.var, lb.path))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Analysis result for one function.
#[derive(Debug, Clone)]
pub struct FunctionReport {
    pub function: String,
    pub cfg: BasisConfig,
    pub arg_type: AnnotatedType,
    pub result_type: AnnotatedType,
    pub q_in: Rat,
    pub q_out: Rat,
    pub bound: Bound,
    pub stats: SolveStats,
}

/// Collects the list layers of an argument type, with display paths.
fn arg_lists(t: &AnnotatedType, path: String, out: &mut Vec<(String, Annotation)>) {
    match t {
        AnnotatedType::Basic(_) => {}
        AnnotatedType::List(_, ann) => {
            // nested list layers carry element potential, not a separate
            // length variable; only the outermost layer binds a length
            out.push((path, ann.clone()));
        }
        AnnotatedType::Pair(l, r) => {
            arg_lists(l, format!("{path}.1"), out);
            arg_lists(r, format!("{path}.2"), out);
        }
    }
}

impl FunctionReport {
    pub fn new(
        function: String,
        cfg: BasisConfig,
        arg_type: AnnotatedType,
        result_type: AnnotatedType,
        q_in: Rat,
        q_out: Rat,
        stats: SolveStats,
    ) -> Self {
        let mut lists = Vec::new();
        arg_lists(&arg_type, "arg".to_string(), &mut lists);
        let single = lists.len() == 1;
        let lists: Vec<ListBound> = lists
            .into_iter()
            .enumerate()
            .map(|(i, (path, annotation))| ListBound {
                var: if single {
                    "n".to_string()
                } else {
                    format!("n{}", i + 1)
                },
                path,
                closed: ClosedForm::of(&cfg, &annotation, &Rat::zero()),
                annotation,
            })
            .collect();
        let bound = Bound {
            q: q_in.clone(),
            lists,
            cfg,
        };
        let report = FunctionReport {
            function,
            cfg,
            arg_type,
            result_type,
            q_in,
            q_out,
            bound,
            stats,
        };
        report.check_bound_consistency();
        report
    }

    /// The rendered closed form must agree with q + Σ φ(n, P) exactly on
    /// small lengths; checked whenever a report is built.
    fn check_bound_consistency(&self) {
        for n in 0..=20u64 {
            let lengths = vec![n; self.bound.lists.len()];
            let direct: Rat = &self.q_in
                + self
                    .bound
                    .lists
                    .iter()
                    .map(|lb| phi(&self.cfg, n, &lb.annotation))
                    .sum::<Rat>();
            assert_eq!(
                self.bound.eval(&lengths),
                direct,
                "closed form of `{}` diverges from φ at n = {n}",
                self.function
            );
        }
    }

    pub fn signature_text(&self) -> String {
        format!(
            "{} : {} --{}/{}--> {}",
            self.function,
            render_atype(&self.cfg, &self.arg_type, false),
            self.q_in,
            self.q_out,
            render_atype(&self.cfg, &self.result_type, false),
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = self.signature_text();
        s.push_str(&format!(" ; bound: {}", self.bound.render()));
        if !self.bound.lists.is_empty() {
            s.push_str(&format!(" where {}", self.bound.where_clause()));
        }
        s
    }
}

/// Renders an annotated type; pairs are infix `×` with parentheses when
/// nested on the left of another pair.
pub fn render_atype(cfg: &BasisConfig, t: &AnnotatedType, nested: bool) -> String {
    match t {
        AnnotatedType::Basic(BasicTy::Int) => "int".into(),
        AnnotatedType::Basic(BasicTy::Bool) => "bool".into(),
        AnnotatedType::Basic(BasicTy::Unit) => "unit".into(),
        AnnotatedType::List(e, ann) => format!(
            "{}({})",
            render_annotation(cfg, ann),
            render_atype(cfg, e, false)
        ),
        AnnotatedType::Pair(l, r) => {
            let s = format!(
                "{} × {}",
                render_atype(cfg, l, true),
                render_atype(cfg, r, true)
            );
            if nested {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisJson {
    pub kind: BasisKind,
    pub poly_degree: u32,
    pub exp_degree: u32,
    pub demotion: bool,
}

impl From<&BasisConfig> for BasisJson {
    fn from(c: &BasisConfig) -> Self {
        BasisJson {
            kind: c.kind,
            poly_degree: c.poly_degree,
            exp_degree: c.exp_degree,
            demotion: c.demotion,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoeffJson {
    pub b: u32,
    pub k: u32,
    pub v: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnnotationJson {
    pub basis: BasisKind,
    pub coeffs: Vec<CoeffJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TypeJson {
    Basic {
        name: String,
    },
    List {
        elem: Box<TypeJson>,
        ann: AnnotationJson,
    },
    Pair {
        left: Box<TypeJson>,
        right: Box<TypeJson>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FunctionReportJson {
    pub function: String,
    pub basis: BasisJson,
    pub arg_type: TypeJson,
    pub result_type: TypeJson,
    pub q: String,
    pub q_prime: String,
    pub closed_form: String,
    pub stats: SolveStats,
}

fn type_json(cfg: &BasisConfig, t: &AnnotatedType) -> TypeJson {
    match t {
        AnnotatedType::Basic(b) => TypeJson::Basic {
            name: b.to_string(),
        },
        AnnotatedType::List(e, ann) => TypeJson::List {
            elem: Box::new(type_json(cfg, e)),
            ann: AnnotationJson {
                basis: cfg.kind,
                coeffs: cfg
                    .indices()
                    .iter()
                    .zip(&ann.coeffs)
                    .map(|(idx, v)| CoeffJson {
                        b: idx.b,
                        k: idx.k,
                        v: v.to_string(),
                    })
                    .collect(),
            },
        },
        AnnotatedType::Pair(l, r) => TypeJson::Pair {
            left: Box::new(type_json(cfg, l)),
            right: Box::new(type_json(cfg, r)),
        },
    }
}

impl FunctionReport {
    pub fn to_json(&self) -> FunctionReportJson {
        FunctionReportJson {
            function: self.function.clone(),
            basis: BasisJson::from(&self.cfg),
            arg_type: type_json(&self.cfg, &self.arg_type),
            result_type: type_json(&self.cfg, &self.result_type),
            q: self.q_in.to_string(),
            q_prime: self.q_out.to_string(),
            closed_form: self.bound.render(),
            stats: self.stats.clone(),
        }
    }
}

/// Renders a whole analysis in text or JSON.
pub fn render_report(reports: &[FunctionReport], json: bool) -> String {
    if json {
        let items: Vec<FunctionReportJson> = reports.iter().map(|r| r.to_json()).collect();
        serde_json::to_string_pretty(&items).expect("report serializes")
    } else {
        reports
            .iter()
            .map(|r| r.to_text())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
