//! Surface-syntax frontend: parsing, let-normalization, share insertion, and
//! simple type inference.

pub mod diag;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod share;
pub mod simple_types;
pub mod surface;

use std::collections::BTreeMap;

use crate::ast::{check_linear, number_nodes, Name, Program, SimpleType};
use diag::Diagnostic;
use simple_types::TypeInfo;
use surface::{AssumeSpec, SurfaceProgram};

/// A fully elaborated program, ready for evaluation and analysis.
#[derive(Debug, Clone)]
pub struct Elaborated {
    pub source: String,
    pub surface: SurfaceProgram,
    /// Let-normal core before share insertion.
    pub pre_share: Program,
    /// Final core: let-normal, linear, node-numbered.
    pub program: Program,
    pub types: TypeInfo,
    /// Functions whose signatures are assumed instead of derived.
    pub assumptions: BTreeMap<Name, AssumeSpec>,
}

pub use parser::parse;

pub fn elaborate(source: &str) -> Result<Elaborated, Vec<Diagnostic>> {
    let surface = parser::parse(source)?;
    let mut pre_share = normalize::normalize_program(&surface);
    number_nodes(&mut pre_share);
    let mut program = share::insert_shares(&pre_share);
    number_nodes(&mut program);
    for f in &program.functions {
        if let Err(v) = check_linear(&f.body) {
            return Err(vec![Diagnostic::error(
                format!("internal: `{}` is not linear after elaboration: {v}", f.name),
                f.span,
            )]);
        }
    }
    let types = simple_types::infer_simple_types(&program)?;

    let mut assumptions = BTreeMap::new();
    for spec in &surface.assumptions {
        let fti = types.fns.get(&spec.function).ok_or_else(|| {
            vec![Diagnostic::error(
                format!("directive names unknown function `{}`", spec.function),
                spec.span,
            )]
        })?;
        validate_assumed_shape(&spec.function, &fti.param, &fti.result)
            .map_err(|m| vec![Diagnostic::error(m, spec.span)])?;
        assumptions.insert(spec.function.clone(), spec.clone());
    }

    Ok(Elaborated {
        source: source.to_string(),
        surface,
        pre_share,
        program,
        types,
        assumptions,
    })
}

/// An assumed signature conserves list potential from argument to result, so
/// the argument must contain exactly one list and the result must be that
/// same list type.
fn validate_assumed_shape(
    name: &str,
    param: &SimpleType,
    result: &SimpleType,
) -> Result<(), String> {
    fn find_list(t: &SimpleType) -> Vec<&SimpleType> {
        match t {
            SimpleType::Basic(_) => vec![],
            SimpleType::List(_) => vec![t],
            SimpleType::Pair(a, b) => {
                let mut v = find_list(a);
                v.extend(find_list(b));
                v
            }
        }
    }
    let lists = find_list(param);
    match lists.as_slice() {
        [ty] if *ty == result => Ok(()),
        [ty] => Err(format!(
            "assumed function `{name}` must return its list argument's type ({ty}), not {result}"
        )),
        _ => Err(format!(
            "assumed function `{name}` must take exactly one list in its argument type"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{ExprKind, use_count};

    #[test]
    fn subset_sum_elaborates_with_one_share_on_tail() {
        let src = "let subsetSum nums target =\n  match nums with\n  | [] -> tick 1; target = 0\n  | hd :: tl ->\n    tick 1;\n    let newTarget = target - hd in\n    let withNum = subsetSum tl newTarget in\n    let without = subsetSum tl target in\n    tick 1; withNum || without\n";
        let e = elaborate(src).unwrap();
        let f = e.program.function("subsetSum").unwrap();
        let mut tl_shares = 0;
        let mut total_shares = 0;
        f.body.visit(&mut |n| {
            if let ExprKind::Share(x, _, _, _) = &n.kind {
                total_shares += 1;
                if x == "tl" {
                    tl_shares += 1;
                }
            }
        });
        assert_eq!(tl_shares, 1, "tl is used twice, one share");
        // target is also shared (used twice in the cons branch)
        assert_eq!(total_shares, 2);
        assert!(check_linear(&f.body).is_ok());
        // free variables unchanged by share insertion
        let pre = e.pre_share.function("subsetSum").unwrap();
        assert_eq!(
            crate::ast::free_vars(&pre.body),
            crate::ast::free_vars(&f.body)
        );
    }

    #[test]
    fn helper_gets_two_nested_shares_on_tail() {
        let src = "let helper xs a b c =\n  match xs with\n  | [] -> tick 1; [(a, b, c)]\n  | hd :: tl ->\n    let newA = hd :: a in\n    let tmp1 = helper tl newA b c in\n    let newB = hd :: b in\n    let tmp2 = helper tl a newB c in\n    let newC = hd :: c in\n    let tmp3 = helper tl a b newC in\n    tmp1 @ tmp2 @ tmp3\n";
        let e = elaborate(src).unwrap();
        let f = e.program.function("helper").unwrap();
        let mut tl_family_shares = 0;
        f.body.visit(&mut |n| {
            if let ExprKind::Share(x, _, _, _) = &n.kind {
                if x == "tl" || x.starts_with("tl#") {
                    tl_family_shares += 1;
                }
            }
        });
        assert_eq!(tl_family_shares, 2, "three uses of tl need two shares");
        assert!(check_linear(&f.body).is_ok());
        // after elaboration nothing is used twice
        for var in ["tl", "a", "b", "c", "hd"] {
            assert!(use_count(var, &f.body) <= 1, "{var} still duplicated");
        }
    }

    #[test]
    fn directive_validated() {
        let src = "(*# assume remove linear 1 #*)\nlet remove y xs =\n  match xs with\n  | [] -> []\n  | hd :: tl ->\n    tick 1;\n    let isDup = hd = y in\n    if isDup then remove y tl else hd :: remove y tl\n";
        let e = elaborate(src).unwrap();
        assert!(e.assumptions.contains_key("remove"));
    }

    #[test]
    fn directive_on_nonlist_function_rejected() {
        let src = "(*# assume f linear 1 #*)\nlet f x = x + 1";
        let err = elaborate(src).unwrap_err();
        assert!(err[0].message.contains("exactly one list"));
    }
}
