//! Constraint generation: walks the simply-typed, linear, let-normal program
//! and emits the typing rules as linear constraints over fresh annotation
//! variables.
//!
//! Every expression node gets fresh turnstile variables (q, q') and every
//! list type occurrence a fresh annotation vector. Rules are syntax-directed;
//! relaxing is folded into each conclusion as q >= p and q - p >= q' - p'
//! against the rule's natural pair (p, p'). Subtype steps appear at call
//! arguments and results, branch joins, share splits, and the function
//! conclusion; with demotion enabled each subtype edge carries one slack
//! variable moving exponential potential into the binomial row.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::ast::{
    BasicTy, BinOp, Expr, ExprKind, FunDef, Name, NodeId, SimpleType, Span,
};
use crate::basis::{Annotation, BasisConfig, BasisIndex};
use crate::frontend::simple_types::TypeInfo;
use crate::frontend::Elaborated;
use crate::rational::{pos_part, Rat};
use crate::simplex::{LpProblem, Objective, Rel};

/// An annotation or turnstile variable in the constraint system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnVar(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// Coefficient of a basis function on some list type.
    AnnCoeff,
    /// Turnstile constant (available resources before/after a node).
    Turnstile,
    /// Demotion slack on a subtype edge.
    Slack,
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    pub role: VarRole,
    /// Free (may go negative) under the relaxed demotion domain.
    pub free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRel {
    Eq,
    Ge,
}

/// Where a constraint came from, for diagnostics and golden tests.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub function: Name,
    pub rule: &'static str,
    pub span: Span,
    pub node: Option<NodeId>,
}

/// `terms (=|>=) rhs` over annotation variables.
#[derive(Debug, Clone)]
pub struct LinConstraint {
    pub terms: Vec<(Rat, AnnVar)>,
    pub rel: ConstraintRel,
    pub rhs: Rat,
    pub origin: Provenance,
}

/// An annotated type whose annotations are variables of the system.
#[derive(Debug, Clone)]
pub enum ATypeV {
    Basic(BasicTy),
    List(Box<ATypeV>, Vec<AnnVar>),
    Pair(Box<ATypeV>, Box<ATypeV>),
}

impl ATypeV {
    pub fn erase(&self) -> SimpleType {
        match self {
            ATypeV::Basic(b) => SimpleType::Basic(*b),
            ATypeV::List(e, _) => SimpleType::List(Box::new(e.erase())),
            ATypeV::Pair(l, r) => SimpleType::Pair(Box::new(l.erase()), Box::new(r.erase())),
        }
    }

    /// All annotation vectors in this type, outermost first.
    pub fn ann_vectors(&self) -> Vec<&Vec<AnnVar>> {
        match self {
            ATypeV::Basic(_) => vec![],
            ATypeV::List(e, ann) => {
                let mut v = vec![ann];
                v.extend(e.ann_vectors());
                v
            }
            ATypeV::Pair(l, r) => {
                let mut v = l.ann_vectors();
                v.extend(r.ann_vectors());
                v
            }
        }
    }

    /// Substitutes a solution, producing concrete annotations.
    pub fn instantiate(&self, cfg: &BasisConfig, solution: &[Rat]) -> crate::basis::AnnotatedType {
        match self {
            ATypeV::Basic(b) => crate::basis::AnnotatedType::Basic(*b),
            ATypeV::List(e, ann) => crate::basis::AnnotatedType::List(
                Box::new(e.instantiate(cfg, solution)),
                Annotation::from_coeffs(
                    cfg,
                    ann.iter().map(|v| solution[v.0].clone()).collect(),
                ),
            ),
            ATypeV::Pair(l, r) => crate::basis::AnnotatedType::Pair(
                Box::new(l.instantiate(cfg, solution)),
                Box::new(r.instantiate(cfg, solution)),
            ),
        }
    }
}

/// A function's annotated signature over system variables.
#[derive(Debug, Clone)]
pub struct FunSigVars {
    pub arg: ATypeV,
    pub result: ATypeV,
    pub q_in: AnnVar,
    pub q_out: AnnVar,
}

#[derive(Debug, Default)]
pub struct ConstraintSystem {
    pub vars: Vec<VarInfo>,
    pub constraints: Vec<LinConstraint>,
    pub sigs: BTreeMap<Name, FunSigVars>,
    /// Ranked objectives, strongest first (the final magnitude tie-break is
    /// added at solve time).
    pub objective: Vec<(Rat, AnnVar)>,
}

impl ConstraintSystem {
    pub fn var_name(&self, v: AnnVar) -> &str {
        &self.vars[v.0].name
    }

    /// Exact substitution check of a complete assignment.
    pub fn check_assignment(&self, assignment: &[Rat]) -> Result<(), String> {
        for c in &self.constraints {
            let lhs: Rat = c.terms.iter().map(|(k, v)| k * &assignment[v.0]).sum();
            let ok = match c.rel {
                ConstraintRel::Eq => lhs == c.rhs,
                ConstraintRel::Ge => lhs >= c.rhs,
            };
            if !ok {
                return Err(format!(
                    "constraint from {} ({}) violated: {} vs {}",
                    c.origin.function, c.origin.rule, lhs, c.rhs
                ));
            }
        }
        Ok(())
    }

    /// Lowers to the solver's input form.
    pub fn to_lp(&self) -> LpProblem {
        let mut lp = LpProblem::default();
        for v in &self.vars {
            lp.add_var(v.name.clone(), v.free);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.rel {
                ConstraintRel::Eq => Rel::Eq,
                ConstraintRel::Ge => Rel::Ge,
            };
            let terms: Vec<(Rat, usize)> =
                c.terms.iter().map(|(k, v)| (k.clone(), v.0)).collect();
            lp.add_row(format!("c{i}"), terms, rel, c.rhs.clone());
        }
        lp.objective = self
            .objective
            .iter()
            .map(|(k, v)| (k.clone(), v.0))
            .collect();
        lp
    }

    /// The ranked objective list for the lexicographic solve.
    pub fn objectives(&self) -> Vec<Objective> {
        vec![
            Objective::Linear(
                self.objective
                    .iter()
                    .map(|(k, v)| (k.clone(), v.0))
                    .collect(),
            ),
            Objective::Magnitude,
        ]
    }

    /// Debug dump in the LP text format.
    pub fn dump_lp(&self) -> String {
        crate::simplex::to_lp_text(&self.to_lp())
    }
}

struct Gen<'a> {
    cfg: BasisConfig,
    sys: ConstraintSystem,
    types: &'a TypeInfo,
    current_fn: Name,
}

impl<'a> Gen<'a> {
    fn fresh_var(&mut self, site: String, role: VarRole, free: bool) -> AnnVar {
        self.sys.vars.push(VarInfo {
            name: site,
            role,
            free,
        });
        AnnVar(self.sys.vars.len() - 1)
    }

    fn fresh_turnstile(&mut self, site: &str) -> AnnVar {
        // nonnegativity comes from the variable kind
        let name = format!("{}.{site}", self.current_fn);
        self.fresh_var(name, VarRole::Turnstile, false)
    }

    /// Fresh annotation vector without domain rows: under demotion the row
    /// b = 0 entries are free; everything else is nonnegative by kind. Used
    /// for vectors pinned by an exact shift image, which is admissible
    /// whenever its source is.
    fn fresh_ann_raw(&mut self, site: &str) -> Vec<AnnVar> {
        let relaxed = self.cfg.demotion;
        self.cfg
            .indices()
            .iter()
            .enumerate()
            .map(|(i, idx)| {
                let free = relaxed && idx.b == 0;
                self.fresh_var(
                    format!("{}.{site}.{i}", self.current_fn),
                    VarRole::AnnCoeff,
                    free,
                )
            })
            .collect::<Vec<_>>()
    }

    /// Fresh annotation vector with its domain constraints: with demotion the
    /// row b = 0 satisfies p_{0,k} + p_{1,0} >= 0 instead of p_{0,k} >= 0.
    fn fresh_ann(&mut self, site: &str) -> Vec<AnnVar> {
        let vars = self.fresh_ann_raw(site);
        if self.cfg.demotion {
            let idxs = self.cfg.indices();
            let p10 = self.cfg.position(BasisIndex::new(1, 0)).expect("mixed basis");
            for (i, idx) in idxs.iter().enumerate() {
                if idx.b == 0 {
                    self.constrain(
                        vec![(Rat::one(), vars[i]), (Rat::one(), vars[p10])],
                        ConstraintRel::Ge,
                        Rat::zero(),
                        "domain",
                        None,
                    );
                }
            }
        }
        vars
    }

    fn fresh_atype(&mut self, ty: &SimpleType, site: &str) -> ATypeV {
        match ty {
            SimpleType::Basic(b) => ATypeV::Basic(*b),
            SimpleType::List(e) => {
                let ann = self.fresh_ann(site);
                let elem = self.fresh_atype(e, &format!("{site}.el"));
                ATypeV::List(Box::new(elem), ann)
            }
            SimpleType::Pair(l, r) => {
                let a = self.fresh_atype(l, &format!("{site}.l"));
                let b = self.fresh_atype(r, &format!("{site}.r"));
                ATypeV::Pair(Box::new(a), Box::new(b))
            }
        }
    }

    fn constrain(
        &mut self,
        terms: Vec<(Rat, AnnVar)>,
        rel: ConstraintRel,
        rhs: Rat,
        rule: &'static str,
        node: Option<&Expr>,
    ) {
        self.sys.constraints.push(LinConstraint {
            terms,
            rel,
            rhs,
            origin: Provenance {
                function: self.current_fn.clone(),
                rule,
                span: node.map(|n| n.span).unwrap_or_default(),
                node: node.map(|n| n.id),
            },
        });
    }

    /// δ(P) as linear terms over the annotation variables.
    fn delta_terms(&self, ann: &[AnnVar]) -> Vec<(Rat, AnnVar)> {
        self.cfg
            .delta_positions()
            .into_iter()
            .map(|p| (Rat::one(), ann[p]))
            .collect()
    }

    /// Emits `tail = ◁(p)` componentwise; `tail` and `p` are vectors over
    /// the same prefix.
    fn shift_eq(&mut self, p: &[AnnVar], tail: &[AnnVar], node: &Expr) {
        let rows = self.cfg.shift_rows();
        for (i, row) in rows.iter().enumerate() {
            // tail_i - Σ coeff * p_j = 0
            let mut terms = vec![(Rat::one(), tail[i])];
            for (c, pos) in row {
                terms.push((-c.clone(), p[*pos]));
            }
            self.constrain(terms, ConstraintRel::Eq, Rat::zero(), "shift", Some(node));
        }
    }

    /// Deep pointwise subtype edge `from <: to` (from has at least as much
    /// potential). With demotion each list layer gains one slack variable s:
    /// p_{1,0} - s >= q_{1,0} and p_{0,k} + s >= q_{0,k}.
    fn subtype_edge(&mut self, from: &ATypeV, to: &ATypeV, rule: &'static str, node: &Expr) {
        match (from, to) {
            (ATypeV::Basic(_), ATypeV::Basic(_)) => {}
            (ATypeV::Pair(a1, b1), ATypeV::Pair(a2, b2)) => {
                self.subtype_edge(a1, a2, rule, node);
                self.subtype_edge(b1, b2, rule, node);
            }
            (ATypeV::List(e1, p), ATypeV::List(e2, q)) => {
                self.layer_ge(p, q, None, rule, node);
                self.subtype_edge(e1, e2, rule, node);
            }
            _ => unreachable!("subtype edge between different shapes"),
        }
    }

    /// One list layer of a subtype/share constraint:
    /// p >= (sum of rights) pointwise, with optional demotion slack.
    fn layer_ge(
        &mut self,
        p: &[AnnVar],
        rights: &[AnnVar],
        extra_rights: Option<&[AnnVar]>,
        rule: &'static str,
        node: &Expr,
    ) {
        let slack = if self.cfg.demotion {
            Some(self.fresh_var(
                format!("{}.n{}.slack", self.current_fn, node.id),
                VarRole::Slack,
                false,
            ))
        } else {
            None
        };
        let p10 = self.cfg.position(BasisIndex::new(1, 0));
        for (i, idx) in self.cfg.indices().iter().enumerate() {
            let mut terms = vec![(Rat::one(), p[i])];
            if let Some(s) = slack {
                if Some(i) == p10 {
                    terms.push((-Rat::one(), s));
                } else if idx.b == 0 {
                    terms.push((Rat::one(), s));
                }
            }
            terms.push((-Rat::one(), rights[i]));
            if let Some(extra) = extra_rights {
                terms.push((-Rat::one(), extra[i]));
            }
            self.constrain(terms, ConstraintRel::Ge, Rat::zero(), rule, Some(node));
        }
    }

    /// Deep equality of two annotated types.
    fn equate(&mut self, a: &ATypeV, b: &ATypeV, rule: &'static str, node: &Expr) {
        match (a, b) {
            (ATypeV::Basic(_), ATypeV::Basic(_)) => {}
            (ATypeV::Pair(a1, b1), ATypeV::Pair(a2, b2)) => {
                self.equate(a1, a2, rule, node);
                self.equate(b1, b2, rule, node);
            }
            (ATypeV::List(e1, p), ATypeV::List(e2, q)) => {
                for (x, y) in p.iter().zip(q) {
                    self.constrain(
                        vec![(Rat::one(), *x), (-Rat::one(), *y)],
                        ConstraintRel::Eq,
                        Rat::zero(),
                        rule,
                        Some(node),
                    );
                }
                self.equate(e1, e2, rule, node);
            }
            _ => unreachable!("equating different shapes"),
        }
    }

    /// Share split: produces two fresh halves whose pointwise sum fits under
    /// the source type (the Subtype∘ShareList composition). `label` is the
    /// shared variable, kept in the variable names for stable lookups.
    fn share_split(&mut self, src: &ATypeV, label: &str, node: &Expr) -> (ATypeV, ATypeV) {
        match src {
            ATypeV::Basic(b) => (ATypeV::Basic(*b), ATypeV::Basic(*b)),
            ATypeV::Pair(l, r) => {
                let (l1, l2) = self.share_split(l, label, node);
                let (r1, r2) = self.share_split(r, label, node);
                (
                    ATypeV::Pair(Box::new(l1), Box::new(r1)),
                    ATypeV::Pair(Box::new(l2), Box::new(r2)),
                )
            }
            ATypeV::List(e, p) => {
                let (e1, e2) = self.share_split(e, label, node);
                let q = self.fresh_ann(&format!("n{}.share[{label}].l", node.id));
                let r = self.fresh_ann(&format!("n{}.share[{label}].r", node.id));
                self.layer_ge(p, &q, Some(&r), "share", node);
                (
                    ATypeV::List(Box::new(e1), q),
                    ATypeV::List(Box::new(e2), r),
                )
            }
        }
    }

    /// Relax-folded conclusion: node (q,q') against the rule's natural pair
    /// given as linear terms: q >= nat_in and q - nat_in >= q' - nat_out.
    fn relax(
        &mut self,
        q_in: AnnVar,
        q_out: AnnVar,
        nat_in: Vec<(Rat, AnnVar)>,
        nat_in_const: Rat,
        nat_out: Vec<(Rat, AnnVar)>,
        nat_out_const: Rat,
        node: &Expr,
    ) {
        // q_in - nat_in >= nat_in_const
        let mut t1 = vec![(Rat::one(), q_in)];
        for (c, v) in &nat_in {
            t1.push((-c.clone(), *v));
        }
        self.constrain(t1, ConstraintRel::Ge, nat_in_const.clone(), "relax", Some(node));
        // (q_in - nat_in) - (q_out - nat_out) >= nat_in_const - nat_out_const
        let mut t2 = vec![(Rat::one(), q_in), (-Rat::one(), q_out)];
        for (c, v) in &nat_in {
            t2.push((-c.clone(), *v));
        }
        for (c, v) in &nat_out {
            t2.push((c.clone(), *v));
        }
        self.constrain(
            t2,
            ConstraintRel::Ge,
            nat_in_const - nat_out_const,
            "relax",
            Some(node),
        );
    }

    fn node_type(&self, id: NodeId) -> &SimpleType {
        self.types.fns[&self.current_fn]
            .node_types
            .get(&id)
            .expect("every node is typed")
    }

    /// Generates constraints for `e` under context Γ with turnstile (q, q').
    fn gen(
        &mut self,
        e: &Expr,
        ctx: &mut HashMap<Name, ATypeV>,
        q_in: AnnVar,
        q_out: AnnVar,
    ) -> ATypeV {
        let zero = || (Vec::new(), Rat::zero());
        match &e.kind {
            ExprKind::Lit(_) | ExprKind::Nil | ExprKind::Var(_) | ExprKind::Pair(..)
            | ExprKind::Unop(..) => {
                let (ni, nic) = zero();
                let (no, noc) = zero();
                self.relax(q_in, q_out, ni, nic, no, noc, e);
                match &e.kind {
                    ExprKind::Var(x) => ctx[x].clone(),
                    ExprKind::Pair(a, b) => {
                        ATypeV::Pair(Box::new(ctx[a].clone()), Box::new(ctx[b].clone()))
                    }
                    ExprKind::Nil => {
                        let ty = self.node_type(e.id).clone();
                        self.fresh_atype(&ty, &format!("n{}.nil", e.id))
                    }
                    ExprKind::Unop(..) => {
                        let ty = self.node_type(e.id).clone();
                        ATypeV::Basic(match ty {
                            SimpleType::Basic(b) => b,
                            _ => unreachable!(),
                        })
                    }
                    ExprKind::Lit(l) => ATypeV::Basic(match l {
                        crate::ast::Lit::Int(_) => BasicTy::Int,
                        crate::ast::Lit::Bool(_) => BasicTy::Bool,
                        crate::ast::Lit::Unit => BasicTy::Unit,
                    }),
                    _ => unreachable!(),
                }
            }
            ExprKind::Tick(r) => {
                let c_in = pos_part(r);
                let c_out = pos_part(&-r.clone());
                self.relax(q_in, q_out, Vec::new(), c_in, Vec::new(), c_out, e);
                ATypeV::Basic(BasicTy::Unit)
            }
            ExprKind::Binop(op, a, b) => {
                self.relax(q_in, q_out, Vec::new(), Rat::zero(), Vec::new(), Rat::zero(), e);
                if *op == BinOp::Append {
                    self.append_type(ctx, a, b, e)
                } else {
                    let ty = self.node_type(e.id).clone();
                    ATypeV::Basic(match ty {
                        SimpleType::Basic(bt) => bt,
                        _ => unreachable!("non-append binops are basic"),
                    })
                }
            }
            ExprKind::Cons(h, t) => {
                // result L^P with tail at least ◁P and head equal to the
                // element type; costs δ(P).
                let elem = ctx[h].clone();
                let p = self.fresh_ann(&format!("n{}.cons", e.id));
                let tail_req = self.fresh_ann_raw(&format!("n{}.cons.tail", e.id));
                self.shift_eq(&p, &tail_req, e);
                // the actual tail weakens down to the required ◁P
                let (tail_elem, tail_ann) = match &ctx[t] {
                    ATypeV::List(el, ann) => ((**el).clone(), ann.clone()),
                    _ => unreachable!("cons tail is a list"),
                };
                self.layer_ge(&tail_ann, &tail_req, None, "cons", e);
                self.subtype_edge(&tail_elem, &elem, "cons", e);
                let delta = self.delta_terms(&p);
                self.relax(q_in, q_out, delta, Rat::zero(), Vec::new(), Rat::zero(), e);
                ATypeV::List(Box::new(elem), p)
            }
            ExprKind::App(f, x) => {
                let sig = self.sys.sigs[f].clone();
                self.subtype_edge(&ctx[x].clone(), &sig.arg, "app-arg", e);
                let use_res = {
                    let ty = self.node_type(e.id).clone();
                    self.fresh_atype(&ty, &format!("n{}.use", e.id))
                };
                self.subtype_edge(&sig.result, &use_res, "app-res", e);
                self.relax(
                    q_in,
                    q_out,
                    vec![(Rat::one(), sig.q_in)],
                    Rat::zero(),
                    vec![(Rat::one(), sig.q_out)],
                    Rat::zero(),
                    e,
                );
                use_res
            }
            ExprKind::Let(e1, x, e2) => {
                let q1 = self.fresh_turnstile(&format!("n{}.q", e1.id));
                let q1o = self.fresh_turnstile(&format!("n{}.q'", e1.id));
                let a = self.gen(e1, ctx, q1, q1o);
                ctx.insert(x.clone(), a);
                let q2 = self.fresh_turnstile(&format!("n{}.q", e2.id));
                let q2o = self.fresh_turnstile(&format!("n{}.q'", e2.id));
                let b = self.gen(e2, ctx, q2, q2o);
                // sequential threading: e1's leftover is e2's start
                self.constrain(
                    vec![(Rat::one(), q1o), (-Rat::one(), q2)],
                    ConstraintRel::Eq,
                    Rat::zero(),
                    "let",
                    Some(e),
                );
                self.relax(
                    q_in,
                    q_out,
                    vec![(Rat::one(), q1)],
                    Rat::zero(),
                    vec![(Rat::one(), q2o)],
                    Rat::zero(),
                    e,
                );
                b
            }
            ExprKind::Share(x, a, b, body) => {
                let src = ctx[x].clone();
                let (ta, tb) = self.share_split(&src, x, e);
                ctx.insert(a.clone(), ta);
                ctx.insert(b.clone(), tb);
                let qb = self.fresh_turnstile(&format!("n{}.q", body.id));
                let qbo = self.fresh_turnstile(&format!("n{}.q'", body.id));
                let t = self.gen(body, ctx, qb, qbo);
                self.relax(
                    q_in,
                    q_out,
                    vec![(Rat::one(), qb)],
                    Rat::zero(),
                    vec![(Rat::one(), qbo)],
                    Rat::zero(),
                    e,
                );
                t
            }
            ExprKind::Cond(_, et, ef) => {
                // both branches share one turnstile pair
                let qb = self.fresh_turnstile(&format!("n{}.q", e.id));
                let qbo = self.fresh_turnstile(&format!("n{}.q'", e.id));
                let tt = self.gen(et, ctx, qb, qbo);
                let tf = self.gen(ef, ctx, qb, qbo);
                let join = {
                    let ty = self.node_type(e.id).clone();
                    self.fresh_atype(&ty, &format!("n{}.join", e.id))
                };
                self.subtype_edge(&tt, &join, "join", e);
                self.subtype_edge(&tf, &join, "join", e);
                self.relax(
                    q_in,
                    q_out,
                    vec![(Rat::one(), qb)],
                    Rat::zero(),
                    vec![(Rat::one(), qbo)],
                    Rat::zero(),
                    e,
                );
                join
            }
            ExprKind::PairMatch(x, a, b, body) => {
                let (ta, tb) = match ctx[x].clone() {
                    ATypeV::Pair(l, r) => (*l, *r),
                    _ => unreachable!("pair match on a pair"),
                };
                ctx.insert(a.clone(), ta);
                ctx.insert(b.clone(), tb);
                let qb = self.fresh_turnstile(&format!("n{}.q", body.id));
                let qbo = self.fresh_turnstile(&format!("n{}.q'", body.id));
                let t = self.gen(body, ctx, qb, qbo);
                self.relax(
                    q_in,
                    q_out,
                    vec![(Rat::one(), qb)],
                    Rat::zero(),
                    vec![(Rat::one(), qbo)],
                    Rat::zero(),
                    e,
                );
                t
            }
            ExprKind::ListMatch(x, e_nil, h, t, e_cons) => {
                let (elem, p) = match ctx[x].clone() {
                    ATypeV::List(el, ann) => (*el, ann),
                    _ => unreachable!("list match on a list"),
                };
                // rule-level pair (qm, qm'); the nil branch uses it directly,
                // the cons branch starts with the δ(P) bonus
                let qm = self.fresh_turnstile(&format!("n{}.q", e.id));
                let qmo = self.fresh_turnstile(&format!("n{}.q'", e.id));
                let tn = self.gen(e_nil, ctx, qm, qmo);
                let tail = self.fresh_ann_raw(&format!("n{}.tail", e.id));
                self.shift_eq(&p, &tail, e);
                ctx.insert(h.clone(), elem.clone());
                ctx.insert(t.clone(), ATypeV::List(Box::new(elem), tail));
                let qc = self.fresh_turnstile(&format!("n{}.qc", e.id));
                let qco = self.fresh_turnstile(&format!("n{}.qc'", e.id));
                // qc = qm + δ(P), qc' = qm'
                let mut terms = vec![(Rat::one(), qc), (-Rat::one(), qm)];
                for (c, v) in self.delta_terms(&p) {
                    terms.push((-c, v));
                }
                self.constrain(terms, ConstraintRel::Eq, Rat::zero(), "match-δ", Some(e));
                self.constrain(
                    vec![(Rat::one(), qco), (-Rat::one(), qmo)],
                    ConstraintRel::Eq,
                    Rat::zero(),
                    "match-δ",
                    Some(e),
                );
                let tc = self.gen(e_cons, ctx, qc, qco);
                let join = {
                    let ty = self.node_type(e.id).clone();
                    self.fresh_atype(&ty, &format!("n{}.join", e.id))
                };
                self.subtype_edge(&tn, &join, "join", e);
                self.subtype_edge(&tc, &join, "join", e);
                self.relax(
                    q_in,
                    q_out,
                    vec![(Rat::one(), qm)],
                    Rat::zero(),
                    vec![(Rat::one(), qmo)],
                    Rat::zero(),
                    e,
                );
                join
            }
        }
    }

    /// List append: the result annotation fits under both operands pointwise
    /// and is zero outside the linear index (only linear potential is
    /// additive over concatenation); element types weaken covariantly.
    fn append_type(
        &mut self,
        ctx: &HashMap<Name, ATypeV>,
        a: &Name,
        b: &Name,
        e: &Expr,
    ) -> ATypeV {
        let ty = self.node_type(e.id).clone();
        let res = self.fresh_atype(&ty, &format!("n{}.append", e.id));
        let (res_elem, res_ann) = match &res {
            ATypeV::List(el, ann) => ((**el).clone(), ann.clone()),
            _ => unreachable!("append yields a list"),
        };
        for operand in [a, b] {
            let (op_elem, op_ann) = match &ctx[operand] {
                ATypeV::List(el, ann) => ((**el).clone(), ann.clone()),
                _ => unreachable!("append operands are lists"),
            };
            // plain pointwise weakening, no demotion slack here
            for (x, y) in op_ann.iter().zip(&res_ann) {
                self.constrain(
                    vec![(Rat::one(), *x), (-Rat::one(), *y)],
                    ConstraintRel::Ge,
                    Rat::zero(),
                    "append",
                    Some(e),
                );
            }
            self.subtype_edge(&op_elem, &res_elem, "append", e);
        }
        for (i, idx) in self.cfg.indices().iter().enumerate() {
            if !idx.is_linear() {
                self.constrain(
                    vec![(Rat::one(), res_ann[i])],
                    ConstraintRel::Eq,
                    Rat::zero(),
                    "append",
                    Some(e),
                );
            }
        }
        res
    }

    fn gen_function(&mut self, f: &FunDef, assumed_linear_cost: Option<&Rat>) {
        self.current_fn = f.name.clone();
        let sig = self.sys.sigs[&f.name].clone();
        match assumed_linear_cost {
            Some(k) => self.gen_assumed(f, &sig, k),
            None => {
                let mut ctx = HashMap::new();
                ctx.insert(f.param.clone(), sig.arg.clone());
                let body_ty = self.gen(&f.body, &mut ctx, sig.q_in, sig.q_out);
                self.subtype_edge(&body_ty, &sig.result, "fun", &f.body);
            }
        }
    }

    /// Axiomatized signature: the result annotation equals the (unique) list
    /// argument's annotation minus `k` on the linear index, element types
    /// equal, and the turnstile conserves constants (q = q'). For bases with
    /// no linear index the per-element cost is paid by a fresh annotation W
    /// with δ(W) >= k and arg = result + W.
    fn gen_assumed(&mut self, f: &FunDef, sig: &FunSigVars, k: &Rat) {
        fn find_list(t: &ATypeV) -> Option<&ATypeV> {
            match t {
                ATypeV::Basic(_) => None,
                ATypeV::List(..) => Some(t),
                ATypeV::Pair(l, r) => find_list(l).or_else(|| find_list(r)),
            }
        }
        let arg_list = find_list(&sig.arg).expect("validated by the frontend");
        let (arg_elem, arg_ann) = match arg_list {
            ATypeV::List(el, ann) => ((**el).clone(), ann.clone()),
            _ => unreachable!(),
        };
        let (res_elem, res_ann) = match &sig.result {
            ATypeV::List(el, ann) => ((**el).clone(), ann.clone()),
            _ => unreachable!("validated by the frontend"),
        };
        self.equate(&arg_elem, &res_elem, "assume", &f.body);
        match self.cfg.linear_position() {
            Some(lin) => {
                for (i, (a, r)) in arg_ann.iter().zip(&res_ann).enumerate() {
                    let rhs = if i == lin { k.clone() } else { Rat::zero() };
                    self.constrain(
                        vec![(Rat::one(), *a), (-Rat::one(), *r)],
                        ConstraintRel::Eq,
                        rhs,
                        "assume",
                        Some(&f.body),
                    );
                }
            }
            None => {
                let w = self.fresh_ann("assume.w");
                for ((a, r), wi) in arg_ann.iter().zip(&res_ann).zip(&w) {
                    self.constrain(
                        vec![(Rat::one(), *a), (-Rat::one(), *r), (-Rat::one(), *wi)],
                        ConstraintRel::Eq,
                        Rat::zero(),
                        "assume",
                        Some(&f.body),
                    );
                }
                let dterms = self.delta_terms(&w);
                self.constrain(dterms, ConstraintRel::Ge, k.clone(), "assume", Some(&f.body));
            }
        }
        self.constrain(
            vec![(Rat::one(), sig.q_in), (-Rat::one(), sig.q_out)],
            ConstraintRel::Eq,
            Rat::zero(),
            "assume",
            Some(&f.body),
        );
    }
}

/// Builds the full constraint system for an elaborated program: fresh
/// signature skeletons for every function, per-node constraints, and the
/// growth-ranked objective over the entry function's argument coefficients.
pub fn generate(elab: &Elaborated, cfg: &BasisConfig) -> ConstraintSystem {
    let mut g = Gen {
        cfg: *cfg,
        sys: ConstraintSystem::default(),
        types: &elab.types,
        current_fn: String::new(),
    };
    // signature skeletons first, so calls in any order resolve
    for f in &elab.program.functions {
        g.current_fn = f.name.clone();
        let fti = &elab.types.fns[&f.name];
        let arg = g.fresh_atype(&fti.param.clone(), "sig.arg");
        let result = g.fresh_atype(&fti.result.clone(), "sig.res");
        let q_in = g.fresh_turnstile("sig.q");
        let q_out = g.fresh_turnstile("sig.q'");
        g.sys.sigs.insert(
            f.name.clone(),
            FunSigVars {
                arg,
                result,
                q_in,
                q_out,
            },
        );
    }
    for f in &elab.program.functions {
        let assumed = elab.assumptions.get(&f.name).map(|a| a.linear_cost.clone());
        g.gen_function(f, assumed.as_ref());
    }
    // Objective: entry-function argument coefficients weighted by growth
    // rank (M^rank, M = 10^4, lexicographic (b,k) with b dominant), plus the
    // entry q_in at weight one.
    if let Some(entry) = elab.program.entry() {
        let sig = g.sys.sigs[&entry.name].clone();
        let m = Rat::from_integer(10_000.into());
        let idxs = g.cfg.indices();
        let mut objective: Vec<(Rat, AnnVar)> = Vec::new();
        for ann in sig.arg.ann_vectors() {
            for (i, _) in idxs.iter().enumerate() {
                let rank = (i + 1) as u32;
                let mut w = Rat::one();
                for _ in 0..rank {
                    w *= m.clone();
                }
                objective.push((w, ann[i]));
            }
        }
        objective.push((Rat::one(), sig.q_in));
        g.sys.objective = objective;
    }
    // Every variable participates somewhere: give the untouched ones (e.g.
    // annotations of values in dead positions) an explicit domain row.
    let mut mentioned = vec![false; g.sys.vars.len()];
    for c in &g.sys.constraints {
        for (_, v) in &c.terms {
            mentioned[v.0] = true;
        }
    }
    for (_, v) in &g.sys.objective {
        mentioned[v.0] = true;
    }
    for i in 0..g.sys.vars.len() {
        if !mentioned[i] {
            let free = g.sys.vars[i].free;
            let rel = if free { ConstraintRel::Eq } else { ConstraintRel::Ge };
            g.sys.constraints.push(LinConstraint {
                terms: vec![(Rat::one(), AnnVar(i))],
                rel,
                rhs: Rat::zero(),
                origin: Provenance {
                    function: String::new(),
                    rule: "domain",
                    span: Span::default(),
                    node: None,
                },
            });
        }
    }
    g.sys
}

/// Number of annotation-coefficient variables in a signature's types, used
/// by tests to pin the skeleton's shape.
pub fn signature_ann_var_count(sig: &FunSigVars) -> usize {
    sig.arg
        .ann_vectors()
        .iter()
        .chain(sig.result.ann_vectors().iter())
        .map(|v| v.len())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisKind;
    use crate::frontend::elaborate;
    use crate::rational::rat;
    use crate::simplex::{solve_lexicographic, LpOutcome};

    fn corpus(name: &str) -> Elaborated {
        let path = format!("{}/corpus/{name}.aex", env!("CARGO_MANIFEST_DIR"));
        elaborate(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn solve_system(sys: &ConstraintSystem) -> LpOutcome {
        solve_lexicographic(&sys.to_lp(), &sys.objectives())
    }

    #[test]
    fn skeleton_counts() {
        let snoc = corpus("snoc");
        let cfg = BasisConfig::binomial(1);
        let sys = generate(&snoc, &cfg);
        // one list in the argument pair, one in the result, degree 1
        assert_eq!(signature_ann_var_count(&sys.sigs["snoc"]), 2);

        let ss = corpus("subsetSum");
        let sys = generate(&ss, &BasisConfig::stirling(1));
        let sig = &sys.sigs["subsetSum"];
        assert_eq!(sig.arg.ann_vectors().len(), 1);
        assert_eq!(sig.arg.ann_vectors()[0].len(), 1);

        let bb = corpus("ballBins3");
        let sys = generate(&bb, &BasisConfig::stirling(2));
        let sig = &sys.sigs["ballBins3"];
        assert_eq!(sig.arg.ann_vectors()[0].len(), 2);
    }

    #[test]
    fn every_variable_is_constrained_or_objective() {
        let ss = corpus("subsetSum");
        let sys = generate(&ss, &BasisConfig::stirling(1));
        let mut seen = vec![false; sys.vars.len()];
        for c in &sys.constraints {
            for (_, v) in &c.terms {
                seen[v.0] = true;
            }
        }
        for (_, v) in &sys.objective {
            seen[v.0] = true;
        }
        for (i, s) in seen.iter().enumerate() {
            assert!(*s, "variable {} unconstrained", sys.vars[i].name);
        }
    }

    #[test]
    fn subset_sum_stirling_solves_to_paper_signature() {
        let ss = corpus("subsetSum");
        let cfg = BasisConfig::stirling(1);
        let sys = generate(&ss, &cfg);
        match solve_system(&sys) {
            LpOutcome::Optimal { assignment, .. } => {
                sys.check_assignment(&assignment).unwrap();
                let sig = &sys.sigs["subsetSum"];
                let arg_ann = sig.arg.ann_vectors()[0];
                assert_eq!(assignment[arg_ann[0].0], rat(3), "argument coefficient");
                assert_eq!(assignment[sig.q_in.0], rat(1), "q");
                assert_eq!(assignment[sig.q_out.0], rat(0), "q'");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn subset_sum_binomial_is_infeasible() {
        let ss = corpus("subsetSum");
        for k in 1..=3 {
            let sys = generate(&ss, &BasisConfig::binomial(k));
            match solve_system(&sys) {
                LpOutcome::Infeasible { certificate_rows } => {
                    assert!(!certificate_rows.is_empty());
                }
                other => panic!("degree {k} should be infeasible, got {other:?}"),
            }
        }
    }

    #[test]
    fn snoc_binomial_solves_tight() {
        let snoc = corpus("snoc");
        let sys = generate(&snoc, &BasisConfig::binomial(1));
        match solve_system(&sys) {
            LpOutcome::Optimal { assignment, .. } => {
                let sig = &sys.sigs["snoc"];
                let arg_ann = sig.arg.ann_vectors()[0];
                assert_eq!(assignment[arg_ann[0].0], rat(1));
                assert_eq!(assignment[sig.q_in.0], rat(1));
                assert_eq!(assignment[sig.q_out.0], rat(0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ball_bins_stirling2_solves_to_paper_signature() {
        let bb = corpus("ballBins3");
        let sys = generate(&bb, &BasisConfig::stirling(2));
        match solve_system(&sys) {
            LpOutcome::Optimal { assignment, .. } => {
                sys.check_assignment(&assignment).unwrap();
                let sig = &sys.sigs["ballBins3"];
                let arg_ann = sig.arg.ann_vectors()[0];
                assert_eq!(assignment[arg_ann[0].0], rat(2));
                assert_eq!(assignment[arg_ann[1].0], rat(2));
                assert_eq!(assignment[sig.q_in.0], rat(1));
                assert_eq!(assignment[sig.q_out.0], rat(0));
                // result annotations are all zero
                for ann in sys.sigs["ballBins3"].result.ann_vectors() {
                    for v in ann {
                        assert_eq!(assignment[v.0], rat(0));
                    }
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sub_sum1_mixed_without_demotion() {
        let ss = corpus("subSum1");
        let sys = generate(&ss, &BasisConfig::mixed(1, 1, false));
        match solve_system(&sys) {
            LpOutcome::Optimal { assignment, .. } => {
                sys.check_assignment(&assignment).unwrap();
                let sig = &sys.sigs["subSum1"];
                let arg_ann = sig.arg.ann_vectors()[0];
                // (p01, p10, p11) = (0, 2, 1)
                assert_eq!(assignment[arg_ann[0].0], rat(0));
                assert_eq!(assignment[arg_ann[1].0], rat(2));
                assert_eq!(assignment[arg_ann[2].0], rat(1));
                assert_eq!(assignment[sig.q_in.0], rat(1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sub_sum1_mixed_with_demotion() {
        let ss = corpus("subSum1");
        let sys = generate(&ss, &BasisConfig::mixed(1, 1, true));
        match solve_system(&sys) {
            LpOutcome::Optimal { assignment, .. } => {
                sys.check_assignment(&assignment).unwrap();
                let sig = &sys.sigs["subSum1"];
                let arg_ann = sig.arg.ann_vectors()[0];
                // (p01, p10, p11) = (-1, 4, 0)
                assert_eq!(assignment[arg_ann[0].0], rat(-1));
                assert_eq!(assignment[arg_ann[1].0], rat(4));
                assert_eq!(assignment[arg_ann[2].0], rat(0));
                assert_eq!(assignment[sig.q_in.0], rat(1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn objective_is_growth_ranked() {
        let ss = corpus("subSum1");
        let cfg = BasisConfig::mixed(1, 1, false);
        let sys = generate(&ss, &cfg);
        // ranks: (0,1) < (1,0) < (1,1): weights M, M^2, M^3, then q at 1
        let weights: Vec<Rat> = sys.objective.iter().map(|(c, _)| c.clone()).collect();
        assert_eq!(weights[0], rat(10_000));
        assert_eq!(weights[1], rat(10_000) * rat(10_000));
        assert_eq!(weights[2], rat(10_000) * rat(10_000) * rat(10_000));
        assert_eq!(weights[3], rat(1));
        assert_eq!(cfg.kind, BasisKind::Mixed);
    }

    #[test]
    fn dump_contains_stable_names() {
        let snoc = corpus("snoc");
        let sys = generate(&snoc, &BasisConfig::binomial(1));
        let text = sys.dump_lp();
        assert!(text.starts_with("min:"), "{text}");
        assert!(text.contains("snoc.sig.q"));
        assert!(text.contains("snoc.sig.arg"));
        // and it parses back
        crate::simplex::parse_lp_text(&text).unwrap();
    }
}
