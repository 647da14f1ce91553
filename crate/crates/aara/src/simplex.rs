//! Exact rational linear programming: two-phase primal simplex with Bland's
//! anti-cycling rule over a dense tableau.
//!
//! Free variables are encoded as the difference of two nonnegative columns;
//! `>=` and `<=` rows gain surplus/slack columns; every row gets a phase-one
//! artificial. All arithmetic is exact, so feasibility of a returned point
//! can be (and is) checked by substitution with no tolerance.

use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Ge,
    Le,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Le => "<=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpVar {
    pub name: String,
    /// Free variables may take negative values.
    pub free: bool,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub name: String,
    /// (coefficient, variable index), sparse.
    pub terms: Vec<(Rat, usize)>,
    pub rel: Rel,
    pub rhs: Rat,
}

/// A linear program in the solver's input form: minimize the objective
/// subject to the rows, with nonnegative or free variables.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub vars: Vec<LpVar>,
    pub rows: Vec<LpRow>,
    pub objective: Vec<(Rat, usize)>,
}

/// One pass of a lexicographic solve.
#[derive(Debug, Clone)]
pub enum Objective {
    Linear(Vec<(Rat, usize)>),
    /// Minimize the total magnitude of all variables (the sum of all
    /// standard-form columns), used as a final canonicalizing tie-break.
    Magnitude,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        assignment: Vec<Rat>,
        objective: Rat,
        pivots: u64,
    },
    /// The constraint indices whose phase-one artificials stayed positive.
    Infeasible { certificate_rows: Vec<usize> },
    /// An unbounded improving ray over the original variables.
    Unbounded { ray: Vec<Rat> },
}

impl LpProblem {
    pub fn add_var(&mut self, name: impl Into<String>, free: bool) -> usize {
        self.vars.push(LpVar {
            name: name.into(),
            free,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(Rat, usize)>,
        rel: Rel,
        rhs: Rat,
    ) {
        self.rows.push(LpRow {
            name: name.into(),
            terms,
            rel,
            rhs,
        });
    }

    /// Exact substitution check of every constraint.
    pub fn check_feasible(&self, assignment: &[Rat]) -> Result<(), String> {
        for row in &self.rows {
            let lhs: Rat = row.terms.iter().map(|(c, v)| c * &assignment[*v]).sum();
            let ok = match row.rel {
                Rel::Eq => lhs == row.rhs,
                Rel::Ge => lhs >= row.rhs,
                Rel::Le => lhs <= row.rhs,
            };
            if !ok {
                return Err(format!(
                    "constraint `{}` violated: {} {} {}",
                    row.name,
                    lhs,
                    row.rel.symbol(),
                    row.rhs
                ));
            }
        }
        for (i, v) in self.vars.iter().enumerate() {
            if !v.free && assignment[i].is_negative() {
                return Err(format!("variable `{}` negative: {}", v.name, assignment[i]));
            }
        }
        Ok(())
    }
}

/// Column bookkeeping for the standardized tableau.
struct Standardized {
    /// per original var: (plus column, optional minus column)
    var_cols: Vec<(usize, Option<usize>)>,
    /// number of structural (non-artificial) columns
    n_struct: usize,
    /// total columns including artificials
    n_cols: usize,
    /// artificial column of each row
    art_col: Vec<usize>,
    /// tableau rows, each of length n_cols + 1 (rhs last)
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
}

fn standardize(lp: &LpProblem) -> Standardized {
    let mut var_cols = Vec::with_capacity(lp.vars.len());
    let mut n = 0usize;
    for v in &lp.vars {
        if v.free {
            var_cols.push((n, Some(n + 1)));
            n += 2;
        } else {
            var_cols.push((n, None));
            n += 1;
        }
    }
    // surplus/slack columns
    let mut row_extra: Vec<Option<(usize, Rat)>> = Vec::new();
    for row in &lp.rows {
        match row.rel {
            Rel::Eq => row_extra.push(None),
            Rel::Ge => {
                row_extra.push(Some((n, -Rat::one())));
                n += 1;
            }
            Rel::Le => {
                row_extra.push(Some((n, Rat::one())));
                n += 1;
            }
        }
    }
    let n_struct = n;
    let m = lp.rows.len();
    let n_cols = n_struct + m;
    let mut rows = Vec::with_capacity(m);
    let mut art_col = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut t = vec![Rat::zero(); n_cols + 1];
        for (c, v) in &row.terms {
            let (p, mopt) = var_cols[*v];
            t[p] = &t[p] + c;
            if let Some(mcol) = mopt {
                t[mcol] = &t[mcol] - c;
            }
        }
        if let Some((col, coef)) = &row_extra[i] {
            t[*col] = coef.clone();
        }
        t[n_cols] = row.rhs.clone();
        if t[n_cols].is_negative() {
            for x in t.iter_mut() {
                *x = -x.clone();
            }
        }
        let a = n_struct + i;
        t[a] = Rat::one();
        art_col.push(a);
        rows.push(t);
    }
    let basis = art_col.clone();
    Standardized {
        var_cols,
        n_struct,
        n_cols,
        art_col,
        rows,
        basis,
    }
}

struct Tableau {
    std: Standardized,
    pivots: u64,
}

enum PhaseResult {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.std.rows[i][self.std.n_cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.std.rows[row][col].clone();
        debug_assert!(!piv.is_zero());
        let r = &mut self.std.rows[row];
        for x in r.iter_mut() {
            *x = &*x / &piv;
        }
        let pivot_row = self.std.rows[row].clone();
        for (i, r) in self.std.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for (x, p) in r.iter_mut().zip(&pivot_row) {
                *x = &*x - &factor * p;
            }
        }
        self.std.basis[row] = col;
        self.pivots += 1;
    }

    /// Reduced costs and objective value for minimizing `c` at the basis.
    fn reduced_costs(&self, c: &[Rat]) -> (Vec<Rat>, Rat) {
        let n = self.std.n_cols;
        let mut r = c.to_vec();
        let mut value = Rat::zero();
        for (i, &b) in self.std.basis.iter().enumerate() {
            if c[b].is_zero() {
                continue;
            }
            let cb = c[b].clone();
            for j in 0..n {
                if !self.std.rows[i][j].is_zero() {
                    r[j] = &r[j] - &cb * &self.std.rows[i][j];
                }
            }
            value += &cb * self.rhs(i);
        }
        (r, value)
    }

    /// One simplex iteration with Bland's rule; `banned` columns never enter.
    fn step(&mut self, c: &[Rat], banned: &[bool]) -> StepResult {
        let (r, _) = self.reduced_costs(c);
        let mut in_basis = vec![false; self.std.n_cols];
        for &b in &self.std.basis {
            in_basis[b] = true;
        }
        // Bland: lowest-index improving column.
        let entering =
            (0..self.std.n_cols).find(|&j| !banned[j] && r[j].is_negative() && !in_basis[j]);
        let Some(j) = entering else {
            return StepResult::Optimal;
        };
        // ratio test, ties broken by lowest leaving basis index
        let mut best: Option<(Rat, usize, usize)> = None; // (ratio, basis var, row)
        for i in 0..self.std.rows.len() {
            let a = &self.std.rows[i][j];
            if a.is_positive() {
                let ratio = self.rhs(i) / a;
                match &best {
                    None => best = Some((ratio, self.std.basis[i], i)),
                    Some((br, bv, _)) => {
                        if ratio < *br || (ratio == *br && self.std.basis[i] < *bv) {
                            best = Some((ratio, self.std.basis[i], i));
                        }
                    }
                }
            }
        }
        match best {
            Some((_, _, row)) => {
                self.pivot(row, j);
                StepResult::Pivoted
            }
            None => StepResult::Unbounded { entering: j },
        }
    }

    /// Iterates [`Tableau::step`] with a fixed banned set.
    fn run(&mut self, c: &[Rat], banned: &[bool]) -> PhaseResult {
        loop {
            match self.step(c, banned) {
                StepResult::Pivoted => continue,
                StepResult::Optimal => return PhaseResult::Optimal,
                StepResult::Unbounded { .. } => return PhaseResult::Unbounded,
            }
        }
    }
}

enum StepResult {
    Pivoted,
    Optimal,
    Unbounded { entering: usize },
}

/// Expands an [`Objective`] into a standard-form cost vector.
fn cost_vector(obj: &Objective, std: &Standardized) -> Vec<Rat> {
    let mut c = vec![Rat::zero(); std.n_cols];
    match obj {
        Objective::Linear(terms) => {
            for (coef, v) in terms {
                let (p, mopt) = std.var_cols[*v];
                c[p] = &c[p] + coef;
                if let Some(mcol) = mopt {
                    c[mcol] = &c[mcol] - coef;
                }
            }
        }
        Objective::Magnitude => {
            for (p, mopt) in &std.var_cols {
                c[*p] = Rat::one();
                if let Some(mcol) = mopt {
                    c[*mcol] = Rat::one();
                }
            }
        }
    }
    c
}

fn extract(std: &Standardized, n_vars: usize) -> Vec<Rat> {
    let mut col_val = vec![Rat::zero(); std.n_cols];
    for (i, &b) in std.basis.iter().enumerate() {
        col_val[b] = std.rows[i][std.n_cols].clone();
    }
    (0..n_vars)
        .map(|v| {
            let (p, mopt) = std.var_cols[v];
            match mopt {
                Some(mcol) => &col_val[p] - &col_val[mcol],
                None => col_val[p].clone(),
            }
        })
        .collect()
}

/// Two-phase simplex for the problem's own objective.
pub fn solve(lp: &LpProblem) -> LpOutcome {
    solve_lexicographic(lp, &[Objective::Linear(lp.objective.clone())])
}

/// Solves the objectives in order; each achieved optimum is pinned before
/// the next objective is optimized (columns that would degrade an earlier
/// optimum are barred from entering the basis).
pub fn solve_lexicographic(lp: &LpProblem, objectives: &[Objective]) -> LpOutcome {
    let std = standardize(lp);
    let mut t = Tableau { std, pivots: 0 };
    let n_cols = t.std.n_cols;

    // Phase one: minimize the artificials.
    let mut phase1 = vec![Rat::zero(); n_cols];
    for &a in &t.std.art_col {
        phase1[a] = Rat::one();
    }
    let banned_none = vec![false; n_cols];
    match t.run(&phase1, &banned_none) {
        PhaseResult::Optimal => {}
        PhaseResult::Unbounded => unreachable!("phase one is bounded below by zero"),
    }
    let (_, p1val) = t.reduced_costs(&phase1);
    if p1val.is_positive() {
        let mut certificate_rows = Vec::new();
        for (i, &b) in t.std.basis.iter().enumerate() {
            if t.std.art_col.contains(&b) && t.rhs(i).is_positive() {
                certificate_rows.push(i);
            }
        }
        return LpOutcome::Infeasible { certificate_rows };
    }
    // Drive zero-level artificials out of the basis where possible; rows
    // where none of the structural columns can pivot are redundant.
    for i in 0..t.std.rows.len() {
        let b = t.std.basis[i];
        if b >= t.std.n_struct {
            if let Some(j) = (0..t.std.n_struct).find(|&j| !t.std.rows[i][j].is_zero()) {
                t.pivot(i, j);
            }
        }
    }
    // Compact the tableau: artificial columns are done, and rows still based
    // on an artificial are all-zero over the structural columns.
    {
        let n_struct = t.std.n_struct;
        let keep: Vec<usize> = (0..t.std.rows.len())
            .filter(|&i| t.std.basis[i] < n_struct)
            .collect();
        t.std.rows = keep
            .iter()
            .map(|&i| {
                let mut row: Vec<Rat> = t.std.rows[i][..n_struct].to_vec();
                row.push(t.std.rows[i][t.std.n_cols].clone());
                row
            })
            .collect();
        t.std.basis = keep.iter().map(|&i| t.std.basis[i]).collect();
        t.std.n_cols = n_struct;
        t.std.art_col.clear();
    }
    let n_cols = t.std.n_cols;
    let banned = vec![false; n_cols];

    // A column with a nonzero reduced cost under a locked (already optimized)
    // objective would change that objective's value, so it may not enter;
    // the set depends on the basis and is recomputed after every pivot.
    let compute_banned = |t: &Tableau, locked: &[Vec<Rat>]| -> Vec<bool> {
        let mut pass_banned = banned.clone();
        for lc in locked {
            let (r, _) = t.reduced_costs(lc);
            for (j, rc) in r.iter().enumerate() {
                if !rc.is_zero() {
                    pass_banned[j] = true;
                }
            }
        }
        pass_banned
    };

    let mut locked: Vec<Vec<Rat>> = Vec::new();
    for (k, obj) in objectives.iter().enumerate() {
        let c = cost_vector(obj, &t.std);
        loop {
            let pass_banned = compute_banned(&t, &locked);
            match t.step(&c, &pass_banned) {
                StepResult::Pivoted => continue,
                StepResult::Optimal => break,
                StepResult::Unbounded { entering } => {
                    let mut ray_cols = vec![Rat::zero(); n_cols];
                    ray_cols[entering] = Rat::one();
                    for (i, &b) in t.std.basis.iter().enumerate() {
                        ray_cols[b] = -t.std.rows[i][entering].clone();
                    }
                    let ray = (0..lp.vars.len())
                        .map(|v| {
                            let (p, mopt) = t.std.var_cols[v];
                            match mopt {
                                Some(mcol) => &ray_cols[p] - &ray_cols[mcol],
                                None => ray_cols[p].clone(),
                            }
                        })
                        .collect();
                    return LpOutcome::Unbounded { ray };
                }
            }
        }
        if k + 1 < objectives.len() {
            locked.push(c);
        } else {
            // Optimality certificate: nonnegative reduced costs over the
            // columns that were allowed to enter.
            #[cfg(debug_assertions)]
            {
                let (r, _) = t.reduced_costs(&c);
                let pass_banned = compute_banned(&t, &locked);
                for j in 0..n_cols {
                    if !pass_banned[j] {
                        debug_assert!(
                            !r[j].is_negative(),
                            "reduced cost negative at optimality: col {j}"
                        );
                    }
                }
            }
        }
    }

    let assignment = extract(&t.std, lp.vars.len());
    debug_assert!(
        lp.check_feasible(&assignment).is_ok(),
        "{:?}",
        lp.check_feasible(&assignment)
    );
    let objective: Rat = lp
        .objective
        .iter()
        .map(|(c, v)| c * &assignment[*v])
        .sum();
    LpOutcome::Optimal {
        assignment,
        objective,
        pivots: t.pivots,
    }
}

/// Renders in the debug text format: `min: …;`, one `name: … >= r;` line per
/// constraint, and a trailing `free:` line naming free variables.
pub fn to_lp_text(lp: &LpProblem) -> String {
    fn expr(terms: &[(Rat, usize)], vars: &[LpVar]) -> String {
        if terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (c, v)) in terms.iter().enumerate() {
            let name = &vars[*v].name;
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    s.push_str("- ");
                }
            } else if c.is_negative() {
                s.push_str(" - ");
            } else {
                s.push_str(" + ");
            }
            if mag.is_one() {
                let _ = write!(s, "{name}");
            } else {
                let _ = write!(s, "{mag} {name}");
            }
        }
        s
    }
    let mut out = String::new();
    let _ = writeln!(out, "min: {};", expr(&lp.objective, &lp.vars));
    for row in &lp.rows {
        let _ = writeln!(
            out,
            "{}: {} {} {};",
            row.name,
            expr(&row.terms, &lp.vars),
            row.rel.symbol(),
            row.rhs
        );
    }
    let frees: Vec<&str> = lp
        .vars
        .iter()
        .filter(|v| v.free)
        .map(|v| v.name.as_str())
        .collect();
    if !frees.is_empty() {
        let _ = writeln!(out, "free: {};", frees.join(" "));
    }
    out
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '#' | '%' | '\'' | '[' | ']')
}

fn tokenize_expr(s: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if is_name_char(c) || c == '/' {
            cur.push(c);
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            match c {
                '+' => out.push("+".into()),
                '-' => out.push("-".into()),
                c if c.is_whitespace() => {}
                other => return Err(format!("unexpected `{other}` in expression")),
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

/// Parses the text format emitted by [`to_lp_text`].
pub fn parse_lp_text(text: &str) -> Result<LpProblem, String> {
    let mut lp = LpProblem::default();
    let mut by_name: HashMap<String, usize> = HashMap::new();

    fn intern(
        name: &str,
        lp: &mut LpProblem,
        by_name: &mut HashMap<String, usize>,
    ) -> usize {
        if let Some(&i) = by_name.get(name) {
            return i;
        }
        let i = lp.add_var(name, false);
        by_name.insert(name.to_string(), i);
        i
    }

    fn parse_expr(
        s: &str,
        lp: &mut LpProblem,
        by_name: &mut HashMap<String, usize>,
    ) -> Result<Vec<(Rat, usize)>, String> {
        let toks = tokenize_expr(s)?;
        let mut terms = Vec::new();
        let mut i = 0;
        let mut sign = Rat::one();
        while i < toks.len() {
            match toks[i].as_str() {
                "+" => {
                    sign = Rat::one();
                    i += 1;
                }
                "-" => {
                    sign = -Rat::one();
                    i += 1;
                }
                "0" if toks.len() == 1 => {
                    i += 1;
                }
                t => {
                    let looks_numeric = t.chars().next().is_some_and(|c| c.is_ascii_digit());
                    let (coef, name) = if looks_numeric {
                        let r = crate::rational::parse_rat(t)
                            .ok_or_else(|| format!("bad coefficient `{t}`"))?;
                        let name = toks
                            .get(i + 1)
                            .ok_or_else(|| format!("dangling coefficient `{t}`"))?
                            .clone();
                        i += 2;
                        (r, name)
                    } else {
                        i += 1;
                        (Rat::one(), t.to_string())
                    };
                    terms.push((&sign * coef, intern(&name, lp, by_name)));
                    sign = Rat::one();
                }
            }
        }
        Ok(terms)
    }

    for line in text.lines() {
        let line = line.trim().trim_end_matches(';').trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line
            .split_once(':')
            .ok_or_else(|| format!("missing `:` in line `{line}`"))?;
        let head = head.trim();
        let rest = rest.trim();
        if head == "min" {
            let parsed = parse_expr(rest, &mut lp, &mut by_name)?;
            lp.objective = parsed;
        } else if head == "free" {
            for name in rest.split_whitespace() {
                let i = intern(name, &mut lp, &mut by_name);
                lp.vars[i].free = true;
            }
        } else {
            let (rel, pos, len) = if let Some(p) = rest.find(">=") {
                (Rel::Ge, p, 2)
            } else if let Some(p) = rest.find("<=") {
                (Rel::Le, p, 2)
            } else if let Some(p) = rest.find('=') {
                (Rel::Eq, p, 1)
            } else {
                return Err(format!("no relation in `{line}`"));
            };
            let lhs = &rest[..pos];
            let rhs_text = rest[pos + len..].trim();
            let terms = parse_expr(lhs, &mut lp, &mut by_name)?;
            let rhs = crate::rational::parse_rat(rhs_text)
                .ok_or_else(|| format!("bad right-hand side in `{line}`"))?;
            lp.add_row(head, terms, rel, rhs);
        }
    }
    Ok(lp)
}
