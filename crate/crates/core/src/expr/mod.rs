//! Symbolic probability expressions.
//!
//! Leaves are terms `P(A | do(B), C)` over variable-level sets; internal
//! nodes are sums over one variable's values, products, and quotients. An
//! [`Estimand`] is an expression whose leaves carry no `do()` — a functional
//! of the observational distribution.
//!
//! A `Sum` binds a name for its body and records the column whose domain the
//! sum ranges over (`range`). For sums written directly over a graph
//! variable the two coincide; canonical renaming and capture-avoiding fresh
//! binders keep the column reference intact while the binder name changes.
//! Structural equality compares binder names but ignores ranges, so
//! canonical forms of alpha-equivalent expressions compare equal.

mod eval;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist::{pow10_tolerance, DomainSpec, Distribution};
use crate::error::{Error, Result};
use crate::graph::NodeSet;

pub use parse::parse_expr;

/// A symbolic probability expression tree.
#[derive(Debug, Clone)]
pub enum Expr {
    /// `P(outcome | do(do_set), given)`; an observational term when
    /// `do_set` is empty.
    Term {
        outcome: NodeSet,
        do_set: NodeSet,
        given: NodeSet,
    },
    /// Sum of `body` over the values of column `range`, binding `var`.
    Sum {
        var: String,
        range: String,
        body: Box<Expr>,
    },
    /// Product of factors; the empty product is the constant one.
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn term(outcome: NodeSet, given: NodeSet) -> Expr {
        Expr::Term {
            outcome,
            do_set: NodeSet::new(),
            given,
        }
    }

    pub fn do_term(outcome: NodeSet, do_set: NodeSet, given: NodeSet) -> Expr {
        Expr::Term {
            outcome,
            do_set,
            given,
        }
    }

    /// Sum over the values of variable `var` (binder and range coincide).
    pub fn sum(var: impl Into<String>, body: Expr) -> Expr {
        let var = var.into();
        debug_assert!(
            body.mentions_free(&var),
            "sum must bind a variable occurring beneath it: {var}"
        );
        Expr::Sum {
            range: var.clone(),
            var,
            body: Box::new(body),
        }
    }

    /// Sum binding `var` over the domain of column `range`.
    pub fn sum_over(var: impl Into<String>, range: impl Into<String>, body: Expr) -> Expr {
        Expr::Sum {
            var: var.into(),
            range: range.into(),
            body: Box::new(body),
        }
    }

    /// Wraps `body` in sums over each variable of `vars` (first name
    /// outermost).
    pub fn marginal_sum(vars: &NodeSet, body: Expr) -> Expr {
        let mut e = body;
        for v in vars.iter().rev() {
            e = Expr::sum(v.clone(), e);
        }
        e
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        Expr::Product(factors)
    }

    pub fn quotient(num: Expr, den: Expr) -> Expr {
        Expr::Quotient(Box::new(num), Box::new(den))
    }

    pub fn one() -> Expr {
        Expr::Product(Vec::new())
    }

    pub fn is_do_free(&self) -> bool {
        match self {
            Expr::Term { do_set, .. } => do_set.is_empty(),
            Expr::Sum { body, .. } => body.is_do_free(),
            Expr::Product(fs) => fs.iter().all(Expr::is_do_free),
            Expr::Quotient(n, d) => n.is_do_free() && d.is_do_free(),
        }
    }

    fn mentions_free(&self, name: &str) -> bool {
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => outcome.contains(name) || do_set.contains(name) || given.contains(name),
            Expr::Sum { var, body, .. } => var != name && body.mentions_free(name),
            Expr::Product(fs) => fs.iter().any(|f| f.mentions_free(name)),
            Expr::Quotient(n, d) => n.mentions_free(name) || d.mentions_free(name),
        }
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut NodeSet) {
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => {
                for name in outcome.iter().chain(do_set).chain(given) {
                    if !bound.iter().any(|b| b == name) {
                        out.insert(name.clone());
                    }
                }
            }
            Expr::Sum { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Expr::Product(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Expr::Quotient(n, d) => {
                n.collect_free(bound, out);
                d.collect_free(bound, out);
            }
        }
    }

    /// Variables that need a binding when the expression is evaluated.
    pub fn free_vars(&self) -> NodeSet {
        let mut out = NodeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// Distribution columns the expression reads: free variables plus the
    /// range columns of all sums.
    pub fn columns(&self) -> NodeSet {
        let mut out = self.free_vars();
        fn ranges(e: &Expr, out: &mut NodeSet) {
            match e {
                Expr::Term { .. } => {}
                Expr::Sum { range, body, .. } => {
                    out.insert(range.clone());
                    ranges(body, out);
                }
                Expr::Product(fs) => fs.iter().for_each(|f| ranges(f, out)),
                Expr::Quotient(n, d) => {
                    ranges(n, out);
                    ranges(d, out);
                }
            }
        }
        ranges(self, &mut out);
        out
    }

    /// Renames free occurrences of `old` to `new`, stopping at shadowing
    /// binders. Ranges are column references and are never renamed.
    pub(crate) fn rename_free(&self, old: &str, new: &str) -> Expr {
        let rename_set = |s: &NodeSet| -> NodeSet {
            s.iter()
                .map(|n| {
                    if n == old {
                        new.to_string()
                    } else {
                        n.clone()
                    }
                })
                .collect()
        };
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => Expr::Term {
                outcome: rename_set(outcome),
                do_set: rename_set(do_set),
                given: rename_set(given),
            },
            Expr::Sum { var, range, body } => {
                if var == old {
                    self.clone()
                } else {
                    Expr::Sum {
                        var: var.clone(),
                        range: range.clone(),
                        body: Box::new(body.rename_free(old, new)),
                    }
                }
            }
            Expr::Product(fs) => Expr::Product(fs.iter().map(|f| f.rename_free(old, new)).collect()),
            Expr::Quotient(n, d) => Expr::Quotient(
                Box::new(n.rename_free(old, new)),
                Box::new(d.rename_free(old, new)),
            ),
        }
    }

    /// Alpha-invariant canonical key: binder occurrences are rendered as
    /// de-Bruijn indices, set members and product factors are re-sorted, and
    /// sum ranges are included. Used for memoization, factor sorting and
    /// strict canonical comparison.
    pub fn alpha_key(&self) -> String {
        self.alpha_key_in(&mut Vec::new())
    }

    /// [`Expr::alpha_key`] computed relative to an enclosing binder stack,
    /// so that keys of subexpressions stay alpha-invariant.
    fn alpha_key_in(&self, stack: &mut Vec<String>) -> String {
        fn render_name(name: &str, stack: &[String]) -> String {
            match stack.iter().rev().position(|b| b == name) {
                Some(k) => format!("%{k}"),
                None => name.to_string(),
            }
        }
        fn render_set(s: &NodeSet, stack: &[String]) -> String {
            let mut items: Vec<String> = s.iter().map(|n| render_name(n, stack)).collect();
            items.sort();
            items.join(",")
        }
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => format!(
                "T({};{};{})",
                render_set(outcome, stack),
                render_set(do_set, stack),
                render_set(given, stack)
            ),
            Expr::Sum { var, range, body } => {
                stack.push(var.clone());
                let inner = body.alpha_key_in(stack);
                stack.pop();
                format!("S[{range}]{{{inner}}}")
            }
            Expr::Product(fs) => {
                let mut keys: Vec<String> = fs.iter().map(|f| f.alpha_key_in(stack)).collect();
                keys.sort();
                format!("*{{{}}}", keys.join("|"))
            }
            Expr::Quotient(n, d) => {
                format!("Q{{{}}}{{{}}}", n.alpha_key_in(stack), d.alpha_key_in(stack))
            }
        }
    }

    fn flatten_into(self, out: &mut Vec<Expr>) {
        match self {
            Expr::Product(fs) => {
                for f in fs {
                    f.flatten_into(out);
                }
            }
            other => out.push(other),
        }
    }

    fn rebuild_product(factors: Vec<Expr>, stack: &mut Vec<String>) -> Expr {
        let mut keyed: Vec<(String, Expr)> = factors
            .into_iter()
            .map(|f| (f.alpha_key_in(stack), f))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let mut factors: Vec<Expr> = keyed.into_iter().map(|(_, f)| f).collect();
        match factors.len() {
            1 => factors.pop().unwrap(),
            _ => Expr::Product(factors),
        }
    }

    fn normalize_in(&self, stack: &mut Vec<String>) -> Expr {
        match self {
            Expr::Term { .. } => self.clone(),
            Expr::Sum { var, range, body } => {
                stack.push(var.clone());
                let body = body.normalize_in(stack);
                stack.pop();
                Expr::Sum {
                    var: var.clone(),
                    range: range.clone(),
                    body: Box::new(body),
                }
            }
            Expr::Product(fs) => {
                let mut flat = Vec::new();
                for f in fs {
                    f.normalize_in(stack).flatten_into(&mut flat);
                }
                Expr::rebuild_product(flat, stack)
            }
            Expr::Quotient(n, d) => {
                let mut num = Vec::new();
                n.normalize_in(stack).flatten_into(&mut num);
                let mut den = Vec::new();
                d.normalize_in(stack).flatten_into(&mut den);
                // Syntactic cancellation of equal factors.
                let mut kept_den: Vec<Expr> = Vec::new();
                'den: for df in den {
                    let key = df.alpha_key_in(stack);
                    for i in 0..num.len() {
                        if num[i].alpha_key_in(stack) == key {
                            num.remove(i);
                            continue 'den;
                        }
                    }
                    kept_den.push(df);
                }
                if kept_den.is_empty() {
                    Expr::rebuild_product(num, stack)
                } else {
                    Expr::Quotient(
                        Box::new(Expr::rebuild_product(num, stack)),
                        Box::new(Expr::rebuild_product(kept_den, stack)),
                    )
                }
            }
        }
    }

    fn alpha_normalize(&self) -> Expr {
        let free = self.free_vars();
        let mut counter = 0usize;
        let mut fresh = move || loop {
            let candidate = format!("_{counter}");
            counter += 1;
            if !free.contains(&candidate) {
                return candidate;
            }
        };
        fn go(e: &Expr, fresh: &mut impl FnMut() -> String) -> Expr {
            match e {
                Expr::Term { .. } => e.clone(),
                Expr::Sum { var, range, body } => {
                    let new = fresh();
                    let renamed = body.rename_free(var, &new);
                    Expr::Sum {
                        var: new,
                        range: range.clone(),
                        body: Box::new(go(&renamed, fresh)),
                    }
                }
                Expr::Product(fs) => Expr::Product(fs.iter().map(|f| go(f, fresh)).collect()),
                Expr::Quotient(n, d) => {
                    Expr::Quotient(Box::new(go(n, fresh)), Box::new(go(d, fresh)))
                }
            }
        }
        go(self, &mut fresh)
    }

    /// Deterministic normal form: products flattened and sorted, quotients
    /// with syntactically equal factors cancelled, bound variables renamed
    /// canonically.
    pub fn canonicalize(&self) -> Expr {
        self.normalize_in(&mut Vec::new()).alpha_normalize()
    }

    /// Every name mentioned anywhere: set members, binders, ranges.
    fn all_names(&self, out: &mut NodeSet) {
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => out.extend(outcome.iter().chain(do_set).chain(given).cloned()),
            Expr::Sum { var, range, body } => {
                out.insert(var.clone());
                out.insert(range.clone());
                body.all_names(out);
            }
            Expr::Product(fs) => fs.iter().for_each(|f| f.all_names(out)),
            Expr::Quotient(n, d) => {
                n.all_names(out);
                d.all_names(out);
            }
        }
    }

    /// Renames any binder that re-binds a name already bound above it, so
    /// that no variable is bound twice on one root-to-leaf path. Ranges are
    /// preserved, so evaluation is unchanged.
    pub fn freshen_shadowing(&self) -> Expr {
        let mut used = NodeSet::new();
        self.all_names(&mut used);
        fn go(e: &Expr, stack: &mut Vec<String>, used: &mut NodeSet) -> Expr {
            match e {
                Expr::Term { .. } => e.clone(),
                Expr::Sum { var, range, body } => {
                    let (name, body) = if stack.iter().any(|b| b == var) {
                        let fresh = Expr::fresh_name(used);
                        used.insert(fresh.clone());
                        (fresh.clone(), body.rename_free(var, &fresh))
                    } else {
                        (var.clone(), (**body).clone())
                    };
                    stack.push(name.clone());
                    let body = go(&body, stack, used);
                    stack.pop();
                    Expr::Sum {
                        var: name,
                        range: range.clone(),
                        body: Box::new(body),
                    }
                }
                Expr::Product(fs) => {
                    Expr::Product(fs.iter().map(|f| go(f, stack, used)).collect())
                }
                Expr::Quotient(n, d) => Expr::Quotient(
                    Box::new(go(n, stack, used)),
                    Box::new(go(d, stack, used)),
                ),
            }
        }
        go(self, &mut Vec::new(), &mut used)
    }

    /// Fresh binder name avoiding every name mentioned in `avoid`.
    pub(crate) fn fresh_name(avoid: &NodeSet) -> String {
        let mut k = 0usize;
        loop {
            let candidate = format!("_{k}");
            if !avoid.contains(&candidate) {
                return candidate;
            }
            k += 1;
        }
    }

    /// Paths of all leaves in preorder. Child indexing: sum body is 0,
    /// product factors by position, quotient numerator 0 / denominator 1.
    pub fn leaf_paths(&self) -> Vec<Vec<usize>> {
        fn go(e: &Expr, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            match e {
                Expr::Term { .. } => out.push(prefix.clone()),
                Expr::Sum { body, .. } => {
                    prefix.push(0);
                    go(body, prefix, out);
                    prefix.pop();
                }
                Expr::Product(fs) => {
                    for (i, f) in fs.iter().enumerate() {
                        prefix.push(i);
                        go(f, prefix, out);
                        prefix.pop();
                    }
                }
                Expr::Quotient(n, d) => {
                    prefix.push(0);
                    go(n, prefix, out);
                    prefix.pop();
                    prefix.push(1);
                    go(d, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn at_path(&self, path: &[usize]) -> Result<&Expr> {
        let mut cur = self;
        for &i in path {
            cur = match cur {
                Expr::Sum { body, .. } if i == 0 => body,
                Expr::Product(fs) if i < fs.len() => &fs[i],
                Expr::Quotient(n, _) if i == 0 => n,
                Expr::Quotient(_, d) if i == 1 => d,
                _ => return Err(Error::Internal(format!("bad expression path {path:?}"))),
            };
        }
        Ok(cur)
    }

    /// Copy of the expression with the subtree at `path` replaced.
    pub fn with_replacement(&self, path: &[usize], new: Expr) -> Result<Expr> {
        if path.is_empty() {
            return Ok(new);
        }
        let (i, rest) = (path[0], &path[1..]);
        Ok(match self {
            Expr::Sum { var, range, body } if i == 0 => Expr::Sum {
                var: var.clone(),
                range: range.clone(),
                body: Box::new(body.with_replacement(rest, new)?),
            },
            Expr::Product(fs) if i < fs.len() => {
                let mut fs = fs.clone();
                fs[i] = fs[i].with_replacement(rest, new)?;
                Expr::Product(fs)
            }
            Expr::Quotient(n, d) if i == 0 => {
                Expr::Quotient(Box::new(n.with_replacement(rest, new)?), d.clone())
            }
            Expr::Quotient(n, d) if i == 1 => {
                Expr::Quotient(n.clone(), Box::new(d.with_replacement(rest, new)?))
            }
            _ => return Err(Error::Internal(format!("bad expression path {path:?}"))),
        })
    }

    /// Sum binders on the path from the root to (and excluding) the node at
    /// `path`.
    pub fn binders_above(&self, path: &[usize]) -> NodeSet {
        let mut out = NodeSet::new();
        let mut cur = self;
        for &i in path {
            match cur {
                Expr::Sum { var, body, .. } => {
                    out.insert(var.clone());
                    cur = body;
                }
                Expr::Product(fs) => cur = &fs[i],
                Expr::Quotient(n, d) => cur = if i == 0 { n } else { d },
                Expr::Term { .. } => break,
            }
        }
        out
    }
}

impl PartialEq for Expr {
    /// Structural equality; binder names participate, sum ranges do not
    /// (they are evaluation hints tied to the column, and canonical forms of
    /// alpha-equivalent expressions must compare equal).
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                Expr::Term {
                    outcome: o1,
                    do_set: d1,
                    given: g1,
                },
                Expr::Term {
                    outcome: o2,
                    do_set: d2,
                    given: g2,
                },
            ) => o1 == o2 && d1 == d2 && g1 == g2,
            (
                Expr::Sum {
                    var: v1, body: b1, ..
                },
                Expr::Sum {
                    var: v2, body: b2, ..
                },
            ) => v1 == v2 && b1 == b2,
            (Expr::Product(a), Expr::Product(b)) => a == b,
            (Expr::Quotient(n1, d1), Expr::Quotient(n2, d2)) => n1 == n2 && d1 == d2,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(s: &NodeSet) -> String {
            s.iter().cloned().collect::<Vec<_>>().join(",")
        }
        fn factor(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Product(_) | Expr::Quotient(..) => write!(f, "({e})"),
                _ => write!(f, "{e}"),
            }
        }
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => {
                write!(f, "P({}", set(outcome))?;
                match (do_set.is_empty(), given.is_empty()) {
                    (true, true) => {}
                    (true, false) => write!(f, "|{}", set(given))?,
                    (false, true) => write!(f, "|do({})", set(do_set))?,
                    (false, false) => write!(f, "|do({}),{}", set(do_set), set(given))?,
                }
                write!(f, ")")
            }
            Expr::Sum { var, range, body } => {
                if var == range {
                    write!(f, "sum_{{{var}}} ({body})")
                } else {
                    write!(f, "sum_{{{var}:{range}}} ({body})")
                }
            }
            Expr::Product(fs) => {
                if fs.is_empty() {
                    return write!(f, "1");
                }
                for (i, e) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    factor(e, f)?;
                }
                Ok(())
            }
            Expr::Quotient(n, d) => write!(f, "({n}) / ({d})"),
        }
    }
}

/// A do-free expression: a causal estimand as a functional of the
/// observational distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Estimand(Expr);

impl Estimand {
    /// Validates do-freeness and well-formed scoping (every sum binds an
    /// occurring variable, no binder is re-bound beneath itself).
    pub fn new(expr: Expr) -> Result<Self> {
        if !expr.is_do_free() {
            return Err(Error::Internal(
                "estimand must not contain do() terms".into(),
            ));
        }
        fn check_scoping(e: &Expr, stack: &mut Vec<String>) -> Result<()> {
            match e {
                Expr::Term { .. } => Ok(()),
                Expr::Sum { var, body, .. } => {
                    if stack.iter().any(|b| b == var) {
                        return Err(Error::Internal(format!(
                            "variable `{var}` bound twice on one path"
                        )));
                    }
                    if !body.mentions_free(var) {
                        return Err(Error::Internal(format!(
                            "sum binds `{var}` which does not occur beneath it"
                        )));
                    }
                    stack.push(var.clone());
                    check_scoping(body, stack)?;
                    stack.pop();
                    Ok(())
                }
                Expr::Product(fs) => fs.iter().try_for_each(|f| check_scoping(f, stack)),
                Expr::Quotient(n, d) => {
                    check_scoping(n, stack)?;
                    check_scoping(d, stack)
                }
            }
        }
        check_scoping(&expr, &mut Vec::new())?;
        Ok(Estimand(expr))
    }

    pub fn expr(&self) -> &Expr {
        &self.0
    }

    pub fn into_expr(self) -> Expr {
        self.0
    }

    pub fn canonicalize(&self) -> Estimand {
        Estimand(self.0.canonicalize())
    }

    pub fn free_vars(&self) -> NodeSet {
        self.0.free_vars()
    }

    pub fn parse(text: &str) -> Result<Estimand> {
        Estimand::new(parse_expr(text)?)
    }

    pub fn evaluate(
        &self,
        dist: &Distribution,
        binding: &BTreeMap<String, String>,
    ) -> Result<BigRational> {
        self.0.evaluate(dist, binding)
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Semi-decides semantic equality of two estimands: strict canonical
/// equality short-circuits to `true`; otherwise both are evaluated at every
/// free-variable binding on `trials` independently sampled strictly positive
/// random tables. Any disagreement beyond 1e-12 is definitive `false`;
/// universal agreement is `true` with high confidence.
pub fn equivalent(
    e1: &Estimand,
    e2: &Estimand,
    spec: &DomainSpec,
    trials: usize,
    seed: u64,
) -> Result<bool> {
    if trials == 0 {
        return Err(Error::InvalidBudget("equivalence trials must be >= 1".into()));
    }
    let c1 = e1.expr().canonicalize();
    let c2 = e2.expr().canonicalize();
    if c1.alpha_key() == c2.alpha_key() {
        return Ok(true);
    }

    let columns: NodeSet = c1.columns().union(&c2.columns()).cloned().collect();
    let free: NodeSet = c1.free_vars().union(&c2.free_vars()).cloned().collect();
    for v in columns.iter().chain(free.iter()) {
        if !spec.contains(v) {
            return Err(Error::IncompatibleFreeVariables(format!(
                "no domain for `{v}`"
            )));
        }
    }
    let table_vars: Vec<(String, Vec<String>)> = columns
        .iter()
        .map(|v| Ok((v.clone(), spec.domain(v)?.to_vec())))
        .collect::<Result<_>>()?;
    let free_list: Vec<String> = free.iter().cloned().collect();
    let tolerance = pow10_tolerance(12);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let table = Distribution::random_positive(table_vars.clone(), &mut rng)?;
        for binding in spec.bindings(&free_list)? {
            let v1 = c1.evaluate(&table, &binding)?;
            let v2 = c2.evaluate(&table, &binding)?;
            if (v1 - v2).abs() > tolerance {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
