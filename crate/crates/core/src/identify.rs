//! Single-graph identification of causal queries.
//!
//! Identification first tries the backdoor adjustment (enumerating candidate
//! sets in increasing size, which yields the familiar textbook estimands)
//! and otherwise runs the complete recursive identification algorithm over
//! c-component factorization. Non-identifiability is reported with the
//! nested node-set pair of the failing subproblem and its induced subgraph.
//! Conditional queries are identified as a quotient of two unconditional
//! identifications.
//!
//! Returned estimands are post-processed into canonical form so that
//! estimands from different graphs can be compared directly.

use std::collections::BTreeMap;

use crate::criteria::{find_common_criterion, CriterionKind};
use crate::error::{Error, Result};
use crate::expr::{Estimand, Expr};
use crate::graph::{Admg, NodeSet};
use crate::query::Query;

/// Partition of a node subset into maximal bidirected-connected blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CComponentPartition {
    /// Blocks in canonical order (by smallest member).
    pub blocks: Vec<NodeSet>,
}

/// Maximal bidirected-connected blocks of the subgraph induced on `s`.
pub fn c_components(g: &Admg, s: &NodeSet) -> Result<CComponentPartition> {
    let sub = g.induced_subgraph(s)?;
    let mut remaining: NodeSet = s.clone();
    let mut blocks = Vec::new();
    while let Some(seed) = remaining.iter().next().cloned() {
        let mut block: NodeSet = NodeSet::new();
        let mut stack = vec![seed];
        while let Some(v) = stack.pop() {
            if !block.insert(v.clone()) {
                continue;
            }
            let vid = sub.idx(&v)?;
            for &sib in sub.siblings_of(vid) {
                let name = sub.name(sib).to_string();
                if !block.contains(&name) {
                    stack.push(name);
                }
            }
        }
        for v in &block {
            remaining.remove(v);
        }
        blocks.push(block);
    }
    blocks.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    Ok(CComponentPartition { blocks })
}

/// The failing subproblem of a non-identifiable query: the c-component `s`
/// trapped inside the single c-component spanning `containing`, with the
/// induced subgraph exhibiting the obstruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonIdWitness {
    pub component: NodeSet,
    pub containing: NodeSet,
    pub subgraph: Admg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdentifyOutcome {
    Estimand(Estimand),
    NonIdentifiable(NonIdWitness),
}

impl IdentifyOutcome {
    pub fn estimand(&self) -> Option<&Estimand> {
        match self {
            IdentifyOutcome::Estimand(e) => Some(e),
            IdentifyOutcome::NonIdentifiable(_) => None,
        }
    }
}

/// The distribution carried through the recursion: a do-free expression
/// over the observational distribution together with the variable scope it
/// describes (a subset of the original variables, in topological order).
#[derive(Debug, Clone)]
struct Carried {
    expr: Expr,
    vars: Vec<String>,
}

impl Carried {
    fn joint(order: &[String]) -> Carried {
        Carried {
            expr: Expr::term(order.iter().cloned().collect(), NodeSet::new()),
            vars: order.to_vec(),
        }
    }

    fn is_plain_joint(&self) -> bool {
        matches!(
            &self.expr,
            Expr::Term { outcome, do_set, given }
                if do_set.is_empty() && given.is_empty()
                    && outcome.len() == self.vars.len()
        )
    }

    /// Marginal onto `keep`: a joint leaf shrinks in place, anything else is
    /// wrapped in sums over the dropped variables.
    fn marginal(&self, keep: &NodeSet) -> Carried {
        let kept: Vec<String> = self.vars.iter().filter(|v| keep.contains(*v)).cloned().collect();
        if kept.len() == self.vars.len() {
            return self.clone();
        }
        let expr = if self.is_plain_joint() {
            Expr::term(kept.iter().cloned().collect(), NodeSet::new())
        } else {
            let drop: NodeSet = self
                .vars
                .iter()
                .filter(|v| !keep.contains(*v))
                .cloned()
                .collect();
            Expr::marginal_sum(&drop, self.expr.clone())
        };
        Carried { expr, vars: kept }
    }

}

/// The conditional `P(target | given)` of the carried distribution: a plain
/// leaf for a joint, otherwise a quotient of marginals.
fn cond_prob(p: &Carried, target: &str, given: &NodeSet) -> Expr {
    let t: NodeSet = [target.to_string()].into_iter().collect();
    if p.is_plain_joint() {
        return Expr::term(t, given.clone());
    }
    let mut both = given.clone();
    both.insert(target.to_string());
    let num = p.marginal(&both).expr;
    if given.is_empty() {
        return num;
    }
    let den = p.marginal(given).expr;
    Expr::quotient(num, den)
}

fn id_rec(
    y: &NodeSet,
    x: &NodeSet,
    p: &Carried,
    g: &Admg,
    order: &[String],
) -> Result<std::result::Result<Expr, NonIdWitness>> {
    let v = g.node_set();
    debug_assert_eq!(
        p.vars.iter().cloned().collect::<NodeSet>(),
        v,
        "carried distribution must cover the current graph"
    );

    // 1. No interventions left: marginalize onto y.
    if x.is_empty() {
        return Ok(Ok(p.marginal(y).expr));
    }

    // 2. Restrict to the ancestors of y.
    let an_y = g.ancestors(y)?;
    if an_y != v {
        let new_x: NodeSet = x.intersection(&an_y).cloned().collect();
        let p2 = p.marginal(&an_y);
        let g2 = g.induced_subgraph(&an_y)?;
        return id_rec(y, &new_x, &p2, &g2, order);
    }

    // 3. Promote to interventions the variables that cannot affect y once
    //    x is held fixed.
    let g_xbar = g.mutilate(x, &NodeSet::new())?;
    let an_y_xbar = g_xbar.ancestors(y)?;
    let w: NodeSet = v
        .iter()
        .filter(|n| !x.contains(*n) && !an_y_xbar.contains(*n))
        .cloned()
        .collect();
    if !w.is_empty() {
        let bigger: NodeSet = x.union(&w).cloned().collect();
        return id_rec(y, &bigger, p, g, order);
    }

    // 4. Factorize over the c-components of G minus x.
    let rest: NodeSet = v.difference(x).cloned().collect();
    let comps = c_components(g, &rest)?;
    if comps.blocks.len() > 1 {
        let mut factors = Vec::with_capacity(comps.blocks.len());
        for s_i in &comps.blocks {
            let others: NodeSet = v.difference(s_i).cloned().collect();
            match id_rec(s_i, &others, p, g, order)? {
                Ok(e) => factors.push(e),
                Err(witness) => return Ok(Err(witness)),
            }
        }
        let bound: NodeSet = v
            .iter()
            .filter(|n| !y.contains(*n) && !x.contains(*n))
            .cloned()
            .collect();
        return Ok(Ok(Expr::marginal_sum(&bound, Expr::product(factors))));
    }
    let s = &comps.blocks[0];

    // 5. Compare with the c-components of the whole current graph.
    let whole = c_components(g, &v)?;
    if whole.blocks.len() == 1 {
        return Ok(Err(NonIdWitness {
            component: s.clone(),
            containing: v.clone(),
            subgraph: g.clone(),
        }));
    }

    let current_order: Vec<String> = order.iter().filter(|n| v.contains(*n)).cloned().collect();
    let preds = |target: &str| -> NodeSet {
        current_order
            .iter()
            .take_while(|n| n.as_str() != target)
            .cloned()
            .collect()
    };

    if whole.blocks.iter().any(|b| b == s) {
        // 5b. The component is intact: chain factorization over s.
        let factors: Vec<Expr> = current_order
            .iter()
            .filter(|n| s.contains(*n))
            .map(|vi| cond_prob(p, vi, &preds(vi)))
            .collect();
        let bound: NodeSet = s.difference(y).cloned().collect();
        return Ok(Ok(Expr::marginal_sum(&bound, Expr::product(factors))));
    }

    // 5c. The component is strictly inside a larger one: recurse into it
    //     with the chain-factorized distribution.
    let s_prime = whole
        .blocks
        .iter()
        .find(|b| s.is_subset(b))
        .ok_or_else(|| Error::Internal("component not covered by any c-component".into()))?;
    let factors: Vec<Expr> = current_order
        .iter()
        .filter(|n| s_prime.contains(*n))
        .map(|vi| cond_prob(p, vi, &preds(vi)))
        .collect();
    let p2 = Carried {
        expr: Expr::product(factors),
        vars: current_order
            .iter()
            .filter(|n| s_prime.contains(*n))
            .cloned()
            .collect(),
    };
    let g2 = g.induced_subgraph(s_prime)?;
    let new_x: NodeSet = x.intersection(s_prime).cloned().collect();
    id_rec(y, &new_x, &p2, &g2, order)
}

/// Wraps phantom free variables (interventions added internally that the
/// query does not mention) by averaging over their observational joint; the
/// expression is constant in them on every compatible distribution.
fn close_over_phantoms(expr: Expr, q: &Query) -> Expr {
    let phantoms: NodeSet = expr
        .free_vars()
        .difference(&q.vars())
        .cloned()
        .collect();
    if phantoms.is_empty() {
        return expr;
    }
    let weight = Expr::term(phantoms.clone(), NodeSet::new());
    Expr::marginal_sum(&phantoms, Expr::product(vec![weight, expr]))
}

fn identify_unconditional(g: &Admg, q: &Query) -> Result<IdentifyOutcome> {
    debug_assert!(q.given.is_empty());
    if q.treatment.is_empty() {
        let e = Estimand::new(Expr::term(q.outcome.clone(), NodeSet::new()))?;
        return Ok(IdentifyOutcome::Estimand(e.canonicalize()));
    }

    // Backdoor adjustment first: complete identification is the fallback.
    if let Some(w) = find_common_criterion(std::slice::from_ref(g), q, CriterionKind::Backdoor)? {
        return Ok(IdentifyOutcome::Estimand(w.estimand.canonicalize()));
    }

    let order = g.topological_order();
    let p = Carried::joint(&order);
    match id_rec(&q.outcome, &q.treatment, &p, g, &order)? {
        Ok(expr) => {
            let closed = close_over_phantoms(expr, q);
            let freshened = closed.freshen_shadowing();
            let e = Estimand::new(freshened)?;
            Ok(IdentifyOutcome::Estimand(e.canonicalize()))
        }
        Err(witness) => Ok(IdentifyOutcome::NonIdentifiable(witness)),
    }
}

/// Decides identifiability of `q` in `g` and produces a canonical estimand
/// or a non-identifiability witness. Conditional queries are handled by
/// identifying `P(y, z | do(x))` and `P(z | do(x))` and returning the
/// quotient, failing if either fails.
pub fn identify(g: &Admg, q: &Query) -> Result<IdentifyOutcome> {
    q.check_against(g)?;
    if q.given.is_empty() {
        return identify_unconditional(g, q);
    }
    let joint_outcome: NodeSet = q.outcome.union(&q.given).cloned().collect();
    let num_q = Query::with_bindings(
        joint_outcome,
        q.treatment.clone(),
        NodeSet::new(),
        BTreeMap::new(),
    )?;
    let den_q = Query::with_bindings(
        q.given.clone(),
        q.treatment.clone(),
        NodeSet::new(),
        BTreeMap::new(),
    )?;
    let num = match identify_unconditional(g, &num_q)? {
        IdentifyOutcome::Estimand(e) => e,
        fail => return Ok(fail),
    };
    let den = match identify_unconditional(g, &den_q)? {
        IdentifyOutcome::Estimand(e) => e,
        fail => return Ok(fail),
    };
    let e = Estimand::new(Expr::quotient(num.into_expr(), den.into_expr()))?;
    Ok(IdentifyOutcome::Estimand(e.canonicalize()))
}
