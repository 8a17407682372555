//! Do-calculus: the three rules as decidable predicates, machine-checkable
//! proof objects, and a bounded search for proofs that hold in every graph
//! of a collection.
//!
//! A proof is a sequence of leaf rewrites starting from a causal query.
//! Rule steps (R1, R2, R3) carry the set parameters of their side condition;
//! probability-manipulation steps (marginalize, condition, chain rule) are
//! verified structurally. The checker replays each step and re-validates
//! every d-separation side condition in every graph it is handed, so a proof
//! that passes is a self-contained certificate.

mod search;
mod template;

use std::fmt;

use crate::dsep::d_separated;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graph::{Admg, NodeSet};

pub use search::{search_common_proof, SearchBudget};
pub use template::{backdoor_proof, frontdoor_proof};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    R1,
    R2,
    R3,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::R1 => write!(f, "R1"),
            Rule::R2 => write!(f, "R2"),
            Rule::R3 => write!(f, "R3"),
        }
    }
}

/// Decides the side condition of a do-calculus rule.
///
/// R1 (insertion/deletion of observations): `Y d-sep X | W ∪ Z` in `G_{W̄}`.
/// R2 (action/observation exchange): the same separation in `G_{W̄, X̲}`.
/// R3 (insertion/deletion of actions): in `G_{W̄, X(Z)‾}` where
/// `X(Z) = X \ Anc(Z)` taken in `G_{W̄}`.
pub fn rule_condition(
    g: &Admg,
    rule: Rule,
    y: &NodeSet,
    x: &NodeSet,
    z: &NodeSet,
    w: &NodeSet,
) -> Result<bool> {
    Admg::check_disjoint(&[y, x, z, w])?;
    let cond: NodeSet = w.union(z).cloned().collect();
    let mutilated = match rule {
        Rule::R1 => g.mutilate(w, &NodeSet::new())?,
        Rule::R2 => g.mutilate(w, x)?,
        Rule::R3 => {
            let g_w = g.mutilate(w, &NodeSet::new())?;
            let anc_z = g_w.ancestors(z)?;
            let x_eff: NodeSet = x.difference(&anc_z).cloned().collect();
            let over: NodeSet = w.union(&x_eff).cloned().collect();
            g.mutilate(&over, &NodeSet::new())?
        }
    };
    d_separated(&mutilated, y, x, &cond)
}

/// One rewrite applied to a single leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// R1: insert (or delete) the observations `x` on a leaf
    /// `P(y | do(w), z [, x])`.
    Rule1 {
        insert: bool,
        y: NodeSet,
        x: NodeSet,
        z: NodeSet,
        w: NodeSet,
    },
    /// R2: exchange `do(x)` for the observation `x` (or back).
    Rule2 {
        to_observation: bool,
        y: NodeSet,
        x: NodeSet,
        z: NodeSet,
        w: NodeSet,
    },
    /// R3: delete (or insert) the actions `do(x)`.
    Rule3 {
        delete: bool,
        y: NodeSet,
        x: NodeSet,
        z: NodeSet,
        w: NodeSet,
    },
    /// Law of total probability inside the do-context:
    /// `P(a | do(b), c) = sum_v P(a, v | do(b), c)`.
    Marginalize { var: String },
    /// `P(keep, rest | do(b), c) = P(keep | do(b), rest, c) * P(rest | do(b), c)`.
    Condition { keep: NodeSet, rest: NodeSet },
    /// Full chain-rule split of a joint leaf, factors ordered canonically.
    ChainRule,
}

impl Move {
    /// The rule tag and side-condition parameters, when the move is an
    /// R-rule application.
    pub fn rule_params(&self) -> Option<(Rule, &NodeSet, &NodeSet, &NodeSet, &NodeSet)> {
        match self {
            Move::Rule1 { y, x, z, w, .. } => Some((Rule::R1, y, x, z, w)),
            Move::Rule2 { y, x, z, w, .. } => Some((Rule::R2, y, x, z, w)),
            Move::Rule3 { y, x, z, w, .. } => Some((Rule::R3, y, x, z, w)),
            _ => None,
        }
    }
}

fn set_text(s: &NodeSet) -> String {
    format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(","))
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Rule1 { y, x, z, w, .. }
            | Move::Rule2 { y, x, z, w, .. }
            | Move::Rule3 { y, x, z, w, .. } => {
                let rule = self.rule_params().unwrap().0;
                write!(
                    f,
                    "{rule} Y={} X={} Z={} W={}",
                    set_text(y),
                    set_text(x),
                    set_text(z),
                    set_text(w)
                )
            }
            Move::Marginalize { var } => write!(f, "Marginalize V={{{var}}}"),
            Move::Condition { keep, rest } => {
                write!(f, "Condition Y={} Z={}", set_text(keep), set_text(rest))
            }
            Move::ChainRule => write!(f, "ChainRule"),
        }
    }
}

/// One proof step: the leaf it rewrites (a tree path into the pre-step
/// expression), the move, and the whole expression after the rewrite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofStep {
    pub leaf: Vec<usize>,
    pub op: Move,
    pub result: Expr,
}

/// A do-calculus proof: the initial query expression and the ordered steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub initial: Expr,
    pub steps: Vec<ProofStep>,
}

impl Proof {
    pub fn final_expr(&self) -> &Expr {
        self.steps.last().map(|s| &s.result).unwrap_or(&self.initial)
    }
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial: {}", self.initial)?;
        for (i, step) in self.steps.iter().enumerate() {
            writeln!(f, "step {}: {} => {}", i + 1, step.op, step.result)?;
        }
        Ok(())
    }
}

fn disjoint_union(a: &NodeSet, b: &NodeSet) -> Result<NodeSet> {
    Admg::check_disjoint(&[a, b])?;
    Ok(a.union(b).cloned().collect())
}

/// Applies one move to the leaf at `step.leaf` of `expr`, verifying the
/// structural preconditions. Side conditions are not consulted here.
pub fn apply_move(expr: &Expr, leaf_path: &[usize], op: &Move) -> Result<Expr> {
    let malformed = |msg: String| Error::MalformedProof(msg);
    let leaf = expr.at_path(leaf_path)?;
    let (outcome, do_set, given) = match leaf {
        Expr::Term {
            outcome,
            do_set,
            given,
        } => (outcome, do_set, given),
        other => {
            return Err(malformed(format!(
                "step target is not a probability term: {other}"
            )))
        }
    };

    let replacement: Expr = match op {
        Move::Rule1 { insert, y, x, z, w } => {
            if y != outcome || w != do_set {
                return Err(malformed(format!("R1 parameters do not match leaf {leaf}")));
            }
            if *insert {
                if given != z || x.iter().any(|v| outcome.contains(v) || do_set.contains(v) || given.contains(v)) {
                    return Err(malformed(format!("R1 insertion does not match leaf {leaf}")));
                }
                Expr::do_term(y.clone(), w.clone(), disjoint_union(z, x)?)
            } else {
                let expected: NodeSet = disjoint_union(z, x)?;
                if given != &expected {
                    return Err(malformed(format!("R1 deletion does not match leaf {leaf}")));
                }
                Expr::do_term(y.clone(), w.clone(), z.clone())
            }
        }
        Move::Rule2 {
            to_observation,
            y,
            x,
            z,
            w,
        } => {
            if y != outcome {
                return Err(malformed(format!("R2 parameters do not match leaf {leaf}")));
            }
            if *to_observation {
                let expected_do = disjoint_union(w, x)?;
                if do_set != &expected_do || given != z {
                    return Err(malformed(format!("R2 exchange does not match leaf {leaf}")));
                }
                Expr::do_term(y.clone(), w.clone(), disjoint_union(z, x)?)
            } else {
                let expected_given = disjoint_union(z, x)?;
                if do_set != w || given != &expected_given {
                    return Err(malformed(format!("R2 exchange does not match leaf {leaf}")));
                }
                Expr::do_term(y.clone(), disjoint_union(w, x)?, z.clone())
            }
        }
        Move::Rule3 { delete, y, x, z, w } => {
            if y != outcome || given != z {
                return Err(malformed(format!("R3 parameters do not match leaf {leaf}")));
            }
            if *delete {
                let expected_do = disjoint_union(w, x)?;
                if do_set != &expected_do {
                    return Err(malformed(format!("R3 deletion does not match leaf {leaf}")));
                }
                Expr::do_term(y.clone(), w.clone(), z.clone())
            } else {
                if do_set != w || x.iter().any(|v| outcome.contains(v) || do_set.contains(v) || given.contains(v)) {
                    return Err(malformed(format!("R3 insertion does not match leaf {leaf}")));
                }
                Expr::do_term(y.clone(), disjoint_union(w, x)?, z.clone())
            }
        }
        Move::Marginalize { var } => {
            if outcome.contains(var) || do_set.contains(var) || given.contains(var) {
                return Err(malformed(format!(
                    "cannot marginalize `{var}` over leaf {leaf} that mentions it"
                )));
            }
            if expr.binders_above(leaf_path).contains(var) {
                return Err(malformed(format!(
                    "marginalizing `{var}` would capture an enclosing binder"
                )));
            }
            let mut new_outcome = outcome.clone();
            new_outcome.insert(var.clone());
            Expr::sum(
                var.clone(),
                Expr::do_term(new_outcome, do_set.clone(), given.clone()),
            )
        }
        Move::Condition { keep, rest } => {
            let expected: NodeSet = disjoint_union(keep, rest)?;
            if &expected != outcome || keep.is_empty() || rest.is_empty() {
                return Err(malformed(format!(
                    "Condition split does not partition the outcome of {leaf}"
                )));
            }
            let head_given = disjoint_union(given, rest)?;
            Expr::product(vec![
                Expr::do_term(keep.clone(), do_set.clone(), head_given),
                Expr::do_term(rest.clone(), do_set.clone(), given.clone()),
            ])
        }
        Move::ChainRule => {
            if outcome.len() < 2 {
                return Err(malformed(format!(
                    "chain rule needs a joint outcome, got {leaf}"
                )));
            }
            let vars: Vec<String> = outcome.iter().cloned().collect();
            let mut factors = Vec::with_capacity(vars.len());
            for (i, v) in vars.iter().enumerate() {
                let mut cond = given.clone();
                cond.extend(vars[i + 1..].iter().cloned());
                factors.push(Expr::do_term(
                    [v.clone()].into_iter().collect(),
                    do_set.clone(),
                    cond,
                ));
            }
            Expr::product(factors)
        }
    };
    expr.with_replacement(leaf_path, replacement)
}

/// Result of replaying a proof against a set of graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub ok: bool,
    /// First failure: step index (1-based), offending graph index when the
    /// failure is a side condition, and a description.
    pub failure: Option<(usize, Option<usize>, String)>,
}

impl CheckReport {
    fn pass() -> Self {
        CheckReport {
            ok: true,
            failure: None,
        }
    }

    fn fail(step: usize, graph: Option<usize>, reason: String) -> Self {
        CheckReport {
            ok: false,
            failure: Some((step, graph, reason)),
        }
    }
}

/// Replays the proof: every step is re-derived structurally and every rule
/// side condition is re-checked in every graph. Returns the first failure,
/// or a pass. Structural mismatches (the recorded result differs from the
/// replayed rewrite) are `MalformedProof` errors.
pub fn check_proof(proof: &Proof, graphs: &[Admg]) -> Result<CheckReport> {
    if graphs.is_empty() {
        return Err(Error::InvalidCollection("no graphs to check against".into()));
    }
    let mut current = proof.initial.clone();
    for (i, step) in proof.steps.iter().enumerate() {
        let step_no = i + 1;
        let replayed = apply_move(&current, &step.leaf, &step.op)?;
        if replayed != step.result {
            return Err(Error::MalformedProof(format!(
                "step {step_no}: recorded result `{}` does not match replayed rewrite `{replayed}`",
                step.result
            )));
        }
        if let Some((rule, y, x, z, w)) = step.op.rule_params() {
            for (gi, g) in graphs.iter().enumerate() {
                if !rule_condition(g, rule, y, x, z, w)? {
                    return Ok(CheckReport::fail(
                        step_no,
                        Some(gi),
                        format!(
                            "side condition of {rule} (Y={} X={} Z={} W={}) fails",
                            set_text(y),
                            set_text(x),
                            set_text(z),
                            set_text(w)
                        ),
                    ));
                }
            }
        }
        current = step.result.clone();
    }
    if !current.is_do_free() {
        return Ok(CheckReport::fail(
            proof.steps.len(),
            None,
            format!("final expression `{current}` still contains do()"),
        ));
    }
    Ok(CheckReport::pass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;

    fn ns(names: &[&str]) -> NodeSet {
        node_set(names.iter().copied())
    }

    #[test]
    fn r2_holds_on_single_edge() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        assert!(rule_condition(&g, Rule::R2, &ns(&["Y"]), &ns(&["X"]), &ns(&[]), &ns(&[])).unwrap());
    }

    #[test]
    fn r3_holds_on_reversed_edge() {
        let g = Admg::from_edges(&["X", "Y"], &[("Y", "X")], &[]).unwrap();
        assert!(rule_condition(&g, Rule::R3, &ns(&["Y"]), &ns(&["X"]), &ns(&[]), &ns(&[])).unwrap());
    }

    #[test]
    fn r2_fails_under_confounding() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[("X", "Y")]).unwrap();
        assert!(!rule_condition(&g, Rule::R2, &ns(&["Y"]), &ns(&["X"]), &ns(&[]), &ns(&[])).unwrap());
    }

    #[test]
    fn rule_condition_rejects_overlap() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        assert!(matches!(
            rule_condition(&g, Rule::R1, &ns(&["Y"]), &ns(&["Y"]), &ns(&[]), &ns(&[])),
            Err(Error::OverlappingSets(_))
        ));
    }

    fn single_r2_proof() -> Proof {
        let initial = Expr::do_term(ns(&["Y"]), ns(&["X"]), ns(&[]));
        let op = Move::Rule2 {
            to_observation: true,
            y: ns(&["Y"]),
            x: ns(&["X"]),
            z: ns(&[]),
            w: ns(&[]),
        };
        let result = apply_move(&initial, &[], &op).unwrap();
        Proof {
            initial,
            steps: vec![ProofStep {
                leaf: vec![],
                op,
                result,
            }],
        }
    }

    #[test]
    fn checker_passes_r2_on_forward_edge() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        let report = check_proof(&single_r2_proof(), &[g]).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn checker_fails_r2_on_reversed_edge_with_location() {
        let fwd = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        let rev = Admg::from_edges(&["X", "Y"], &[("Y", "X")], &[]).unwrap();
        let report = check_proof(&single_r2_proof(), &[fwd, rev]).unwrap();
        assert!(!report.ok);
        let (step, graph, _) = report.failure.unwrap();
        assert_eq!(step, 1);
        assert_eq!(graph, Some(1));
    }

    #[test]
    fn checker_rejects_tampered_result() {
        let mut proof = single_r2_proof();
        proof.steps[0].result = Expr::term(ns(&["Y"]), ns(&[]));
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        assert!(matches!(
            check_proof(&proof, &[g]),
            Err(Error::MalformedProof(_))
        ));
    }

    #[test]
    fn marginalize_capture_is_rejected() {
        let inner = Expr::do_term(ns(&["Y"]), ns(&["X"]), ns(&[]));
        let e = Expr::sum_over("Z", "Z", Expr::product(vec![
            Expr::term(ns(&["Z"]), ns(&[])),
            inner,
        ]));
        // Leaf P(Y|do(X)) sits at path [0, 1]; marginalizing Z there would
        // shadow the enclosing binder.
        let op = Move::Marginalize { var: "Z".into() };
        assert!(matches!(
            apply_move(&e, &[0, 1], &op),
            Err(Error::MalformedProof(_))
        ));
    }

    #[test]
    fn chain_rule_splits_canonically() {
        let e = Expr::do_term(ns(&["A", "B"]), ns(&["X"]), ns(&[]));
        let out = apply_move(&e, &[], &Move::ChainRule).unwrap();
        assert_eq!(out.to_string(), "P(A|do(X),B) * P(B|do(X))");
    }

    #[test]
    fn proof_serialization_format() {
        let p = single_r2_proof();
        let text = p.to_string();
        assert_eq!(
            text,
            "initial: P(Y|do(X))\nstep 1: R2 Y={Y} X={X} Z={} W={} => P(Y|X)\n"
        );
    }
}
