//! Proof templates instantiating graphical criteria.
//!
//! A criterion witness pins down a complete do-calculus derivation whose
//! side conditions follow from the criterion. The templates build the
//! candidate proof; callers replay it with `check_proof`, so an instantiated
//! template is accepted only when every side condition actually holds in
//! every graph.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graph::NodeSet;
use crate::query::Query;

use super::{apply_move, Move, Proof, ProofStep};

struct Builder {
    current: Expr,
    steps: Vec<ProofStep>,
}

impl Builder {
    fn new(initial: Expr) -> Self {
        Builder {
            current: initial,
            steps: Vec::new(),
        }
    }

    fn push(&mut self, leaf: Vec<usize>, op: Move) -> Result<()> {
        let result = apply_move(&self.current, &leaf, &op)?;
        self.current = result.clone();
        self.steps.push(ProofStep { leaf, op, result });
        Ok(())
    }

    fn finish(self, initial: Expr) -> Proof {
        Proof {
            initial,
            steps: self.steps,
        }
    }
}

fn singleton(s: &str) -> NodeSet {
    [s.to_string()].into_iter().collect()
}

/// The adjustment derivation for a backdoor witness `w ⊇ z`:
///
/// ```text
/// P(y | do(x), z)
///   = sum_{w\z} P(y, w\z | do(x), z)            (marginalize)
///   = sum_{w\z} P(y | do(x), w, z) P(w\z | do(x), z)   (condition)
///   = sum_{w\z} P(y | do(x), w, z) P(w\z | z)   (R3 on the weight)
///   = sum_{w\z} P(y | x, w, z) P(w\z | z)       (R2 on the head)
/// ```
///
/// With an empty extra adjustment the derivation is the single R2 step.
pub fn backdoor_proof(q: &Query, witness: &NodeSet) -> Result<Proof> {
    if !q.given.is_subset(witness) && !q.given.is_empty() {
        return Err(Error::Internal(
            "backdoor witness must contain the query conditioning set".into(),
        ));
    }
    let initial = q.to_expr();
    let extra: NodeSet = witness.difference(&q.given).cloned().collect();
    let mut b = Builder::new(initial.clone());

    let mut depth = Vec::new();
    for v in &extra {
        b.push(depth.clone(), Move::Marginalize { var: v.clone() })?;
        depth.push(0);
    }

    if extra.is_empty() {
        b.push(
            depth,
            Move::Rule2 {
                to_observation: true,
                y: q.outcome.clone(),
                x: q.treatment.clone(),
                z: q.given.clone(),
                w: NodeSet::new(),
            },
        )?;
        return Ok(b.finish(initial));
    }

    b.push(
        depth.clone(),
        Move::Condition {
            keep: q.outcome.clone(),
            rest: extra.clone(),
        },
    )?;

    let mut weight_path = depth.clone();
    weight_path.push(1);
    b.push(
        weight_path,
        Move::Rule3 {
            delete: true,
            y: extra.clone(),
            x: q.treatment.clone(),
            z: q.given.clone(),
            w: NodeSet::new(),
        },
    )?;

    let mut head_path = depth;
    head_path.push(0);
    let mut head_given: NodeSet = extra.clone();
    head_given.extend(q.given.iter().cloned());
    b.push(
        head_path,
        Move::Rule2 {
            to_observation: true,
            y: q.outcome.clone(),
            x: q.treatment.clone(),
            z: head_given,
            w: NodeSet::new(),
        },
    )?;
    Ok(b.finish(initial))
}

/// The classical frontdoor derivation for mediator set `m` (singleton
/// treatment and outcome, unconditional query): marginalize the mediators,
/// split, exchange the first stage by R2, lift the mediators to actions by
/// R2, drop `do(x)` by R3, then identify `P(y | do(m))` through the
/// backdoor with witness `{x}`.
pub fn frontdoor_proof(q: &Query, mediators: &NodeSet) -> Result<Proof> {
    if q.treatment.len() != 1 || q.outcome.len() != 1 || !q.given.is_empty() {
        return Err(Error::UnsupportedSetSize(
            "frontdoor proof needs singleton X, Y and no conditioning".into(),
        ));
    }
    let x_name = q.treatment.iter().next().unwrap().clone();
    let initial = q.to_expr();
    let mut b = Builder::new(initial.clone());

    let mut depth = Vec::new();
    for m in mediators {
        b.push(depth.clone(), Move::Marginalize { var: m.clone() })?;
        depth.push(0);
    }

    let (head_path, weight_path) = if mediators.is_empty() {
        (depth.clone(), None)
    } else {
        b.push(
            depth.clone(),
            Move::Condition {
                keep: q.outcome.clone(),
                rest: mediators.clone(),
            },
        )?;
        let mut head = depth.clone();
        head.push(0);
        let mut weight = depth.clone();
        weight.push(1);
        (head, Some(weight))
    };

    // First stage: P(m | do(x)) = P(m | x).
    if let Some(weight_path) = weight_path {
        b.push(
            weight_path,
            Move::Rule2 {
                to_observation: true,
                y: mediators.clone(),
                x: q.treatment.clone(),
                z: NodeSet::new(),
                w: NodeSet::new(),
            },
        )?;
    }

    // Second stage: P(y | do(x), m) = P(y | do(x), do(m)) = P(y | do(m)).
    if !mediators.is_empty() {
        b.push(
            head_path.clone(),
            Move::Rule2 {
                to_observation: false,
                y: q.outcome.clone(),
                x: mediators.clone(),
                z: NodeSet::new(),
                w: q.treatment.clone(),
            },
        )?;
    }
    b.push(
        head_path.clone(),
        Move::Rule3 {
            delete: true,
            y: q.outcome.clone(),
            x: q.treatment.clone(),
            z: NodeSet::new(),
            w: mediators.clone(),
        },
    )?;

    // Backdoor adjustment over {x} for P(y | do(m)).
    b.push(
        head_path.clone(),
        Move::Marginalize {
            var: x_name.clone(),
        },
    )?;
    let mut inner = head_path.clone();
    inner.push(0);
    b.push(
        inner.clone(),
        Move::Condition {
            keep: q.outcome.clone(),
            rest: singleton(&x_name),
        },
    )?;
    let mut inner_weight = inner.clone();
    inner_weight.push(1);
    b.push(
        inner_weight,
        Move::Rule3 {
            delete: true,
            y: singleton(&x_name),
            x: mediators.clone(),
            z: NodeSet::new(),
            w: NodeSet::new(),
        },
    )?;
    let mut inner_head = inner;
    inner_head.push(0);
    b.push(
        inner_head,
        Move::Rule2 {
            to_observation: true,
            y: q.outcome.clone(),
            x: mediators.clone(),
            z: singleton(&x_name),
            w: NodeSet::new(),
        },
    )?;
    Ok(b.finish(initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docalc::check_proof;
    use crate::graph::{node_set, Admg};

    #[test]
    fn backdoor_template_replays_on_example1_pair() {
        let left = Admg::from_edges(
            &["X", "Y", "Z", "U", "V"],
            &[("Z", "X"), ("X", "Y"), ("U", "Z"), ("V", "Z"), ("U", "V"), ("V", "Y")],
            &[],
        )
        .unwrap();
        let right = Admg::from_edges(
            &["X", "Y", "Z", "U", "V"],
            &[("Z", "X"), ("X", "Y"), ("U", "Z"), ("V", "Z"), ("V", "U"), ("U", "Y")],
            &[],
        )
        .unwrap();
        let q = Query::effect("Y", "X");
        let proof = backdoor_proof(&q, &node_set(["Z"])).unwrap();
        assert_eq!(proof.steps.len(), 4);
        assert_eq!(
            proof.final_expr().to_string(),
            "sum_{Z} (P(Y|X,Z) * P(Z))"
        );
        let report = check_proof(&proof, &[left, right]).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn empty_backdoor_is_single_r2() {
        let q = Query::effect("Y", "X");
        let proof = backdoor_proof(&q, &NodeSet::new()).unwrap();
        assert_eq!(proof.steps.len(), 1);
        assert_eq!(proof.final_expr().to_string(), "P(Y|X)");
    }

    #[test]
    fn frontdoor_template_replays_on_classical_graph() {
        let g = Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[("X", "Y")])
            .unwrap();
        let q = Query::effect("Y", "X");
        let proof = frontdoor_proof(&q, &node_set(["M"])).unwrap();
        let report = check_proof(&proof, &[g]).unwrap();
        assert!(report.ok, "{report:?}");
        assert_eq!(
            proof.final_expr().to_string(),
            "sum_{M} (sum_{X} (P(Y|M,X) * P(X)) * P(M|X))"
        );
    }

    #[test]
    fn frontdoor_template_rejected_when_mediator_confounded() {
        let g = Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[("M", "Y")])
            .unwrap();
        let q = Query::effect("Y", "X");
        let proof = frontdoor_proof(&q, &node_set(["M"])).unwrap();
        let report = check_proof(&proof, &[g]).unwrap();
        assert!(!report.ok);
    }
}
