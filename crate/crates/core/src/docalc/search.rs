//! Bounded search for a do-calculus proof holding in every graph.
//!
//! The search first instantiates criterion templates (common backdoor, then
//! common frontdoor) and accepts one as soon as its replay passes in every
//! graph. Otherwise it falls back to breadth-first search over leaf
//! rewrites, admitting a rule move only when its side condition holds in
//! every graph, so any proof found is sound by construction (and re-checked
//! before being returned). `None` means the budget was exhausted; it is
//! inconclusive, never a certificate of non-identifiability.

use std::collections::{HashSet, VecDeque};
use std::rc::Rc;

use crate::criteria::{find_common_criterion, CriterionKind};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graph::{Admg, NodeSet};
use crate::query::Query;

use super::{
    apply_move, backdoor_proof, check_proof, frontdoor_proof, rule_condition, Move, Proof,
    ProofStep,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    /// Maximum number of rewrite steps in a proof.
    pub max_depth: usize,
    /// Cap on distinct expressions explored.
    pub max_states: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_depth: 6,
            max_states: 50_000,
        }
    }
}

/// Nonempty subsets in increasing size, lexicographic within a size.
fn nonempty_subsets(s: &NodeSet) -> Vec<NodeSet> {
    let items: Vec<String> = s.iter().cloned().collect();
    let mut out: Vec<NodeSet> = Vec::new();
    for mask in 1u64..(1 << items.len()) {
        out.push(
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| v.clone())
                .collect(),
        );
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
    out
}

fn admissible(graphs: &[Admg], op: &Move) -> Result<bool> {
    if let Some((rule, y, x, z, w)) = op.rule_params() {
        for g in graphs {
            if !rule_condition(g, rule, y, x, z, w)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Candidate moves on every leaf, in a fixed deterministic order; rule moves
/// are pre-filtered by their side condition on every graph.
fn moves_for(expr: &Expr, universe: &NodeSet, graphs: &[Admg]) -> Result<Vec<(Vec<usize>, Move)>> {
    let mut out = Vec::new();
    for path in expr.leaf_paths() {
        let (outcome, do_set, given) = match expr.at_path(&path)? {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => (outcome.clone(), do_set.clone(), given.clone()),
            _ => continue,
        };
        let mut candidates: Vec<Move> = Vec::new();

        for d in nonempty_subsets(&given) {
            let z: NodeSet = given.difference(&d).cloned().collect();
            candidates.push(Move::Rule1 {
                insert: false,
                y: outcome.clone(),
                x: d,
                z,
                w: do_set.clone(),
            });
        }
        for d in nonempty_subsets(&do_set) {
            let w: NodeSet = do_set.difference(&d).cloned().collect();
            candidates.push(Move::Rule2 {
                to_observation: true,
                y: outcome.clone(),
                x: d,
                z: given.clone(),
                w,
            });
        }
        for d in nonempty_subsets(&do_set) {
            let w: NodeSet = do_set.difference(&d).cloned().collect();
            candidates.push(Move::Rule3 {
                delete: true,
                y: outcome.clone(),
                x: d,
                z: given.clone(),
                w,
            });
        }
        for d in nonempty_subsets(&given) {
            let z: NodeSet = given.difference(&d).cloned().collect();
            candidates.push(Move::Rule2 {
                to_observation: false,
                y: outcome.clone(),
                x: d,
                z,
                w: do_set.clone(),
            });
        }

        let outside: Vec<String> = universe
            .iter()
            .filter(|v| !outcome.contains(*v) && !do_set.contains(*v) && !given.contains(*v))
            .cloned()
            .collect();
        let bound = expr.binders_above(&path);
        for v in &outside {
            candidates.push(Move::Rule1 {
                insert: true,
                y: outcome.clone(),
                x: [v.clone()].into_iter().collect(),
                z: given.clone(),
                w: do_set.clone(),
            });
        }
        for v in &outside {
            candidates.push(Move::Rule3 {
                delete: false,
                y: outcome.clone(),
                x: [v.clone()].into_iter().collect(),
                z: given.clone(),
                w: do_set.clone(),
            });
        }
        for v in &outside {
            if !bound.contains(v) {
                candidates.push(Move::Marginalize { var: v.clone() });
            }
        }
        if outcome.len() > 1 {
            for rest in nonempty_subsets(&outcome) {
                if rest.len() == outcome.len() {
                    continue;
                }
                let keep: NodeSet = outcome.difference(&rest).cloned().collect();
                candidates.push(Move::Condition { keep, rest });
            }
        }

        for op in candidates {
            if admissible(graphs, &op)? {
                out.push((path.clone(), op));
            }
        }
    }
    Ok(out)
}

struct Node {
    expr: Expr,
    depth: usize,
    step: Option<ProofStep>,
    parent: Option<Rc<Node>>,
}

fn reconstruct(initial: Expr, node: &Rc<Node>) -> Proof {
    let mut steps = Vec::new();
    let mut cur = Some(node.clone());
    while let Some(n) = cur {
        if let Some(step) = &n.step {
            steps.push(step.clone());
        }
        cur = n.parent.clone();
    }
    steps.reverse();
    Proof { initial, steps }
}

fn validate_inputs(graphs: &[Admg], q: &Query, budget: &SearchBudget) -> Result<NodeSet> {
    if budget.max_depth == 0 || budget.max_states == 0 {
        return Err(Error::InvalidBudget(
            "search depth and state budget must be positive".into(),
        ));
    }
    if graphs.is_empty() {
        return Err(Error::InvalidCollection("empty graph collection".into()));
    }
    let universe = graphs[0].node_set();
    for g in graphs {
        if g.node_set() != universe {
            return Err(Error::InvalidCollection(
                "graphs must share one node universe".into(),
            ));
        }
        q.check_against(g)?;
    }
    Ok(universe)
}

/// Searches for a proof of do-calculus that holds in every graph and
/// rewrites the query into a do-free expression.
pub fn search_common_proof(
    graphs: &[Admg],
    q: &Query,
    budget: &SearchBudget,
) -> Result<Option<Proof>> {
    let universe = validate_inputs(graphs, q, budget)?;
    let initial = q.to_expr();
    let query_vars = q.vars();
    let is_goal =
        |e: &Expr| -> bool { e.is_do_free() && e.free_vars().is_subset(&query_vars) };

    if is_goal(&initial) {
        return Ok(Some(Proof {
            initial,
            steps: Vec::new(),
        }));
    }

    // Criterion templates first: cheap, and they yield the textbook
    // derivations (including frontdoor chains deeper than small budgets).
    if !q.treatment.is_empty() {
        if let Some(w) = find_common_criterion(graphs, q, CriterionKind::Backdoor)? {
            let proof = backdoor_proof(q, &w.witness)?;
            if check_proof(&proof, graphs)?.ok {
                return Ok(Some(proof));
            }
        }
        if q.treatment.len() == 1 && q.outcome.len() == 1 && q.given.is_empty() {
            if let Some(w) = find_common_criterion(graphs, q, CriterionKind::Frontdoor)? {
                let proof = frontdoor_proof(q, &w.witness)?;
                if check_proof(&proof, graphs)?.ok {
                    return Ok(Some(proof));
                }
            }
        }
    }

    let mut visited: HashSet<String> = HashSet::new();
    visited.insert(initial.alpha_key());
    let mut queue: VecDeque<Rc<Node>> = VecDeque::new();
    queue.push_back(Rc::new(Node {
        expr: initial.clone(),
        depth: 0,
        step: None,
        parent: None,
    }));
    let mut states = 0usize;

    while let Some(node) = queue.pop_front() {
        if node.depth >= budget.max_depth {
            continue;
        }
        for (leaf, op) in moves_for(&node.expr, &universe, graphs)? {
            let result = apply_move(&node.expr, &leaf, &op)?;
            if !visited.insert(result.alpha_key()) {
                continue;
            }
            states += 1;
            if states > budget.max_states {
                return Ok(None);
            }
            let child = Rc::new(Node {
                expr: result.clone(),
                depth: node.depth + 1,
                step: Some(ProofStep { leaf, op, result }),
                parent: Some(node.clone()),
            });
            if is_goal(&child.expr) {
                let proof = reconstruct(initial, &child);
                let report = check_proof(&proof, graphs)?;
                if !report.ok {
                    return Err(Error::Internal(format!(
                        "search emitted a proof its own checker rejects: {report:?}"
                    )));
                }
                return Ok(Some(proof));
            }
            queue.push_back(child);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;

    fn pair_example2() -> Vec<Admg> {
        vec![
            Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap(),
            Admg::from_edges(&["X", "Y"], &[("Y", "X")], &[]).unwrap(),
        ]
    }

    #[test]
    fn single_edge_graph_proves_by_one_r2() {
        let graphs = [Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap()];
        let q = Query::effect("Y", "X");
        let proof = search_common_proof(&graphs, &q, &SearchBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(proof.steps.len(), 1);
        assert_eq!(proof.final_expr().to_string(), "P(Y|X)");
    }

    #[test]
    fn example1_pair_proves_backdoor_formula() {
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
        let proof = search_common_proof(&[left, right], &q, &SearchBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(
            proof.final_expr().to_string(),
            "sum_{Z} (P(Y|X,Z) * P(Z))"
        );
    }

    #[test]
    fn crossed_pair_has_no_common_proof() {
        let q = Query::effect("Y", "X");
        for budget in [
            SearchBudget::default(),
            SearchBudget {
                max_depth: 12,
                max_states: 100_000,
            },
        ] {
            assert!(search_common_proof(&pair_example2(), &q, &budget)
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn conditional_query_found_by_plain_search() {
        // Chain X -> Z -> Y, query P(Y | do(X), Z): Z is a descendant of X,
        // so no backdoor candidate qualifies; plain search finds the single
        // R2 step.
        let g = Admg::from_edges(&["X", "Z", "Y"], &[("X", "Z"), ("Z", "Y")], &[]).unwrap();
        let q = Query::new(node_set(["Y"]), node_set(["X"]), node_set(["Z"])).unwrap();
        let proof = search_common_proof(&[g], &q, &SearchBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(proof.final_expr().to_string(), "P(Y|X,Z)");
    }

    #[test]
    fn frontdoor_collection_proves_two_stage_formula() {
        let g = Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[("X", "Y")])
            .unwrap();
        let q = Query::effect("Y", "X");
        let proof = search_common_proof(&[g], &q, &SearchBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(
            proof.final_expr().to_string(),
            "sum_{M} (sum_{X} (P(Y|M,X) * P(X)) * P(M|X))"
        );
    }

    #[test]
    fn search_is_deterministic() {
        let graphs = pair_example2();
        let g_chain = Admg::from_edges(&["X", "Z", "Y"], &[("X", "Z"), ("Z", "Y")], &[]).unwrap();
        let q = Query::effect("Y", "X");
        let a = search_common_proof(&[g_chain.clone()], &q, &SearchBudget::default()).unwrap();
        let b = search_common_proof(&[g_chain], &q, &SearchBudget::default()).unwrap();
        assert_eq!(
            a.map(|p| p.to_string()),
            b.map(|p| p.to_string())
        );
        let _ = graphs;
    }

    #[test]
    fn zero_budget_is_rejected() {
        let q = Query::effect("Y", "X");
        assert!(matches!(
            search_common_proof(
                &pair_example2(),
                &q,
                &SearchBudget {
                    max_depth: 0,
                    max_states: 10,
                }
            ),
            Err(Error::InvalidBudget(_))
        ));
    }
}
