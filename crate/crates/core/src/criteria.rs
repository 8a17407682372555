//! Backdoor and frontdoor criteria, per graph and across a collection.
//!
//! The per-graph checks apply the path-level definitions literally by
//! depth-first enumeration of simple paths; graphs at the intended scale are
//! small enough that nothing faster is needed. `find_common_criterion`
//! enumerates candidate sets in increasing size and returns the first set
//! satisfying the criterion in every graph, so its `None` is definitive.

use std::collections::BTreeSet;
use std::fmt;

use crate::dsep::collider_openers;
use crate::error::{Error, Result};
use crate::expr::{Estimand, Expr};
use crate::graph::{Admg, NodeSet};
use crate::query::Query;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    Backdoor,
    Frontdoor,
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionKind::Backdoor => write!(f, "backdoor"),
            CriterionKind::Frontdoor => write!(f, "frontdoor"),
        }
    }
}

/// A criterion witness: the adjustment (or mediator) set together with the
/// induced estimand.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionWitness {
    pub criterion: CriterionKind,
    pub witness: NodeSet,
    pub estimand: Estimand,
}

struct PathSearch<'a> {
    g: &'a Admg,
    /// Vertices that terminate the search successfully.
    targets: BTreeSet<usize>,
    /// Vertices a path may not pass through (properness).
    barred: BTreeSet<usize>,
    conditioned: BTreeSet<usize>,
    openers: Vec<bool>,
}

impl PathSearch<'_> {
    /// True if an active path exists from `start` to a target, where the
    /// first edge must carry an arrowhead at `start` when `into_start` is
    /// set, and every edge must be a forward directed edge when
    /// `directed_only` is set.
    fn active_path_exists(&self, start: usize, into_start: bool, directed_only: bool) -> bool {
        let mut visited = vec![false; self.g.node_count()];
        visited[start] = true;
        self.dfs(start, None, into_start, directed_only, &mut visited)
    }

    fn dfs(
        &self,
        v: usize,
        in_head: Option<bool>,
        into_start: bool,
        directed_only: bool,
        visited: &mut Vec<bool>,
    ) -> bool {
        let mut step = |w: usize, at_v: bool, at_w: bool, visited: &mut Vec<bool>| -> bool {
            if visited[w] {
                return false;
            }
            if in_head.is_none() && into_start && !at_v {
                return false; // first edge must point into the start vertex
            }
            if let Some(in_head) = in_head {
                let collider = in_head && at_v;
                let active = if collider {
                    self.openers[v]
                } else {
                    !self.conditioned.contains(&v)
                };
                if !active {
                    return false;
                }
            }
            if self.targets.contains(&w) {
                return true;
            }
            if self.barred.contains(&w) {
                return false;
            }
            visited[w] = true;
            let found = self.dfs(w, Some(at_w), into_start, directed_only, visited);
            visited[w] = false;
            found
        };

        for &c in self.g.children_of(v) {
            if step(c, false, true, visited) {
                return true;
            }
        }
        if !directed_only {
            for &p in self.g.parents_of(v) {
                if step(p, true, false, visited) {
                    return true;
                }
            }
            for &b in self.g.siblings_of(v) {
                if step(b, true, true, visited) {
                    return true;
                }
            }
        }
        false
    }
}

fn ids(g: &Admg, s: &NodeSet) -> Result<BTreeSet<usize>> {
    s.iter().map(|n| g.idx(n)).collect()
}

/// The backdoor criterion for `P(y | do(x))` with adjustment set `z`:
/// (a) `z` contains no descendant of `x`; (b) every proper path from `x` to
/// `y` starting with an edge into `x` is inactive given `z`.
pub fn is_backdoor_set(g: &Admg, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    Admg::check_disjoint(&[x, y, z])?;
    let x_ids = ids(g, x)?;
    let y_ids = ids(g, y)?;
    let z_ids = ids(g, z)?;

    let desc_x = g.descendants(x)?;
    if z.iter().any(|v| desc_x.contains(v)) {
        return Ok(false);
    }

    let search = PathSearch {
        g,
        targets: y_ids,
        barred: x_ids.clone(),
        openers: collider_openers(g, &z_ids),
        conditioned: z_ids,
    };
    for &s in &x_ids {
        if search.active_path_exists(s, true, false) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The frontdoor criterion for singleton `x`, `y` with mediator set `m`:
/// `m` intercepts every directed path from `x` to `y`; no backdoor path from
/// `x` to `m` is active given the empty set; every backdoor path from `m` to
/// `y` is inactive given `x`.
pub fn is_frontdoor_set(g: &Admg, x: &NodeSet, y: &NodeSet, m: &NodeSet) -> Result<bool> {
    Admg::check_disjoint(&[x, y, m])?;
    if x.len() != 1 || y.len() != 1 {
        return Err(Error::UnsupportedSetSize(
            "frontdoor criterion supports singleton X and Y only".into(),
        ));
    }
    let x_id = g.idx(x.iter().next().unwrap())?;
    let y_ids = ids(g, y)?;
    let m_ids = ids(g, m)?;

    // 1. Every directed path from x to y passes through m: search for one
    //    that avoids m.
    let intercept = PathSearch {
        g,
        targets: y_ids.clone(),
        barred: m_ids.clone(),
        conditioned: BTreeSet::new(),
        openers: vec![false; g.node_count()],
    };
    if intercept.active_path_exists(x_id, false, true) {
        return Ok(false);
    }

    // 2. No active backdoor path from x to m given {}.
    if !m.is_empty() {
        let empty = BTreeSet::new();
        let to_m = PathSearch {
            g,
            targets: m_ids.clone(),
            barred: BTreeSet::new(),
            openers: collider_openers(g, &empty),
            conditioned: empty,
        };
        if to_m.active_path_exists(x_id, true, false) {
            return Ok(false);
        }
    }

    // 3. Every backdoor path from m to y is blocked by x.
    let x_set: BTreeSet<usize> = [x_id].into();
    let from_m = PathSearch {
        g,
        targets: y_ids,
        barred: BTreeSet::new(),
        openers: collider_openers(g, &x_set),
        conditioned: x_set,
    };
    for &s in &m_ids {
        if from_m.active_path_exists(s, true, false) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `sum_{W \ z} P(y | x, W) * P(W \ z | z)`, collapsing to a bare term for an
/// empty adjustment beyond the query's own conditioning set.
pub fn backdoor_estimand(q: &Query, witness: &NodeSet) -> Result<Estimand> {
    let extra: NodeSet = witness.difference(&q.given).cloned().collect();
    let mut given: NodeSet = q.treatment.clone();
    given.extend(witness.iter().cloned());
    given.extend(q.given.iter().cloned());
    let head = Expr::term(q.outcome.clone(), given);
    let expr = if extra.is_empty() {
        head
    } else {
        let weight = Expr::term(extra.clone(), q.given.clone());
        Expr::marginal_sum(&extra, Expr::product(vec![head, weight]))
    };
    Estimand::new(expr)
}

/// `sum_m P(m | x) * sum_{x'} P(y | m, x') P(x')` with a fresh binder for the
/// inner sum over the treatment column.
pub fn frontdoor_estimand(q: &Query, mediators: &NodeSet) -> Result<Estimand> {
    let mut avoid = q.vars();
    avoid.extend(mediators.iter().cloned());
    let fresh = Expr::fresh_name(&avoid);
    let x = q
        .treatment
        .iter()
        .next()
        .ok_or_else(|| Error::UnsupportedSetSize("frontdoor needs a treatment".into()))?;

    let mut inner_given: NodeSet = mediators.clone();
    inner_given.insert(fresh.clone());
    let inner = Expr::sum_over(
        fresh.clone(),
        x.clone(),
        Expr::product(vec![
            Expr::term(q.outcome.clone(), inner_given),
            Expr::term([fresh.clone()].into_iter().collect(), NodeSet::new()),
        ]),
    );
    let expr = if mediators.is_empty() {
        inner
    } else {
        let first_stage = Expr::term(mediators.clone(), q.treatment.clone());
        Expr::marginal_sum(mediators, Expr::product(vec![first_stage, inner]))
    };
    Estimand::new(expr)
}

/// Subsets of `pool` that contain `must_include`, in increasing size and
/// lexicographic order within each size.
fn candidate_sets(pool: &NodeSet, must_include: &NodeSet) -> Vec<NodeSet> {
    let optional: Vec<String> = pool.difference(must_include).cloned().collect();
    let mut all: Vec<NodeSet> = Vec::new();
    let n = optional.len();
    for mask in 0..(1u64 << n) {
        let mut set = must_include.clone();
        for (i, name) in optional.iter().enumerate() {
            if mask & (1 << i) != 0 {
                set.insert(name.clone());
            }
        }
        all.push(set);
    }
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
    all.dedup();
    all
}

/// Searches for one set satisfying the criterion in every graph. Candidates
/// are enumerated exhaustively over observed-variable subsets, so `None`
/// is a definitive refutation of the criterion for this collection.
///
/// For backdoor queries with non-empty conditioning, every candidate must
/// contain the conditioning set; frontdoor is restricted to unconditional
/// queries over singleton treatment and outcome.
pub fn find_common_criterion(
    graphs: &[Admg],
    q: &Query,
    criterion: CriterionKind,
) -> Result<Option<CriterionWitness>> {
    if graphs.is_empty() {
        return Err(Error::InvalidCollection("empty graph collection".into()));
    }
    for g in graphs {
        q.check_against(g)?;
    }
    let universe = graphs[0].node_set();
    let pool: NodeSet = universe
        .iter()
        .filter(|v| !q.outcome.contains(*v) && !q.treatment.contains(*v))
        .cloned()
        .collect();

    match criterion {
        CriterionKind::Backdoor => {
            for cand in candidate_sets(&pool, &q.given) {
                let mut ok = true;
                for g in graphs {
                    if !is_backdoor_set(g, &q.treatment, &q.outcome, &cand)? {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return Ok(Some(CriterionWitness {
                        criterion,
                        estimand: backdoor_estimand(q, &cand)?,
                        witness: cand,
                    }));
                }
            }
            Ok(None)
        }
        CriterionKind::Frontdoor => {
            if q.treatment.len() != 1 || q.outcome.len() != 1 {
                return Err(Error::UnsupportedSetSize(
                    "frontdoor criterion supports singleton X and Y only".into(),
                ));
            }
            if !q.given.is_empty() {
                return Ok(None);
            }
            for cand in candidate_sets(&pool, &NodeSet::new()) {
                let mut ok = true;
                for g in graphs {
                    if !is_frontdoor_set(g, &q.treatment, &q.outcome, &cand)? {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return Ok(Some(CriterionWitness {
                        criterion,
                        estimand: frontdoor_estimand(q, &cand)?,
                        witness: cand,
                    }));
                }
            }
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;

    fn ns(names: &[&str]) -> NodeSet {
        node_set(names.iter().copied())
    }

    fn example1_left() -> Admg {
        Admg::from_edges(
            &["X", "Y", "Z", "U", "V"],
            &[("Z", "X"), ("X", "Y"), ("U", "Z"), ("V", "Z"), ("U", "V"), ("V", "Y")],
            &[],
        )
        .unwrap()
    }

    fn example1_right() -> Admg {
        Admg::from_edges(
            &["X", "Y", "Z", "U", "V"],
            &[("Z", "X"), ("X", "Y"), ("U", "Z"), ("V", "Z"), ("V", "U"), ("U", "Y")],
            &[],
        )
        .unwrap()
    }

    fn frontdoor_graph() -> Admg {
        Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[("X", "Y")]).unwrap()
    }

    #[test]
    fn z_is_backdoor_in_both_example1_graphs() {
        for g in [example1_left(), example1_right()] {
            assert!(is_backdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["Z"])).unwrap());
        }
    }

    #[test]
    fn bow_graph_has_no_backdoor_set() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[("X", "Y")]).unwrap();
        assert!(!is_backdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
    }

    #[test]
    fn descendant_disqualifies_adjustment() {
        let g = Admg::from_edges(&["X", "W", "Y"], &[("X", "W"), ("W", "Y")], &[]).unwrap();
        assert!(!is_backdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["W"])).unwrap());
        assert!(is_backdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
    }

    #[test]
    fn frontdoor_on_classical_graph() {
        let g = frontdoor_graph();
        assert!(is_frontdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["M"])).unwrap());
    }

    #[test]
    fn frontdoor_rejects_unintercepted_direct_path() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        assert!(!is_frontdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
    }

    #[test]
    fn frontdoor_rejects_confounded_mediator() {
        let g = Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[("M", "Y")])
            .unwrap();
        assert!(!is_frontdoor_set(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["M"])).unwrap());
    }

    #[test]
    fn frontdoor_requires_singletons() {
        let g = frontdoor_graph();
        assert!(matches!(
            is_frontdoor_set(&g, &ns(&["X", "M"]), &ns(&["Y"]), &ns(&[])),
            Err(Error::UnsupportedSetSize(_))
        ));
    }

    #[test]
    fn common_backdoor_on_example1_is_z() {
        let graphs = [example1_left(), example1_right()];
        let q = Query::effect("Y", "X");
        let w = find_common_criterion(&graphs, &q, CriterionKind::Backdoor)
            .unwrap()
            .unwrap();
        assert_eq!(w.witness, ns(&["Z"]));
        let expected = Estimand::parse("sum_{Z} (P(Y|X,Z) * P(Z))").unwrap();
        assert_eq!(
            w.estimand.canonicalize(),
            expected.canonicalize(),
            "estimand {}",
            w.estimand
        );
    }

    #[test]
    fn empty_adjustment_for_plain_edge() {
        let graphs = [Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap()];
        let q = Query::effect("Y", "X");
        let w = find_common_criterion(&graphs, &q, CriterionKind::Backdoor)
            .unwrap()
            .unwrap();
        assert!(w.witness.is_empty());
        assert_eq!(w.estimand.to_string(), "P(Y|X)");
    }

    #[test]
    fn bow_collection_has_no_common_backdoor() {
        let graphs = [Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[("X", "Y")]).unwrap()];
        let q = Query::effect("Y", "X");
        assert!(find_common_criterion(&graphs, &q, CriterionKind::Backdoor)
            .unwrap()
            .is_none());
    }

    #[test]
    fn frontdoor_witness_and_estimand_shape() {
        let graphs = [frontdoor_graph()];
        let q = Query::effect("Y", "X");
        let w = find_common_criterion(&graphs, &q, CriterionKind::Frontdoor)
            .unwrap()
            .unwrap();
        assert_eq!(w.witness, ns(&["M"]));
        assert_eq!(
            w.estimand.to_string(),
            "sum_{M} (P(M|X) * sum_{_0:X} (P(Y|M,_0) * P(_0)))"
        );
    }

    #[test]
    fn candidate_order_is_size_then_lex() {
        let pool = ns(&["B", "A", "C"]);
        let sets = candidate_sets(&pool, &NodeSet::new());
        let rendered: Vec<String> = sets
            .iter()
            .map(|s| s.iter().cloned().collect::<Vec<_>>().join(""))
            .collect();
        assert_eq!(rendered, ["", "A", "B", "C", "AB", "AC", "BC", "ABC"]);
    }
}
