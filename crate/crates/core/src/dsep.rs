//! d-separation in ADMGs.
//!
//! `d_separated` runs an arrowhead-state reachability traversal (a Bayes-ball
//! style walk generalized to bidirected edges). `d_separated_oracle`
//! enumerates all simple paths and applies the activation definition
//! literally; it exists so the fast path can be tested differentially.
//!
//! A vertex on a path is a collider when both adjacent path edges carry an
//! arrowhead at it; bidirected edge ends count as arrowheads. A collider is
//! active given Z when it or one of its descendants is in Z; a non-collider
//! is active when it is not in Z.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Admg, NodeSet};

/// Orientation of one edge as traversed along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathEdge {
    /// Directed edge traversed tail-to-head (`A -> B`).
    Forward,
    /// Directed edge traversed head-to-tail (`A <- B`).
    Backward,
    /// Bidirected edge (`A <-> B`).
    Bidirected,
}

/// A simple path: distinct vertices joined by edges of the graph, with the
/// orientation of each edge as traversed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub vertices: Vec<String>,
    pub edges: Vec<PathEdge>,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.vertices[0])?;
        for (i, e) in self.edges.iter().enumerate() {
            let glyph = match e {
                PathEdge::Forward => "->",
                PathEdge::Backward => "<-",
                PathEdge::Bidirected => "<->",
            };
            write!(f, " {glyph} {}", self.vertices[i + 1])?;
        }
        Ok(())
    }
}

fn check_xyz(
    g: &Admg,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
) -> Result<(Vec<usize>, Vec<usize>, BTreeSet<usize>)> {
    Admg::check_disjoint(&[x, y, z])?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::UnsupportedSetSize(
            "d-separation requires non-empty X and Y".into(),
        ));
    }
    let xs = x.iter().map(|n| g.idx(n)).collect::<Result<Vec<_>>>()?;
    let ys = y.iter().map(|n| g.idx(n)).collect::<Result<Vec<_>>>()?;
    let zs = z
        .iter()
        .map(|n| g.idx(n))
        .collect::<Result<BTreeSet<_>>>()?;
    Ok((xs, ys, zs))
}

/// Vertices with a descendant (reflexively) in `z`: exactly the vertices that
/// are active as colliders.
pub(crate) fn collider_openers(g: &Admg, z: &BTreeSet<usize>) -> Vec<bool> {
    let n = g.node_count();
    let mut open = vec![false; n];
    let mut queue: VecDeque<usize> = z.iter().copied().collect();
    for &v in z {
        open[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &p in g.parents_of(v) {
            if !open[p] {
                open[p] = true;
                queue.push_back(p);
            }
        }
    }
    open
}

/// True iff every path between `x` and `y` is inactive given `z`.
pub fn d_separated(g: &Admg, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    let (xs, ys, zs) = check_xyz(g, x, y, z)?;
    let open = collider_openers(g, &zs);
    let in_y: BTreeSet<usize> = ys.into_iter().collect();
    let n = g.node_count();

    // State: (vertex, arrived-through-arrowhead?). Seeds are departures from
    // X, so X vertices themselves carry no activation condition.
    let mut seen = vec![[false; 2]; n];
    let mut queue: VecDeque<(usize, bool)> = VecDeque::new();
    let mut arrive = |v: usize, head: bool, queue: &mut VecDeque<(usize, bool)>| -> bool {
        if in_y.contains(&v) {
            return true;
        }
        if !seen[v][head as usize] {
            seen[v][head as usize] = true;
            queue.push_back((v, head));
        }
        false
    };

    for &s in &xs {
        for &c in g.children_of(s) {
            if arrive(c, true, &mut queue) {
                return Ok(false);
            }
        }
        for &p in g.parents_of(s) {
            if arrive(p, false, &mut queue) {
                return Ok(false);
            }
        }
        for &b in g.siblings_of(s) {
            if arrive(b, true, &mut queue) {
                return Ok(false);
            }
        }
    }

    while let Some((v, in_head)) = queue.pop_front() {
        let conditioned = zs.contains(&v);
        // Leaving through a tail at v: v is a non-collider.
        if !conditioned {
            for &c in g.children_of(v) {
                if arrive(c, true, &mut queue) {
                    return Ok(false);
                }
            }
        }
        // Leaving through an arrowhead at v: collider iff we also arrived
        // through an arrowhead.
        let passable = if in_head { open[v] } else { !conditioned };
        if passable {
            for &p in g.parents_of(v) {
                if arrive(p, false, &mut queue) {
                    return Ok(false);
                }
            }
            for &b in g.siblings_of(v) {
                if arrive(b, true, &mut queue) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

struct OracleCtx<'a> {
    g: &'a Admg,
    zs: BTreeSet<usize>,
    in_y: BTreeSet<usize>,
    collider_active: Vec<Option<bool>>,
}

impl OracleCtx<'_> {
    fn collider_is_active(&mut self, v: usize) -> bool {
        if let Some(known) = self.collider_active[v] {
            return known;
        }
        // Literal definition: v or any of its descendants is in Z.
        let seed: NodeSet = [self.g.name(v).to_string()].into_iter().collect();
        let desc = self.g.descendants(&seed).expect("vertex belongs to graph");
        let active = desc.iter().any(|d| {
            let id = self.g.idx(d).expect("descendant belongs to graph");
            self.zs.contains(&id)
        });
        self.collider_active[v] = Some(active);
        active
    }

    /// Extends a simple path one edge at a time; returns a connecting active
    /// path as soon as one exists.
    fn search(
        &mut self,
        verts: &mut Vec<usize>,
        marks: &mut Vec<(bool, bool)>, // (arrowhead at from, arrowhead at to)
        edges: &mut Vec<PathEdge>,
        visited: &mut Vec<bool>,
    ) -> Option<Path> {
        let v = *verts.last().unwrap();
        let in_head = marks.last().map(|&(_, at_to)| at_to);

        let neighbors: Vec<(usize, bool, bool, PathEdge)> = {
            let mut out = Vec::new();
            for &c in self.g.children_of(v) {
                out.push((c, false, true, PathEdge::Forward));
            }
            for &p in self.g.parents_of(v) {
                out.push((p, true, false, PathEdge::Backward));
            }
            for &b in self.g.siblings_of(v) {
                out.push((b, true, true, PathEdge::Bidirected));
            }
            out
        };

        for (w, at_v, at_w, kind) in neighbors {
            if visited[w] {
                continue;
            }
            // Taking this edge makes v an interior vertex (unless it is the
            // path start); check its activation now that both marks are known.
            if let Some(in_head) = in_head {
                let collider = in_head && at_v;
                let active = if collider {
                    self.collider_is_active(v)
                } else {
                    !self.zs.contains(&v)
                };
                if !active {
                    continue;
                }
            }
            verts.push(w);
            marks.push((at_v, at_w));
            edges.push(kind);
            if self.in_y.contains(&w) {
                let path = Path {
                    vertices: verts.iter().map(|&i| self.g.name(i).to_string()).collect(),
                    edges: edges.clone(),
                };
                verts.pop();
                marks.pop();
                edges.pop();
                return Some(path);
            }
            visited[w] = true;
            if let Some(found) = self.search(verts, marks, edges, visited) {
                return Some(found);
            }
            visited[w] = false;
            verts.pop();
            marks.pop();
            edges.pop();
        }
        None
    }
}

/// Returns an active path between `x` and `y` given `z`, if one exists.
/// Exhaustive over simple paths; intended for small graphs.
pub fn connecting_path(g: &Admg, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<Option<Path>> {
    let (xs, ys, zs) = check_xyz(g, x, y, z)?;
    let mut ctx = OracleCtx {
        g,
        zs,
        in_y: ys.into_iter().collect(),
        collider_active: vec![None; g.node_count()],
    };
    for &s in &xs {
        let mut visited = vec![false; g.node_count()];
        visited[s] = true;
        let mut verts = vec![s];
        let mut marks = Vec::new();
        let mut edges = Vec::new();
        if let Some(p) = ctx.search(&mut verts, &mut marks, &mut edges, &mut visited) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Brute-force oracle with the same contract as [`d_separated`], computed by
/// exhaustive simple-path enumeration.
pub fn d_separated_oracle(g: &Admg, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    Ok(connecting_path(g, x, y, z)?.is_none())
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

    #[test]
    fn collider_blocks_until_conditioned() {
        let g = Admg::from_edges(&["X", "W", "Y"], &[("X", "W"), ("Y", "W")], &[]).unwrap();
        assert!(d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
        assert!(!d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["W"])).unwrap());
    }

    #[test]
    fn collider_descendant_opens_path() {
        let g = Admg::from_edges(
            &["X", "W", "Y", "D"],
            &[("X", "W"), ("Y", "W"), ("W", "D")],
            &[],
        )
        .unwrap();
        assert!(!d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["D"])).unwrap());
    }

    #[test]
    fn bidirected_edge_is_an_active_path() {
        let g = Admg::from_edges(&["X", "Y"], &[], &[("X", "Y")]).unwrap();
        assert!(!d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
        assert!(!d_separated_oracle(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
    }

    #[test]
    fn example1_y_z_given_x_v() {
        let g = example1_left();
        assert!(d_separated(&g, &ns(&["Y"]), &ns(&["Z"]), &ns(&["X", "V"])).unwrap());
        assert!(d_separated_oracle(&g, &ns(&["Y"]), &ns(&["Z"]), &ns(&["X", "V"])).unwrap());
    }

    #[test]
    fn oracle_agrees_on_collider() {
        let g = Admg::from_edges(&["X", "W", "Y"], &[("X", "W"), ("Y", "W")], &[]).unwrap();
        for z in [ns(&[]), ns(&["W"])] {
            assert_eq!(
                d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &z).unwrap(),
                d_separated_oracle(&g, &ns(&["X"]), &ns(&["Y"]), &z).unwrap()
            );
        }
    }

    #[test]
    fn example1_exhaustive_triple_sweep_agrees() {
        let g = example1_left();
        let names: Vec<String> = g.nodes().to_vec();
        let n = names.len();
        // Every assignment of each node to X / Y / Z / out.
        for mask in 0..4u32.pow(n as u32) {
            let mut x = NodeSet::new();
            let mut y = NodeSet::new();
            let mut z = NodeSet::new();
            let mut m = mask;
            for name in &names {
                match m % 4 {
                    1 => {
                        x.insert(name.clone());
                    }
                    2 => {
                        y.insert(name.clone());
                    }
                    3 => {
                        z.insert(name.clone());
                    }
                    _ => {}
                }
                m /= 4;
            }
            if x.is_empty() || y.is_empty() {
                continue;
            }
            assert_eq!(
                d_separated(&g, &x, &y, &z).unwrap(),
                d_separated_oracle(&g, &x, &y, &z).unwrap(),
                "disagreement at X={x:?} Y={y:?} Z={z:?}"
            );
        }
    }

    #[test]
    fn rejects_overlapping_sets() {
        let g = example1_left();
        assert!(matches!(
            d_separated(&g, &ns(&["X"]), &ns(&["X"]), &ns(&[])),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn rejects_unknown_variable() {
        let g = example1_left();
        assert!(matches!(
            d_separated(&g, &ns(&["X"]), &ns(&["Q"]), &ns(&[])),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn multi_edge_pair_uses_both_edge_identities() {
        // X -> M plus X <-> M: the bidirected edge makes M a collider on
        // X <-> M <- Y even though X -> M -> ... exists as a separate edge.
        let g = Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("Y", "M")], &[("X", "M")])
            .unwrap();
        // Path X <-> M <- Y is a collider at M (blocked); path X -> M <- Y
        // likewise. Nothing connects X and Y given {}.
        assert!(d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[])).unwrap());
        assert!(!d_separated(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["M"])).unwrap());
        assert_eq!(
            d_separated_oracle(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&["M"])).unwrap(),
            false
        );
    }

    #[test]
    fn connecting_path_is_displayable() {
        let g = Admg::from_edges(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[]).unwrap();
        let p = connecting_path(&g, &ns(&["X"]), &ns(&["Y"]), &ns(&[]))
            .unwrap()
            .unwrap();
        assert_eq!(p.to_string(), "X -> M -> Y");
    }
}
