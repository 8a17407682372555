//! Acyclic directed mixed graphs (ADMGs).
//!
//! An ADMG has directed edges `A -> B` (direct causal influence) and
//! bidirected edges `A <-> B` (latent confounding). The directed part must
//! be acyclic. Graphs are immutable after validation; every operation
//! returns a fresh graph or a freshly allocated node set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Set of variable names, iterated in lexicographic order.
pub type NodeSet = BTreeSet<String>;

/// Builds a `NodeSet` from anything yielding string-likes. Test and call-site sugar.
pub fn node_set<I, S>(names: I) -> NodeSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Into::into).collect()
}

/// Checks the lexical rules for a variable name: non-empty, letters, digits
/// and underscore, not starting with a digit.
pub fn validate_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidName(name.to_string()))
    }
}

/// Which kinship set to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kinship {
    Parents,
    Children,
    Ancestors,
    Descendants,
}

/// An acyclic directed mixed graph over named variables.
#[derive(Debug, Clone)]
pub struct Admg {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
    parents_adj: Vec<Vec<usize>>,
    children_adj: Vec<Vec<usize>>,
    sibling_adj: Vec<Vec<usize>>,
}

impl Admg {
    /// Validates and builds a graph. Node iteration order is the input order.
    ///
    /// Fails with `DuplicateNode`, `UnknownEndpoint`, `SelfLoop` or `Cycle`
    /// (the latter carries a witness cycle).
    pub fn new<N, E, F>(nodes: N, directed: E, bidirected: F) -> Result<Self>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
        F: IntoIterator<Item = (String, String)>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let mut index = BTreeMap::new();
        for (i, name) in nodes.iter().enumerate() {
            validate_name(name)?;
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let resolve = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownEndpoint(name.to_string()))
        };

        let mut dir = BTreeSet::new();
        for (tail, head) in directed {
            let (t, h) = (resolve(&tail)?, resolve(&head)?);
            if t == h {
                return Err(Error::SelfLoop(tail));
            }
            dir.insert((t, h));
        }
        let mut bid = BTreeSet::new();
        for (a, b) in bidirected {
            let (x, y) = (resolve(&a)?, resolve(&b)?);
            if x == y {
                return Err(Error::SelfLoop(a));
            }
            bid.insert((x.min(y), x.max(y)));
        }

        let n = nodes.len();
        let mut parents_adj = vec![Vec::new(); n];
        let mut children_adj = vec![Vec::new(); n];
        let mut sibling_adj = vec![Vec::new(); n];
        for &(t, h) in &dir {
            children_adj[t].push(h);
            parents_adj[h].push(t);
        }
        for &(a, b) in &bid {
            sibling_adj[a].push(b);
            sibling_adj[b].push(a);
        }

        let g = Admg {
            nodes,
            index,
            directed: dir,
            bidirected: bid,
            parents_adj,
            children_adj,
            sibling_adj,
        };
        if let Some(cycle) = g.find_cycle() {
            return Err(Error::Cycle { witness: cycle });
        }
        Ok(g)
    }

    /// Convenience constructor from `&str` edge pairs.
    pub fn from_edges(
        nodes: &[&str],
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        Self::new(
            nodes.iter().map(|s| s.to_string()),
            directed
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string())),
            bidirected
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string())),
        )
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();

        fn dfs(
            g: &Admg,
            v: usize,
            state: &mut Vec<u8>,
            stack: &mut Vec<usize>,
        ) -> Option<Vec<String>> {
            state[v] = 1;
            stack.push(v);
            for &c in &g.children_adj[v] {
                match state[c] {
                    0 => {
                        if let Some(w) = dfs(g, c, state, stack) {
                            return Some(w);
                        }
                    }
                    1 => {
                        let start = stack.iter().position(|&x| x == c).unwrap();
                        let mut witness: Vec<String> =
                            stack[start..].iter().map(|&i| g.nodes[i].clone()).collect();
                        witness.push(g.nodes[c].clone());
                        return Some(witness);
                    }
                    _ => {}
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }

        for v in 0..n {
            if state[v] == 0 {
                if let Some(w) = dfs(self, v, &mut state, &mut stack) {
                    return Some(w);
                }
            }
        }
        None
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node names in input order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_set(&self) -> NodeSet {
        self.nodes.iter().cloned().collect()
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub(crate) fn idx(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub(crate) fn name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub(crate) fn parents_of(&self, i: usize) -> &[usize] {
        &self.parents_adj[i]
    }

    pub(crate) fn children_of(&self, i: usize) -> &[usize] {
        &self.children_adj[i]
    }

    pub(crate) fn siblings_of(&self, i: usize) -> &[usize] {
        &self.sibling_adj[i]
    }

    /// Directed edges as name pairs, in canonical order.
    pub fn directed_edges(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> = self
            .directed
            .iter()
            .map(|&(t, h)| (self.nodes[t].clone(), self.nodes[h].clone()))
            .collect();
        v.sort();
        v
    }

    /// Bidirected edges as name pairs (lexicographically ordered within each pair).
    pub fn bidirected_edges(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> = self
            .bidirected
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (self.nodes[a].clone(), self.nodes[b].clone());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        v.sort();
        v
    }

    pub fn has_directed_edge(&self, tail: &str, head: &str) -> bool {
        match (self.index.get(tail), self.index.get(head)) {
            (Some(&t), Some(&h)) => self.directed.contains(&(t, h)),
            _ => false,
        }
    }

    pub fn has_bidirected_edge(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&x), Some(&y)) => self.bidirected.contains(&(x.min(y), x.max(y))),
            _ => false,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.bidirected.len()
    }

    /// True if the graph has no bidirected edges (a plain DAG).
    pub fn is_markovian(&self) -> bool {
        self.bidirected.is_empty()
    }

    fn check_subset(&self, s: &NodeSet) -> Result<Vec<usize>> {
        s.iter().map(|name| self.idx(name)).collect()
    }

    pub(crate) fn check_disjoint(sets: &[&NodeSet]) -> Result<()> {
        let mut seen: BTreeSet<&String> = BTreeSet::new();
        for s in sets {
            for name in *s {
                if !seen.insert(name) {
                    return Err(Error::OverlappingSets(name.clone()));
                }
            }
        }
        Ok(())
    }

    fn closure(&self, seeds: &[usize], adj: &[Vec<usize>]) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = seeds.iter().copied().collect();
        let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    fn to_names(&self, ids: impl IntoIterator<Item = usize>) -> NodeSet {
        ids.into_iter().map(|i| self.nodes[i].clone()).collect()
    }

    /// Union of the requested kinship set over the members of `s`.
    /// Ancestors and descendants are reflexive.
    pub fn kinship(&self, which: Kinship, s: &NodeSet) -> Result<NodeSet> {
        let ids = self.check_subset(s)?;
        let out = match which {
            Kinship::Parents => ids
                .iter()
                .flat_map(|&i| self.parents_adj[i].iter().copied())
                .collect(),
            Kinship::Children => ids
                .iter()
                .flat_map(|&i| self.children_adj[i].iter().copied())
                .collect(),
            Kinship::Ancestors => self.closure(&ids, &self.parents_adj),
            Kinship::Descendants => self.closure(&ids, &self.children_adj),
        };
        Ok(self.to_names(out))
    }

    pub fn parents(&self, s: &NodeSet) -> Result<NodeSet> {
        self.kinship(Kinship::Parents, s)
    }

    pub fn children(&self, s: &NodeSet) -> Result<NodeSet> {
        self.kinship(Kinship::Children, s)
    }

    pub fn ancestors(&self, s: &NodeSet) -> Result<NodeSet> {
        self.kinship(Kinship::Ancestors, s)
    }

    pub fn descendants(&self, s: &NodeSet) -> Result<NodeSet> {
        self.kinship(Kinship::Descendants, s)
    }

    /// The mutilated graph G_{over̄, under̲}: drops every edge with an
    /// arrowhead into `over` (directed heads and bidirected endpoints) and
    /// every directed edge with a tail in `under`. The node set is unchanged.
    pub fn mutilate(&self, over: &NodeSet, under: &NodeSet) -> Result<Admg> {
        Self::check_disjoint(&[over, under])?;
        let over_ids: BTreeSet<usize> = self.check_subset(over)?.into_iter().collect();
        let under_ids: BTreeSet<usize> = self.check_subset(under)?.into_iter().collect();

        let directed = self
            .directed
            .iter()
            .filter(|&&(t, h)| !over_ids.contains(&h) && !under_ids.contains(&t))
            .map(|&(t, h)| (self.nodes[t].clone(), self.nodes[h].clone()));
        let bidirected = self
            .bidirected
            .iter()
            .filter(|&&(a, b)| !over_ids.contains(&a) && !over_ids.contains(&b))
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()));
        Admg::new(
            self.nodes.iter().cloned(),
            directed.collect::<Vec<_>>(),
            bidirected.collect::<Vec<_>>(),
        )
    }

    /// Subgraph induced on `s`: keeps exactly the nodes of `s` and the edges
    /// with both endpoints inside.
    pub fn induced_subgraph(&self, s: &NodeSet) -> Result<Admg> {
        let keep: BTreeSet<usize> = self.check_subset(s)?.into_iter().collect();
        let directed = self
            .directed
            .iter()
            .filter(|&&(t, h)| keep.contains(&t) && keep.contains(&h))
            .map(|&(t, h)| (self.nodes[t].clone(), self.nodes[h].clone()));
        let bidirected = self
            .bidirected
            .iter()
            .filter(|&&(a, b)| keep.contains(&a) && keep.contains(&b))
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()));
        Admg::new(
            self.nodes.iter().filter(|n| s.contains(*n)).cloned(),
            directed.collect::<Vec<_>>(),
            bidirected.collect::<Vec<_>>(),
        )
    }

    /// True iff `self`'s nodes and edges are contained in `other`'s.
    /// Comparison is by name, so the graphs may have been built independently.
    pub fn is_subgraph(&self, other: &Admg) -> bool {
        self.nodes.iter().all(|n| other.has_node(n))
            && self
                .directed
                .iter()
                .all(|&(t, h)| other.has_directed_edge(&self.nodes[t], &self.nodes[h]))
            && self
                .bidirected
                .iter()
                .all(|&(a, b)| other.has_bidirected_edge(&self.nodes[a], &self.nodes[b]))
    }

    /// Node names in a topological order of the directed part (input order
    /// used to break ties deterministically).
    pub fn topological_order(&self) -> Vec<String> {
        let n = self.nodes.len();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents_adj[i].len()).collect();
        let mut ready: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(v) = ready.pop_front() {
            out.push(self.nodes[v].clone());
            for &c in &self.children_adj[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push_back(c);
                }
            }
        }
        debug_assert_eq!(out.len(), n);
        out
    }
}

impl PartialEq for Admg {
    /// Set-semantics equality: same node set, same edges, regardless of
    /// declaration order.
    fn eq(&self, other: &Self) -> bool {
        self.node_set() == other.node_set()
            && self.directed_edges() == other.directed_edges()
            && self.bidirected_edges() == other.bidirected_edges()
    }
}

impl Eq for Admg {}

impl fmt::Display for Admg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (t, h) in self.directed_edges() {
            parts.push(format!("{t} -> {h}"));
        }
        for (a, b) in self.bidirected_edges() {
            parts.push(format!("{a} <-> {b}"));
        }
        let mut connected: BTreeSet<usize> = BTreeSet::new();
        for &(t, h) in &self.directed {
            connected.insert(t);
            connected.insert(h);
        }
        for &(a, b) in &self.bidirected {
            connected.insert(a);
            connected.insert(b);
        }
        for (i, name) in self.nodes.iter().enumerate() {
            if !connected.contains(&i) {
                parts.push(format!("node {name}"));
            }
        }
        write!(f, "{{ {} }}", parts.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_left() -> Admg {
        Admg::from_edges(
            &["X", "Y", "Z", "U", "V"],
            &[("Z", "X"), ("X", "Y"), ("U", "Z"), ("V", "Z"), ("U", "V"), ("V", "Y")],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn builds_smallest_dag() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert!(g.has_directed_edge("X", "Y"));
        assert!(!g.has_directed_edge("Y", "X"));
    }

    #[test]
    fn builds_example1_left_graph() {
        let g = example1_left();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn two_cycle_rejected_with_witness() {
        let err = Admg::from_edges(&["X", "Y"], &[("X", "Y"), ("Y", "X")], &[]).unwrap_err();
        match err {
            Error::Cycle { witness } => {
                assert_eq!(witness.first(), witness.last());
                assert_eq!(witness.len(), 3);
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_unknown_and_selfloop_rejected() {
        assert!(matches!(
            Admg::from_edges(&["X", "X"], &[], &[]),
            Err(Error::DuplicateNode(_))
        ));
        assert!(matches!(
            Admg::from_edges(&["X"], &[("X", "Y")], &[]),
            Err(Error::UnknownEndpoint(_))
        ));
        assert!(matches!(
            Admg::from_edges(&["X"], &[("X", "X")], &[]),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            Admg::from_edges(&["X"], &[], &[("X", "X")]),
            Err(Error::SelfLoop(_))
        ));
    }

    #[test]
    fn directed_and_bidirected_may_coexist() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[("X", "Y")]).unwrap();
        assert!(g.has_directed_edge("X", "Y"));
        assert!(g.has_bidirected_edge("Y", "X"));
    }

    #[test]
    fn chain_descendants_and_reflexive_ancestors() {
        let g = Admg::from_edges(&["X", "Y", "Z"], &[("X", "Y"), ("Y", "Z")], &[]).unwrap();
        assert_eq!(
            g.descendants(&node_set(["X"])).unwrap(),
            node_set(["X", "Y", "Z"])
        );
        assert_eq!(g.ancestors(&node_set(["X"])).unwrap(), node_set(["X"]));
    }

    #[test]
    fn example1_parents_of_z() {
        let g = example1_left();
        assert_eq!(g.parents(&node_set(["Z"])).unwrap(), node_set(["U", "V"]));
    }

    #[test]
    fn kinship_unknown_variable() {
        let g = example1_left();
        assert!(matches!(
            g.parents(&node_set(["Q"])),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn mutilate_no_arrowhead_into_x_is_identity() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        let m = g.mutilate(&node_set(["X"]), &NodeSet::new()).unwrap();
        assert_eq!(m, g);
    }

    #[test]
    fn mutilate_removes_incoming_edge() {
        let g = Admg::from_edges(&["X", "Y"], &[("Y", "X")], &[]).unwrap();
        let m = g.mutilate(&node_set(["X"]), &NodeSet::new()).unwrap();
        assert_eq!(m.edge_count(), 0);
        assert_eq!(m.node_count(), 2);
    }

    #[test]
    fn mutilate_under_removes_outgoing_directed_only() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[("X", "Y")]).unwrap();
        let m = g.mutilate(&NodeSet::new(), &node_set(["X"])).unwrap();
        assert!(!m.has_directed_edge("X", "Y"));
        assert!(m.has_bidirected_edge("X", "Y"));
    }

    #[test]
    fn mutilate_rejects_overlap() {
        let g = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        assert!(matches!(
            g.mutilate(&node_set(["X"]), &node_set(["X"])),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn subgraph_order_examples() {
        let small = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        let big = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[("X", "Y")]).unwrap();
        let flipped = Admg::from_edges(&["X", "Y"], &[("Y", "X")], &[]).unwrap();
        assert!(small.is_subgraph(&big));
        assert!(!big.is_subgraph(&small));
        assert!(small.is_subgraph(&small));
        assert!(!small.is_subgraph(&flipped));
    }

    #[test]
    fn equality_ignores_declaration_order() {
        let a = Admg::from_edges(&["X", "Y"], &[("X", "Y")], &[]).unwrap();
        let b = Admg::from_edges(&["Y", "X"], &[("X", "Y")], &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn topological_order_respects_edges() {
        let g = example1_left();
        let order = g.topological_order();
        let pos = |n: &str| order.iter().position(|x| x == n).unwrap();
        for (t, h) in g.directed_edges() {
            assert!(pos(&t) < pos(&h), "{t} must precede {h}");
        }
    }
}
