//! Seeded random graphs, subgraphs and query triples for differential and
//! property testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Admg, NodeSet};
use crate::query::Query;

#[derive(Debug, Clone)]
pub struct RandomGraphConfig {
    pub nodes: usize,
    pub directed_density: f64,
    pub bidirected_density: f64,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        RandomGraphConfig {
            nodes: 5,
            directed_density: 0.3,
            bidirected_density: 0.3,
        }
    }
}

pub fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

/// Random ADMG over `V0..Vn-1`; directed edges respect the index order, so
/// the graph is acyclic by construction. Deterministic given the seed.
pub fn random_admg(cfg: &RandomGraphConfig, seed: u64) -> Admg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = node_names(cfg.nodes);
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for i in 0..cfg.nodes {
        for j in (i + 1)..cfg.nodes {
            if rng.gen_bool(cfg.directed_density) {
                directed.push((names[i].clone(), names[j].clone()));
            }
            if rng.gen_bool(cfg.bidirected_density) {
                bidirected.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    Admg::new(names, directed, bidirected).expect("construction is acyclic")
}

/// Random subgraph over the same node set: each edge kept independently
/// with probability `keep`.
pub fn random_subgraph(g: &Admg, keep: f64, seed: u64) -> Admg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directed: Vec<_> = g
        .directed_edges()
        .into_iter()
        .filter(|_| rng.gen_bool(keep))
        .collect();
    let bidirected: Vec<_> = g
        .bidirected_edges()
        .into_iter()
        .filter(|_| rng.gen_bool(keep))
        .collect();
    Admg::new(g.nodes().to_vec(), directed, bidirected).expect("subgraph of an ADMG is an ADMG")
}

/// Random disjoint `(X, Y, Z)` with non-empty `X` and `Y`. Z may be empty.
pub fn random_triple(g: &Admg, seed: u64) -> (NodeSet, NodeSet, NodeSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut x = NodeSet::new();
        let mut y = NodeSet::new();
        let mut z = NodeSet::new();
        for name in g.nodes() {
            match rng.gen_range(0..4) {
                0 => {
                    x.insert(name.clone());
                }
                1 => {
                    y.insert(name.clone());
                }
                2 => {
                    z.insert(name.clone());
                }
                _ => {}
            }
        }
        if !x.is_empty() && !y.is_empty() {
            return (x, y, z);
        }
    }
}

/// Random single-treatment, single-outcome query over the graph's nodes.
pub fn random_effect_query(g: &Admg, seed: u64) -> Query {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.node_count();
    let xi = rng.gen_range(0..n);
    let yi = loop {
        let c = rng.gen_range(0..n);
        if c != xi {
            break c;
        }
    };
    Query::effect(&g.nodes()[yi], &g.nodes()[xi])
}
