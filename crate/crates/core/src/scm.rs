//! Exact discrete structural causal models.
//!
//! An SCM is a set of independent exogenous variables with rational
//! marginals plus one total function table per endogenous variable.
//! Observational and interventional distributions are computed by exhaustive
//! enumeration of exogenous joint assignments, so every probability is an
//! exact rational. Practical scale is roughly a dozen binary variables.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{DomainSpec, Distribution};
use crate::error::{Error, Result};
use crate::expr::Estimand;
use crate::graph::{Admg, NodeSet};
use crate::query::Query;

/// Exogenous variable: finite domain plus an exact marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoVar {
    pub name: String,
    pub domain: Vec<String>,
    pub probs: Vec<BigRational>,
}

/// Endogenous variable: finite domain, endogenous parents, exogenous inputs
/// and a total function table. The table maps each assignment of
/// `parents ++ exos` (mixed radix, last input fastest) to a value index.
#[derive(Debug, Clone, PartialEq)]
pub struct EndoVar {
    pub name: String,
    pub domain: Vec<String>,
    pub parents: Vec<String>,
    pub exos: Vec<String>,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    endo: Vec<EndoVar>,
    exo: Vec<ExoVar>,
    endo_index: BTreeMap<String, usize>,
    exo_index: BTreeMap<String, usize>,
    topo: Vec<usize>,
}

impl DiscreteScm {
    pub fn new(endo: Vec<EndoVar>, exo: Vec<ExoVar>) -> Result<Self> {
        let mut endo_index = BTreeMap::new();
        let mut exo_index = BTreeMap::new();
        for (i, v) in endo.iter().enumerate() {
            if v.domain.is_empty() {
                return Err(Error::InvalidScm(format!("empty domain for `{}`", v.name)));
            }
            if endo_index.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(v.name.clone()));
            }
        }
        for (i, u) in exo.iter().enumerate() {
            if u.domain.is_empty() {
                return Err(Error::InvalidScm(format!("empty domain for `{}`", u.name)));
            }
            if endo_index.contains_key(&u.name) || exo_index.insert(u.name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(u.name.clone()));
            }
            if u.probs.len() != u.domain.len() {
                return Err(Error::InvalidScm(format!(
                    "exogenous `{}` has {} probabilities for {} values",
                    u.name,
                    u.probs.len(),
                    u.domain.len()
                )));
            }
            let mut total = BigRational::zero();
            for p in &u.probs {
                if p.is_negative() {
                    return Err(Error::InvalidScm(format!(
                        "negative probability on exogenous `{}`",
                        u.name
                    )));
                }
                total += p;
            }
            if !total.is_one() {
                return Err(Error::InvalidScm(format!(
                    "marginal of exogenous `{}` sums to {total}, expected 1",
                    u.name
                )));
            }
        }

        for v in &endo {
            let mut cells = 1usize;
            for p in &v.parents {
                let pi = endo_index.get(p).ok_or_else(|| {
                    Error::InvalidScm(format!("unknown parent `{p}` of `{}`", v.name))
                })?;
                cells *= endo[*pi].domain.len();
            }
            for e in &v.exos {
                let ei = exo_index.get(e).ok_or_else(|| {
                    Error::InvalidScm(format!("unknown exogenous `{e}` of `{}`", v.name))
                })?;
                cells *= exo[*ei].domain.len();
            }
            if v.table.len() != cells {
                return Err(Error::InvalidScm(format!(
                    "function table of `{}` has {} entries, expected {cells} (tables must be total)",
                    v.name,
                    v.table.len()
                )));
            }
            if let Some(&bad) = v.table.iter().find(|&&t| t >= v.domain.len()) {
                return Err(Error::InvalidScm(format!(
                    "function table of `{}` maps to value index {bad}, domain has {} values",
                    v.name,
                    v.domain.len()
                )));
            }
        }

        // Topological order of the endogenous parent relation.
        let n = endo.len();
        let mut indeg = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, v) in endo.iter().enumerate() {
            indeg[i] = v.parents.len();
            for p in &v.parents {
                children[endo_index[p]].push(i);
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            topo.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::InvalidScm("cyclic parent relation".into()));
        }

        Ok(DiscreteScm {
            endo,
            exo,
            endo_index,
            exo_index,
            topo,
        })
    }

    pub fn endo_vars(&self) -> &[EndoVar] {
        &self.endo
    }

    pub fn exo_vars(&self) -> &[ExoVar] {
        &self.exo
    }

    pub fn endo(&self, name: &str) -> Result<&EndoVar> {
        self.endo_index
            .get(name)
            .map(|&i| &self.endo[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn domain_spec(&self) -> DomainSpec {
        let mut spec = DomainSpec::new();
        for v in &self.endo {
            spec.insert(v.name.clone(), v.domain.clone());
        }
        spec
    }

    /// The causal diagram this SCM induces: directed edges from the parent
    /// lists, a bidirected edge between every endogenous pair sharing an
    /// exogenous parent.
    pub fn induced_graph(&self) -> Admg {
        let nodes: Vec<String> = self.endo.iter().map(|v| v.name.clone()).collect();
        let directed: Vec<(String, String)> = self
            .endo
            .iter()
            .flat_map(|v| v.parents.iter().map(move |p| (p.clone(), v.name.clone())))
            .collect();
        let mut bidirected: BTreeSet<(String, String)> = BTreeSet::new();
        for i in 0..self.endo.len() {
            for j in (i + 1)..self.endo.len() {
                let a: BTreeSet<&String> = self.endo[i].exos.iter().collect();
                if self.endo[j].exos.iter().any(|e| a.contains(e)) {
                    let (x, y) = (self.endo[i].name.clone(), self.endo[j].name.clone());
                    bidirected.insert(if x <= y { (x, y) } else { (y, x) });
                }
            }
        }
        Admg::new(nodes, directed, bidirected.into_iter().collect::<Vec<_>>())
            .expect("validated SCM induces a valid ADMG")
    }

    fn value_index(&self, var: &str, value: &str) -> Result<usize> {
        let v = self.endo(var)?;
        v.domain
            .iter()
            .position(|x| x == value)
            .ok_or_else(|| Error::OutOfDomainValue {
                var: var.to_string(),
                value: value.to_string(),
            })
    }

    /// Exact joint distribution over the endogenous variables under the
    /// given intervention (empty map = observational).
    pub fn distribution(&self, intervention: &BTreeMap<String, String>) -> Result<Distribution> {
        let mut clamped: Vec<Option<usize>> = vec![None; self.endo.len()];
        for (var, value) in intervention {
            let idx = *self
                .endo_index
                .get(var)
                .ok_or_else(|| Error::UnknownVariable(var.clone()))?;
            clamped[idx] = Some(self.value_index(var, value)?);
        }

        let cells: usize = self.endo.iter().map(|v| v.domain.len()).product();
        let mut probs = vec![BigRational::zero(); cells];

        // Enumerate the exogenous joint assignment by mixed-radix counting.
        let radices: Vec<usize> = self.exo.iter().map(|u| u.domain.len()).collect();
        let total: usize = radices.iter().product();
        let mut exo_vals = vec![0usize; self.exo.len()];
        for mut code in 0..total {
            for k in (0..self.exo.len()).rev() {
                exo_vals[k] = code % radices[k];
                code /= radices[k];
            }
            let mut weight = BigRational::one();
            for (u, &val) in self.exo.iter().zip(&exo_vals) {
                weight *= &u.probs[val];
            }
            if weight.is_zero() {
                continue;
            }

            // Propagate mechanisms in topological order.
            let mut endo_vals = vec![0usize; self.endo.len()];
            for &vi in &self.topo {
                let v = &self.endo[vi];
                endo_vals[vi] = match clamped[vi] {
                    Some(fixed) => fixed,
                    None => {
                        let mut idx = 0usize;
                        for p in &v.parents {
                            let pi = self.endo_index[p];
                            idx = idx * self.endo[pi].domain.len() + endo_vals[pi];
                        }
                        for e in &v.exos {
                            let ei = self.exo_index[e];
                            idx = idx * self.exo[ei].domain.len() + exo_vals[ei];
                        }
                        v.table[idx]
                    }
                };
            }

            let mut cell = 0usize;
            for (v, &val) in self.endo.iter().zip(&endo_vals) {
                cell = cell * v.domain.len() + val;
            }
            probs[cell] += weight;
        }

        Distribution::new(
            self.endo
                .iter()
                .map(|v| (v.name.clone(), v.domain.clone()))
                .collect(),
            probs,
        )
    }

    /// The true value of `q` at a full binding of its variables:
    /// `P(y | do(x), z)` computed from the interventional distribution.
    /// Conditioning on a zero-probability `z` is an error.
    pub fn query_value(
        &self,
        q: &Query,
        binding: &BTreeMap<String, String>,
    ) -> Result<BigRational> {
        let pick = |set: &NodeSet| -> Result<BTreeMap<String, String>> {
            set.iter()
                .map(|v| {
                    binding
                        .get(v)
                        .map(|val| (v.clone(), val.clone()))
                        .ok_or_else(|| Error::MissingBinding(v.clone()))
                })
                .collect()
        };
        let x = pick(&q.treatment)?;
        let y = pick(&q.outcome)?;
        let z = pick(&q.given)?;
        let dist = self.distribution(&x)?;
        dist.conditional(&y, &z)
    }

    /// Bindings of the query variables consistent with the query's fixed
    /// values, over this SCM's domains.
    pub fn query_bindings(&self, q: &Query) -> Result<Vec<BTreeMap<String, String>>> {
        let vars: Vec<String> = q.vars().into_iter().collect();
        let spec = self.domain_spec();
        Ok(spec
            .bindings(&vars)?
            .into_iter()
            .filter(|b| q.bindings.iter().all(|(k, v)| b.get(k) == Some(v)))
            .collect())
    }
}

/// Outcome of checking an estimand against the SCM's ground truth.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Maximum absolute discrepancy over the evaluated bindings (exact).
    pub max_error: BigRational,
    pub evaluated: usize,
    /// Bindings skipped because a zero-probability event was conditioned on,
    /// with the offending event description.
    pub skipped: Vec<(BTreeMap<String, String>, String)>,
}

impl ValidationReport {
    pub fn is_exact(&self) -> bool {
        self.max_error.is_zero()
    }
}

/// Compares `e` with the true query values of `m` at every value binding of
/// the query variables (restricted by the query's fixed values).
/// Zero-probability conditioning bindings are skipped and reported.
pub fn validate_estimand(m: &DiscreteScm, e: &Estimand, q: &Query) -> Result<ValidationReport> {
    let obs = m.distribution(&BTreeMap::new())?;
    let mut report = ValidationReport {
        max_error: BigRational::zero(),
        evaluated: 0,
        skipped: Vec::new(),
    };
    for binding in m.query_bindings(q)? {
        let lhs = match e.evaluate(&obs, &binding) {
            Ok(v) => v,
            Err(Error::ZeroProbability(what)) => {
                report.skipped.push((binding, what));
                continue;
            }
            Err(other) => return Err(other),
        };
        let rhs = match m.query_value(q, &binding) {
            Ok(v) => v,
            Err(Error::ZeroProbability(what)) => {
                report.skipped.push((binding, what));
                continue;
            }
            Err(other) => return Err(other),
        };
        let diff = (lhs - rhs).abs();
        if diff > report.max_error {
            report.max_error = diff;
        }
        report.evaluated += 1;
    }
    Ok(report)
}

fn positive_marginal<R: Rng>(len: usize, rng: &mut R) -> Vec<BigRational> {
    let weights: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=16u64)).collect();
    let total: u64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| BigRational::new(BigInt::from(w), BigInt::from(total)))
        .collect()
}

/// Draws a random SCM whose induced graph equals `g` exactly: one dedicated
/// exogenous variable per endogenous variable, one shared exogenous variable
/// per bidirected edge, uniform random function tables, strictly positive
/// exogenous marginals. Deterministic given the seed.
pub fn random_scm(g: &Admg, spec: &DomainSpec, seed: u64) -> Result<DiscreteScm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taken: BTreeSet<&String> = g.nodes().iter().collect();
    let fresh = |base: String| -> String {
        let mut name = base;
        while taken.contains(&name) {
            name.push('_');
        }
        name
    };

    let mut exo = Vec::new();
    let mut exo_of_node: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for v in g.nodes() {
        let name = fresh(format!("U_{v}"));
        let k = spec.domain(v)?.len();
        exo.push(ExoVar {
            name: name.clone(),
            domain: (0..k).map(|i| i.to_string()).collect(),
            probs: positive_marginal(k, &mut rng),
        });
        exo_of_node.entry(v.clone()).or_default().push(name);
    }
    for (a, b) in g.bidirected_edges() {
        let name = fresh(format!("U_{a}_{b}"));
        exo.push(ExoVar {
            name: name.clone(),
            domain: vec!["0".into(), "1".into()],
            probs: positive_marginal(2, &mut rng),
        });
        exo_of_node.entry(a.clone()).or_default().push(name.clone());
        exo_of_node.entry(b.clone()).or_default().push(name);
    }

    let exo_domain_len: BTreeMap<String, usize> = exo
        .iter()
        .map(|u| (u.name.clone(), u.domain.len()))
        .collect();
    let mut endo = Vec::new();
    for v in g.nodes() {
        let domain = spec.domain(v)?.to_vec();
        let parents: Vec<String> = g
            .parents(&[v.clone()].into_iter().collect::<NodeSet>())?
            .into_iter()
            .collect();
        let exos = exo_of_node.remove(v).unwrap_or_default();
        let mut cells = 1usize;
        for p in &parents {
            cells *= spec.domain(p)?.len();
        }
        for e in &exos {
            cells *= exo_domain_len[e];
        }
        let table = (0..cells).map(|_| rng.gen_range(0..domain.len())).collect();
        endo.push(EndoVar {
            name: v.clone(),
            domain,
            parents,
            exos,
            table,
        });
    }
    DiscreteScm::new(endo, exo)
}

/// The subgraph-lifting transformation from the estimand-transfer proof:
/// extends each mechanism with the extra parents and bidirected edges of the
/// supergraph while ignoring the new arguments. The lifted SCM induces
/// `super_graph` and has bit-identical observational and interventional
/// distributions.
pub fn lift_to(m: &DiscreteScm, super_graph: &Admg) -> Result<DiscreteScm> {
    let own = m.induced_graph();
    if !own.is_subgraph(super_graph) {
        return Err(Error::InvalidScm(
            "lift target must be a supergraph of the induced graph".into(),
        ));
    }
    let mut exo = m.exo.clone();
    let taken: BTreeSet<String> = m
        .endo
        .iter()
        .map(|v| v.name.clone())
        .chain(exo.iter().map(|u| u.name.clone()))
        .collect();
    let fresh = |base: String| -> String {
        let mut name = base;
        while taken.contains(&name) {
            name.push('_');
        }
        name
    };

    // One fresh shared exogenous variable per bidirected edge missing from
    // the induced graph; the mechanisms ignore it.
    let mut extra_exo_of: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (a, b) in super_graph.bidirected_edges() {
        if !own.has_bidirected_edge(&a, &b) {
            let name = fresh(format!("L_{a}_{b}"));
            exo.push(ExoVar {
                name: name.clone(),
                domain: vec!["0".into(), "1".into()],
                probs: vec![
                    BigRational::new(BigInt::from(1), BigInt::from(2)),
                    BigRational::new(BigInt::from(1), BigInt::from(2)),
                ],
            });
            extra_exo_of.entry(a).or_default().push(name.clone());
            extra_exo_of.entry(b).or_default().push(name);
        }
    }

    let mut endo = Vec::new();
    for v in m.endo.iter() {
        let target_parents: Vec<String> = super_graph
            .parents(&[v.name.clone()].into_iter().collect::<NodeSet>())?
            .into_iter()
            .collect();
        let extra_parents: Vec<String> = target_parents
            .iter()
            .filter(|p| !v.parents.contains(p))
            .cloned()
            .collect();
        // New input order: old parents, extra parents, old exos, extra exos.
        let mut parents = v.parents.clone();
        parents.extend(extra_parents.iter().cloned());
        let mut exos = v.exos.clone();
        let extra_exos = extra_exo_of.remove(&v.name).unwrap_or_default();
        exos.extend(extra_exos.iter().cloned());

        let old_parent_count = v.parents.len();
        let old_radices: Vec<usize> = v
            .parents
            .iter()
            .map(|p| m.endo(p).map(|e| e.domain.len()))
            .chain(
                v.exos
                    .iter()
                    .map(|e| Ok(m.exo[m.exo_index[e]].domain.len())),
            )
            .collect::<Result<_>>()?;
        let extra_parent_radices: Vec<usize> = extra_parents
            .iter()
            .map(|p| m.endo(p).map(|e| e.domain.len()))
            .collect::<Result<_>>()?;

        let new_radices: Vec<usize> = old_radices[..old_parent_count]
            .iter()
            .copied()
            .chain(extra_parent_radices.iter().copied())
            .chain(old_radices[old_parent_count..].iter().copied())
            .chain(std::iter::repeat(2usize).take(extra_exos.len()))
            .collect();
        let total: usize = new_radices.iter().product();
        let mut table = Vec::with_capacity(total);
        for mut code in 0..total {
            let mut vals = vec![0usize; new_radices.len()];
            for k in (0..new_radices.len()).rev() {
                vals[k] = code % new_radices[k];
                code /= new_radices[k];
            }
            // Project onto the old inputs: old parents are the leading block,
            // old exos follow the extra parents.
            let mut idx = 0usize;
            for k in 0..old_parent_count {
                idx = idx * old_radices[k] + vals[k];
            }
            for k in 0..v.exos.len() {
                let radix = old_radices[old_parent_count + k];
                let pos = old_parent_count + extra_parents.len() + k;
                idx = idx * radix + vals[pos];
            }
            table.push(v.table[idx]);
        }
        endo.push(EndoVar {
            name: v.name.clone(),
            domain: v.domain.clone(),
            parents,
            exos,
            table,
        });
    }
    DiscreteScm::new(endo, exo)
}

/// The two XOR-coupled SCMs over `{X, Y}` used as golden fixtures:
/// `M1` has `X ~ B(1/2)`, `Y = X xor U`, `U ~ B(1/10)` (graph `X -> Y`);
/// `M2` is the mirror image (graph `X <- Y`). Both induce the observational
/// table `P(x,y) = 9/20` if `y = x`, `1/20` otherwise.
pub fn xor_pair() -> (DiscreteScm, DiscreteScm) {
    let half = || {
        vec![
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
        ]
    };
    let b_tenth = || {
        vec![
            BigRational::new(BigInt::from(9), BigInt::from(10)),
            BigRational::new(BigInt::from(1), BigInt::from(10)),
        ]
    };
    let binary = || vec!["0".to_string(), "1".to_string()];
    let m1 = DiscreteScm::new(
        vec![
            EndoVar {
                name: "X".into(),
                domain: binary(),
                parents: vec![],
                exos: vec!["UX".into()],
                table: vec![0, 1],
            },
            EndoVar {
                name: "Y".into(),
                domain: binary(),
                parents: vec!["X".into()],
                exos: vec!["U".into()],
                table: vec![0, 1, 1, 0], // y = x xor u
            },
        ],
        vec![
            ExoVar {
                name: "UX".into(),
                domain: binary(),
                probs: half(),
            },
            ExoVar {
                name: "U".into(),
                domain: binary(),
                probs: b_tenth(),
            },
        ],
    )
    .expect("fixture is valid");
    let m2 = DiscreteScm::new(
        vec![
            EndoVar {
                name: "X".into(),
                domain: binary(),
                parents: vec!["Y".into()],
                exos: vec!["U".into()],
                table: vec![0, 1, 1, 0], // x = y xor u
            },
            EndoVar {
                name: "Y".into(),
                domain: binary(),
                parents: vec![],
                exos: vec!["UY".into()],
                table: vec![0, 1],
            },
        ],
        vec![
            ExoVar {
                name: "U".into(),
                domain: binary(),
                probs: b_tenth(),
            },
            ExoVar {
                name: "UY".into(),
                domain: binary(),
                probs: half(),
            },
        ],
    )
    .expect("fixture is valid");
    (m1, m2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::parse_rational;
    use crate::expr::Expr;
    use crate::graph::node_set;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn xor_models_induce_single_edge_graphs() {
        let (m1, m2) = xor_pair();
        let g1 = m1.induced_graph();
        assert!(g1.has_directed_edge("X", "Y"));
        assert_eq!(g1.edge_count(), 1);
        let g2 = m2.induced_graph();
        assert!(g2.has_directed_edge("Y", "X"));
        assert_eq!(g2.edge_count(), 1);
    }

    #[test]
    fn shared_exogenous_gives_bidirected_edge() {
        let m = DiscreteScm::new(
            vec![
                EndoVar {
                    name: "X".into(),
                    domain: vec!["0".into(), "1".into()],
                    parents: vec![],
                    exos: vec!["U".into()],
                    table: vec![0, 1],
                },
                EndoVar {
                    name: "Y".into(),
                    domain: vec!["0".into(), "1".into()],
                    parents: vec!["X".into()],
                    exos: vec!["U".into()],
                    table: vec![0, 1, 1, 0],
                },
            ],
            vec![ExoVar {
                name: "U".into(),
                domain: vec!["0".into(), "1".into()],
                probs: vec![r("1/2"), r("1/2")],
            }],
        )
        .unwrap();
        let g = m.induced_graph();
        assert!(g.has_directed_edge("X", "Y"));
        assert!(g.has_bidirected_edge("X", "Y"));
    }

    #[test]
    fn no_sharing_no_parents_gives_edgeless_graph() {
        let m = DiscreteScm::new(
            vec![
                EndoVar {
                    name: "A".into(),
                    domain: vec!["0".into(), "1".into()],
                    parents: vec![],
                    exos: vec!["UA".into()],
                    table: vec![0, 1],
                },
                EndoVar {
                    name: "B".into(),
                    domain: vec!["0".into(), "1".into()],
                    parents: vec![],
                    exos: vec!["UB".into()],
                    table: vec![0, 1],
                },
            ],
            vec![
                ExoVar {
                    name: "UA".into(),
                    domain: vec!["0".into(), "1".into()],
                    probs: vec![r("1/3"), r("2/3")],
                },
                ExoVar {
                    name: "UB".into(),
                    domain: vec!["0".into(), "1".into()],
                    probs: vec![r("1/4"), r("3/4")],
                },
            ],
        )
        .unwrap();
        assert_eq!(m.induced_graph().edge_count(), 0);
    }

    #[test]
    fn xor_observational_table_is_exact() {
        let (m1, m2) = xor_pair();
        for m in [&m1, &m2] {
            let d = m.distribution(&BTreeMap::new()).unwrap();
            assert_eq!(d.mass(&bind(&[("X", "0"), ("Y", "0")])).unwrap(), r("9/20"));
            assert_eq!(d.mass(&bind(&[("X", "0"), ("Y", "1")])).unwrap(), r("1/20"));
            assert_eq!(d.mass(&bind(&[("X", "1"), ("Y", "0")])).unwrap(), r("1/20"));
            assert_eq!(d.mass(&bind(&[("X", "1"), ("Y", "1")])).unwrap(), r("9/20"));
        }
        let d1 = m1.distribution(&BTreeMap::new()).unwrap();
        let d2 = m2.distribution(&BTreeMap::new()).unwrap();
        assert!(d1.same_table(&d2));
    }

    #[test]
    fn xor_interventional_values_differ() {
        let (m1, m2) = xor_pair();
        let q = Query::effect("Y", "X");
        let b = bind(&[("X", "1"), ("Y", "1")]);
        assert_eq!(m1.query_value(&q, &b).unwrap(), r("9/10"));
        assert_eq!(m2.query_value(&q, &b).unwrap(), r("1/2"));
    }

    #[test]
    fn intervention_clamps_mass() {
        let (m1, _) = xor_pair();
        let d = m1.distribution(&bind(&[("X", "1")])).unwrap();
        assert_eq!(d.mass(&bind(&[("X", "0")])).unwrap(), r("0"));
    }

    #[test]
    fn validate_estimand_example2_values() {
        let (m1, m2) = xor_pair();
        let q = Query::effect("Y", "X");
        let e = Estimand::new(Expr::term(node_set(["Y"]), node_set(["X"]))).unwrap();
        let rep1 = validate_estimand(&m1, &e, &q).unwrap();
        assert!(rep1.is_exact());
        assert_eq!(rep1.evaluated, 4);
        // On M2 the same estimand misses by |9/10 - 1/2| = 2/5 at (x=1,y=1).
        let rep2 = validate_estimand(&m2, &e, &q).unwrap();
        assert_eq!(rep2.max_error, r("2/5"));
    }

    #[test]
    fn random_scm_matches_graph_exactly() {
        let g = Admg::from_edges(&["A", "B", "C"], &[("A", "B"), ("B", "C")], &[("A", "C")])
            .unwrap();
        let spec = DomainSpec::binary(["A", "B", "C"]);
        for seed in 0..20 {
            let m = random_scm(&g, &spec, seed).unwrap();
            assert_eq!(m.induced_graph(), g, "seed {seed}");
            let d = m.distribution(&BTreeMap::new()).unwrap();
            let total: BigRational = d.rows().map(|(_, p)| p.clone()).sum();
            assert!(total.is_one());
        }
    }

    #[test]
    fn random_scm_is_deterministic() {
        let g = Admg::from_edges(&["A", "B"], &[("A", "B")], &[]).unwrap();
        let spec = DomainSpec::binary(["A", "B"]);
        let m1 = random_scm(&g, &spec, 7).unwrap();
        let m2 = random_scm(&g, &spec, 7).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn lifting_preserves_distributions_bit_exactly() {
        let g_small = Admg::from_edges(&["A", "B", "C"], &[("A", "B")], &[]).unwrap();
        let g_big = Admg::from_edges(
            &["A", "B", "C"],
            &[("A", "B"), ("C", "B"), ("A", "C")],
            &[("B", "C")],
        )
        .unwrap();
        let spec = DomainSpec::binary(["A", "B", "C"]);
        let m = random_scm(&g_small, &spec, 11).unwrap();
        let lifted = lift_to(&m, &g_big).unwrap();
        assert_eq!(lifted.induced_graph(), g_big);
        let obs_a = m.distribution(&BTreeMap::new()).unwrap();
        let obs_b = lifted.distribution(&BTreeMap::new()).unwrap();
        assert!(obs_a.same_table(&obs_b));
        for do_b in [bind(&[("A", "1")]), bind(&[("B", "0"), ("C", "1")])] {
            let ia = m.distribution(&do_b).unwrap();
            let ib = lifted.distribution(&do_b).unwrap();
            assert!(ia.same_table(&ib));
        }
    }
}
