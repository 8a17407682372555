//! Causal queries `P(y | do(x), z)` at the variable-set level, optionally
//! with value bindings.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graph::{Admg, NodeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub outcome: NodeSet,
    pub treatment: NodeSet,
    pub given: NodeSet,
    /// Fixed values for a subset of the query variables; empty means the
    /// query ranges over all value bindings.
    pub bindings: BTreeMap<String, String>,
}

impl Query {
    pub fn new(outcome: NodeSet, treatment: NodeSet, given: NodeSet) -> Result<Self> {
        Self::with_bindings(outcome, treatment, given, BTreeMap::new())
    }

    pub fn with_bindings(
        outcome: NodeSet,
        treatment: NodeSet,
        given: NodeSet,
        bindings: BTreeMap<String, String>,
    ) -> Result<Self> {
        Admg::check_disjoint(&[&outcome, &treatment, &given])?;
        if outcome.is_empty() {
            return Err(Error::UnsupportedSetSize(
                "query outcome set must be non-empty".into(),
            ));
        }
        for var in bindings.keys() {
            if !outcome.contains(var) && !treatment.contains(var) && !given.contains(var) {
                return Err(Error::UnknownVariable(format!(
                    "binding for `{var}` which is not a query variable"
                )));
            }
        }
        Ok(Query {
            outcome,
            treatment,
            given,
            bindings,
        })
    }

    /// Shorthand for `P(y | do(x))` over single variables.
    pub fn effect(outcome: &str, treatment: &str) -> Query {
        Query::new(
            [outcome.to_string()].into_iter().collect(),
            [treatment.to_string()].into_iter().collect(),
            NodeSet::new(),
        )
        .expect("two distinct names")
    }

    /// All variables mentioned by the query.
    pub fn vars(&self) -> NodeSet {
        self.outcome
            .iter()
            .chain(&self.treatment)
            .chain(&self.given)
            .cloned()
            .collect()
    }

    pub fn check_against(&self, g: &Admg) -> Result<()> {
        for v in self.vars() {
            if !g.has_node(&v) {
                return Err(Error::UnknownVariable(v));
            }
        }
        Ok(())
    }

    /// The query as an interventional expression term.
    pub fn to_expr(&self) -> Expr {
        Expr::do_term(
            self.outcome.clone(),
            self.treatment.clone(),
            self.given.clone(),
        )
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &NodeSet| -> String {
            s.iter()
                .map(|v| match self.bindings.get(v) {
                    Some(val) => format!("{v}={val}"),
                    None => v.clone(),
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "P({}", show(&self.outcome))?;
        if !self.treatment.is_empty() || !self.given.is_empty() {
            write!(f, " | ")?;
            if !self.treatment.is_empty() {
                write!(f, "do({})", show(&self.treatment))?;
                if !self.given.is_empty() {
                    write!(f, ", {}", show(&self.given))?;
                }
            } else {
                write!(f, "{}", show(&self.given))?;
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;

    #[test]
    fn rejects_overlap_and_foreign_bindings() {
        assert!(Query::new(node_set(["Y"]), node_set(["Y"]), NodeSet::new()).is_err());
        assert!(Query::with_bindings(
            node_set(["Y"]),
            node_set(["X"]),
            NodeSet::new(),
            [("Q".to_string(), "1".to_string())].into(),
        )
        .is_err());
    }

    #[test]
    fn displays_bindings() {
        let q = Query::with_bindings(
            node_set(["Y"]),
            node_set(["X"]),
            NodeSet::new(),
            [
                ("Y".to_string(), "1".to_string()),
                ("X".to_string(), "1".to_string()),
            ]
            .into(),
        )
        .unwrap();
        assert_eq!(q.to_string(), "P(Y=1 | do(X=1))");
    }
}
