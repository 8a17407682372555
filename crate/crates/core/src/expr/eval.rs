//! Exact evaluation of do-free expressions against a joint table.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dist::Distribution;
use crate::error::{Error, Result};

use super::Expr;

/// One entry of the binder environment: binder name, the column it ranges
/// over, and the current value.
type EnvEntry = (String, String, String);

impl Expr {
    /// Evaluates the expression on `dist` with `binding` covering the free
    /// variables. Bound names resolve to their sum's range column, so
    /// canonically renamed expressions evaluate identically to the original.
    pub fn evaluate(
        &self,
        dist: &Distribution,
        binding: &BTreeMap<String, String>,
    ) -> Result<BigRational> {
        self.eval_inner(dist, binding, &mut Vec::new())
    }

    fn eval_inner(
        &self,
        dist: &Distribution,
        binding: &BTreeMap<String, String>,
        env: &mut Vec<EnvEntry>,
    ) -> Result<BigRational> {
        match self {
            Expr::Term {
                outcome,
                do_set,
                given,
            } => {
                if !do_set.is_empty() {
                    return Err(Error::Internal(
                        "cannot evaluate an interventional term against an observational table"
                            .into(),
                    ));
                }
                let resolve = |name: &String| -> Result<(String, String)> {
                    if let Some((_, col, val)) = env.iter().rev().find(|(n, _, _)| n == name) {
                        return Ok((col.clone(), val.clone()));
                    }
                    let val = binding
                        .get(name)
                        .ok_or_else(|| Error::MissingBinding(name.clone()))?;
                    Ok((name.clone(), val.clone()))
                };
                let mut given_map: BTreeMap<String, String> = BTreeMap::new();
                for name in given {
                    let (col, val) = resolve(name)?;
                    if let Some(prev) = given_map.get(&col) {
                        if prev != &val {
                            return Err(Error::ZeroProbability(format!(
                                "contradictory conditioning on `{col}`"
                            )));
                        }
                    }
                    given_map.insert(col, val);
                }
                let mut outcome_map: BTreeMap<String, String> = BTreeMap::new();
                for name in outcome {
                    let (col, val) = resolve(name)?;
                    if let Some(prev) = outcome_map.get(&col) {
                        if prev != &val {
                            // The outcome event is contradictory: probability zero.
                            return Ok(BigRational::zero());
                        }
                    }
                    outcome_map.insert(col, val);
                }
                dist.conditional(&outcome_map, &given_map)
            }
            Expr::Sum { var, range, body } => {
                let dom = dist.domain(range)?.to_vec();
                let mut acc = BigRational::zero();
                for value in dom {
                    env.push((var.clone(), range.clone(), value));
                    let v = body.eval_inner(dist, binding, env);
                    env.pop();
                    acc += v?;
                }
                Ok(acc)
            }
            Expr::Product(fs) => {
                let mut acc = BigRational::one();
                for f in fs {
                    acc *= f.eval_inner(dist, binding, env)?;
                }
                Ok(acc)
            }
            Expr::Quotient(n, d) => {
                let dv = d.eval_inner(dist, binding, env)?;
                if dv.is_zero() {
                    return Err(Error::ZeroProbability("quotient denominator".into()));
                }
                Ok(n.eval_inner(dist, binding, env)? / dv)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::parse_rational;
    use crate::graph::{node_set, NodeSet};

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    /// P(x,y) = 9/20 when y = x, 1/20 otherwise.
    fn xor_table() -> Distribution {
        let dom = vec!["0".to_string(), "1".to_string()];
        Distribution::new(
            vec![("X".into(), dom.clone()), ("Y".into(), dom)],
            vec![r("9/20"), r("1/20"), r("1/20"), r("9/20")],
        )
        .unwrap()
    }

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn marginal_of_y() {
        let e = Expr::term(node_set(["Y"]), NodeSet::new());
        assert_eq!(
            e.evaluate(&xor_table(), &bind(&[("Y", "1")])).unwrap(),
            r("1/2")
        );
    }

    #[test]
    fn conditional_y_given_x() {
        let e = Expr::term(node_set(["Y"]), node_set(["X"]));
        assert_eq!(
            e.evaluate(&xor_table(), &bind(&[("Y", "1"), ("X", "1")]))
                .unwrap(),
            r("9/10")
        );
    }

    #[test]
    fn adjustment_collapses_when_z_is_independent() {
        // Table over X,Y,Z with Z independent of (X,Y):
        // P(x,y,z) = xor_table(x,y) * 1/2.
        let dom = vec!["0".to_string(), "1".to_string()];
        let base = [r("9/20"), r("1/20"), r("1/20"), r("9/20")];
        let mut probs = Vec::new();
        for p in &base {
            for _ in 0..2 {
                probs.push(p / r("2"));
            }
        }
        let dist = Distribution::new(
            vec![
                ("X".into(), dom.clone()),
                ("Y".into(), dom.clone()),
                ("Z".into(), dom),
            ],
            probs,
        )
        .unwrap();
        let adjustment = Expr::sum(
            "Z",
            Expr::product(vec![
                Expr::term(node_set(["Y"]), node_set(["X", "Z"])),
                Expr::term(node_set(["Z"]), NodeSet::new()),
            ]),
        );
        let plain = Expr::term(node_set(["Y"]), node_set(["X"]));
        let b = bind(&[("Y", "1"), ("X", "0")]);
        assert_eq!(
            adjustment.evaluate(&dist, &b).unwrap(),
            plain.evaluate(&dist, &b).unwrap()
        );
    }

    #[test]
    fn canonicalized_expression_evaluates_identically() {
        let e = Expr::sum(
            "Z",
            Expr::product(vec![
                Expr::term(node_set(["Y"]), node_set(["X", "Z"])),
                Expr::term(node_set(["Z"]), NodeSet::new()),
            ]),
        );
        // Build a positive random-ish table over X,Y,Z.
        let dom = vec!["0".to_string(), "1".to_string()];
        let weights = [3u32, 5, 7, 11, 13, 17, 19, 23];
        let total: u32 = weights.iter().sum();
        let probs = weights
            .iter()
            .map(|&w| BigRational::new(w.into(), total.into()))
            .collect();
        let dist = Distribution::new(
            vec![
                ("X".into(), dom.clone()),
                ("Y".into(), dom.clone()),
                ("Z".into(), dom),
            ],
            probs,
        )
        .unwrap();
        let b = bind(&[("Y", "1"), ("X", "1")]);
        let canon = e.canonicalize();
        assert_ne!(format!("{e}"), format!("{canon}"));
        assert_eq!(e.evaluate(&dist, &b).unwrap(), canon.evaluate(&dist, &b).unwrap());
    }

    #[test]
    fn missing_binding_is_reported() {
        let e = Expr::term(node_set(["Y"]), node_set(["X"]));
        assert!(matches!(
            e.evaluate(&xor_table(), &bind(&[("Y", "1")])),
            Err(Error::MissingBinding(_))
        ));
    }
}
