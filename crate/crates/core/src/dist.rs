//! Finite domains and exact joint probability tables.
//!
//! All probability arithmetic is done with arbitrary-precision rationals so
//! that golden values reproduce exactly and estimand validation can assert
//! zero error.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Parses `a/b`, a plain integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidScm(format!("invalid rational `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let numer: BigInt = a.trim().parse().map_err(|_| bad())?;
        let denom: BigInt = b.trim().parse().map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(numer, denom))
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: BigInt = if int.is_empty() { BigInt::zero() } else { int.parse().map_err(|_| bad())? };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_num: BigInt = frac.parse().map_err(|_| bad())?;
        let sign = if s.starts_with('-') { -BigInt::one() } else { BigInt::one() };
        Ok(BigRational::from(int) + BigRational::new(sign * frac_num, scale))
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from(n))
    }
}

/// `1 / 10^exp`, for tolerance comparisons stated in decimal.
pub fn pow10_tolerance(exp: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u32).pow(exp))
}

/// Mapping from variable names to their finite value lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainSpec {
    domains: BTreeMap<String, Vec<String>>,
}

impl DomainSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// All listed variables binary over `{0, 1}`.
    pub fn binary<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut d = Self::new();
        for v in vars {
            d.insert(v.into(), vec!["0".into(), "1".into()]);
        }
        d
    }

    pub fn insert(&mut self, var: String, values: Vec<String>) {
        assert!(!values.is_empty(), "domains must be non-empty");
        self.domains.insert(var, values);
    }

    pub fn domain(&self, var: &str) -> Result<&[String]> {
        self.domains
            .get(var)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    pub fn contains(&self, var: &str) -> bool {
        self.domains.contains_key(var)
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.domains.keys()
    }

    /// Every assignment of the given variables, in row-major order over the
    /// listed domains (first variable slowest).
    pub fn bindings(&self, vars: &[String]) -> Result<Vec<BTreeMap<String, String>>> {
        let mut out = vec![BTreeMap::new()];
        for v in vars {
            let dom = self.domain(v)?;
            let mut next = Vec::with_capacity(out.len() * dom.len());
            for partial in &out {
                for val in dom {
                    let mut b = partial.clone();
                    b.insert(v.clone(), val.clone());
                    next.push(b);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

/// A full joint table over an ordered variable list, with exact rational
/// entries that sum to one.
#[derive(Debug, Clone)]
pub struct Distribution {
    vars: Vec<String>,
    index: BTreeMap<String, usize>,
    domains: Vec<Vec<String>>,
    probs: Vec<BigRational>,
}

impl Distribution {
    /// Validates non-negativity and exact unit total. `probs` is indexed in
    /// row-major order (last variable fastest).
    pub fn new(vars: Vec<(String, Vec<String>)>, probs: Vec<BigRational>) -> Result<Self> {
        let mut names = Vec::with_capacity(vars.len());
        let mut domains = Vec::with_capacity(vars.len());
        let mut index = BTreeMap::new();
        let mut cells = 1usize;
        for (i, (name, dom)) in vars.into_iter().enumerate() {
            if dom.is_empty() {
                return Err(Error::InvalidScm(format!("empty domain for `{name}`")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(name));
            }
            cells *= dom.len();
            names.push(name);
            domains.push(dom);
        }
        if probs.len() != cells {
            return Err(Error::InvalidScm(format!(
                "table has {} entries, expected {cells}",
                probs.len()
            )));
        }
        let mut total = BigRational::zero();
        for p in &probs {
            if p.is_negative() {
                return Err(Error::InvalidScm("negative probability entry".into()));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::InvalidScm(format!(
                "table sums to {total}, expected 1"
            )));
        }
        Ok(Self {
            vars: names,
            index,
            domains,
            probs,
        })
    }

    /// Strictly positive random table over the given variables, seeded;
    /// entries are integers over a common denominator, normalized exactly.
    pub fn random_positive<R: Rng>(
        vars: Vec<(String, Vec<String>)>,
        rng: &mut R,
    ) -> Result<Self> {
        let cells: usize = vars.iter().map(|(_, d)| d.len()).product();
        let weights: Vec<u64> = (0..cells).map(|_| rng.gen_range(1..=1000u64)).collect();
        let total: u64 = weights.iter().sum();
        let probs = weights
            .into_iter()
            .map(|w| BigRational::new(BigInt::from(w), BigInt::from(total)))
            .collect();
        Self::new(vars, probs)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domain(&self, var: &str) -> Result<&[String]> {
        let i = self
            .index
            .get(var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))?;
        Ok(&self.domains[*i])
    }

    pub fn domain_spec(&self) -> DomainSpec {
        let mut spec = DomainSpec::new();
        for (v, d) in self.vars.iter().zip(&self.domains) {
            spec.insert(v.clone(), d.clone());
        }
        spec
    }

    fn value_index(&self, var_pos: usize, value: &str) -> Result<usize> {
        self.domains[var_pos]
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| Error::OutOfDomainValue {
                var: self.vars[var_pos].clone(),
                value: value.to_string(),
            })
    }

    fn cell_count(&self) -> usize {
        self.probs.len()
    }

    fn decode(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.vars.len()];
        for pos in (0..self.vars.len()).rev() {
            let k = self.domains[pos].len();
            idx[pos] = cell % k;
            cell /= k;
        }
        idx
    }

    /// Probability mass of the event described by the (partial) assignment.
    /// Conflicting duplicate constraints give mass zero.
    pub fn mass(&self, constraints: &BTreeMap<String, String>) -> Result<BigRational> {
        let mut wanted: Vec<Option<usize>> = vec![None; self.vars.len()];
        for (var, value) in constraints {
            let pos = *self
                .index
                .get(var)
                .ok_or_else(|| Error::UnknownVariable(var.clone()))?;
            let vi = self.value_index(pos, value)?;
            match wanted[pos] {
                Some(prev) if prev != vi => return Ok(BigRational::zero()),
                _ => wanted[pos] = Some(vi),
            }
        }
        let mut total = BigRational::zero();
        for cell in 0..self.cell_count() {
            let idx = self.decode(cell);
            if wanted
                .iter()
                .enumerate()
                .all(|(pos, w)| w.map_or(true, |v| idx[pos] == v))
            {
                total += &self.probs[cell];
            }
        }
        Ok(total)
    }

    /// Exact conditional probability `P(outcome | given)`. Conditioning on a
    /// zero-probability event is an error rather than a convention.
    pub fn conditional(
        &self,
        outcome: &BTreeMap<String, String>,
        given: &BTreeMap<String, String>,
    ) -> Result<BigRational> {
        let denom = self.mass(given)?;
        if denom.is_zero() {
            return Err(Error::ZeroProbability(format!(
                "P({})",
                given
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(",")
            )));
        }
        let mut all = given.clone();
        for (k, v) in outcome {
            if let Some(prev) = all.get(k) {
                if prev != v {
                    return Ok(BigRational::zero());
                }
            }
            all.insert(k.clone(), v.clone());
        }
        Ok(self.mass(&all)? / denom)
    }

    /// Row-major iteration over full assignments with their probabilities.
    pub fn rows(&self) -> impl Iterator<Item = (BTreeMap<String, String>, &BigRational)> {
        (0..self.cell_count()).map(|cell| {
            let idx = self.decode(cell);
            let assignment = self
                .vars
                .iter()
                .zip(idx.iter())
                .map(|(v, &i)| (v.clone(), self.domains[self.index[v]][i].clone()))
                .collect();
            (assignment, &self.probs[cell])
        })
    }

    /// True when both tables describe the same joint distribution over the
    /// same variables and domains, regardless of variable order.
    pub fn same_table(&self, other: &Distribution) -> bool {
        if self.vars.len() != other.vars.len() {
            return false;
        }
        for (v, d) in self.vars.iter().zip(&self.domains) {
            match other.index.get(v) {
                Some(&pos) if &other.domains[pos] == d => {}
                _ => return false,
            }
        }
        self.rows()
            .all(|(assignment, p)| other.mass(&assignment).map_or(false, |q| q == *p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(r("9/20"), BigRational::new(BigInt::from(9), BigInt::from(20)));
        assert_eq!(r("0.45"), r("9/20"));
        assert_eq!(r("1"), BigRational::one());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    /// The two-variable table from the crossed XOR construction:
    /// P(x,y) = 9/20 when y = x, 1/20 otherwise.
    fn xor_table() -> Distribution {
        let dom = vec!["0".to_string(), "1".to_string()];
        Distribution::new(
            vec![("X".into(), dom.clone()), ("Y".into(), dom)],
            vec![r("9/20"), r("1/20"), r("1/20"), r("9/20")],
        )
        .unwrap()
    }

    #[test]
    fn mass_and_conditionals_are_exact() {
        let d = xor_table();
        let y1: BTreeMap<_, _> = [("Y".to_string(), "1".to_string())].into();
        let x1: BTreeMap<_, _> = [("X".to_string(), "1".to_string())].into();
        assert_eq!(d.mass(&y1).unwrap(), r("1/2"));
        assert_eq!(d.conditional(&y1, &x1).unwrap(), r("9/10"));
    }

    #[test]
    fn zero_probability_conditioning_is_an_error() {
        let dom = vec!["0".to_string(), "1".to_string()];
        let d = Distribution::new(
            vec![("X".into(), dom.clone()), ("Y".into(), dom)],
            vec![r("1/2"), r("0"), r("1/2"), r("0")],
        )
        .unwrap();
        let y1: BTreeMap<_, _> = [("Y".to_string(), "1".to_string())].into();
        let x0: BTreeMap<_, _> = [("X".to_string(), "0".to_string())].into();
        assert!(matches!(
            d.conditional(&x0, &y1),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn rejects_bad_tables() {
        let dom = vec!["0".to_string(), "1".to_string()];
        assert!(Distribution::new(
            vec![("X".into(), dom.clone())],
            vec![r("1/2"), r("1/3")],
        )
        .is_err());
        assert!(Distribution::new(
            vec![("X".into(), dom)],
            vec![r("3/2"), r("-1/2")],
        )
        .is_err());
    }

    #[test]
    fn same_table_ignores_variable_order() {
        let dom = vec!["0".to_string(), "1".to_string()];
        let a = xor_table();
        let b = Distribution::new(
            vec![("Y".into(), dom.clone()), ("X".into(), dom)],
            vec![r("9/20"), r("1/20"), r("1/20"), r("9/20")],
        )
        .unwrap();
        assert!(a.same_table(&b));
    }

    #[test]
    fn bindings_enumerate_in_order() {
        let spec = DomainSpec::binary(["A", "B"]);
        let bs = spec.bindings(&["A".into(), "B".into()]).unwrap();
        assert_eq!(bs.len(), 4);
        assert_eq!(bs[0]["A"], "0");
        assert_eq!(bs[0]["B"], "0");
        assert_eq!(bs[3]["A"], "1");
        assert_eq!(bs[3]["B"], "1");
    }
}
