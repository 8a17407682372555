//! Causal-query identifiability over collections of causal diagrams.
//!
//! The crate decides and certifies identifiability of causal queries
//! `P(y | do(x), z)` both in a single ADMG and across a collection of ADMGs
//! sharing one variable set, organized as a hierarchy of notions:
//!
//! * **ICB / ICF** — a single backdoor (frontdoor) witness valid in every
//!   graph of the collection;
//! * **ICD** — one do-calculus proof whose side conditions hold in every
//!   graph, found by template instantiation plus bounded search and
//!   replayable by an independent checker;
//! * **IG** — a single estimand valid in every SCM compatible with any graph
//!   of the collection, certified positively through per-graph
//!   identification or refuted constructively by a pair of discrete SCMs
//!   with identical observational tables and different query values.
//!
//! Everything probabilistic is exact: distributions are rational tables and
//! the discrete-SCM simulator enumerates exogenous assignments.

pub mod collection;
pub mod criteria;
pub mod dist;
pub mod docalc;
pub mod dsep;
mod error;
pub mod expr;
pub mod graph;
pub mod identify;
pub mod query;
pub mod random;
pub mod scm;

pub use error::{Error, Result};
