//! Total variation regularized least squares on tree graphs.
//!
//! A signal `f` on the vertices of a tree is fit to observations `Y` by
//! minimizing `||Y - f||_n^2 + 2 lambda ||D f||_1`, where `D` is the edge
//! incidence matrix and `||v||_n^2 = (1/n) sum v_i^2`. Rooting the tree at
//! vertex 1 makes the extended incidence matrix invertible with a 0/1 inverse
//! `X` (the path matrix), which turns the problem into an ordinary Lasso with
//! one unpenalized coefficient. This crate provides:
//!
//! - exact integer tree/incidence/path matrices ([`graph`]),
//! - the solver via coordinate descent on the centered Lasso ([`estimator`]),
//! - compatibility constants: exact by enumeration at desk scale, and the
//!   analytic lower bounds for path, branched and general tree decompositions
//!   ([`compatibility`]),
//! - closed-form local projection coefficients and the weight vectors they
//!   induce ([`projection`]),
//! - evaluation of the oracle inequality right-hand sides ([`oracle`]),
//! - the irrepresentable condition: numeric LHS and exact analytic
//!   characterizations on paths and around ramification points ([`irrep`]),
//! - seeded Monte Carlo machinery for coverage and pattern-recovery
//!   experiments ([`sim`]).

pub mod compatibility;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod irrep;
pub mod linalg;
pub mod oracle;
pub mod projection;
pub mod sim;

pub use error::{Error, Result};
