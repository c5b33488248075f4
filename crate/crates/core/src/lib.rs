//! lltk: a toolkit for hybrid and subexponential linear logic.
//!
//! The crate provides, bottom to top:
//!
//! - [`syntax`]: terms, worlds, formulas, parsing and printing;
//! - [`domain`]: the pluggable world monoid (temporal and probabilistic
//!   instances) with composition, reachability and equation solving;
//! - [`kernel`]: the trusted cut-free sequent kernel with explicit,
//!   checkable proof objects;
//! - [`prover`]: bounded focused proof search plus the naive reference
//!   search used for agreement testing;
//! - [`sell`]: a one-sided kernel and prover for linear logic with
//!   subexponentials, and the judgment encoding between the two logics;
//! - [`bio`]: a rule-based biological model language compiled into theories
//!   of either logic, answering reachability and invariant queries with
//!   machine-checkable proofs;
//! - [`selftest`]: the acceptance suites behind `lltk selftest`.

pub mod bio;
pub mod domain;
pub mod kernel;
pub mod prover;
pub mod selftest;
pub mod sell;
pub mod syntax;
