//! Specification-based slicing of probabilistic programs.
//!
//! Programs are sequences of assignments, conditionals, probabilistic
//! choices and annotated loops over finitely many rational-valued
//! variables. Specifications are pairs of expectations. The crate computes
//! weakest pre-expectations, verification conditions, local
//! specifications of subprograms and least slices.

pub mod corpus;
pub mod expectation;
pub mod lang;
pub mod semantics;
pub mod slicegraph;
pub mod slicing;
pub mod vcgen;
