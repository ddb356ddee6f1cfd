//! Complementary pivoting for affine variational inequalities over
//! polyhedra, started from a ray at an implicit extreme point.
//!
//! The solver works directly on `C = {z : Az - b ∈ K, l ≤ z ≤ u}` instead of
//! a box reformulation, so the sparsity of `M` and `A` is preserved. The
//! crate also carries the two comparison routes (box reformulation and
//! lineality-space reduction), face counting, matrix-class probes, and
//! instance generators.

pub mod error;
pub mod sparse;
pub mod problem;
pub mod linalg;
pub mod simplex;
pub mod lp_start;
pub mod system;
pub mod ray_start;
pub mod pivot;
pub mod reform;
pub mod classes;
pub mod problems;

pub use error::{Error, Result};
pub use problem::{eval_F, kkt_residual, validate, AviProblem, ConeRowKind, KktResidual, Solution, Violation};
pub use sparse::{SparseMatrix, SparseVector};
pub use pivot::{lemke_solve, SolveOptions, SolveResult, SolveStatus};
