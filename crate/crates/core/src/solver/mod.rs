//! Small dense interior-point solver for log-det problems with LMI
//! constraints.
//!
//! Problems maximise a concave objective made of linear terms, logs of
//! affine scalars and log-determinants of affine Hermitian matrices,
//! subject to affine LMIs and linear (in)equalities. Complex blocks are
//! embedded as real symmetric blocks of twice the size; equalities are
//! eliminated by a null-space reparameterisation before the barrier
//! iterations start.

mod barrier;
mod compiled;
mod expr;
mod layout;
mod problem;

pub use barrier::{barrier_gradient, barrier_value, phase_one_point, solve};
pub use expr::{Field, MatrixExpr, ScalarExpr};
pub use layout::{hermitian_basis, hermitian_from_params, hermitian_to_params, Var, VarEntry, VarKind, VariableLayout};
pub use problem::{LmiProblem, Objective, Relation, SolveOptions, SolveResult, SolveStatus};

#[cfg(test)]
mod tests;
