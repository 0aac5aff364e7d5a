//! Dense complex and Hermitian matrix primitives.
//!
//! Everything here is small-dimension dense linear algebra: Kronecker
//! products and vectorisation for the uncertainty quadratic forms, a
//! Jacobi eigensolver, Cholesky-based log-determinants, and the real
//! symmetric embedding that the conic solver works in.

mod complex;
mod hermitian;
mod real;

pub use complex::{kronecker, unvec, vec, ComplexMatrix, C64, I, ONE, ZERO};
pub use hermitian::{
    eig_hermitian, embed_real, fix_phase, logdet_psd, null_space, principal_eigenpair,
    ComplexCholesky, Eigen, HermitianMatrix, HERMITIAN_REJECT_TOL,
};
pub use real::{Cholesky, RealMatrix};
pub(crate) use real::dot;
