//! Dense linear algebra: storage, factorizations, symmetric eigensolver and
//! the small set of derived operations everything else is built on.

pub mod eig;
pub mod factor;
pub mod matrix;
pub mod ops;
pub mod vector;

pub use eig::{sym_eig, sym_eigenvalues, SymEig};
pub use factor::{cholesky_solve, Cholesky, Lu};
pub use matrix::{DenseMatrix, DenseVector};
pub use ops::{
    constrained_min, default_rank_tol, kkt_solve, null_basis, pseudoinverse, rank, sym_inv_sqrt,
    sym_sqrt, ConstrainedMinimizer,
};
