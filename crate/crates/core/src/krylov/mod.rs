//! Iterative solvers and the augmented Lagrangian method.
//!
//! Solvers see operators only through apply callbacks; diagnostics assemble
//! dense matrices where they need spectra.

mod alm;
mod cg;
mod mgw;
mod minres;
mod trace;

pub use alm::{
    alm_diagnostics, alm_iterate, alm_kappa_formula, richardson, uzawa_iterate, AlmDiagnostics,
    AlmSolver,
};
pub use cg::cg;
pub use mgw::{mgw_preconditioner, mgw_spectrum, MGW_VALUES};
pub use minres::minres;
pub use trace::IterationTrace;

/// Linear operator given by its action.
pub type Operator<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// Default relative residual tolerance for CG and MINRES.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy)]
pub struct KrylovOptions<'a> {
    pub tol: f64,
    pub max_iter: usize,
    /// SPD preconditioner applied to residuals.
    pub precond: Option<Operator<'a>>,
    pub x0: Option<&'a [f64]>,
    /// Reference solution; when present the trace records error norms.
    pub reference: Option<&'a [f64]>,
}

impl Default for KrylovOptions<'_> {
    fn default() -> Self {
        KrylovOptions {
            tol: DEFAULT_TOL,
            max_iter: 1000,
            precond: None,
            x0: None,
            reference: None,
        }
    }
}
