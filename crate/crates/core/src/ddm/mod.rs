//! FETI and FETI-DP for the Poisson equation on a structured decomposition
//! of the unit square.

mod decomp;
mod dual;
mod sweep;

pub use decomp::{build_decomposition, build_decomposition_with, global_poisson_solve, Decomposition, Subdomain};
pub use dual::{
    build_jump_operators, feti_operator, feti_preconditioner, fetidp_operator, fetidp_preconditioner,
    fetidp_stacked, solution_error, DualProblem, Method,
};
pub use sweep::{
    ddm_sweep, spearman, sweep_point, DdmRow, DdmTable, SweepPoint, CG_TOL, LOG_GROWTH_SLACK,
    MIN_RANK_CORRELATION, NORMALIZED_SPREAD,
};
