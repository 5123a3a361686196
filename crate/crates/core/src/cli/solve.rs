use std::path::Path;

use crate::dense::vector::norm2;
use crate::error::{Error, Result};
use crate::krylov::{alm_iterate, cg, mgw_preconditioner, minres, IterationTrace, KrylovOptions};
use crate::mtx::write_vector;
use crate::report::fmt_f64;
use crate::saddle::io::read_system;
use crate::saddle::{
    back_substitute, projected_schur, schur, solve_direct, SaddleSolution, SaddleSystem, SystemKind,
    DEFAULT_RANK_TOL,
};

use super::{Common, Strategy};

/// Solves `sys` with the chosen strategy. Iterative strategies return their trace.
pub fn solve_with(
    sys: &SaddleSystem,
    strategy: Strategy,
    tol: f64,
    max_iter: usize,
    eps: f64,
) -> Result<(SaddleSolution, Option<IterationTrace>)> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Config("tolerance and iteration limit must be positive".into()));
    }
    match strategy {
        Strategy::Direct => Ok((solve_direct(sys)?, None)),
        Strategy::SchurCg => {
            let red = match sys.kind() {
                SystemKind::Spd => schur(sys)?,
                SystemKind::SemiSpd => projected_schur(sys, DEFAULT_RANK_TOL)?,
            };
            let op = |x: &[f64]| red.s.matvec(x);
            let opts = KrylovOptions {
                tol,
                max_iter,
                ..Default::default()
            };
            let (dual, trace) = cg(&op, &red.d, &opts);
            trace.require_converged()?;
            Ok((back_substitute(sys, &red, &dual)?, Some(trace)))
        }
        Strategy::Alm => {
            let (sol, trace) = alm_iterate(sys, eps, None, tol, max_iter, None)?;
            trace.require_converged()?;
            Ok((sol, Some(trace)))
        }
        Strategy::MinresMgw => {
            let pre = mgw_preconditioner(sys)?;
            let k = sys.block_operator();
            let op = |x: &[f64]| k.matvec(x);
            let rhs: Vec<f64> = sys.f().iter().chain(sys.g()).copied().collect();
            let opts = KrylovOptions {
                tol,
                max_iter,
                precond: Some(&pre),
                ..Default::default()
            };
            let (x, trace) = minres(&op, &rhs, &opts);
            trace.require_converged()?;
            let (u, p) = x.split_at(sys.n());
            Ok((SaddleSolution::new(sys, u.to_vec(), p.to_vec()), Some(trace)))
        }
    }
}

pub(super) fn run(dir: &Path, strategy: Strategy, tol: f64, max_iter: usize, eps: f64, common: &Common) -> Result<bool> {
    let sys = read_system(dir)?;
    let (sol, trace) = solve_with(&sys, strategy, tol, max_iter, eps)?;
    let out = &common.out;
    write_vector(&out.join("u.mtx"), &sol.u)?;
    write_vector(&out.join("p.mtx"), &sol.p)?;
    if let Some(t) = &trace {
        let meta = [("strategy", format!("{strategy:?}")), ("tol", fmt_f64(tol))];
        t.write_csv(&out.join("trace.csv"), &meta)?;
    }
    println!(
        "{} system n={} m={}: |Au+B^tp-f|={} |Bu-g|={} |u|={} |p|={}{}",
        sys.kind(),
        sys.n(),
        sys.m(),
        fmt_f64(sol.residual_primal),
        fmt_f64(sol.residual_dual),
        fmt_f64(norm2(&sol.u)),
        fmt_f64(norm2(&sol.p)),
        trace.map(|t| format!(" iterations={}", t.iterations)).unwrap_or_default()
    );
    if !sol.is_accurate(&sys) {
        eprintln!("FAIL residuals exceed the accuracy threshold");
        return Ok(false);
    }
    Ok(true)
}
