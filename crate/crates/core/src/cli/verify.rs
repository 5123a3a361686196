use rayon::prelude::*;

use crate::dense::Cholesky;
use crate::error::{Error, Result};
use crate::krylov::{mgw_preconditioner, mgw_spectrum, minres, KrylovOptions, MGW_VALUES};
use crate::report::{fmt_f64, CsvTable};
use crate::saddle::random::{random_semispd_system, random_spd_system, trial_seed};
use crate::saddle::{projected_schur, projected_schur_with, SaddleSystem, DEFAULT_RANK_TOL};
use crate::spectra::{
    bounds_cor_schur, canonical_right_inverse, eigs_projected_schur, eigs_right_inverse_preconditioner,
    eigs_schur, eigs_schur_preconditioned, projected_preconditioned_routes,
    projected_right_inverse_preconditioner, SpectralReport, FLOOR_TOL, ROUTE_AGREEMENT_TOL,
};

use super::{finish, CheckRow, Common};

/// Relative slack on the two-sided Schur complement bounds.
pub const SANDWICH_SLACK: f64 = 1e-10;
/// Relative agreement of projected Schur complements built from different pseudoinverses.
pub const PSEUDOINVERSE_TOL: f64 = 1e-9;
/// Shifts `c` in the pseudoinverse `(A + c N N^t)^-1`.
pub const PSEUDOINVERSE_SHIFTS: [f64; 2] = [1.0, 10.0];
/// Relative residual MINRES must reach with the block diagonal preconditioner.
pub const MGW_MINRES_TOL: f64 = 1e-10;
/// Iteration budget for reaching [`MGW_MINRES_TOL`].
pub const MGW_MINRES_ITERS: usize = 5;

struct Trial {
    reports: Vec<(SpectralReport, u64, usize, usize)>,
    checks: Vec<CheckRow>,
}

fn agreement(tag: &str, ctx: &str, d: &SpectralReport, v: &SpectralReport) -> CheckRow {
    let gap = d.relative_gap(v);
    CheckRow::new(format!("{tag} routes agree"), ctx, gap, gap <= ROUTE_AGREEMENT_TOL)
}

fn floor(tag: &str, ctx: &str, r: &SpectralReport) -> CheckRow {
    CheckRow::new(
        format!("{tag} lambda_min >= 1"),
        ctx,
        r.lambda_min,
        r.lambda_min >= 1.0 - FLOOR_TOL,
    )
}

fn spd_trial(sys: &SaddleSystem, seed: u64, out: &mut Trial) -> Result<()> {
    let ctx = format!("SPD seed={seed}");
    let (n, m) = (sys.n(), sys.m());
    let (d, v) = eigs_schur(sys)?;
    out.checks.push(agreement("S", &ctx, &d, &v));
    let (lo, hi) = bounds_cor_schur(sys)?;
    let inside = lo <= d.lambda_min * (1.0 + SANDWICH_SLACK) && d.lambda_max <= hi * (1.0 + SANDWICH_SLACK);
    out.checks.push(CheckRow::new("S inside Schur bounds", &ctx, d.lambda_min / lo, inside));
    out.reports.extend([(d, seed, n, m), (v, seed, n, m)]);

    let bbar = canonical_right_inverse(sys.b())?;
    let l = bbar.matmul(sys.a()).matmul_t(&bbar).symmetrize();
    let (d, v) = eigs_schur_preconditioned(sys, &l)?;
    out.checks.push(agreement("LS", &ctx, &d, &v));
    out.reports.extend([(d, seed, n, m), (v, seed, n, m)]);
    match eigs_right_inverse_preconditioner(sys, &bbar) {
        Ok(r) => out.checks.push(floor("LS", &ctx, &r)),
        Err(e) => out.checks.push(CheckRow::error("LS lambda_min >= 1", &ctx, &e)),
    }
    mgw_checks(sys, &ctx, out);
    Ok(())
}

fn mgw_checks(sys: &SaddleSystem, ctx: &str, out: &mut Trial) {
    match mgw_spectrum(sys) {
        Ok(ev) => {
            let worst = ev
                .iter()
                .map(|l| MGW_VALUES.iter().map(|v| (l - v).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            out.checks.push(CheckRow::new("block preconditioned eigenvalues", ctx, worst, true));
        }
        Err(e) => out.checks.push(CheckRow::error("block preconditioned eigenvalues", ctx, &e)),
    }
    let pre = match mgw_preconditioner(sys) {
        Ok(p) => p,
        Err(e) => return out.checks.push(CheckRow::error("block preconditioned MINRES", ctx, &e)),
    };
    let k = sys.block_operator();
    let op = |x: &[f64]| k.matvec(x);
    let rhs: Vec<f64> = sys.f().iter().chain(sys.g()).copied().collect();
    let opts = KrylovOptions {
        tol: MGW_MINRES_TOL,
        max_iter: MGW_MINRES_ITERS,
        precond: Some(&pre),
        ..Default::default()
    };
    let (_, trace) = minres(&op, &rhs, &opts);
    out.checks.push(CheckRow::new(
        "block preconditioned MINRES iterations",
        ctx,
        trace.iterations as f64,
        trace.converged,
    ));
}

fn semispd_trial(sys: &SaddleSystem, seed: u64, out: &mut Trial) -> Result<()> {
    let ctx = format!("SemiSPD seed={seed}");
    let (n, m) = (sys.n(), sys.m());
    let (d, v) = eigs_projected_schur(sys)?;
    out.checks.push(agreement("S0", &ctx, &d, &v));
    out.reports.extend([(d, seed, n, m), (v, seed, n, m)]);

    let red = projected_schur(sys, DEFAULT_RANK_TOL)?;
    let bbar = canonical_right_inverse(sys.b())?;
    let l = projected_right_inverse_preconditioner(sys, &red, &bbar)?;
    match projected_preconditioned_routes(sys, &l, Some(&bbar)) {
        Ok((d, v)) => {
            out.checks.push(agreement("LS0", &ctx, &d, &v));
            out.checks.push(floor("LS0", &ctx, &d));
            out.reports.extend([(d, seed, n, m), (v, seed, n, m)]);
        }
        Err(e) => out.checks.push(CheckRow::error("LS0 lambda_min >= 1", &ctx, &e)),
    }

    let nb = &red.null_basis;
    for c in PSEUDOINVERSE_SHIFTS {
        let shifted = sys.a().add(&nb.matmul_t(nb).scale(c)).symmetrize();
        let inv = Cholesky::new(&shifted)?.inverse();
        let alt = projected_schur_with(sys, nb.clone(), inv)?;
        let defect = alt.s.sub(&red.s).frobenius_norm() / red.s.frobenius_norm();
        out.checks.push(CheckRow::new(
            format!("S0 independent of pseudoinverse (c={c})"),
            &ctx,
            defect,
            defect <= PSEUDOINVERSE_TOL,
        ));
    }
    Ok(())
}

fn trial(seed: u64, t: u64) -> Trial {
    let mut out = Trial {
        reports: Vec::new(),
        checks: Vec::new(),
    };
    let spd_seed = trial_seed(seed, 2 * t);
    let semi_seed = trial_seed(seed, 2 * t + 1);
    let spd = random_spd_system(spd_seed).and_then(|s| spd_trial(&s, spd_seed, &mut out));
    if let Err(e) = spd {
        out.checks.push(CheckRow::error("SPD trial", format!("SPD seed={spd_seed}"), &e));
    }
    let semi = random_semispd_system(semi_seed).and_then(|s| semispd_trial(&s, semi_seed, &mut out));
    if let Err(e) = semi {
        out.checks.push(CheckRow::error("SemiSPD trial", format!("SemiSPD seed={semi_seed}"), &e));
    }
    out
}

pub(super) fn run(trials: u64, common: &Common) -> Result<bool> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let results: Vec<Trial> = (0..trials).into_par_iter().map(|t| trial(common.seed, t)).collect();

    let mut table = CsvTable::new(&["operator_tag", "route", "lambda_min", "lambda_max", "kappa", "seed", "n", "m"]);
    table.meta("seed", common.seed).meta("trials", trials);
    let mut checks = Vec::new();
    for r in results {
        for (rep, seed, n, m) in r.reports {
            table.push(vec![
                rep.operator_tag.clone(),
                rep.route.to_string(),
                fmt_f64(rep.lambda_min),
                fmt_f64(rep.lambda_max),
                fmt_f64(rep.kappa),
                seed.to_string(),
                n.to_string(),
                m.to_string(),
            ]);
        }
        checks.extend(r.checks);
    }
    table.write(&common.out.join("verify.csv"))?;
    println!("verify: {} spectral reports -> {}", table.rows.len(), common.out.join("verify.csv").display());
    finish(&common.out, "verify_summary.csv", &checks)
}
