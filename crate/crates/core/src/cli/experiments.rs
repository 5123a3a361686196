use rayon::prelude::*;

use crate::ddm::{build_decomposition, build_jump_operators, solution_error, sweep_point, DdmTable, Method};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::krylov::{alm_diagnostics, alm_iterate, alm_kappa_formula, AlmSolver};
use crate::mixedfem::{darcy_kappa_sweep, stokes_kappa_sweep};
use crate::mtx::write_matrix;
use crate::report::{fmt_f64, CsvTable};
use crate::saddle::random::{random_spd_system, trial_seed};
use crate::saddle::solve_direct;

use super::{finish, CheckRow, Common, DdmArgs};

/// Allowed gap between measured and predicted contraction factors.
pub const CONTRACTION_TOL: f64 = 1e-6;
/// Allowed relative gap between `kappa(S_eps)` and its closed form.
pub const KAPPA_FORMULA_TOL: f64 = 1e-6;
/// Relative slack when checking that `kappa(S_eps)` is nondecreasing in `eps`.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Decomposed and global solutions must agree to this relative accuracy.
pub const SOLUTION_TOL: f64 = 1e-7;
/// Iterations recorded in the per-epsilon trace files.
const TRACE_ITERATIONS: usize = 200;

struct AlmRow {
    seed: u64,
    n: usize,
    m: usize,
    eps: f64,
    lambda_min_s: f64,
    lambda_max_s: f64,
    lambda_min_seps: f64,
    lambda_max_seps: f64,
    kappa_seps: f64,
    kappa_formula: f64,
    contraction_formula: f64,
    contraction_measured: f64,
    identity_defect: f64,
}

fn alm_trial(seed: u64, eps: &[f64]) -> Result<Vec<AlmRow>> {
    let sys = random_spd_system(seed)?;
    eps.iter()
        .map(|&e| {
            let d = alm_diagnostics(&sys, e)?;
            let measured = AlmSolver::new(&sys, e)?.measured_contraction()?;
            Ok(AlmRow {
                seed,
                n: sys.n(),
                m: sys.m(),
                eps: e,
                lambda_min_s: d.lambda_min_s,
                lambda_max_s: d.lambda_max_s,
                lambda_min_seps: d.lambda_min_seps,
                lambda_max_seps: d.lambda_max_seps,
                kappa_seps: d.kappa_seps,
                kappa_formula: alm_kappa_formula(d.lambda_min_s, d.lambda_max_s, e),
                contraction_formula: e / (e + d.lambda_min_s),
                contraction_measured: measured,
                identity_defect: d.identity_defect,
            })
        })
        .collect()
}

pub(super) fn alm(eps: &[f64], trials: u64, common: &Common) -> Result<bool> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("epsilon grid must be positive and finite, got {eps:?}")));
    }
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(common.seed, t)).collect();
    let results: Vec<(u64, Result<Vec<AlmRow>>)> =
        seeds.par_iter().map(|&s| (s, alm_trial(s, eps))).collect();

    let mut table = CsvTable::new(&[
        "seed",
        "n",
        "m",
        "epsilon",
        "lambda_min_S",
        "lambda_max_S",
        "lambda_min_Seps",
        "lambda_max_Seps",
        "kappa_Seps",
        "kappa_formula",
        "contraction_formula",
        "contraction_measured",
        "identity_defect",
    ]);
    table.meta("seed", common.seed).meta("trials", trials);
    let mut checks = Vec::new();
    for (seed, res) in &results {
        let ctx = format!("seed={seed}");
        let rows = match res {
            Ok(rows) => rows,
            Err(e) => {
                checks.push(CheckRow::error("ALM diagnostics", &ctx, e));
                continue;
            }
        };
        for r in rows {
            table.push(vec![
                r.seed.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                fmt_f64(r.eps),
                fmt_f64(r.lambda_min_s),
                fmt_f64(r.lambda_max_s),
                fmt_f64(r.lambda_min_seps),
                fmt_f64(r.lambda_max_seps),
                fmt_f64(r.kappa_seps),
                fmt_f64(r.kappa_formula),
                fmt_f64(r.contraction_formula),
                fmt_f64(r.contraction_measured),
                fmt_f64(r.identity_defect),
            ]);
            let ctx = format!("seed={seed} eps={}", fmt_f64(r.eps));
            let gap = (r.contraction_measured - r.contraction_formula).abs();
            checks.push(CheckRow::new("measured contraction", &ctx, gap, gap <= CONTRACTION_TOL));
            let gap = (r.kappa_seps - r.kappa_formula).abs() / r.kappa_formula;
            checks.push(CheckRow::new("kappa(S_eps) closed form", &ctx, gap, gap <= KAPPA_FORMULA_TOL));
        }
        let mut by_eps: Vec<&AlmRow> = rows.iter().collect();
        by_eps.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        let worst = by_eps
            .windows(2)
            .map(|w| w[0].kappa_seps / w[1].kappa_seps - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if by_eps.len() >= 2 {
            checks.push(CheckRow::new("kappa(S_eps) nondecreasing in eps", &ctx, worst, worst <= MONOTONE_SLACK));
        }
    }
    table.write(&common.out.join("alm.csv"))?;

    // convergence histories for the first system
    let sys = random_spd_system(seeds[0])?;
    let p_star = solve_direct(&sys)?.p;
    for (i, &e) in eps.iter().enumerate() {
        let (_, trace) = alm_iterate(&sys, e, None, 1e-14, TRACE_ITERATIONS, Some(&p_star))?;
        let meta = [("seed", seeds[0].to_string()), ("epsilon", fmt_f64(e))];
        trace.write_csv(&common.out.join(format!("alm_trace_{i}.csv")), &meta)?;
    }
    println!("alm: {} rows -> {}", table.rows.len(), common.out.join("alm.csv").display());
    finish(&common.out, "alm_checks.csv", &checks)
}

pub(super) fn mixed(problem: &str, n: &[usize], common: &Common) -> Result<bool> {
    let table = match problem {
        "darcy" => darcy_kappa_sweep(n)?,
        _ => stokes_kappa_sweep(n)?,
    };
    let file = format!("{problem}.csv");
    table.to_table().write(&common.out.join(&file))?;
    println!("{problem}: {} rows -> {}", table.rows.len(), common.out.join(&file).display());
    if table.problem == "darcy" {
        println!("slope of log kappa vs log h: {}", fmt_f64(table.slope()));
    }
    let checks: Vec<CheckRow> = table
        .checks()
        .into_iter()
        .map(|c| CheckRow::new(c.name, problem, c.value, c.passed))
        .collect();
    finish(&common.out, &format!("{problem}_checks.csv"), &checks)
}

fn dump(dir: &std::path::Path, name: &str, m: &DenseMatrix) -> Result<()> {
    write_matrix(&dir.join(name), m)
}

pub(super) fn ddm(method: Method, args: &DdmArgs) -> Result<bool> {
    let (ms, ns) = (&args.subdomains, &args.n);
    if ms.is_empty() || ns.is_empty() || ms.iter().chain(ns).any(|&x| x < 2) {
        return Err(Error::Config("M and n lists must be nonempty with entries >= 2".into()));
    }
    let seed = args.common.seed;
    let out = &args.common.out;
    let pairs: Vec<(usize, usize)> = ms.iter().flat_map(|&m| ns.iter().map(move |&n| (m, n))).collect();
    let prefix = match method {
        Method::Feti => "feti",
        Method::FetiDp => "fetidp",
    };
    let points = pairs
        .par_iter()
        .map(|&(m, n)| {
            let p = sweep_point(method, args.precond, m, n, seed)?;
            if args.dump {
                let tag = format!("{prefix}_M{m}_n{n}");
                dump(out, &format!("{tag}_F.mtx"), p.problem.operator())?;
                if let Some(l) = &p.preconditioner {
                    dump(out, &format!("{tag}_L.mtx"), l)?;
                }
            }
            Ok(p.row)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = DdmTable {
        method,
        preconditioned: args.precond,
        rows: points,
    };
    let mut csv = table.to_table();
    csv.meta("seed", seed);
    let file = format!("{prefix}.csv");
    csv.write(&out.join(&file))?;
    println!("{method}: {} rows -> {}", table.rows.len(), out.join(&file).display());

    let mut checks: Vec<CheckRow> = table
        .checks()
        .into_iter()
        .map(|c| CheckRow::new(c.name, format!("{method} precond={}", args.precond), c.value, c.passed))
        .collect();
    let finest = *ns.iter().max().unwrap();
    for &m in ms {
        let ctx = format!("M={m} n={finest}");
        let dec = build_decomposition(m, finest)?;
        let problem = match method {
            Method::Feti => crate::ddm::feti_operator(&dec)?,
            Method::FetiDp => crate::ddm::fetidp_operator(&dec)?,
        };
        let err = solution_error(&dec, &problem, |_, _| 1.0)?;
        checks.push(CheckRow::new("matches global solve", &ctx, err, err <= SOLUTION_TOL));
        if method == Method::FetiDp {
            let (b, _) = build_jump_operators(&dec, method)?;
            let defect = b.matmul_t(&b).sub(&DenseMatrix::identity(b.rows()).scale(2.0)).max_abs();
            checks.push(CheckRow::new("B B^t = 2I", &ctx, defect, defect == 0.0));
        }
    }
    finish(out, &format!("{prefix}_checks.csv"), &checks)
}
