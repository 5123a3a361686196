use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::krylov::{cg, KrylovOptions};
use crate::mixedfem::Check;
use crate::report::{fmt_f64, CsvTable};
use crate::saddle::random::{gaussian_vec, rng, trial_seed};

use super::{build_decomposition, feti_operator, fetidp_operator, DualProblem, Method};

/// Relative residual reduction for the PCG iteration counts.
pub const CG_TOL: f64 = 1e-8;
/// Largest accepted max/min of a normalized condition number over a sweep.
pub const NORMALIZED_SPREAD: f64 = 4.0;
/// Slack on the `(1 + log(H/h))^2` growth of preconditioned condition numbers.
pub const LOG_GROWTH_SLACK: f64 = 1.5;
/// `lambda_min` of the preconditioned operators may not fall below `1 - FLOOR_SLACK`.
pub const FLOOR_SLACK: f64 = 1e-8;
/// Smallest accepted rank correlation between condition numbers and PCG iterations.
pub const MIN_RANK_CORRELATION: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct DdmRow {
    pub method: Method,
    pub preconditioned: bool,
    pub m: usize,
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub cg_iters: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct DdmTable {
    pub method: Method,
    pub preconditioned: bool,
    pub rows: Vec<DdmRow>,
}

/// Operator, optional preconditioner and spectrum for one sweep point.
pub struct SweepPoint {
    pub problem: DualProblem,
    pub preconditioner: Option<DenseMatrix>,
    pub row: DdmRow,
}

/// Spearman rank correlation, with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let k = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / k, ry.iter().sum::<f64>() / k);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        // constant columns are trivially monotone
        return 1.0;
    }
    cov / (vx * vy).sqrt()
}

fn max_over_min(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi / lo
}

fn log_factor(ratio: usize) -> f64 {
    1.0 + (ratio as f64).ln()
}

impl DdmTable {
    /// Growth-law, floor and iteration-count checks, per number of subdomains.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let mut ms: Vec<usize> = self.rows.iter().map(|r| r.m).collect();
        ms.dedup();
        for m in ms {
            let rows: Vec<&DdmRow> = self.rows.iter().filter(|r| r.m == m).collect();
            if self.preconditioned {
                let floor = rows.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
                out.push(Check {
                    name: "preconditioned lambda_min >= 1",
                    value: floor,
                    passed: floor >= 1.0 - FLOOR_SLACK,
                });
                if rows.len() >= 2 {
                    let (c, f) = (rows[0], rows[rows.len() - 1]);
                    let allowed = (log_factor(f.n) / log_factor(c.n)).powi(2) * LOG_GROWTH_SLACK;
                    let growth = f.kappa / c.kappa;
                    out.push(Check {
                        name: "preconditioned kappa growth over (1+log(H/h))^2 bound",
                        value: growth / allowed,
                        passed: growth <= allowed,
                    });
                }
            } else {
                let spread = match self.method {
                    Method::Feti => max_over_min(rows.iter().map(|r| r.kappa / r.n as f64)),
                    Method::FetiDp => {
                        max_over_min(rows.iter().map(|r| r.kappa / (r.n as f64 * log_factor(r.n))))
                    }
                };
                out.push(Check {
                    name: match self.method {
                        Method::Feti => "kappa/(H/h) spread",
                        Method::FetiDp => "kappa/((H/h)(1+log(H/h))) spread",
                    },
                    value: spread,
                    passed: spread <= NORMALIZED_SPREAD,
                });
                if self.method == Method::FetiDp {
                    let lo = rows.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
                    let ratio = lo / rows[0].lambda_min;
                    out.push(Check {
                        name: "lambda_min(F) bounded below",
                        value: ratio,
                        passed: ratio >= 0.5,
                    });
                }
            }
            if rows.len() >= 2 {
                let kappa: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
                let iters: Vec<f64> = rows.iter().map(|r| r.cg_iters as f64).collect();
                let rho = spearman(&kappa, &iters);
                out.push(Check {
                    name: "rank correlation of kappa and PCG iterations",
                    value: rho,
                    passed: rho >= MIN_RANK_CORRELATION,
                });
            }
        }
        out
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "method",
            "preconditioned",
            "M",
            "n",
            "H_over_h",
            "lambda_min",
            "lambda_max",
            "kappa",
            "cg_iters",
            "seed",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.method.to_string(),
                r.preconditioned.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.n.to_string(),
                fmt_f64(r.lambda_min),
                fmt_f64(r.lambda_max),
                fmt_f64(r.kappa),
                r.cg_iters.to_string(),
                r.seed.to_string(),
            ]);
        }
        t
    }
}

/// Assembles and analyses one `(M, n)` point.
pub fn sweep_point(method: Method, preconditioned: bool, m: usize, n: usize, seed: u64) -> Result<SweepPoint> {
    let dec = build_decomposition(m, n)?;
    let problem = match method {
        Method::Feti => feti_operator(&dec)?,
        Method::FetiDp => fetidp_operator(&dec)?,
    };
    let (rep, pre) = if preconditioned {
        (problem.preconditioned_spectrum()?, Some(problem.preconditioner()?))
    } else {
        (problem.spectrum()?, None)
    };
    let op_mat = problem.operator();
    let op = |x: &[f64]| op_mat.matvec(x);
    let pc = pre.as_ref().map(|l| move |x: &[f64]| l.matvec(x));
    let pc_ref = pc.as_ref().map(|p| p as &dyn Fn(&[f64]) -> Vec<f64>);
    let dim = op_mat.rows();
    let point_seed = trial_seed(seed, (m * 1_000_003 + n) as u64);
    let rhs = gaussian_vec(&mut rng(point_seed), dim);
    let opts = KrylovOptions {
        tol: CG_TOL,
        max_iter: 10 * dim + 100,
        precond: pc_ref,
        ..Default::default()
    };
    let (_, trace) = cg(&op, &rhs, &opts);
    trace.require_converged()?;
    let row = DdmRow {
        method,
        preconditioned,
        m,
        n,
        lambda_min: rep.lambda_min,
        lambda_max: rep.lambda_max,
        kappa: rep.kappa,
        cg_iters: trace.iterations,
        seed: point_seed,
    };
    Ok(SweepPoint {
        problem,
        preconditioner: pre,
        row,
    })
}

/// Condition numbers and PCG iteration counts over all `(M, n)` pairs.
pub fn ddm_sweep(
    method: Method,
    preconditioned: bool,
    m_list: &[usize],
    n_list: &[usize],
    seed: u64,
) -> Result<DdmTable> {
    if m_list.is_empty() || n_list.is_empty() {
        return Err(Error::Config("subdomain and mesh lists must be nonempty".into()));
    }
    if m_list.iter().chain(n_list).any(|&x| x < 2) {
        return Err(Error::Config("M and n must be at least 2".into()));
    }
    let pairs: Vec<(usize, usize)> = m_list.iter().flat_map(|&m| n_list.iter().map(move |&n| (m, n))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(m, n)| sweep_point(method, preconditioned, m, n, seed).map(|p| p.row))
        .collect::<Result<Vec<_>>>()?;
    Ok(DdmTable {
        method,
        preconditioned,
        rows,
    })
}
