use rayon::prelude::*;

use crate::dense::{sym_eigenvalues, Cholesky};
use crate::error::{Error, Result};
use crate::report::{fmt_f64, CsvTable};
use crate::saddle::schur;
use crate::spectra::{Route, SpectralReport};

use super::{assemble_darcy, assemble_stokes, build_mesh, MixedDiscretization};

/// Accepted band for the fitted slope of `log κ(S)` against `log h` (Darcy).
pub const DARCY_SLOPE_BAND: (f64, f64) = (-2.3, -1.5);
/// Largest accepted `κ(S)` growth from coarsest to finest mesh (Stokes).
pub const STOKES_KAPPA_GROWTH: f64 = 1.5;
/// A normalized extreme eigenvalue may fall to this fraction of its coarsest value.
pub const LOWER_BOUND_FACTOR: f64 = 0.5;
/// A normalized extreme eigenvalue may rise to this multiple of its coarsest value.
pub const UPPER_BOUND_FACTOR: f64 = 2.0;
/// Largest accepted spread of `h^-2`-scaled mass matrix diagonals.
pub const MASS_SCALING_RATIO: f64 = 20.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub h: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// Range of the mass matrix diagonals divided by `h^2`.
    pub mass_range: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub problem: &'static str,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Least-squares slope of `log κ` against `log h`.
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h.ln(), r.kappa.ln())).collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// `(min, max)` over the sweep of `value(row)` divided by its coarsest-mesh value.
    fn relative_range(&self, value: impl Fn(&SweepRow) -> f64) -> (f64, f64) {
        let base = value(&self.rows[0]);
        self.rows
            .iter()
            .map(|r| value(r) / base)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    pub fn kappa_growth(&self) -> f64 {
        self.rows.last().unwrap().kappa / self.rows[0].kappa
    }

    /// Scaling checks for this sweep's problem.
    pub fn checks(&self) -> Vec<Check> {
        let (min_lo, _) = self.relative_range(|r| r.lambda_min / (r.h * r.h));
        let mass = mass_scaling_ratio(self);
        let mut out = vec![Check {
            name: "lambda_min/h^2 bounded below",
            value: min_lo,
            passed: min_lo >= LOWER_BOUND_FACTOR,
        }];
        if self.problem == "darcy" {
            let slope = self.slope();
            let (_, max_hi) = self.relative_range(|r| r.lambda_max);
            out.push(Check {
                name: "slope of log kappa vs log h",
                value: slope,
                passed: (DARCY_SLOPE_BAND.0..=DARCY_SLOPE_BAND.1).contains(&slope),
            });
            out.push(Check {
                name: "lambda_max bounded above",
                value: max_hi,
                passed: max_hi <= UPPER_BOUND_FACTOR,
            });
        } else {
            let (lo, hi) = self.relative_range(|r| r.lambda_max / (r.h * r.h));
            let growth = self.kappa_growth();
            out.push(Check {
                name: "kappa finest/coarsest",
                value: growth,
                passed: growth <= STOKES_KAPPA_GROWTH,
            });
            out.push(Check {
                name: "lambda_max/h^2 bounded above",
                value: hi,
                passed: hi <= UPPER_BOUND_FACTOR,
            });
            out.push(Check {
                name: "lambda_max/h^2 bounded below",
                value: lo,
                passed: lo >= LOWER_BOUND_FACTOR,
            });
        }
        out.push(Check {
            name: "mass matrix scaling spread",
            value: mass,
            passed: mass <= MASS_SCALING_RATIO,
        });
        out
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["n", "h", "lambda_min", "lambda_max", "kappa"]);
        t.meta("problem", self.problem);
        if self.rows.len() >= 2 {
            t.meta("slope", fmt_f64(self.slope()));
        }
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.lambda_min),
                fmt_f64(r.lambda_max),
                fmt_f64(r.kappa),
            ]);
        }
        t
    }
}

/// Largest over smallest `h^-2`-scaled mass matrix diagonal across the sweep.
pub fn mass_scaling_ratio(table: &SweepTable) -> f64 {
    let lo = table.rows.iter().map(|r| r.mass_range.0).fold(f64::INFINITY, f64::min);
    let hi = table.rows.iter().map(|r| r.mass_range.1).fold(f64::NEG_INFINITY, f64::max);
    hi / lo
}

fn schur_row(n: usize, disc: &MixedDiscretization) -> Result<SweepRow> {
    let red = schur(&disc.sys)?;
    let rep = SpectralReport::direct("S", &red.s)?;
    debug_assert_eq!(rep.route, Route::DirectEig);
    Ok(SweepRow {
        n,
        h: disc.h,
        lambda_min: rep.lambda_min,
        lambda_max: rep.lambda_max,
        kappa: rep.kappa,
        mass_range: disc.mass_rayleigh_range(),
    })
}

fn sweep(
    problem: &'static str,
    n_list: &[usize],
    assemble: impl Fn(usize) -> Result<MixedDiscretization> + Sync,
) -> Result<SweepTable> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] < 2 {
        return Err(Error::Config(format!(
            "mesh sizes must be at least two increasing values >= 2, got {n_list:?}"
        )));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| schur_row(n, &assemble(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { problem, rows })
}

/// Schur complement spectra of the Darcy discretization with `b = 1`.
pub fn darcy_kappa_sweep(n_list: &[usize]) -> Result<SweepTable> {
    sweep("darcy", n_list, |n| assemble_darcy(&build_mesh(n), |_, _| 1.0))
}

/// Schur complement spectra of the Stokes discretization with `f = (1, 0)`.
pub fn stokes_kappa_sweep(n_list: &[usize]) -> Result<SweepTable> {
    sweep("stokes", n_list, |n| assemble_stokes(&build_mesh(n), |_, _| [1.0, 0.0]))
}

/// `sqrt(λ_min(M_W^-1 S))`, the discrete inf-sup constant.
pub fn inf_sup_constant(disc: &MixedDiscretization) -> Result<f64> {
    let red = schur(&disc.sys)?;
    let l = Cholesky::new(&disc.m_w)?;
    let half = l.forward_solve(&red.s);
    let normalized = l.forward_solve(&half.transpose()).symmetrize();
    Ok(sym_eigenvalues(&normalized)?[0].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mesh_lists() {
        assert!(darcy_kappa_sweep(&[4]).is_err());
        assert!(darcy_kappa_sweep(&[4, 4]).is_err());
        assert!(stokes_kappa_sweep(&[8, 4]).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let rows = [2usize, 4, 8]
            .iter()
            .map(|&n| {
                let h = 1.0 / n as f64;
                SweepRow { n, h, lambda_min: h * h, lambda_max: 1.0, kappa: h.powi(-2), mass_range: (1.0, 1.0) }
            })
            .collect();
        let t = SweepTable { problem: "darcy", rows };
        assert!((t.slope() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_darcy_sweep_scales_like_h_minus_two() {
        let t = darcy_kappa_sweep(&[4, 8]).unwrap();
        let s = t.slope();
        assert!((-2.3..=-1.5).contains(&s), "slope {s}");
    }

    #[test]
    fn stokes_inf_sup_is_mesh_stable() {
        let b4 = inf_sup_constant(&assemble_stokes(&build_mesh(4), |_, _| [0.0, 0.0]).unwrap()).unwrap();
        let b8 = inf_sup_constant(&assemble_stokes(&build_mesh(8), |_, _| [0.0, 0.0]).unwrap()).unwrap();
        assert!(b4 > 0.0);
        assert!((b4 - b8).abs() <= 0.1 * b8, "beta(4) = {b4}, beta(8) = {b8}");
    }
}
