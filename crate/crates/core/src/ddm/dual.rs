use std::fmt;
use std::str::FromStr;

use crate::dense::{sym_eigenvalues, Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::saddle::{projected_schur, schur, validate, DualReduction, SaddleSystem, SystemKind, DEFAULT_RANK_TOL};
use crate::spectra::{
    canonical_right_inverse, eigs_projected_schur_preconditioned, eigs_right_inverse_preconditioner,
    projected_right_inverse_preconditioner, SpectralReport,
};

use super::Decomposition;

/// Smallest accepted `lambda_min(B B^t) / lambda_max(B B^t)`.
pub const JUMP_RANK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Feti,
    FetiDp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Feti => "FETI",
            Method::FetiDp => "FETI-DP",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "feti" => Ok(Method::Feti),
            "fetidp" | "feti-dp" => Ok(Method::FetiDp),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

/// Column numbering of the primal interface unknowns.
///
/// FETI: every subdomain keeps its own copy of each interface node, stacked
/// in subdomain order. FETI-DP: same, except that cross points are merged
/// into shared primal unknowns appended at the end.
fn column_map(dec: &Decomposition, method: Method) -> (Vec<Vec<usize>>, usize) {
    let mut next = 0;
    let mut maps = Vec::with_capacity(dec.subdomains.len());
    let primal = |v: usize| method == Method::FetiDp && dec.corners.contains(&v);
    for s in &dec.subdomains {
        let map: Vec<usize> = s
            .interface
            .iter()
            .map(|&v| {
                if primal(v) {
                    usize::MAX
                } else {
                    next += 1;
                    next - 1
                }
            })
            .collect();
        maps.push(map);
    }
    if method == Method::FetiDp {
        for (s, map) in dec.subdomains.iter().zip(maps.iter_mut()) {
            for (k, &v) in s.interface.iter().enumerate() {
                if let Some(c) = dec.corners.iter().position(|&x| x == v) {
                    map[k] = next + c;
                }
            }
        }
        next += dec.corners.len();
    }
    (maps, next)
}

fn column_of(dec: &Decomposition, maps: &[Vec<usize>], sub: usize, node: usize) -> usize {
    let k = dec.subdomains[sub].interface.binary_search(&node).expect("node on subdomain interface");
    maps[sub][k]
}

/// Jump matrix `B` and its scaled right inverse `B_D` with `B B_D^t = I`.
///
/// FETI: at each interface node the sharing subdomains `s_0 < s_1 < ...` are
/// linked in a chain, one row `+1` at `s_k`, `-1` at `s_k+1` per link. This
/// is a spanning tree, so the rows are independent; `B_D = (B B^t)^-1 B`.
/// FETI-DP: rows only at nodes shared by exactly two subdomains, so
/// `B B^t = 2I` and `B_D = B / 2`.
pub fn build_jump_operators(dec: &Decomposition, method: Method) -> Result<(DenseMatrix, DenseMatrix)> {
    let (maps, cols) = column_map(dec, method);
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for (&node, owners) in &dec.interface_nodes {
        if method == Method::FetiDp && dec.corners.contains(&node) {
            continue;
        }
        for pair in owners.windows(2) {
            rows.push((
                column_of(dec, &maps, pair[0], node),
                column_of(dec, &maps, pair[1], node),
            ));
        }
    }
    let mut b = DenseMatrix::zeros(rows.len(), cols);
    for (r, &(plus, minus)) in rows.iter().enumerate() {
        b[(r, plus)] = 1.0;
        b[(r, minus)] = -1.0;
    }
    let bbt = b.matmul_t(&b);
    let ev = sym_eigenvalues(&bbt)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= JUMP_RANK_TOL * hi {
        let rank = ev.iter().filter(|&&x| x > JUMP_RANK_TOL * hi).count();
        return Err(Error::RankDeficient { rank, rows: b.rows() });
    }
    let b_d = match method {
        Method::Feti => canonical_right_inverse(&b)?,
        Method::FetiDp => b.scale(0.5),
    };
    Ok((b, b_d))
}

/// Subassembled `S~ = sum_j R_j^t S_j R_j` and load in the FETI-DP numbering.
fn subassemble(dec: &Decomposition, maps: &[Vec<usize>], cols: usize) -> (DenseMatrix, Vec<f64>) {
    let mut st = DenseMatrix::zeros(cols, cols);
    let mut f = vec![0.0; cols];
    for (s, map) in dec.subdomains.iter().zip(maps) {
        for (k, &ck) in map.iter().enumerate() {
            f[ck] += s.load[k];
            for (l, &cl) in map.iter().enumerate() {
                st[(ck, cl)] += s.schur[(k, l)];
            }
        }
    }
    (st.symmetrize(), f)
}

/// A dual interface problem with its primal saddle point system
/// `[[S, B^t], [B, 0]] (u, lambda) = (f, 0)`.
#[derive(Clone, Debug)]
pub struct DualProblem {
    pub method: Method,
    pub sys: SaddleSystem,
    pub reduction: DualReduction,
    pub b_d: DenseMatrix,
}

impl DualProblem {
    /// `F0` (FETI, projected when subdomains float) or `F` (FETI-DP).
    pub fn operator(&self) -> &DenseMatrix {
        &self.reduction.s
    }

    pub fn spectrum(&self) -> Result<SpectralReport> {
        let tag = match self.method {
            Method::Feti if self.sys.kind() == SystemKind::SemiSpd => "F0",
            _ => "F",
        };
        SpectralReport::direct(tag, self.operator())
    }

    /// `P B_D S (P B_D)^t` in the coordinates of [`DualProblem::operator`].
    pub fn preconditioner(&self) -> Result<DenseMatrix> {
        match self.sys.kind() {
            SystemKind::Spd => Ok(self.b_d.matmul(self.sys.a()).matmul_t(&self.b_d).symmetrize()),
            SystemKind::SemiSpd => projected_right_inverse_preconditioner(&self.sys, &self.reduction, &self.b_d),
        }
    }

    /// Spectrum of the preconditioned operator; verifies `lambda_min >= 1`.
    pub fn preconditioned_spectrum(&self) -> Result<SpectralReport> {
        let mut rep = match self.sys.kind() {
            SystemKind::Spd => eigs_right_inverse_preconditioner(&self.sys, &self.b_d)?,
            SystemKind::SemiSpd => {
                eigs_projected_schur_preconditioned(&self.sys, &self.preconditioner()?, Some(&self.b_d))?
            }
        };
        rep.operator_tag = format!("L{}", self.spectrum()?.operator_tag);
        Ok(rep)
    }

    /// Interface solution of the saddle point system by dual Cholesky and
    /// back-substitution.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let dual = self.reduction.solve_dense()?;
        Ok(crate::saddle::back_substitute(&self.sys, &self.reduction, &dual)?.u)
    }
}

/// FETI: block-diagonal `S`, chained jumps, and the projected reduction
/// when subdomains float.
pub fn feti_operator(dec: &Decomposition) -> Result<DualProblem> {
    let (b, b_d) = build_jump_operators(dec, Method::Feti)?;
    let m = b.rows();
    let sys = validate(dec.block_schur(), b, dec.stacked_load(), vec![0.0; m])?;
    let reduction = match sys.kind() {
        SystemKind::Spd => schur(&sys)?,
        SystemKind::SemiSpd => projected_schur(&sys, DEFAULT_RANK_TOL)?,
    };
    let floating = dec.floating_count();
    if reduction.null_basis.cols() != floating {
        return Err(Error::Verification(format!(
            "block Schur complement has nullity {}, expected {floating}",
            reduction.null_basis.cols()
        )));
    }
    Ok(DualProblem {
        method: Method::Feti,
        sys,
        reduction,
        b_d,
    })
}

/// `L_FETI = P B_D S (P B_D)^t`.
pub fn feti_preconditioner(problem: &DualProblem) -> Result<DenseMatrix> {
    problem.preconditioner()
}

/// FETI-DP: `S~` subassembled at cross points, `F = B S~^-1 B^t`.
pub fn fetidp_operator(dec: &Decomposition) -> Result<DualProblem> {
    let (maps, cols) = column_map(dec, Method::FetiDp);
    let (st, f) = subassemble(dec, &maps, cols);
    Cholesky::new(&st)?;
    let (b, b_d) = build_jump_operators(dec, Method::FetiDp)?;
    let m = b.rows();
    let sys = validate(st, b, f, vec![0.0; m])?;
    let reduction = schur(&sys)?;
    Ok(DualProblem {
        method: Method::FetiDp,
        sys,
        reduction,
        b_d,
    })
}

/// `L_DP = B~ S~ B~^t` with `B~ = B / 2`.
pub fn fetidp_preconditioner(problem: &DualProblem) -> Result<DenseMatrix> {
    problem.preconditioner()
}

/// Global nodal values from a FETI-DP interface solution.
pub fn fetidp_stacked(dec: &Decomposition, u: &[f64]) -> Vec<f64> {
    let (maps, _) = column_map(dec, Method::FetiDp);
    maps.iter().flat_map(|map| map.iter().map(|&c| u[c])).collect()
}

/// Largest nodal deviation of the decomposed solution from the undecomposed
/// P1 solve, relative to the largest nodal value. `source` must be the one
/// the decomposition was built with.
pub fn solution_error(
    dec: &Decomposition,
    problem: &DualProblem,
    source: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let global = super::global_poisson_solve(dec, source)?;
    let u = problem.solve()?;
    let stacked = match problem.method {
        Method::Feti => u,
        Method::FetiDp => fetidp_stacked(dec, &u),
    };
    let local = dec.assemble_solution(&stacked);
    let scale = global.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let err = local.iter().zip(&global).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    Ok(err / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddm::{build_decomposition, global_poisson_solve};

    #[test]
    fn fetidp_jumps_are_orthogonal() {
        for (m, n) in [(2, 2), (3, 3), (4, 2)] {
            let d = build_decomposition(m, n).unwrap();
            let (b, b_d) = build_jump_operators(&d, Method::FetiDp).unwrap();
            assert_eq!(b.matmul_t(&b), DenseMatrix::identity(b.rows()).scale(2.0));
            assert_eq!(b.matmul_t(&b_d), DenseMatrix::identity(b.rows()));
        }
    }

    #[test]
    fn feti_jumps_have_bounded_gram_spectrum() {
        for m in [2, 3, 4] {
            let d = build_decomposition(m, 3).unwrap();
            let (b, b_d) = build_jump_operators(&d, Method::Feti).unwrap();
            for r in 0..b.rows() {
                let row = b.row(r);
                assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
                assert_eq!(row.iter().filter(|&&x| x == -1.0).count(), 1);
                assert_eq!(row.iter().filter(|&&x| x != 0.0).count(), 2);
            }
            let ev = sym_eigenvalues(&b.matmul_t(&b)).unwrap();
            assert!(ev[0] >= 0.5 && ev[ev.len() - 1] <= 4.0, "{ev:?}");
            let defect = b.matmul_t(&b_d).sub(&DenseMatrix::identity(b.rows())).max_abs();
            assert!(defect <= 1e-12);
        }
    }

    #[test]
    fn no_floating_subdomains_means_no_projection() {
        let d = build_decomposition(2, 3).unwrap();
        let p = feti_operator(&d).unwrap();
        assert_eq!(p.sys.kind(), SystemKind::Spd);
        let s = p.sys.a();
        let b = p.sys.b();
        let f = b.matmul(&Cholesky::new(s).unwrap().solve(&b.transpose()));
        assert!(f.sub(p.operator()).max_abs() <= 1e-12 * f.max_abs());
        let pre = p.spectrum().unwrap();
        let post = p.preconditioned_spectrum().unwrap();
        assert!(post.kappa <= pre.kappa);
    }

    #[test]
    fn projection_kills_rigid_modes() {
        let d = build_decomposition(3, 4).unwrap();
        let p = feti_operator(&d).unwrap();
        assert_eq!(p.sys.kind(), SystemKind::SemiSpd);
        let red = &p.reduction;
        let pbn = red.projector.matmul(&p.sys.b().matmul(&red.null_basis));
        assert!(pbn.max_abs() <= 1e-10);
        let rep = p.spectrum().unwrap();
        assert!(rep.lambda_min > 0.0 && rep.kappa.is_finite());
        let pre = p.preconditioned_spectrum().unwrap();
        assert!(pre.lambda_min >= 1.0 - 1e-8);
    }

    #[test]
    fn fetidp_smallest_case() {
        let d = build_decomposition(2, 2).unwrap();
        let p = fetidp_operator(&d).unwrap();
        Cholesky::new(p.sys.a()).unwrap();
        Cholesky::new(p.operator()).unwrap();
        let rep = p.preconditioned_spectrum().unwrap();
        assert!(rep.lambda_min >= 1.0 - 1e-8);
    }

    #[test]
    fn interface_solutions_match_global_solve() {
        for (m, n) in [(2, 3), (3, 4)] {
            let d = build_decomposition(m, n).unwrap();
            let global = global_poisson_solve(&d, |_, _| 1.0).unwrap();
            let scale = global.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
            let feti = d.assemble_solution(&feti_operator(&d).unwrap().solve().unwrap());
            let dp = fetidp_operator(&d).unwrap();
            let dp = d.assemble_solution(&fetidp_stacked(&d, &dp.solve().unwrap()));
            for u in [feti, dp] {
                let err = u.iter().zip(&global).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
                assert!(err <= 1e-7 * scale, "M={m}, n={n}: {err:e}");
            }
        }
    }

    #[test]
    fn nonconstant_source() {
        let src = |x: f64, y: f64| (3.0 * x).sin() + y * y;
        let d = crate::ddm::build_decomposition_with(3, 3, src).unwrap();
        for p in [feti_operator(&d).unwrap(), fetidp_operator(&d).unwrap()] {
            assert!(solution_error(&d, &p, src).unwrap() <= 1e-9);
        }
    }
}
