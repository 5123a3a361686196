//! Primal elimination to the dual problem and recovery of `(u, p)`.

use crate::dense::ops::kkt_solve;
use crate::dense::{sym_eig, vector, Cholesky, DenseMatrix};
use crate::error::{Error, Result};

use super::{SaddleSystem, SystemKind, CLASSIFY_TOL, RESIDUAL_TOL, SURJECTIVITY_TOL};

/// The reduced dual problem.
///
/// For SPD `A` this is `S p = d` with `S = B A^-1 B^t`, `P = I` and an empty
/// null basis. For semi-SPD `A` the operator is the projected Schur complement
/// expressed in the orthonormal basis `W0` of `W0 = range(P)`, and the
/// multiplier splits as `p = W0 p0 + B N eta`.
#[derive(Clone, Debug)]
pub struct DualReduction {
    /// `S` (SPD case) or the projected Schur complement in `W0` coordinates.
    pub s: DenseMatrix,
    /// `d` (SPD case) or `d0` in `W0` coordinates.
    pub d: Vec<f64>,
    /// Orthonormal basis of `N(A)`; zero columns in the SPD case.
    pub null_basis: DenseMatrix,
    /// Orthogonal projector onto `range(B N)^perp`.
    pub projector: DenseMatrix,
    /// Orthonormal basis of `range(P)`, `m x (m - k)`.
    pub w0_basis: DenseMatrix,
    pub eta: Vec<f64>,
    elim: Elimination,
}

#[derive(Clone, Debug)]
enum Elimination {
    Cholesky(Cholesky),
    SemiDefinite {
        a_pinv: DenseMatrix,
        bn: DenseMatrix,
        gram: Cholesky,
    },
}

impl DualReduction {
    pub fn kind(&self) -> SystemKind {
        match self.elim {
            Elimination::Cholesky(_) => SystemKind::Spd,
            Elimination::SemiDefinite { .. } => SystemKind::SemiSpd,
        }
    }

    /// Dual dimension after reduction (`m` or `m - k`).
    pub fn dim(&self) -> usize {
        self.s.rows()
    }

    /// Solves the reduced dual problem by Cholesky.
    pub fn solve_dense(&self) -> Result<Vec<f64>> {
        Ok(Cholesky::new(&self.s)?.solve_vec(&self.d))
    }

    /// `A^+` used by the semi-definite reduction.
    pub fn a_pinv(&self) -> Option<&DenseMatrix> {
        match &self.elim {
            Elimination::SemiDefinite { a_pinv, .. } => Some(a_pinv),
            Elimination::Cholesky(_) => None,
        }
    }

    /// `B N`, empty in the SPD case.
    pub fn bn(&self) -> Option<&DenseMatrix> {
        match &self.elim {
            Elimination::SemiDefinite { bn, .. } => Some(bn),
            Elimination::Cholesky(_) => None,
        }
    }

    /// Full multiplier `p` from a dual solution in reduced coordinates.
    pub fn full_multiplier(&self, dual: &[f64]) -> Vec<f64> {
        match &self.elim {
            Elimination::Cholesky(_) => dual.to_vec(),
            Elimination::SemiDefinite { bn, .. } => {
                vector::add(&self.w0_basis.matvec(dual), &bn.matvec(&self.eta))
            }
        }
    }
}

/// Solution pair with absolute residual norms of both block rows.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub residual_primal: f64,
    pub residual_dual: f64,
}

impl SaddleSolution {
    pub fn new(sys: &SaddleSystem, u: Vec<f64>, p: Vec<f64>) -> Self {
        let (residual_primal, residual_dual) = residuals(sys, &u, &p);
        SaddleSolution {
            u,
            p,
            residual_primal,
            residual_dual,
        }
    }

    /// Both residuals within `RESIDUAL_TOL * scale`.
    pub fn is_accurate(&self, sys: &SaddleSystem) -> bool {
        let bound = RESIDUAL_TOL * sys.scale();
        self.residual_primal <= bound && self.residual_dual <= bound
    }
}

/// `(|A u + B^t p - f|, |B u - g|)`.
pub fn residuals(sys: &SaddleSystem, u: &[f64], p: &[f64]) -> (f64, f64) {
    let mut r1 = sys.a().matvec(u);
    vector::axpy(1.0, &sys.b().t_matvec(p), &mut r1);
    vector::axpy(-1.0, sys.f(), &mut r1);
    let r2 = vector::sub(&sys.b().matvec(u), sys.g());
    (vector::norm2(&r1), vector::norm2(&r2))
}

/// Schur complement `S = B A^-1 B^t` and `d = B A^-1 f - g`.
pub fn schur(sys: &SaddleSystem) -> Result<DualReduction> {
    if sys.kind() != SystemKind::Spd {
        return Err(Error::WrongKind { expected: "SPD" });
    }
    let (n, m) = (sys.n(), sys.m());
    let b = sys.b();
    let chol = Cholesky::new(sys.a())?;
    let x = chol.solve(&b.transpose());
    let s = b.matmul(&x).symmetrize();
    let d = vector::sub(&b.matvec(&chol.solve_vec(sys.f())), sys.g());
    Ok(DualReduction {
        s,
        d,
        null_basis: DenseMatrix::zeros(n, 0),
        projector: DenseMatrix::identity(m),
        w0_basis: DenseMatrix::identity(m),
        eta: Vec::new(),
        elim: Elimination::Cholesky(chol),
    })
}

/// Projected Schur complement with the Moore-Penrose pseudoinverse of `A`.
///
/// Eigenvalues of `A` at or below `rank_tol * lambda_max(A)` span the null space.
pub fn projected_schur(sys: &SaddleSystem, rank_tol: f64) -> Result<DualReduction> {
    if sys.kind() != SystemKind::SemiSpd {
        return Err(Error::WrongKind { expected: "SemiSPD" });
    }
    let eig = sym_eig(sys.a())?;
    let cut = rank_tol * eig.lambda_max().max(0.0);
    let null = eig.select(|x| x <= cut);
    let a_pinv = crate::dense::ops::pseudoinverse_from_eig(&eig, rank_tol)?;
    projected_schur_with(sys, null, a_pinv)
}

/// Projected Schur complement for a caller-supplied null basis and
/// pseudoinverse of `A` (any `A^+` with `A A^+ A = A` on `range(A)`).
pub fn projected_schur_with(
    sys: &SaddleSystem,
    null: DenseMatrix,
    a_pinv: DenseMatrix,
) -> Result<DualReduction> {
    let b = sys.b();
    let m = sys.m();
    if null.rows() != sys.n() || a_pinv.shape() != sys.a().shape() {
        return Err(Error::DimensionMismatch("null basis or pseudoinverse has wrong shape".into()));
    }
    let bn = b.matmul(&null);
    let gram_m = bn.t_matmul(&bn).symmetrize();
    let bbt_max = sym_eig(&b.matmul_t(b).symmetrize())?.lambda_max();
    let gram = if null.cols() == 0 {
        Cholesky::new(&gram_m)?
    } else {
        let gmin = sym_eig(&gram_m)?.lambda_min();
        if gmin <= SURJECTIVITY_TOL * bbt_max {
            return Err(Error::IllPosed);
        }
        Cholesky::new(&gram_m).map_err(|_| Error::IllPosed)?
    };

    // P = I - BN G^-1 (BN)^t
    let correction = bn.matmul(&gram.solve(&bn.transpose()));
    let projector = DenseMatrix::identity(m).sub(&correction).symmetrize();
    let w0_basis = sym_eig(&projector)?.select(|x| x > 0.5);

    let s_full = b.matmul(&a_pinv).matmul_t(b).symmetrize();
    let psp = projector.matmul(&s_full).matmul(&projector);
    let s0 = w0_basis.t_matmul(&psp.matmul(&w0_basis)).symmetrize();

    let eta = gram.solve_vec(&null.t_matvec(sys.f()));
    let d = vector::sub(&b.matvec(&a_pinv.matvec(sys.f())), sys.g());
    let s_bn_eta = s_full.matvec(&bn.matvec(&eta));
    let d0 = w0_basis.t_matvec(&projector.matvec(&vector::sub(&d, &s_bn_eta)));

    Ok(DualReduction {
        s: s0,
        d: d0,
        null_basis: null,
        projector,
        w0_basis,
        eta,
        elim: Elimination::SemiDefinite { a_pinv, bn, gram },
    })
}

/// Recovers `(u, p)` from a dual solution.
///
/// SPD: `u = A^-1 (f - B^t p)`. Semi-SPD: `p = W0 p0 + B N eta`,
/// `w = A^+ (f - B^t p)` and `u = w + N xi` with `xi` the least-squares
/// solution of `B N xi = g - B w`.
pub fn back_substitute(
    sys: &SaddleSystem,
    red: &DualReduction,
    dual: &[f64],
) -> Result<SaddleSolution> {
    if dual.len() != red.dim() {
        return Err(Error::DimensionMismatch(format!(
            "dual vector has {} entries, reduction has dimension {}",
            dual.len(),
            red.dim()
        )));
    }
    let p = red.full_multiplier(dual);
    let mut r = sys.f().to_vec();
    vector::axpy(-1.0, &sys.b().t_matvec(&p), &mut r);
    let u = match &red.elim {
        Elimination::Cholesky(chol) => chol.solve_vec(&r),
        Elimination::SemiDefinite { a_pinv, bn, gram } => {
            let violation = vector::norm2(&red.null_basis.t_matvec(&r));
            if violation > RESIDUAL_TOL * sys.scale() {
                return Err(Error::CompatibilityViolated { violation });
            }
            let w = a_pinv.matvec(&r);
            let rhs = vector::sub(sys.g(), &sys.b().matvec(&w));
            let xi = gram.solve_vec(&bn.t_matvec(&rhs));
            vector::add(&w, &red.null_basis.matvec(&xi))
        }
    };
    Ok(SaddleSolution::new(sys, u, p))
}

/// Reference solve by LU of the full block operator.
pub fn solve_direct(sys: &SaddleSystem) -> Result<SaddleSolution> {
    let (u, p) = kkt_solve(sys.a(), sys.b(), sys.f(), sys.g())?;
    Ok(SaddleSolution::new(sys, u, p))
}

/// Default rank tolerance for [`projected_schur`], matching the SPD/semi-SPD
/// classification threshold.
pub const DEFAULT_RANK_TOL: f64 = CLASSIFY_TOL;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::validate;

    fn path3() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[1.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 1.0]])
    }

    #[test]
    fn schur_examples() {
        let s = validate(
            DenseMatrix::identity(2),
            DenseMatrix::from_rows(&[&[1.0, 0.0]]),
            vec![1.0, 1.0],
            vec![2.0],
        )
        .unwrap();
        let red = schur(&s).unwrap();
        assert_eq!(red.s, DenseMatrix::from_rows(&[&[1.0]]));
        let p = red.solve_dense().unwrap();
        assert!((p[0] + 1.0).abs() < 1e-15);
        let sol = back_substitute(&s, &red, &p).unwrap();
        assert!(vector::close_rel(&sol.u, &[2.0, 1.0], 1e-15));

        let s = validate(
            DenseMatrix::from_diag(&[2.0, 2.0]),
            DenseMatrix::from_rows(&[&[1.0, 1.0]]),
            vec![0.0; 2],
            vec![0.0],
        )
        .unwrap();
        assert!((schur(&s).unwrap().s[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projected_schur_examples() {
        let s = validate(
            DenseMatrix::from_diag(&[0.0, 1.0]),
            DenseMatrix::identity(2),
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let red = projected_schur(&s, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(red.null_basis.cols(), 1);
        assert!((red.null_basis[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert_eq!(red.w0_basis.cols(), 1);
        assert!((red.w0_basis[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((red.s[(0, 0)] - 1.0).abs() < 1e-14);
        let sol = back_substitute(&s, &red, &red.solve_dense().unwrap()).unwrap();
        assert!(vector::close_rel(&sol.u, &[1.0, 1.0], 1e-14));
        assert!(vector::close_rel(&sol.p, &[0.0, -1.0], 1e-14));

        let s = validate(path3(), DenseMatrix::identity(3), vec![0.0; 3], vec![0.0; 3]).unwrap();
        let red = projected_schur(&s, DEFAULT_RANK_TOL).unwrap();
        let ev = sym_eig(&red.s).unwrap().eigenvalues;
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - 1.0 / 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compatibility_is_enforced() {
        let s = validate(
            DenseMatrix::from_diag(&[0.0, 1.0]),
            DenseMatrix::identity(2),
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let red = projected_schur(&s, DEFAULT_RANK_TOL).unwrap();
        // a multiplier with a component along B N breaks N^t (f - B^t p) = 0
        let mut broken = red.clone();
        broken.eta = vec![1.0];
        assert!(matches!(
            back_substitute(&s, &broken, &[-1.0]),
            Err(Error::CompatibilityViolated { .. })
        ));
    }

    #[test]
    fn direct_solve_examples() {
        let s = validate(
            DenseMatrix::identity(1),
            DenseMatrix::identity(1),
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let sol = solve_direct(&s).unwrap();
        assert!((sol.u[0] - 1.0).abs() < 1e-15 && (sol.p[0] + 1.0).abs() < 1e-15);
        assert!(sol.is_accurate(&s));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let spd = validate(DenseMatrix::identity(1), DenseMatrix::identity(1), vec![0.0], vec![0.0])
            .unwrap();
        assert!(matches!(
            projected_schur(&spd, DEFAULT_RANK_TOL),
            Err(Error::WrongKind { .. })
        ));
    }
}
