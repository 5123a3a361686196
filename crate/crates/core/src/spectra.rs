//! Extremal eigenvalues of Schur complements, computed two independent ways.
//!
//! The direct route assembles the (preconditioned) Schur complement and runs
//! a symmetric eigensolve. The variational route never forms `S`:
//!
//! * `lambda_min(S)` comes from the minimizers `v_i` of `(Av, v)` subject to
//!   `Bv = e_i`. Their energy Gram matrix `V^t A V` equals `S^-1`, so
//!   `lambda_min(S) = 1 / lambda_max(V^t A V)`.
//! * `lambda_max(S)` is the top of the pencil `B^t B v = mu A v`, i.e. the
//!   largest eigenvalue of `A^-1/2 B^t B A^-1/2`.
//!
//! With a preconditioner `L` the same quotients are weighted by `(Lq, q)`.
//! Semi-definite systems are reduced to an SPD pair on `range(A)` and `W0`.

use std::fmt;

use crate::dense::ops::{null_basis, range_basis, singular_values, ConstrainedMinimizer};
use crate::dense::{sym_eig, sym_inv_sqrt, sym_sqrt, Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::saddle::reduce::DEFAULT_RANK_TOL;
use crate::saddle::{projected_schur, schur, DualReduction, SaddleSystem, SystemKind};

/// Relative agreement required between the two routes.
pub const ROUTE_AGREEMENT_TOL: f64 = 1e-8;

/// Slack on the right-inverse floor `lambda_min(L S) >= 1`.
pub const FLOOR_TOL: f64 = 1e-9;

/// Allowed `|B Bbar^t - I|_F`.
pub const RIGHT_INVERSE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    DirectEig,
    VariationalOracle,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::DirectEig => "DirectEig",
            Route::VariationalOracle => "VariationalOracle",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub route: Route,
    pub operator_tag: String,
}

impl SpectralReport {
    /// Checks `0 < lambda_min <= lambda_max`. A `lambda_min` above `lambda_max`
    /// by less than [`ROUTE_AGREEMENT_TOL`] (a one-point spectrum whose ends
    /// were computed separately) is snapped to `lambda_max`.
    pub fn new(tag: &str, route: Route, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_min > 0.0) || !lambda_max.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "{tag}: lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}"
            )));
        }
        let lambda_min = if lambda_min > lambda_max {
            if lambda_min - lambda_max > ROUTE_AGREEMENT_TOL * lambda_max {
                return Err(Error::InvalidSpectrum(format!(
                    "{tag}: lambda_min {lambda_min:e} exceeds lambda_max {lambda_max:e}"
                )));
            }
            lambda_max
        } else {
            lambda_min
        };
        Ok(SpectralReport {
            lambda_min,
            lambda_max,
            kappa: lambda_max / lambda_min,
            route,
            operator_tag: tag.to_string(),
        })
    }

    /// Extremal eigenvalues of a symmetric matrix.
    pub fn direct(tag: &str, m: &DenseMatrix) -> Result<Self> {
        let ev = crate::dense::sym_eigenvalues(m)?;
        SpectralReport::new(tag, Route::DirectEig, ev[0], ev[ev.len() - 1])
    }

    /// Largest relative deviation of the extremal eigenvalues.
    pub fn relative_gap(&self, other: &SpectralReport) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        rel(self.lambda_min, other.lambda_min).max(rel(self.lambda_max, other.lambda_max))
    }

    pub fn agrees_with(&self, other: &SpectralReport, tol: f64) -> bool {
        self.relative_gap(other) <= tol
    }
}

fn require_spd(l: &DenseMatrix) -> Result<()> {
    l.check_symmetric(crate::dense::eig::SYMMETRY_TOL)?;
    Cholesky::new(l).map(|_| ())
}

/// Eigenvalues of `L S` for `S = X X^t`, through the similar matrix
/// `H^t S H = (H^t X)(H^t X)^t` with `L = H H^t`. Working with the factors
/// keeps the rounding error proportional to `sqrt(cond(L) cond(S))` rather
/// than its square.
fn preconditioned_direct(tag: &str, x: &DenseMatrix, l: &DenseMatrix) -> Result<SpectralReport> {
    l.check_symmetric(crate::dense::eig::SYMMETRY_TOL)?;
    let h = Cholesky::new(l)?;
    let w = h.factor().t_matmul(x);
    SpectralReport::direct(tag, &w.matmul_t(&w).symmetrize())
}

/// `X = B G^-t` with `A = G G^t`, so that `S = B A^-1 B^t = X X^t`.
fn schur_factor(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(Cholesky::new(a)?.forward_solve(&b.transpose()).transpose())
}

/// `X0 = W0^t B (A^+)^1/2`, so that the projected Schur complement is `X0 X0^t`.
fn projected_schur_factor(sys: &SaddleSystem, red: &DualReduction) -> Result<DenseMatrix> {
    let eig = sym_eig(sys.a())?;
    let cut = DEFAULT_RANK_TOL * eig.lambda_max().max(0.0);
    let half = eig.apply_fn(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 });
    Ok(red.w0_basis.t_matmul(&sys.b().matmul(&half)))
}

/// `V^t A V` for the constrained minimizers of `(Av, v)` subject to `Bv = e_i`.
fn energy_gram(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let m = b.rows();
    let cm = ConstrainedMinimizer::new(a, b)?;
    let cols: Vec<Vec<f64>> = (0..m).map(|i| cm.minimize(&crate::dense::vector::unit(m, i)).0).collect();
    let v = DenseMatrix::from_columns(a.rows(), &cols);
    Ok(v.t_matmul(&a.matmul(&v)).symmetrize())
}

/// Variational route for `L S` with `S = B A^-1 B^t`, `A` SPD. `None` means `L = I`.
fn variational(tag: &str, a: &DenseMatrix, b: &DenseMatrix, l: Option<&DenseMatrix>) -> Result<SpectralReport> {
    let q = energy_gram(a, b)?;
    let ais = sym_inv_sqrt(a)?;
    let (q_weighted, btlb) = match l {
        None => (q, b.t_matmul(b)),
        Some(l) => {
            require_spd(l)?;
            let lis = sym_inv_sqrt(l)?;
            (lis.matmul(&q).matmul(&lis), b.t_matmul(&l.matmul(b)))
        }
    };
    let lmin = 1.0 / sym_eig(&q_weighted.symmetrize())?.lambda_max();
    let pencil = ais.matmul(&btlb).matmul(&ais).symmetrize();
    let lmax = sym_eig(&pencil)?.lambda_max();
    SpectralReport::new(tag, Route::VariationalOracle, lmin, lmax)
}

fn require_kind(sys: &SaddleSystem, kind: SystemKind) -> Result<()> {
    if sys.kind() != kind {
        return Err(Error::WrongKind {
            expected: match kind {
                SystemKind::Spd => "SPD",
                SystemKind::SemiSpd => "SemiSPD",
            },
        });
    }
    Ok(())
}

/// Spectrum of `S` by both routes.
pub fn eigs_schur(sys: &SaddleSystem) -> Result<(SpectralReport, SpectralReport)> {
    require_kind(sys, SystemKind::Spd)?;
    let red = schur(sys)?;
    let direct = SpectralReport::direct("S", &red.s)?;
    let var = variational("S", sys.a(), sys.b(), None)?;
    Ok((direct, var))
}

/// Spectrum of `L S` by both routes.
pub fn eigs_schur_preconditioned(
    sys: &SaddleSystem,
    l: &DenseMatrix,
) -> Result<(SpectralReport, SpectralReport)> {
    require_kind(sys, SystemKind::Spd)?;
    if l.shape() != (sys.m(), sys.m()) {
        return Err(Error::DimensionMismatch("preconditioner must be m x m".into()));
    }
    let direct = preconditioned_direct("LS", &schur_factor(sys.a(), sys.b())?, l)?;
    let var = variational("LS", sys.a(), sys.b(), Some(l))?;
    Ok((direct, var))
}

/// Lower and upper bounds `sigma_min(B)^2 / lambda_max(A)` and
/// `sigma_max(B)^2 / lambda_min(A)` for the spectrum of `S`.
pub fn bounds_cor_schur(sys: &SaddleSystem) -> Result<(f64, f64)> {
    require_kind(sys, SystemKind::Spd)?;
    let ea = sym_eig(sys.a())?;
    let sv = singular_values(sys.b())?;
    let smax = sv[0];
    // B is surjective, so its m-th singular value is the smallest nonzero one
    let smin = sv[sys.m() - 1];
    Ok((smin * smin / ea.lambda_max(), smax * smax / ea.lambda_min()))
}

fn check_right_inverse(b: &DenseMatrix, bbar: &DenseMatrix) -> Result<()> {
    if bbar.shape() != b.shape() {
        return Err(Error::DimensionMismatch("right inverse must have the shape of B".into()));
    }
    let defect = b
        .matmul_t(bbar)
        .sub(&DenseMatrix::identity(b.rows()))
        .frobenius_norm();
    if defect > RIGHT_INVERSE_TOL {
        return Err(Error::NotRightInverse { defect });
    }
    Ok(())
}

/// `Bbar = (B B^t)^-1 B`, the right inverse with `B Bbar^t = I` of minimal norm.
pub fn canonical_right_inverse(b: &DenseMatrix) -> Result<DenseMatrix> {
    let bbt = b.matmul_t(b).symmetrize();
    Ok(Cholesky::new(&bbt)?.solve(b))
}

/// `A^1/2 (Bbar^t B) A^-1/2`. Its squared singular values are the eigenvalues
/// of `L S` for `L = Bbar A Bbar^t` (padded with `n - m` zeros), and the top
/// one is `|Bbar^t B|_A^2`.
fn right_inverse_similarity(a: &DenseMatrix, b: &DenseMatrix, bbar: &DenseMatrix) -> Result<DenseMatrix> {
    let ah = sym_sqrt(a)?;
    let ais = sym_inv_sqrt(a)?;
    Ok(ah.matmul(&bbar.t_matmul(b)).matmul(&ais))
}

/// `|Bbar^t B|_A^2`, the squared `A`-operator norm of the oblique projector
/// `Bbar^t B`, as the top eigenvalue of `M^t M` with `M = A^1/2 Bbar^t B A^-1/2`.
pub fn right_inverse_a_norm_sq(a: &DenseMatrix, b: &DenseMatrix, bbar: &DenseMatrix) -> Result<f64> {
    let m = right_inverse_similarity(a, b, bbar)?;
    Ok(sym_eig(&m.t_matmul(&m).symmetrize())?.lambda_max())
}

/// Spectrum of `L S`, `L = Bbar A Bbar^t`, from the factored form.
///
/// Never multiplies `L` by `S`, so the error does not grow with
/// `cond(L) cond(S)`; this is what certifies the floor `lambda_min >= 1`.
fn right_inverse_spectrum(tag: &str, a: &DenseMatrix, b: &DenseMatrix, bbar: &DenseMatrix) -> Result<SpectralReport> {
    let m = right_inverse_similarity(a, b, bbar)?;
    let ev = crate::dense::sym_eigenvalues(&m.t_matmul(&m).symmetrize())?;
    let top = &ev[ev.len() - b.rows()..];
    SpectralReport::new(tag, Route::DirectEig, top[0], top[top.len() - 1])
}

/// Checks that the factored and similarity-transform spectra agree, then
/// that the floor holds.
fn certify_floor(factored: &SpectralReport, similarity: &SpectralReport) -> Result<()> {
    let gap = factored.relative_gap(similarity);
    if gap > ROUTE_AGREEMENT_TOL {
        return Err(Error::Verification(format!(
            "{}: factored spectrum [{:e}, {:e}] differs from L^1/2 S L^1/2 [{:e}, {:e}] (relative {gap:e})",
            factored.operator_tag,
            factored.lambda_min,
            factored.lambda_max,
            similarity.lambda_min,
            similarity.lambda_max
        )));
    }
    if factored.lambda_min < 1.0 - FLOOR_TOL {
        return Err(Error::Verification(format!(
            "{}: right-inverse floor violated, lambda_min = {:.17e}",
            factored.operator_tag, factored.lambda_min
        )));
    }
    Ok(())
}

/// Spectrum of `L S` for `L = Bbar A Bbar^t`.
///
/// `lambda_max` is `|Bbar^t B|_A^2`. The result is cross-checked against
/// the eigenvalues of `L^1/2 S L^1/2` and the floor `lambda_min >= 1` verified.
pub fn eigs_right_inverse_preconditioner(sys: &SaddleSystem, bbar: &DenseMatrix) -> Result<SpectralReport> {
    require_kind(sys, SystemKind::Spd)?;
    check_right_inverse(sys.b(), bbar)?;
    let tag = "LS_right_inverse";
    let l = bbar.matmul(sys.a()).matmul_t(bbar).symmetrize();
    let similarity = preconditioned_direct(tag, &schur_factor(sys.a(), sys.b())?, &l)?;
    let rep = right_inverse_spectrum(tag, sys.a(), sys.b(), bbar)?;
    certify_floor(&rep, &similarity)?;
    Ok(rep)
}

/// SPD pair `(A_R, B_R)` whose Schur complement is the projected one:
/// `A_R = R^t A R` on an orthonormal basis `R` of `range(A)` and
/// `B_R = W^t B R` with `W` an orthonormal basis of `range(B N)^perp`.
struct RestrictedPair {
    a_r: DenseMatrix,
    b_r: DenseMatrix,
    r: DenseMatrix,
    w: DenseMatrix,
}

fn restricted_pair(sys: &SaddleSystem) -> Result<RestrictedPair> {
    let r = range_basis(sys.a(), DEFAULT_RANK_TOL)?;
    let null = null_basis(sys.a(), DEFAULT_RANK_TOL)?;
    let bn = sys.b().matmul(&null);
    let gram = sym_eig(&bn.matmul_t(&bn).symmetrize())?;
    let cut = DEFAULT_RANK_TOL * gram.lambda_max().max(0.0);
    let w = gram.select(|x| x <= cut);
    let a_r = r.t_matmul(&sys.a().matmul(&r)).symmetrize();
    let b_r = w.t_matmul(&sys.b().matmul(&r));
    Ok(RestrictedPair { a_r, b_r, r, w })
}

/// Spectrum of the projected Schur complement by both routes.
pub fn eigs_projected_schur(sys: &SaddleSystem) -> Result<(SpectralReport, SpectralReport)> {
    require_kind(sys, SystemKind::SemiSpd)?;
    let red = projected_schur(sys, DEFAULT_RANK_TOL)?;
    let direct = SpectralReport::direct("S0", &red.s)?;
    let pair = restricted_pair(sys)?;
    let var = variational("S0", &pair.a_r, &pair.b_r, None)?;
    Ok((direct, var))
}

/// `(P Bbar) A (P Bbar)^t` in the `W0` coordinates of `red`.
pub fn projected_right_inverse_preconditioner(
    sys: &SaddleSystem,
    red: &DualReduction,
    bbar: &DenseMatrix,
) -> Result<DenseMatrix> {
    check_right_inverse(sys.b(), bbar)?;
    let pb = red.w0_basis.t_matmul(&red.projector.matmul(bbar));
    Ok(pb.matmul(sys.a()).matmul_t(&pb).symmetrize())
}

/// Spectrum of `L S0` with `L` given in the `W0` coordinates of the default
/// projected reduction. When `bbar` is supplied, `L` must be the corresponding
/// projected right-inverse preconditioner and the floor `lambda_min >= 1` is
/// verified.
pub fn eigs_projected_schur_preconditioned(
    sys: &SaddleSystem,
    l: &DenseMatrix,
    bbar: Option<&DenseMatrix>,
) -> Result<SpectralReport> {
    Ok(projected_preconditioned_routes(sys, l, bbar)?.0)
}

/// Both routes for `L S0`.
///
/// With `bbar`, the restricted right inverse `W^t Bbar R` of `B_R` gives a
/// factored spectrum that is cross-checked against the direct route and
/// used to certify the floor.
pub fn projected_preconditioned_routes(
    sys: &SaddleSystem,
    l: &DenseMatrix,
    bbar: Option<&DenseMatrix>,
) -> Result<(SpectralReport, SpectralReport)> {
    require_kind(sys, SystemKind::SemiSpd)?;
    let red = projected_schur(sys, DEFAULT_RANK_TOL)?;
    if l.shape() != red.s.shape() {
        return Err(Error::DimensionMismatch("preconditioner must act on W0".into()));
    }
    let mut direct = preconditioned_direct("LS0", &projected_schur_factor(sys, &red)?, l)?;
    let pair = restricted_pair(sys)?;
    if let Some(bbar) = bbar {
        check_right_inverse(sys.b(), bbar)?;
        let bbar_r = pair.w.t_matmul(&bbar.matmul(&pair.r));
        let factored = right_inverse_spectrum("LS0", &pair.a_r, &pair.b_r, &bbar_r)?;
        certify_floor(&factored, &direct)?;
        direct = factored;
    }
    // express L in the independently computed basis W of the restricted pair
    let omega = red.w0_basis.t_matmul(&pair.w);
    let l_w = omega.t_matmul(&l.matmul(&omega)).symmetrize();
    let var = variational("LS0", &pair.a_r, &pair.b_r, Some(&l_w))?;
    Ok((direct, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::validate;

    fn sys(a: DenseMatrix, b: DenseMatrix) -> SaddleSystem {
        let (n, m) = (a.rows(), b.rows());
        validate(a, b, vec![0.0; n], vec![0.0; m]).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn schur_examples() {
        let s = sys(DenseMatrix::identity(2), DenseMatrix::from_rows(&[&[1.0, 0.0]]));
        let (d, v) = eigs_schur(&s).unwrap();
        for r in [&d, &v] {
            assert!(close(r.lambda_min, 1.0) && close(r.lambda_max, 1.0));
        }

        let s = sys(DenseMatrix::from_diag(&[1.0, 4.0]), DenseMatrix::identity(2));
        let (d, v) = eigs_schur(&s).unwrap();
        for r in [&d, &v] {
            assert!(close(r.lambda_min, 0.25) && close(r.lambda_max, 1.0));
        }
    }

    #[test]
    fn cor_schur_examples() {
        let s = sys(DenseMatrix::identity(3), DenseMatrix::identity(3));
        let (lo, hi) = bounds_cor_schur(&s).unwrap();
        assert!(close(lo, 1.0) && close(hi, 1.0));

        let s = sys(DenseMatrix::from_diag(&[1.0, 4.0]), DenseMatrix::from_rows(&[&[1.0, 0.0]]));
        let (lo, hi) = bounds_cor_schur(&s).unwrap();
        assert!(close(lo, 0.25) && close(hi, 1.0));
    }

    #[test]
    fn perfect_and_trivial_preconditioners() {
        let s = sys(DenseMatrix::from_diag(&[1.0, 4.0, 2.0]), DenseMatrix::from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]));
        let sinv = Cholesky::new(&schur(&s).unwrap().s).unwrap().inverse();
        let (d, v) = eigs_schur_preconditioned(&s, &sinv).unwrap();
        for r in [&d, &v] {
            assert!((r.lambda_min - 1.0).abs() < 1e-12 && (r.lambda_max - 1.0).abs() < 1e-12);
        }
        let (d, _) = eigs_schur_preconditioned(&s, &DenseMatrix::identity(2)).unwrap();
        let (d0, _) = eigs_schur(&s).unwrap();
        assert!(d.agrees_with(&d0, 1e-13));
    }

    #[test]
    fn right_inverse_examples() {
        // square B: Bbar = B^-t makes Bbar^t B = I
        let b = DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let s = sys(DenseMatrix::from_diag(&[1.0, 3.0]), b.clone());
        let bbar = canonical_right_inverse(&b).unwrap();
        let rep = eigs_right_inverse_preconditioner(&s, &bbar).unwrap();
        assert!((rep.lambda_min - 1.0).abs() < 1e-12 && (rep.lambda_max - 1.0).abs() < 1e-12);

        // A = I: A-norm is the Euclidean norm of the orthogonal projector, so 1
        let b = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.0]]);
        let s = sys(DenseMatrix::identity(3), b.clone());
        let bbar = canonical_right_inverse(&b).unwrap();
        let rep = eigs_right_inverse_preconditioner(&s, &bbar).unwrap();
        assert!((rep.lambda_max - 1.0).abs() < 1e-12);

        let bad = DenseMatrix::from_rows(&[&[0.0, 0.0, 1.0]]);
        assert!(matches!(
            eigs_right_inverse_preconditioner(&s, &bad),
            Err(Error::NotRightInverse { .. })
        ));
    }

    #[test]
    fn projected_examples() {
        let s = sys(DenseMatrix::from_diag(&[0.0, 1.0]), DenseMatrix::identity(2));
        let (d, v) = eigs_projected_schur(&s).unwrap();
        for r in [&d, &v] {
            assert!(close(r.lambda_min, 1.0) && close(r.lambda_max, 1.0));
        }
        let red = projected_schur(&s, DEFAULT_RANK_TOL).unwrap();
        let bbar = canonical_right_inverse(s.b()).unwrap();
        let l = projected_right_inverse_preconditioner(&s, &red, &bbar).unwrap();
        let rep = eigs_projected_schur_preconditioned(&s, &l, Some(&bbar)).unwrap();
        assert!(rep.lambda_min >= 1.0 - FLOOR_TOL);

        let lap = DenseMatrix::from_rows(&[&[1.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 1.0]]);
        let s = sys(lap, DenseMatrix::identity(3));
        let (d, v) = eigs_projected_schur(&s).unwrap();
        for r in [&d, &v] {
            assert!(close(r.lambda_min, 1.0 / 3.0) && close(r.lambda_max, 1.0));
        }
    }

    #[test]
    fn report_rejects_nonpositive_spectrum() {
        assert!(SpectralReport::new("x", Route::DirectEig, 0.0, 1.0).is_err());
        assert!(SpectralReport::new("x", Route::DirectEig, 2.0, 1.0).is_err());
        let r = SpectralReport::new("x", Route::DirectEig, 1.0 + 1e-11, 1.0).unwrap();
        assert_eq!(r.kappa, 1.0);
    }
}
