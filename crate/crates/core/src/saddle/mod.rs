//! Saddle point systems `[[A, B^t], [B, 0]] (u, p) = (f, g)`.
//!
//! [`validate`] classifies `A` as SPD or semi-SPD and certifies that the block
//! operator is nonsingular. The dual reductions and back-substitution live in
//! [`reduce`].

pub mod io;
pub mod random;
pub mod reduce;

use std::fmt;
use std::str::FromStr;

use crate::dense::{sym_eigenvalues, vector, Cholesky, DenseMatrix};
use crate::error::{Error, Result};

pub use reduce::{
    back_substitute, projected_schur, projected_schur_with, schur, solve_direct, DualReduction,
    SaddleSolution, DEFAULT_RANK_TOL,
};

/// `A` counts as SPD when `lambda_min(A) > CLASSIFY_TOL * lambda_max(A)`.
pub const CLASSIFY_TOL: f64 = 1e-10;

/// `B` counts as surjective when `lambda_min(B B^t) > SURJECTIVITY_TOL * lambda_max(B B^t)`.
pub const SURJECTIVITY_TOL: f64 = 1e-12;

/// Relative residual bound (times [`SaddleSystem::scale`]) for solutions and compatibility.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Above this order validation certifies definiteness by Cholesky instead of eigenvalues.
const EIG_VALIDATE_MAX: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Spd,
    SemiSpd,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Spd => "SPD",
            SystemKind::SemiSpd => "SemiSPD",
        })
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "SPD" => Ok(SystemKind::Spd),
            "SemiSPD" => Ok(SystemKind::SemiSpd),
            other => Err(Error::Config(format!("unknown system kind '{other}'"))),
        }
    }
}

/// A validated saddle point system.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    a: DenseMatrix,
    b: DenseMatrix,
    f: Vec<f64>,
    g: Vec<f64>,
    kind: SystemKind,
    a_extremes: Option<(f64, f64)>,
}

impl SaddleSystem {
    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Dual dimension.
    pub fn m(&self) -> usize {
        self.b.rows()
    }

    /// `(lambda_min(A), lambda_max(A))` when validation computed them.
    ///
    /// Systems certified through the Cholesky shortcut report `None`.
    pub fn a_extremes(&self) -> Option<(f64, f64)> {
        self.a_extremes
    }

    /// `max(1, |f|, |g|, |A|_F, |B|_F)`, the reference size for absolute tolerances.
    pub fn scale(&self) -> f64 {
        1f64.max(vector::norm2(&self.f))
            .max(vector::norm2(&self.g))
            .max(self.a.frobenius_norm())
            .max(self.b.frobenius_norm())
    }

    /// Same system with new right-hand sides.
    pub fn with_rhs(&self, f: Vec<f64>, g: Vec<f64>) -> Result<SaddleSystem> {
        if f.len() != self.n() || g.len() != self.m() {
            return Err(Error::DimensionMismatch("right-hand side sizes changed".into()));
        }
        if f.iter().chain(&g).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SaddleSystem { f, g, ..self.clone() })
    }

    /// Dense block operator `[[A, B^t], [B, 0]]`.
    pub fn block_operator(&self) -> DenseMatrix {
        crate::dense::ops::kkt_matrix(&self.a, &self.b)
    }
}

/// Checks symmetry and semidefiniteness of `A`, surjectivity of `B` and
/// `N(A) ∩ N(B) = {0}`, then classifies the system.
pub fn validate(a: DenseMatrix, b: DenseMatrix, f: Vec<f64>, g: Vec<f64>) -> Result<SaddleSystem> {
    let n = a.rows();
    let m = b.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("A is {}x{}", a.rows(), a.cols())));
    }
    if b.cols() != n || f.len() != n || g.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n}, B is {}x{}, f has {}, g has {}",
            b.rows(),
            b.cols(),
            f.len(),
            g.len()
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::DimensionMismatch("empty system".into()));
    }
    if f.iter().chain(&g).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    a.check_symmetric(CLASSIFY_TOL)?;

    let (kind, a_extremes) = classify(&a)?;
    check_surjective(&b)?;
    if kind == SystemKind::SemiSpd {
        check_well_posed(&a, &b)?;
    }
    Ok(SaddleSystem {
        a,
        b,
        f,
        g,
        kind,
        a_extremes,
    })
}

fn classify(a: &DenseMatrix) -> Result<(SystemKind, Option<(f64, f64)>)> {
    let n = a.rows();
    if n > EIG_VALIDATE_MAX {
        // lambda_max <= |A|_inf, so a successful shifted factorization certifies
        // lambda_min > CLASSIFY_TOL * lambda_max
        let shift = CLASSIFY_TOL * a.norm_inf();
        if Cholesky::new(&a.shift_diag(-shift)).is_ok() {
            return Ok((SystemKind::Spd, None));
        }
    }
    let ev = sym_eigenvalues(a)?;
    let (lmin, lmax) = (ev[0], ev[n - 1]);
    if lmax <= 0.0 {
        if lmax < 0.0 || lmin < 0.0 {
            return Err(Error::NotPsd { ratio: f64::NEG_INFINITY });
        }
        return Ok((SystemKind::SemiSpd, Some((lmin, lmax))));
    }
    if lmin < -CLASSIFY_TOL * lmax {
        return Err(Error::NotPsd { ratio: lmin / lmax });
    }
    let kind = if lmin > CLASSIFY_TOL * lmax {
        SystemKind::Spd
    } else {
        SystemKind::SemiSpd
    };
    Ok((kind, Some((lmin, lmax))))
}

fn gram_rows(b: &DenseMatrix) -> DenseMatrix {
    b.matmul(&b.transpose()).symmetrize()
}

fn check_surjective(b: &DenseMatrix) -> Result<()> {
    let (m, n) = b.shape();
    if m > n {
        return Err(Error::BNotSurjective { rank: n, rows: m });
    }
    let bbt = gram_rows(b);
    if m > EIG_VALIDATE_MAX {
        let shift = SURJECTIVITY_TOL * bbt.norm_inf();
        if Cholesky::new(&bbt.shift_diag(-shift)).is_ok() {
            return Ok(());
        }
    }
    let ev = sym_eigenvalues(&bbt)?;
    let lmax = ev[m - 1];
    if lmax <= 0.0 || ev[0] <= SURJECTIVITY_TOL * lmax {
        let rank = ev.iter().filter(|&&x| x > SURJECTIVITY_TOL * lmax.max(0.0)).count();
        return Err(Error::BNotSurjective { rank, rows: m });
    }
    Ok(())
}

/// `B N` must be injective for a null basis `N` of `A`.
fn check_well_posed(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    let nb = crate::dense::null_basis(a, CLASSIFY_TOL)?;
    if nb.cols() == 0 {
        return Ok(());
    }
    let bn = b.matmul(&nb);
    let g = bn.t_matmul(&bn).symmetrize();
    let gmin = sym_eigenvalues(&g)?[0];
    let bbt_max = *sym_eigenvalues(&gram_rows(b))?.last().unwrap();
    if gmin <= SURJECTIVITY_TOL * bbt_max {
        return Err(Error::IllPosed);
    }
    Ok(())
}
