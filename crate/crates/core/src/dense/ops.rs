use crate::error::{Error, Result};

use super::eig::{sym_eig, SymEig};
use super::factor::Lu;
use super::matrix::DenseMatrix;
use super::vector::dot;

/// Default relative rank tolerance `n * 2^-52`.
pub fn default_rank_tol(n: usize) -> f64 {
    n.max(1) as f64 * f64::EPSILON
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues above `rank_tol * lambda_max` are inverted, the rest zeroed.
pub fn pseudoinverse(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let eig = sym_eig(a)?;
    pseudoinverse_from_eig(&eig, rank_tol)
}

pub fn pseudoinverse_from_eig(eig: &SymEig, rank_tol: f64) -> Result<DenseMatrix> {
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let cut = rank_tol * lmax;
    if let Some(&neg) = eig.eigenvalues.iter().find(|&&x| x < -cut) {
        return Err(Error::Indefinite { eigenvalue: neg });
    }
    Ok(eig.apply_fn(|x| if x > cut { 1.0 / x } else { 0.0 }))
}

/// Singular values of `m`, descending, from the eigenvalues of the smaller
/// Gram matrix (`|eigenvalues|` directly when `m` is symmetric).
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let mut sv: Vec<f64> = if is_exactly_symmetric(m) {
        sym_eig(m)?.eigenvalues.iter().map(|x| x.abs()).collect()
    } else if m.rows() <= m.cols() {
        gram_sv(&m.matmul_t(m))?
    } else {
        gram_sv(&m.t_matmul(m))?
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn gram_sv(g: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(sym_eig(&g.symmetrize())?
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect())
}

fn is_exactly_symmetric(m: &DenseMatrix) -> bool {
    m.is_square() && m.asymmetry() == 0.0
}

/// Number of singular values above `tol * sigma_max`.
pub fn rank(m: &DenseMatrix, tol: f64) -> Result<usize> {
    if m.is_empty() {
        return Ok(0);
    }
    let sv = singular_values(m)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}

/// Orthonormal basis of `N(m)`; zero columns when the null space is trivial.
///
/// Uses the eigenvectors of `m` itself for symmetric input and of `m^t m`
/// otherwise; singular values at or below `tol * sigma_max` count as zero.
pub fn null_basis(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let n = m.cols();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    if is_exactly_symmetric(m) {
        let eig = sym_eig(m)?;
        let smax = eig.eigenvalues.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        return Ok(eig.select(|x| x.abs() <= tol * smax));
    }
    let eig = sym_eig(&m.t_matmul(m).symmetrize())?;
    let smax = eig.lambda_max().max(0.0).sqrt();
    Ok(eig.select(|x| x.max(0.0).sqrt() <= tol * smax))
}

/// Orthonormal basis of the range of a symmetric PSD matrix.
pub fn range_basis(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let eig = sym_eig(a)?;
    let smax = eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(eig.select(|x| x.abs() > tol * smax))
}

/// `A^{1/2}` of a symmetric PSD matrix.
pub fn sym_sqrt(a: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(a)?;
    Ok(eig.apply_fn(|x| x.max(0.0).sqrt()))
}

/// `A^{-1/2}` of an SPD matrix.
pub fn sym_inv_sqrt(a: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(a)?;
    if eig.lambda_min() <= 0.0 {
        return Err(Error::NotSpd {
            row: 0,
            pivot: eig.lambda_min(),
        });
    }
    Ok(eig.apply_fn(|x| 1.0 / x.sqrt()))
}

/// Assembles `[[A, B^t], [B, 0]]`.
pub fn kkt_matrix(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (n, m) = (a.rows(), b.rows());
    let mut k = DenseMatrix::zeros(n + m, n + m);
    k.set_block(0, 0, a);
    k.set_block(0, n, &b.transpose());
    k.set_block(n, 0, b);
    k
}

/// Solves `[[A, B^t], [B, 0]] (u, p) = (f, g)` by LU with partial pivoting.
pub fn kkt_solve(
    a: &DenseMatrix,
    b: &DenseMatrix,
    f: &[f64],
    g: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.rows();
    if !a.is_square() || b.cols() != n || f.len() != n || g.len() != b.rows() {
        return Err(Error::DimensionMismatch("KKT blocks do not conform".into()));
    }
    let lu = Lu::new(&kkt_matrix(a, b))?;
    let mut rhs = f.to_vec();
    rhs.extend_from_slice(g);
    let mut x = lu.solve_vec(&rhs);
    let p = x.split_off(n);
    Ok((x, p))
}

/// Minimizer of `(Av, v)` over `{v : Bv = q}` and the minimum value.
pub fn constrained_min(a: &DenseMatrix, b: &DenseMatrix, q: &[f64]) -> Result<(Vec<f64>, f64)> {
    let zero = vec![0.0; a.rows()];
    let (v, _) = kkt_solve(a, b, &zero, q)?;
    let value = dot(&a.matvec(&v), &v);
    Ok((v, value))
}

/// LU factorization of the KKT matrix, reusable for many right-hand sides `q`.
pub struct ConstrainedMinimizer<'a> {
    a: &'a DenseMatrix,
    n: usize,
    lu: Lu,
}

impl<'a> ConstrainedMinimizer<'a> {
    pub fn new(a: &'a DenseMatrix, b: &DenseMatrix) -> Result<Self> {
        if b.cols() != a.rows() {
            return Err(Error::DimensionMismatch("B must have as many columns as A".into()));
        }
        Ok(ConstrainedMinimizer {
            a,
            n: a.rows(),
            lu: Lu::new(&kkt_matrix(a, b))?,
        })
    }

    pub fn minimize(&self, q: &[f64]) -> (Vec<f64>, f64) {
        let mut rhs = vec![0.0; self.n];
        rhs.extend_from_slice(q);
        let mut v = self.lu.solve_vec(&rhs);
        v.truncate(self.n);
        let value = dot(&self.a.matvec(&v), &v);
        (v, value)
    }
}

/// Orthonormalizes the columns of `m` by modified Gram-Schmidt with one
/// reorthogonalization pass. Columns must be linearly independent.
pub fn orthonormalize(m: &DenseMatrix) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.col(j)).collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let r = dot(&cols[i], &cols[j]);
                let (done, rest) = cols.split_at_mut(j);
                super::vector::axpy(-r, &done[i], &mut rest[0]);
            }
        }
        let nrm = super::vector::norm2(&cols[j]);
        cols[j].iter_mut().for_each(|x| *x /= nrm);
    }
    DenseMatrix::from_columns(m.rows(), &cols)
}

/// Orthonormal basis of `{x : w . x = 0}` built from the Householder
/// reflector that maps `w` onto a multiple of `e_1`.
pub fn complement_basis(w: &[f64]) -> DenseMatrix {
    let n = w.len();
    let nrm = super::vector::norm2(w);
    let mut u = w.to_vec();
    let alpha = if w[0] >= 0.0 { -nrm } else { nrm };
    u[0] -= alpha;
    let unrm2 = dot(&u, &u);
    let mut z = DenseMatrix::zeros(n, n - 1);
    for i in 0..n {
        for j in 1..n {
            let hij = if i == j { 1.0 } else { 0.0 } - 2.0 * u[i] * u[j] / unrm2;
            z[(i, j - 1)] = hij;
        }
    }
    z
}
