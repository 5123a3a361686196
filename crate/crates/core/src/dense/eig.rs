//! Symmetric eigendecomposition.
//!
//! Small matrices use cyclic Jacobi sweeps in row-major pivot order; large
//! ones use Householder tridiagonalization followed by implicit QL. Both
//! paths are deterministic for a fixed input.

use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

/// Relative symmetry tolerance accepted by the eigensolvers.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Jacobi stops once the off-diagonal Frobenius norm is below this fraction of `|A|_F`.
pub const JACOBI_TOL: f64 = 1e-12;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Above this order `sym_eig` switches from Jacobi to tridiagonal QL.
pub const JACOBI_MAX_ORDER: usize = 96;

const QL_MAX_ITER: usize = 60;

/// Full spectral decomposition `A = Q diag(eigenvalues) Q^t`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DenseMatrix,
}

impl SymEig {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Q diag(f(lambda)) Q^t`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.dim();
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for j in 0..n {
            let s = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled.matmul_t(q).symmetrize()
    }

    /// Eigenvector columns whose eigenvalues satisfy `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> DenseMatrix {
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| keep(self.eigenvalues[j])).collect();
        self.eigenvectors.select_cols(&idx)
    }

    /// Sum of the reconstruction and orthonormality defects, for tests.
    pub fn defects(&self, a: &DenseMatrix) -> (f64, f64) {
        let n = self.dim();
        let q = &self.eigenvectors;
        let qtq = q.t_matmul(q);
        let orth = qtq.sub(&DenseMatrix::identity(n)).frobenius_norm();
        let recon = self.apply_fn(|x| x).sub(a).frobenius_norm();
        (recon, orth)
    }
}

fn check_input(a: &DenseMatrix) -> Result<()> {
    a.check_symmetric(SYMMETRY_TOL)
}

/// Full symmetric eigendecomposition.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEig> {
    check_input(a)?;
    if a.rows() <= JACOBI_MAX_ORDER {
        jacobi(a)
    } else {
        tridiagonal_ql(a, true)
    }
}

/// Eigenvalues only (ascending); cheaper than [`sym_eig`] for large matrices.
pub fn sym_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_input(a)?;
    if a.rows() <= JACOBI_MAX_ORDER {
        Ok(jacobi(a)?.eigenvalues)
    } else {
        Ok(tridiagonal_ql(a, false)?.eigenvalues)
    }
}

/// Cyclic Jacobi eigensolver, row-major sweep order.
pub fn jacobi(a: &DenseMatrix) -> Result<SymEig> {
    check_input(a)?;
    let n = a.rows();
    let mut m = a.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let norm = a.frobenius_norm();
    let target = JACOBI_TOL * norm;

    let off = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0 || off(&m) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off: off(&m),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, p, q, c, s, t);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&m) <= target;
    }

    let values: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    Ok(sorted(values, Some(v)))
}

/// Applies the Jacobi rotation zeroing `m[p][q]` to both sides of `m`.
#[inline]
fn rotate(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = m.rows();
    let apq = m[(p, q)];
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let np = c * arp - s * arq;
        let nq = s * arp + c * arq;
        m[(r, p)] = np;
        m[(p, r)] = np;
        m[(r, q)] = nq;
        m[(q, r)] = nq;
    }
}

fn sorted(values: Vec<f64>, vectors: Option<DenseMatrix>) -> SymEig {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = match vectors {
        Some(v) => v.select_cols(&order),
        None => DenseMatrix::zeros(n, 0),
    };
    SymEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Householder tridiagonalization + implicit QL with Wilkinson-type shifts.
///
/// Works on the lower triangle of a row-major copy; the eigenvector
/// accumulation keeps the transpose so that every inner loop is contiguous.
fn tridiagonal_ql(a: &DenseMatrix, vectors: bool) -> Result<SymEig> {
    let n = a.rows();
    if n == 0 {
        return Ok(SymEig {
            eigenvalues: vec![],
            eigenvectors: DenseMatrix::zeros(0, 0),
        });
    }
    let mut w = a.symmetrize();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder(&mut w, &mut d, &mut e, vectors);

    // Rows of `zt` are the columns of the accumulated transform.
    let mut zt = if vectors { Some(w.transpose()) } else { None };
    implicit_ql(&mut d, &mut e, zt.as_mut())?;

    Ok(sorted(d, zt.map(|z| z.transpose())))
}

fn householder(a: &mut DenseMatrix, d: &mut [f64], e: &mut [f64], vectors: bool) {
    let n = a.rows();
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a.row(i)[..=l].iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                {
                    let row = &mut a.row_mut(i)[..=l];
                    for x in row.iter_mut() {
                        *x /= scale;
                        h += *x * *x;
                    }
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;

                // p = A_{0..=l} u / h using the lower triangle row by row.
                let u: Vec<f64> = a.row(i)[..=l].to_vec();
                p[..=l].iter_mut().for_each(|x| *x = 0.0);
                for j in 0..=l {
                    let row = &a.row(j)[..=j];
                    let uj = u[j];
                    let mut acc = 0.0;
                    for k in 0..j {
                        acc += row[k] * u[k];
                        p[k] += row[k] * uj;
                    }
                    p[j] += acc + row[j] * uj;
                }
                let mut f_acc = 0.0;
                for j in 0..=l {
                    p[j] /= h;
                    f_acc += p[j] * u[j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    p[j] -= hh * u[j];
                }
                for j in 0..=l {
                    let (uj, pj) = (u[j], p[j]);
                    let row = &mut a.row_mut(j)[..=j];
                    for k in 0..=j {
                        row[k] -= uj * p[k] + pj * u[k];
                    }
                }
                if vectors {
                    for j in 0..=l {
                        a[(j, i)] = u[j] / h;
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }

    d[0] = 0.0;
    e[0] = 0.0;
    if !vectors {
        for i in 0..n {
            d[i] = a[(i, i)];
        }
        return;
    }

    let mut g = vec![0.0; n];
    for i in 0..n {
        if d[i] != 0.0 {
            // g[j] = sum_k a[i][k] a[k][j] over the leading i x i block.
            g[..i].iter_mut().for_each(|x| *x = 0.0);
            for k in 0..i {
                let aik = a[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let row = &a.row(k)[..i];
                for (gj, &akj) in g[..i].iter_mut().zip(row) {
                    *gj += aik * akj;
                }
            }
            for k in 0..i {
                let aki = a[(k, i)];
                let row = &mut a.row_mut(k)[..i];
                for (akj, &gj) in row.iter_mut().zip(&g[..i]) {
                    *akj -= gj * aki;
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(j, i)] = 0.0;
            a[(i, j)] = 0.0;
        }
    }
}

fn implicit_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut DenseMatrix>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // couplings below eps |T| are at the level of the reduction's own rounding
    let tnorm = d.iter().zip(e.iter()).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd || e[m].abs() <= f64::EPSILON * tnorm {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == QL_MAX_ITER {
                return Err(Error::NoConvergence {
                    sweeps: iter,
                    off: e[l].abs(),
                });
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m as isize - 1;
            let mut deflated = false;
            while i >= l as isize {
                let iu = i as usize;
                let f = s * e[iu];
                let b = c * e[iu];
                r = f.hypot(g);
                e[iu + 1] = r;
                if r == 0.0 {
                    d[iu + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + 2.0 * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    rotate_rows(z, iu, c, s);
                }
                i -= 1;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Rotates rows `i` and `i + 1` of `zt` (columns of the eigenvector matrix).
#[inline]
fn rotate_rows(zt: &mut DenseMatrix, i: usize, c: f64, s: f64) {
    let n = zt.cols();
    let (head, tail) = zt.as_mut_slice().split_at_mut((i + 1) * n);
    let zi = &mut head[i * n..];
    let zi1 = &mut tail[..n];
    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
        let f = *b;
        *b = s * *a + c * f;
        *a = c * *a - s * f;
    }
}
