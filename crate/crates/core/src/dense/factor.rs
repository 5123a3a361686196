//! Cholesky (envelope-aware) and LU with partial pivoting.

use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

/// Pivot threshold relative to `trace(A)/n`.
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-14;

/// Pivot threshold relative to the largest entry of the matrix.
pub const LU_PIVOT_TOL: f64 = 1e-14;

/// Lower Cholesky factor `A = L L^t`.
///
/// The factorization only touches the envelope of the lower triangle: row `i`
/// of `L` is zero left of the first nonzero of row `i` of `A`. Banded finite
/// element matrices therefore factor in O(n b^2).
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: DenseMatrix,
    first: Vec<usize>,
}

impl Cholesky {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = if n == 0 {
            0.0
        } else {
            CHOLESKY_PIVOT_TOL * (a.trace() / n as f64).abs()
        };
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i)[..i].iter().position(|&x| x != 0.0).unwrap_or(i))
            .collect();
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let k0 = fi.max(first[j]);
                let li = &l.row(i)[k0..j];
                let lj = &l.row(j)[k0..j];
                let s = a[(i, j)] - super::vector::dot(li, lj);
                if j < i {
                    let v = s / l[(j, j)];
                    l[(i, j)] = v;
                } else {
                    if s <= threshold || !s.is_finite() {
                        return Err(Error::NotSpd { row: i, pivot: s });
                    }
                    l[(i, i)] = s.sqrt();
                }
            }
        }
        Ok(Cholesky { n, l, first })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `A X = B` in place, row-oriented so all inner loops are contiguous.
    pub fn solve_in_place(&self, b: &mut DenseMatrix) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    /// `L Y = B` in place.
    pub fn forward_in_place(&self, b: &mut DenseMatrix) {
        assert_eq!(b.rows(), self.n, "Cholesky rhs has wrong row count");
        let nc = b.cols();
        let data = b.as_mut_slice();
        for i in 0..self.n {
            let (head, tail) = data.split_at_mut(i * nc);
            let xi = &mut tail[..nc];
            for k in self.first[i]..i {
                let lik = self.l[(i, k)];
                if lik == 0.0 {
                    continue;
                }
                let xk = &head[k * nc..(k + 1) * nc];
                for (a, &b) in xi.iter_mut().zip(xk) {
                    *a -= lik * b;
                }
            }
            let inv = 1.0 / self.l[(i, i)];
            xi.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `L^t X = Y` in place.
    pub fn backward_in_place(&self, b: &mut DenseMatrix) {
        assert_eq!(b.rows(), self.n, "Cholesky rhs has wrong row count");
        let nc = b.cols();
        let data = b.as_mut_slice();
        for i in (0..self.n).rev() {
            let (head, tail) = data.split_at_mut(i * nc);
            let xi = &mut tail[..nc];
            let inv = 1.0 / self.l[(i, i)];
            xi.iter_mut().for_each(|a| *a *= inv);
            for k in self.first[i]..i {
                let lik = self.l[(i, k)];
                if lik == 0.0 {
                    continue;
                }
                let xk = &mut head[k * nc..(k + 1) * nc];
                for (a, &b) in xk.iter_mut().zip(xi.iter()) {
                    *a -= lik * b;
                }
            }
        }
    }

    /// `L^-1 B`.
    pub fn forward_solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut y = b.clone();
        self.forward_in_place(&mut y);
        y
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = DenseMatrix::column_vector(b);
        self.solve_in_place(&mut x);
        x.into_vec()
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.n)).symmetrize()
    }
}

/// Solves `A X = rhs` for SPD `A`.
pub fn cholesky_solve(a: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let chol = Cholesky::new(a)?;
    if rhs.rows() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} rows, matrix has {}",
            rhs.rows(),
            a.rows()
        )));
    }
    Ok(chol.solve(rhs))
}

/// `P A = L U` with partial (row) pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let scale = a.max_abs();
        let threshold = LU_PIVOT_TOL * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut p, mut best) = (k, lu[(k, k)].abs());
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold || scale == 0.0 {
                return Err(Error::SingularKkt { col: k, pivot: best });
            }
            if p != k {
                perm.swap(p, k);
                let data = lu.as_mut_slice();
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[(k, k)];
            let (head, tail) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let row_k = &head[k * n..];
            for i in 0..(n - k - 1) {
                let row_i = &mut tail[i * n..(i + 1) * n];
                let factor = row_i[k] / pivot;
                row_i[k] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    row_i[j] -= factor * row_k[j];
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = (0..i).map(|k| row[k] * x[k]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = ((i + 1)..n).map(|k| row[k] * x[k]).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = (0..b.cols()).map(|j| self.solve_vec(&b.col(j))).collect();
        DenseMatrix::from_columns(b.rows(), &cols)
    }
}
