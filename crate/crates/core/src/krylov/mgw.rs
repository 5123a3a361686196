use crate::dense::{sym_eigenvalues, Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::saddle::{SaddleSystem, SystemKind};

/// The three eigenvalues `1` and `(1 ± sqrt 5) / 2` of the block-diagonally
/// preconditioned saddle operator.
pub const MGW_VALUES: [f64; 3] = [
    1.0,
    1.618_033_988_749_895,
    -0.618_033_988_749_895,
];

/// Distance allowed between a computed eigenvalue and the nearest of [`MGW_VALUES`].
pub const MGW_TOL: f64 = 1e-8;

/// `A = G G^t` and `S = H H^t` with `S` assembled as `X X^t`, `X = B G^-t`.
fn factors(sys: &SaddleSystem) -> Result<(Cholesky, Cholesky, DenseMatrix)> {
    if sys.kind() != SystemKind::Spd {
        return Err(Error::WrongKind { expected: "SPD" });
    }
    let g = Cholesky::new(sys.a())?;
    let x = g.forward_solve(&sys.b().transpose()).transpose();
    let h = Cholesky::new(&x.matmul_t(&x).symmetrize())?;
    Ok((g, h, x))
}

/// Eigenvalues of `blockdiag(A^-1, S^-1) [[A, B^t], [B, 0]]`, ascending.
///
/// Computed on the symmetric similarity transform
/// `E [[A, B^t], [B, 0]] E^t = [[I, K^t], [K, 0]]` with
/// `E = blockdiag(G^-1, H^-1)` and `K = H^-1 B G^-t`. Every eigenvalue is
/// checked against [`MGW_VALUES`].
pub fn mgw_spectrum(sys: &SaddleSystem) -> Result<Vec<f64>> {
    let (n, m) = (sys.n(), sys.m());
    let (_, h, x) = factors(sys)?;
    let mut k = x.clone();
    h.forward_in_place(&mut k);
    let mut t = DenseMatrix::identity(n + m);
    for i in 0..m {
        t[(n + i, n + i)] = 0.0;
    }
    t.set_block(n, 0, &k);
    t.set_block(0, n, &k.transpose());
    let ev = sym_eigenvalues(&t)?;
    for &lambda in &ev {
        let dist = MGW_VALUES
            .iter()
            .map(|v| (lambda - v).abs())
            .fold(f64::INFINITY, f64::min);
        if dist > MGW_TOL {
            return Err(Error::Verification(format!(
                "eigenvalue {lambda:.17e} is {dist:e} away from {{1, (1 ± sqrt 5)/2}}"
            )));
        }
    }
    Ok(ev)
}

/// Applies `blockdiag(A^-1, S^-1)` to a stacked vector `(r_u, r_p)`.
pub fn mgw_preconditioner(sys: &SaddleSystem) -> Result<impl Fn(&[f64]) -> Vec<f64>> {
    let n = sys.n();
    let (g, h, _) = factors(sys)?;
    Ok(move |r: &[f64]| {
        let mut out = g.solve_vec(&r[..n]);
        out.extend(h.solve_vec(&r[n..]));
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::validate;

    #[test]
    fn one_by_one_system() {
        let s = validate(DenseMatrix::identity(1), DenseMatrix::identity(1), vec![0.0], vec![0.0])
            .unwrap();
        let ev = mgw_spectrum(&s).unwrap();
        assert!((ev[0] + 0.618_033_988_7).abs() < 1e-10);
        assert!((ev[1] - 1.618_033_988_7).abs() < 1e-10);
        assert!((MGW_VALUES[1] - (1.0 + 5f64.sqrt()) / 2.0).abs() <= f64::EPSILON);
        assert!((MGW_VALUES[2] - (1.0 - 5f64.sqrt()) / 2.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn square_identity_b_gives_golden_pairs() {
        let a = DenseMatrix::from_diag(&[1.0, 3.0, 7.0]);
        let s = validate(a, DenseMatrix::identity(3), vec![0.0; 3], vec![0.0; 3]).unwrap();
        let ev = mgw_spectrum(&s).unwrap();
        assert_eq!(ev.len(), 6);
        assert!(ev[..3].iter().all(|x| (x - MGW_VALUES[2]).abs() < 1e-12));
        assert!(ev[3..].iter().all(|x| (x - MGW_VALUES[1]).abs() < 1e-12));
    }
}
