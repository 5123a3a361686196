use crate::dense::vector::{dot, norm2, sub};

use super::{IterationTrace, KrylovOptions, Operator};

/// Preconditioned MINRES for symmetric, possibly indefinite operators with an
/// SPD preconditioner.
///
/// Lanczos in the preconditioner inner product with Givens QR of the
/// tridiagonal matrix. The recorded residual is the preconditioned norm
/// `|r|_{P}` carried by the recurrence, which is monotone nonincreasing.
pub fn minres(op: Operator<'_>, rhs: &[f64], opts: &KrylovOptions<'_>) -> (Vec<f64>, IterationTrace) {
    let n = rhs.len();
    let precond = |r: &[f64]| match opts.precond {
        Some(p) => p(r),
        None => r.to_vec(),
    };
    let mut x = opts.x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut v = match opts.x0 {
        Some(_) => sub(rhs, &op(&x)),
        None => rhs.to_vec(),
    };
    let mut z = precond(&v);
    let mut gamma = dot(&z, &v).max(0.0).sqrt();
    let mut trace = IterationTrace::start(opts.tol, gamma, 0.0, opts.reference.is_some());
    let err = |x: &[f64]| opts.reference.map(|xs| norm2(&sub(x, xs)));
    if let Some(e) = err(&x) {
        trace.push_error(e);
    }
    if gamma == 0.0 {
        trace.converged = true;
        return (x, trace);
    }

    let mut v_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w_old = vec![0.0; n];
    let mut gamma_old = 1.0;
    let mut eta = gamma;
    let (mut s, mut s_old) = (0.0_f64, 0.0_f64);
    let (mut c, mut c_old) = (1.0_f64, 1.0_f64);

    while trace.iterations < opts.max_iter {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        let az = op(&z);
        let delta = dot(&az, &z);
        let v_new: Vec<f64> = (0..n)
            .map(|i| az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i])
            .collect();
        let z_new = precond(&v_new);
        let gamma_new = dot(&z_new, &v_new).max(0.0).sqrt();

        let alpha0 = c * delta - c_old * s * gamma;
        let alpha1 = alpha0.hypot(gamma_new);
        let alpha2 = s * delta + c_old * c * gamma;
        let alpha3 = s_old * gamma;
        let c_new = alpha0 / alpha1;
        let s_new = gamma_new / alpha1;

        let w_new: Vec<f64> = (0..n)
            .map(|i| (z[i] - alpha3 * w_old[i] - alpha2 * w[i]) / alpha1)
            .collect();
        for (xi, wi) in x.iter_mut().zip(&w_new) {
            *xi += c_new * eta * wi;
        }
        eta *= -s_new;

        trace.push(eta.abs());
        if let Some(e) = err(&x) {
            trace.push_error(e);
        }
        if trace.is_small(eta.abs()) || gamma_new == 0.0 {
            trace.converged = true;
            break;
        }

        v_old = std::mem::replace(&mut v, v_new);
        z = z_new;
        w_old = std::mem::replace(&mut w, w_new);
        gamma_old = gamma;
        gamma = gamma_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
    }
    (x, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    #[test]
    fn identity_one_step() {
        let op = |x: &[f64]| x.to_vec();
        let (x, t) = minres(&op, &[3.0, -1.0], &KrylovOptions::default());
        assert!(t.converged && t.iterations == 1);
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_diagonal() {
        let m = DenseMatrix::from_diag(&[1.0, -1.0]);
        let op = |x: &[f64]| m.matvec(x);
        let (x, t) = minres(&op, &[1.0, 1.0], &KrylovOptions::default());
        assert!(t.converged);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_never_increase() {
        let m = DenseMatrix::from_diag(&[3.0, -2.0, 1.0, -0.5, 4.0, 0.25]);
        let op = |x: &[f64]| m.matvec(x);
        let (x, t) = minres(&op, &[1.0; 6], &KrylovOptions::default());
        assert!(t.converged);
        for w in t.residual_norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14));
        }
        let r = sub(&m.matvec(&x), &[1.0; 6]);
        assert!(norm2(&r) < 1e-9);
    }
}
